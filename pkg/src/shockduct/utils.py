"""Small shared helpers."""

import os


def thread_limit(default=2):
    """Worker cap from SHOCKDUCT_THREADS (>= 1)."""
    raw = os.environ.get("SHOCKDUCT_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return default
