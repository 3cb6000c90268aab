import numpy as np
import pytest

from shockduct.config import default_config, validate


def tiny_config(**kw):
    """Small, fast configuration used by integration-style tests."""
    cfg = default_config()
    cfg.grid.n_xi = 128
    cfg.grid.n_perp = 8
    cfg.grid.L = 16.0
    cfg.periodic.n = 8
    cfg.periodic.k_max = 2
    cfg.periodic.n_modes = 2
    cfg.periodic.epsilon = 0.01
    cfg.sponge.width = 3.0
    cfg.time.t_end = 1.0
    cfg.time.output_every = 20
    cfg.time.snapshot_every = 10_000
    cfg.shift.pre_t = 4.0
    cfg.localized.bumps = cfg.localized.bumps[:2]
    for b in cfg.localized.bumps:
        b.width = 1.0
        b.center = -1.5
    for key, value in kw.items():
        node = cfg
        *path, leaf = key.split(".")
        for part in path:
            node = getattr(node, part)
        setattr(node, leaf, value)
    validate(cfg)
    return cfg


@pytest.fixture(scope="session")
def tiny_run():
    from shockduct.runner import run_simulation

    return run_simulation(tiny_config())


@pytest.fixture(scope="session")
def main_run(tmp_path_factory):
    """The full stability run at the production configuration (several minutes)."""
    from shockduct.config import default_config, validate
    from shockduct.runner import run_simulation

    cfg = default_config()
    validate(cfg)
    out = str(tmp_path_factory.mktemp("mainrun"))
    return run_simulation(cfg, out_dir=out)


@pytest.fixture(scope="session")
def robustness_runs(main_run):
    """Domain-length and refinement variants of the main run (heavy)."""
    from shockduct.config import default_config, validate
    from shockduct.runner import run_simulation

    out = {}
    variants = {
        "L20": {"grid.L": 20.0, "grid.n_xi": 256},
        "L80": {"grid.L": 80.0, "grid.n_xi": 1024},
        "refined": {"grid.L": 40.0, "grid.n_xi": 1024},
    }
    for name, tweaks in variants.items():
        cfg = default_config()
        for key, value in tweaks.items():
            node = cfg
            *path, leaf = key.split(".")
            for part in path:
                node = getattr(node, part)
            setattr(node, leaf, value)
        # the layer position is steady well before t=30; shorter horizons keep
        # the robustness study affordable
        cfg.time.t_end = 30.0
        for b in cfg.localized.bumps:
            if abs(b.center) + 3 * b.width > cfg.grid.L / 2:
                b.center = np.sign(b.center) * (cfg.grid.L / 2 - 3 * b.width)
        validate(cfg)
        out[name] = run_simulation(cfg)
    return out
