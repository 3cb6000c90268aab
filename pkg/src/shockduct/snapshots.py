"""Fixed-layout binary snapshots with a JSON sidecar manifest.

Layout (little-endian): magic "SHKD", uint32 version, int64 d, n_xi, n_perp,
float64 L, t, frame_speed, then rho and the d momentum components as
row-major float64 blocks.
"""

import json
import struct

import numpy as np

from shockduct.errors import SnapshotFormatError

MAGIC = b"SHKD"
VERSION = 1


def write_snapshot(path, grid, rho, m, t, frame_speed, manifest=None):
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<qqq", grid.d, grid.n_xi, grid.n_perp))
        fh.write(struct.pack("<ddd", grid.L, t, frame_speed))
        fh.write(np.ascontiguousarray(rho, dtype="<f8").tobytes())
        for i in range(grid.d):
            fh.write(np.ascontiguousarray(m[i], dtype="<f8").tobytes())
    if manifest is not None:
        with open(str(path) + ".json", "w") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")


def read_snapshot(path):
    from shockduct.grids import DuctGrid

    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise SnapshotFormatError(f"bad magic {magic!r}")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != VERSION:
            raise SnapshotFormatError(f"unsupported version {version}")
        d, n_xi, n_perp = struct.unpack("<qqq", fh.read(24))
        L, t, frame_speed = struct.unpack("<ddd", fh.read(24))
        grid = DuctGrid(L=L, n_xi=int(n_xi), n_perp=int(n_perp), d=int(d))
        count = int(np.prod(grid.shape))
        rho = np.frombuffer(fh.read(8 * count), dtype="<f8").reshape(grid.shape).copy()
        m = np.empty((grid.d,) + grid.shape)
        for i in range(grid.d):
            m[i] = np.frombuffer(fh.read(8 * count), dtype="<f8").reshape(grid.shape)
        rest = fh.read(1)
        if rest:
            raise SnapshotFormatError("trailing bytes after field blocks")
    manifest = None
    try:
        with open(str(path) + ".json") as fh:
            manifest = json.load(fh)
    except FileNotFoundError:
        pass
    return grid, rho, m, float(t), float(frame_speed), manifest
