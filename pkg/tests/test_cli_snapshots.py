import json
import os

import numpy as np
import pytest

from conftest import tiny_config
from shockduct.cli import main
from shockduct.config import save_config
from shockduct.errors import SnapshotFormatError
from shockduct.grids import DuctGrid
from shockduct.snapshots import read_snapshot, write_snapshot
from shockduct.utils import thread_limit


def test_snapshot_round_trip(tmp_path):
    grid = DuctGrid(L=12.0, n_xi=64, n_perp=8)
    rng = np.random.default_rng(0)
    rho = 1.0 + 0.1 * rng.random(grid.shape)
    m = rng.normal(size=(2,) + grid.shape)
    path = tmp_path / "snap.shkd"
    write_snapshot(path, grid, rho, m, 3.25, 1.2, manifest={"step": 7})
    g2, r2, m2, t2, fs2, man = read_snapshot(path)
    assert g2 == grid
    assert np.array_equal(r2, rho)
    assert np.array_equal(m2, m)
    assert t2 == 3.25 and fs2 == 1.2
    assert man["step"] == 7


def test_snapshot_bad_magic(tmp_path):
    path = tmp_path / "bad.shkd"
    path.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(SnapshotFormatError, match="magic"):
        read_snapshot(path)


def test_snapshot_bad_version(tmp_path):
    grid = DuctGrid(L=12.0, n_xi=64, n_perp=8)
    path = tmp_path / "v.shkd"
    write_snapshot(path, grid, np.ones(grid.shape), np.zeros((2,) + grid.shape), 0.0, 1.0)
    raw = bytearray(path.read_bytes())
    raw[4:8] = (99).to_bytes(4, "little")
    path.write_bytes(bytes(raw))
    with pytest.raises(SnapshotFormatError, match="version"):
        read_snapshot(path)


def test_snapshot_truncated(tmp_path):
    grid = DuctGrid(L=12.0, n_xi=64, n_perp=8)
    path = tmp_path / "t.shkd"
    write_snapshot(path, grid, np.ones(grid.shape), np.zeros((2,) + grid.shape), 0.0, 1.0)
    raw = path.read_bytes()
    path.write_bytes(raw + b"\x00")
    with pytest.raises(SnapshotFormatError, match="trailing"):
        read_snapshot(path)


def test_thread_limit_env(monkeypatch):
    monkeypatch.setenv("SHOCKDUCT_THREADS", "5")
    assert thread_limit() == 5
    monkeypatch.setenv("SHOCKDUCT_THREADS", "0")
    assert thread_limit() == 1
    monkeypatch.setenv("SHOCKDUCT_THREADS", "junk")
    assert thread_limit(default=3) == 3


def _write_tiny(tmp_path, **kw):
    cfg = tiny_config(**kw)
    path = tmp_path / "cfg.json"
    save_config(cfg, path)
    return cfg, str(path)


def test_cli_config_command(tmp_path, capsys):
    _, cfg_path = _write_tiny(tmp_path)
    rc = main(["config", "--config", cfg_path, "--set", "gas.gamma=1.9"])
    assert rc == 0
    data = json.loads(capsys.readouterr().out)
    assert data["gas"]["gamma"] == 1.9


def test_cli_profile_command(tmp_path, capsys):
    _, cfg_path = _write_tiny(tmp_path)
    out = str(tmp_path / "out")
    rc = main(["profile", "--config", cfg_path, "--out", out])
    assert rc == 0
    assert os.path.exists(out + "/profile.csv")
    report = json.load(open(out + "/profile_report.json"))
    assert report["tail_rates"]["minus"] > 0
    header = open(out + "/profile.csv").readline().strip()
    assert header == "xi,rho_s,m1_s,u1_s,eta,eta_p,eta_pp"


def test_cli_invalid_gamma_rejected(tmp_path, capsys):
    _, cfg_path = _write_tiny(tmp_path)
    rc = main(["profile", "--config", cfg_path, "--set", "gas.gamma=0.9"])
    assert rc == 2
    assert "gas.gamma" in capsys.readouterr().err


def test_cli_periodic_command(tmp_path):
    _, cfg_path = _write_tiny(tmp_path)
    out = str(tmp_path / "outp")
    rc = main(["periodic", "--config", cfg_path, "--out", out, "--t-end", "1.5",
               "--fit-from", "0.2"])
    assert rc == 0
    report = json.load(open(out + "/periodic_report.json"))
    assert report["minus"]["rate"] > 0


def test_cli_shift_command(tmp_path):
    _, cfg_path = _write_tiny(tmp_path)
    out = str(tmp_path / "outs")
    rc = main(["shift", "--config", cfg_path, "--out", out, "--t-end", "3.0"])
    assert rc == 0
    report = json.load(open(out + "/shift_report.json"))
    assert report["x_return_error"] <= 1e-5
    header = open(out + "/shifts.csv").readline().strip()
    assert header == "t,X,Y,Xp,Yp"


def test_cli_simulate_verify_report(tmp_path, capsys):
    cfg, cfg_path = _write_tiny(tmp_path, **{"time.t_end": 0.5, "time.snapshot_every": 8})
    out = str(tmp_path / "run")
    rc = main(["simulate", "--config", cfg_path, "--out", out])
    # the tiny run is too short for the decay fits, so some verdicts fail
    assert os.path.exists(out + "/report.json")
    assert os.path.exists(out + "/series.csv")
    header = open(out + "/series.csv").readline().strip()
    assert header.startswith("t,sup_phi_sharp,sup_zeta_sharp")
    assert os.path.exists(out + "/config.json")
    snaps = [f for f in os.listdir(out) if f.startswith("state_") and f.endswith(".shkd")]
    assert len(snaps) >= 2
    rc = main(["verify", "--config", cfg_path, "--out", out])
    assert os.path.exists(out + "/verify_report.json")
    rc = main(["report", "--config", cfg_path, "--out", out])
    assert rc == 0
    assert "verdicts" in capsys.readouterr().out


def test_cli_verify_rejects_corrupt_snapshot(tmp_path, capsys):
    cfg, cfg_path = _write_tiny(tmp_path, **{"time.t_end": 0.3, "time.snapshot_every": 8})
    out = str(tmp_path / "run2")
    main(["simulate", "--config", cfg_path, "--out", out])
    snaps = sorted(f for f in os.listdir(out) if f.startswith("state_"))
    victim = os.path.join(out, snaps[0])
    raw = bytearray(open(victim, "rb").read())
    raw[0:4] = b"XXXX"
    open(victim, "wb").write(bytes(raw))
    rc = main(["verify", "--config", cfg_path, "--out", out])
    assert rc == 2
