"""Re-evaluate the stability verdicts from stored snapshots, without re-running."""

import glob
import json
import os

import numpy as np

from shockduct.diagnostics import (
    DiagnosticsSeries,
    discrete_norms,
    energy_functional,
    perturbation_fields,
    shock_location,
    stability_verdict,
)
from shockduct.errors import MultiCrossingError, SnapshotFormatError
from shockduct.gasdyn import GasModel, solve_shock
from shockduct.modes import split_modes
from shockduct.profile import ProfileSpec, eval_profile, solve_profile
from shockduct.snapshots import read_snapshot


def verify_run(cfg, out_dir):
    """Rebuild the diagnostics series from snapshot pairs and re-judge."""
    model = GasModel(cfg.gas.gamma, cfg.gas.mu, cfg.gas.lam)
    triple = solve_shock(cfg.shock.rho_minus, cfg.shock.rho_plus, model)
    profile = solve_profile(
        triple, model, ProfileSpec(eps_tail=cfg.profile.eps_tail, n_points=cfg.profile.n_points)
    )
    with open(os.path.join(out_dir, "report.json")) as fh:
        stored = json.load(fh)
    x_inf = stored["limits"]["X_inf"]

    paths = sorted(glob.glob(os.path.join(out_dir, "state_*.shkd")))
    if not paths:
        raise SnapshotFormatError(f"no snapshots found in {out_dir}")
    series = DiagnosticsSeries()
    rho_mid = 0.5 * (triple.rho_minus + triple.rho_plus)
    grid = None
    for path in paths:
        apath = path.replace("state_", "ansatz_")
        grid, rho, m, t, _, _ = read_snapshot(path)
        _, rho_t, m_t, t2, _, _ = read_snapshot(apath)
        if abs(t - t2) > 1e-12:
            raise SnapshotFormatError(f"time mismatch between {path} and {apath}")
        d = grid.d
        phi, psi, zeta = perturbation_fields(rho, m, rho_t, m_t)
        _, phi_s = split_modes(phi)
        zeta_s = [split_modes(zeta[i])[1] for i in range(d)]
        series.t.append(t)
        series.sup_phi_sharp.append(float(np.max(np.abs(phi_s))))
        series.sup_zeta_sharp.append(max(float(np.max(np.abs(z))) for z in zeta_s))
        ref = eval_profile(profile, grid.xi - x_inf)
        shape = (-1,) + (1,) * (d - 1)
        dist = max(
            discrete_norms(rho - ref[0].reshape(shape), grid.dxi).w1inf,
            discrete_norms(m[0] / rho - ref[2].reshape(shape), grid.dxi).w1inf,
            max(discrete_norms(m[i] / rho, grid.dxi).w1inf for i in range(1, d)),
        )
        series.w1inf_dist.append(dist)
        series.energy.append(
            energy_functional(
                phi, psi, zeta, profile, x_inf, grid.xi, grid.dxi,
                A1=cfg.weights.A1, A2=cfg.weights.A2,
            )
        )
        try:
            loc = shock_location(split_modes(rho)[0], grid.xi, rho_mid)
        except MultiCrossingError:
            loc = np.nan
        series.shock_loc.append(loc)
        series.mass_phi.append(grid.integrate(phi))
        series.mass_psi1.append(grid.integrate(psi[0]))

    # the budget residuals live in the run series (they need per-step sums)
    stored_cols = _read_series(os.path.join(out_dir, "series.csv"))
    for key in ("mass_phi_accounted", "mass_psi1_accounted"):
        if key in stored_cols:
            getattr(series, key).extend(
                np.interp(series.t, stored_cols["t"], stored_cols[key]).tolist()
            )
        else:
            getattr(series, key).extend([0.0] * len(series.t))

    tol = {
        "zero_mass_per_time": cfg.tolerances.zero_mass_per_time,
        "sharp_r2": cfg.tolerances.sharp_r2,
        "sharp_fit_window": tuple(cfg.tolerances.sharp_fit_window),
        "w1inf_ref_time": cfg.tolerances.w1inf_ref_time,
        "w1inf_ratio": cfg.tolerances.w1inf_ratio,
        "location_dx_multiple": cfg.tolerances.location_dx_multiple,
        "energy_negative_floor": cfg.tolerances.energy_negative_floor,
        "energy_fit_window": tuple(cfg.tolerances.energy_fit_window),
    }
    verdicts = stability_verdict(series, tol, grid.dxi, x_inf)
    return {
        "n_snapshots": len(paths),
        "verdicts": verdicts,
        "limits": stored["limits"],
        "recomputed_times": list(map(float, series.t)),
    }


def _read_series(path):
    try:
        with open(path) as fh:
            header = fh.readline().strip().split(",")
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        if data.ndim == 1:
            data = data[None, :]
        return {name: data[:, i] for i, name in enumerate(header)}
    except OSError:
        return {}
