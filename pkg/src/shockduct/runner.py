"""Lockstep orchestration: backgrounds, shift curves, duct state, diagnostics.

The duct advances with a fixed step chosen once from the initial data. The
two backgrounds advance with the same step (their stability bound matches),
the shift curves advance every second step with stages landing exactly on
background states, and the blended targets for the sponge interpolate the
background coefficients linearly inside one step.
"""

import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from shockduct import ansatz as ansatz_mod
from shockduct.config import build_perturbation_spec, config_to_dict
from shockduct.diagnostics import (
    DiagnosticsSeries,
    discrete_norms,
    energy_functional,
    perturbation_fields,
    shock_location,
    stability_verdict,
)
from shockduct.duct import (
    DuctScheme,
    LocalizedBump,
    LocalizedPerturbationSpec,
    cfl_dt,
    init_duct,
    step_duct,
)
from shockduct.errors import MultiCrossingError
from shockduct.gasdyn import GasModel, solve_shock, sound_speed
from shockduct.grids import DuctGrid
from shockduct.modes import split_modes
from shockduct.periodic import FieldSampler, TimeInterpSampler, init_periodic, step_periodic
from shockduct.profile import ProfileSpec, eval_profile, solve_profile
from shockduct.shift import (
    ShiftQuadrature,
    adjust_to_zero_mass,
    initial_shifts,
    mean_line_coeffs,
    run_backgrounds,
    y_infinity_periodic,
)
from shockduct.snapshots import write_snapshot


@dataclass
class RunSetup:
    model: object
    triple: object
    profile: object
    grid: object
    spec: object
    localized: dict
    x0: float
    y0: float
    y_inf_p: float
    y_inf_p_tail: float
    residual_before: float
    x_inf: float


@dataclass
class RunResult:
    series: DiagnosticsSeries
    report: dict
    state: object
    setup: RunSetup
    snapshots: list = field(default_factory=list)


def prepare(cfg):
    """Everything upstream of the duct: states, layer, zero-mass adjustment."""
    model = GasModel(cfg.gas.gamma, cfg.gas.mu, cfg.gas.lam)
    triple = solve_shock(cfg.shock.rho_minus, cfg.shock.rho_plus, model)
    profile = solve_profile(
        triple, model, ProfileSpec(eps_tail=cfg.profile.eps_tail, n_points=cfg.profile.n_points)
    )
    grid = DuctGrid(L=cfg.grid.L, n_xi=cfg.grid.n_xi, n_perp=cfg.grid.n_perp, d=cfg.grid.dimension)
    spec = build_perturbation_spec(cfg)
    loc_spec = LocalizedPerturbationSpec(
        bumps=tuple(
            LocalizedBump(b.field, b.amplitude, b.center, b.width, b.perp_mode)
            for b in cfg.localized.bumps
        )
    )
    localized = loc_spec.sample(grid)

    # oscillation-driven shift component, then the compatibility adjustment
    if spec.epsilon > 0:
        pre = run_backgrounds(
            spec, triple, model, cfg.grid.dimension, cfg.periodic.n,
            t_end=cfg.shift.pre_t, sample_dt=cfg.shift.sample_dt, cfl=cfg.time.cfl,
        )
        y_inf_p, tail = y_infinity_periodic(pre, triple)
    else:
        y_inf_p, tail = 0.0, 0.0
    localized["m1"], residual_before = adjust_to_zero_mass(
        localized["rho"], localized["m1"], y_inf_p, triple, grid, center=-1.0, width=1.5
    )
    x0, y0 = initial_shifts(localized["rho"], localized["m1"], grid, triple)
    return RunSetup(
        model=model,
        triple=triple,
        profile=profile,
        grid=grid,
        spec=spec,
        localized=localized,
        x0=x0,
        y0=y0,
        y_inf_p=y_inf_p,
        y_inf_p_tail=tail,
        residual_before=residual_before,
        x_inf=x0,
    )


class _LockstepShift:
    """Shift-curve integration over pairs of duct steps, stages on states."""

    def __init__(self, setup, n_bg, x0, y0, dt):
        self.quad = ShiftQuadrature(setup.profile, n_bg)
        self.tri = setup.triple
        self.h = 2.0 * dt
        self.X, self.Y = float(x0), float(y0)
        self.Xp = self.Yp = 0.0
        self.t_anchor = 0.0
        self.pending = []  # coefficient triple for the running pair of steps
        self.history = [(0.0, self.X, self.Y, 0.0, 0.0)]

    def rhs(self, d_shift, t, coeffs, which):
        L1, L2, L3 = self.quad.L(d_shift, t, *coeffs)
        if which == "X":
            return -self.tri.s + L1 / L2
        return -self.tri.s + L3 / L1

    def push(self, t, coeffs):
        """Feed background coefficients at each duct step time."""
        self.pending.append((t, coeffs))
        if len(self.pending) < 3:
            if len(self.pending) == 1 and t == 0.0:
                self.Xp = self.rhs(self.X, t, coeffs, "X")
                self.Yp = self.rhs(self.Y, t, coeffs, "Y")
                self.history[0] = (0.0, self.X, self.Y, self.Xp, self.Yp)
            return
        (t0, c0), (t1, c1), (t2, c2) = self.pending
        h = t2 - t0
        for which in ("X", "Y"):
            v = self.X if which == "X" else self.Y
            k1 = self.rhs(v, t0, c0, which)
            k2 = self.rhs(v + 0.5 * h * k1, t1, c1, which)
            k3 = self.rhs(v + 0.5 * h * k2, t1, c1, which)
            k4 = self.rhs(v + h * k3, t2, c2, which)
            v_new = v + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            if which == "X":
                self.X = v_new
                self.Xp = self.rhs(v_new, t2, c2, "X")
            else:
                self.Y = v_new
                self.Yp = self.rhs(v_new, t2, c2, "Y")
        self.t_anchor = t2
        self.history.append((t2, self.X, self.Y, self.Xp, self.Yp))
        self.pending = [(t2, c2)]

    def at(self, t):
        """Linear extrapolation of the slow curves inside the current pair."""
        dt = t - self.t_anchor
        return self.X + self.Xp * dt, self.Y + self.Yp * dt


def run_simulation(cfg, out_dir=None, resume=None, strict_contamination=False,
                   setup=None):
    t_start = time.time()
    if setup is None:
        setup = prepare(cfg)
    model, triple, profile, grid = setup.model, setup.triple, setup.profile, setup.grid
    d = grid.d
    s = triple.s

    state = init_duct(grid, profile, setup.spec, setup.localized, model)
    dt = cfl_dt(state, model, cfg.time.cfl)
    n_steps = int(np.ceil(cfg.time.t_end / dt - 1e-9))
    # fixed once from the initial data so resumed runs share the constants
    a_ref = (
        s
        + float(np.max(sound_speed(state.rho, model)))
        + float(np.max(np.abs(state.m / state.rho)))
    )

    resume_step = 0
    if resume is not None:
        from shockduct.snapshots import read_snapshot

        rgrid, rrho, rm, rt, rfs, manifest = read_snapshot(resume)
        if rgrid != grid:
            raise ValueError("snapshot grid does not match the configuration")
        resume_step = int(manifest["step"])
        state = type(state)(grid=grid, rho=rrho, m=rm, t=rt, frame_speed=rfs)

    # lockstep background pair
    bg = []
    for rho_bar, u_bar in ((triple.rho_minus, triple.u1_minus), (triple.rho_plus, triple.u1_plus)):
        mean_m = np.zeros(d)
        mean_m[0] = rho_bar * u_bar
        bg.append(init_periodic(rho_bar, mean_m, setup.spec, d, cfg.periodic.n, model))
    samp_now = (FieldSampler(bg[0]), FieldSampler(bg[1]))

    shift = _LockstepShift(setup, cfg.periodic.n, setup.x0, setup.y0, dt)
    shift.push(0.0, (mean_line_coeffs(bg[0]), mean_line_coeffs(bg[1])))

    scheme = DuctScheme(
        grid, model, frame_speed=state.frame_speed,
        sponge_width=cfg.sponge.width, sponge_strength=cfg.sponge.strength,
        n_clamp=cfg.sponge.n_clamp, ad_eps=cfg.sponge.ad_eps, a_ref=a_ref,
    )
    sponge_xi = grid.xi[scheme.sponge_idx]

    series = DiagnosticsSeries()
    cum = {
        "sink": np.zeros(1 + d),
        "ad": np.zeros(1 + d),
        "clamp": np.zeros(1 + d),
        "bflux": np.zeros(2 * (1 + d)),
    }
    mass0 = {"rho": grid.integrate(state.rho), "m1": grid.integrate(state.m[0])}
    snapshots = []
    rho_mid = 0.5 * (triple.rho_minus + triple.rho_plus)
    eps_level = setup.spec.epsilon

    def record(state, samplers, X, Y):
        t = state.t
        ans = ansatz_mod.build_ansatz(grid, t, samplers[0], samplers[1], profile, X, Y)
        phi, psi, zeta = perturbation_fields(state.rho, state.m, ans.rho_t, ans.m_t)
        _, phi_s = split_modes(phi)
        sharp_parts = [split_modes(psi[i])[1] for i in range(d)]
        zeta_s = [split_modes(zeta[i])[1] for i in range(d)]
        series.t.append(t)
        series.sup_phi_sharp.append(float(np.max(np.abs(phi_s))))
        series.sup_zeta_sharp.append(max(float(np.max(np.abs(z))) for z in zeta_s))
        series.l2_phi_sharp.append(discrete_norms(phi_s, grid.dxi).l2)
        series.l2_psi_sharp.append(
            float(np.sqrt(sum(discrete_norms(p, grid.dxi).l2 ** 2 for p in sharp_parts)))
        )
        # distance to the limiting translated layer (at xi = X_inf in frame)
        ref = eval_profile(profile, grid.xi - setup.x_inf)
        shape = (-1,) + (1,) * (d - 1)
        dist = max(
            discrete_norms(state.rho - ref[0].reshape(shape), grid.dxi).w1inf,
            discrete_norms(state.m[0] / state.rho - ref[2].reshape(shape), grid.dxi).w1inf,
            max(
                discrete_norms(state.m[i] / state.rho, grid.dxi).w1inf
                for i in range(1, d)
            ),
        )
        series.w1inf_dist.append(dist)
        series.energy.append(
            energy_functional(
                phi, psi, zeta, profile, setup.x_inf, grid.xi, grid.dxi,
                A1=cfg.weights.A1, A2=cfg.weights.A2,
            )
        )
        try:
            loc = shock_location(split_modes(state.rho)[0], grid.xi, rho_mid)
        except MultiCrossingError:
            loc = np.nan
            series.events.append({"t": t, "event": "multi_crossing"})
        series.shock_loc.append(loc)
        series.mass_phi.append(grid.integrate(phi))
        series.mass_psi1.append(grid.integrate(psi[0]))
        # state-budget conservation residuals: mass change not explained by
        # the through-flux, the sponge sink, the damping, and the clamp
        res_rho = (
            grid.integrate(state.rho) - mass0["rho"]
            + cum["sink"][0] - cum["ad"][0] - cum["clamp"][0]
            + (cum["bflux"][1] - cum["bflux"][0])
        )
        res_m1 = (
            grid.integrate(state.m[0]) - mass0["m1"]
            + cum["sink"][1] - cum["ad"][1] - cum["clamp"][1]
            + (cum["bflux"][3] - cum["bflux"][2])
        )
        series.mass_phi_accounted.append(res_rho)
        series.mass_psi1_accounted.append(res_m1)
        bg_sup = max(b.perturbation_sup() for b in bg)
        series.bg_sup.append(bg_sup)
        gap = max(
            float(np.max(np.abs(state.rho[scheme.sponge_idx] - ans.rho_t[scheme.sponge_idx]))),
            max(
                float(np.max(np.abs(state.m[i][scheme.sponge_idx] - ans.m_t[i][scheme.sponge_idx])))
                for i in range(d)
            ),
        )
        ratio = gap / max(bg_sup, 1e-3 * max(eps_level, 1e-12), 1e-12)
        series.sponge_ratio.append(ratio)
        if ratio > 10.0:
            series.events.append({"t": t, "event": "boundary_contamination", "ratio": ratio})
            if strict_contamination:
                from shockduct.errors import BoundaryContaminationError

                raise BoundaryContaminationError(f"sponge ratio {ratio:.1f} at t={t:.2f}")

    # fast-forward the auxiliary evolutions when resuming from a snapshot
    for _ in range(resume_step):
        bg = [step_periodic(b, dt) for b in bg]
        shift.push(bg[0].t, (mean_line_coeffs(bg[0]), mean_line_coeffs(bg[1])))
    if resume_step:
        samp_now = (FieldSampler(bg[0]), FieldSampler(bg[1]))

    if resume_step == 0:
        record(state, samp_now, shift.X, shift.Y)
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
            _snapshot(out_dir, state, samp_now, shift, profile, cfg, 0, dt, snapshots)
    elif out_dir:
        os.makedirs(out_dir, exist_ok=True)

    for k in range(resume_step, n_steps):
        t0 = state.t
        bg = [step_periodic(b, dt) for b in bg]
        samp_new = (FieldSampler(bg[0]), FieldSampler(bg[1]))
        shift.push(t0 + dt, (mean_line_coeffs(bg[0]), mean_line_coeffs(bg[1])))
        interp = (TimeInterpSampler(samp_now[0], samp_new[0]), TimeInterpSampler(samp_now[1], samp_new[1]))

        def targets(tau):
            X_tau, Y_tau = shift.at(tau)
            return ansatz_mod.blend_columns(
                sponge_xi, tau, interp[0].at(tau), interp[1].at(tau), profile, X_tau, Y_tau
            )

        state, info = step_duct(state, dt, scheme, targets)
        cum["sink"] += info["sink"]
        cum["ad"] += info["ad_leak"]
        cum["clamp"] += info["clamp_delta"]
        cum["bflux"] += info["bflux"]
        samp_now = samp_new

        step_no = k + 1
        if step_no % cfg.time.output_every == 0 or step_no == n_steps:
            record(state, samp_now, *shift.at(state.t))
        if out_dir and (step_no % cfg.time.snapshot_every == 0 or step_no == n_steps):
            _snapshot(out_dir, state, samp_now, shift, profile, cfg, step_no, dt, snapshots)

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
    verdicts = stability_verdict(series, tol, grid.dxi, setup.x_inf, s=s)

    # raw zero-mode drift rate over the pre-arrival window
    t_arr = np.asarray(series.t)
    w0, w1 = cfg.tolerances.raw_mass_window
    sel = (t_arr >= w0) & (t_arr <= w1)
    raw_rate = 0.0
    if sel.sum() >= 2:
        tw = t_arr[sel]
        for col in (np.asarray(series.mass_phi), np.asarray(series.mass_psi1)):
            dm = np.diff(col[sel])
            dtw = np.diff(tw)
            raw_rate = max(raw_rate, float(np.max(np.abs(dm / dtw))))
    verdicts["raw_mass_window"] = {
        "pass": bool(raw_rate <= cfg.tolerances.zero_mass_per_time),
        "value": raw_rate,
        "threshold": cfg.tolerances.zero_mass_per_time,
        "window": [w0, w1],
    }

    report = {
        "dt": dt,
        "n_steps": n_steps,
        "limits": {
            "X0": setup.x0,
            "Y0": setup.y0,
            "Y_inf_p": setup.y_inf_p,
            "X_inf": setup.x_inf,
            "Y_inf": setup.y0 + setup.y_inf_p,
            "zero_mass_residual_before_adjust": setup.residual_before,
        },
        "shift_final": {"X": shift.X, "Y": shift.Y},
        "verdicts": verdicts,
        "fits": {k: vars(v) for k, v in series.fits.items()},
        "events": series.events,
        "cumulative": {k: v.tolist() for k, v in cum.items()},
        "wall_seconds": time.time() - t_start,
    }
    if out_dir:
        _write_series(os.path.join(out_dir, "series.csv"), series)
        _write_zero_mode(
            os.path.join(out_dir, "zero_mode_final.csv"),
            state, samp_now, shift, profile, grid,
        )
        with open(os.path.join(out_dir, "report.json"), "w") as fh:
            json.dump(_jsonable(report), fh, indent=2)
            fh.write("\n")
        with open(os.path.join(out_dir, "config.json"), "w") as fh:
            json.dump(config_to_dict(cfg), fh, indent=2)
            fh.write("\n")
    return RunResult(series=series, report=report, state=state, setup=setup, snapshots=snapshots)


def _write_zero_mode(path, state, samplers, shift, profile, grid):
    """Final-time slice: xi, zero-mode perturbations, their antiderivatives."""
    from shockduct.modes import antiderivative, split_modes

    X, Y = shift.at(state.t)
    ans = ansatz_mod.build_ansatz(grid, state.t, samplers[0], samplers[1], profile, X, Y)
    phi_flat = split_modes(state.rho - ans.rho_t)[0]
    psi1_flat = split_modes(state.m[0] - ans.m_t[0])[0]
    pair = antiderivative(phi_flat, psi1_flat, grid.dxi, tol=1.0)
    data = np.column_stack([grid.xi, phi_flat, psi1_flat, pair.Phi, pair.Psi1])
    np.savetxt(path, data, delimiter=",", header="xi,phi_flat,psi1_flat,Phi,Psi1",
               comments="")


def _snapshot(out_dir, state, samplers, shift, profile, cfg, step, dt, snapshots):
    path = os.path.join(out_dir, f"state_{step:07d}.shkd")
    X, Y = shift.at(state.t)
    manifest = {"step": step, "t": state.t, "dt": dt, "X": X, "Y": Y}
    write_snapshot(path, state.grid, state.rho, state.m, state.t, state.frame_speed, manifest)
    ans = ansatz_mod.build_ansatz(state.grid, state.t, samplers[0], samplers[1], profile, X, Y)
    apath = os.path.join(out_dir, f"ansatz_{step:07d}.shkd")
    write_snapshot(apath, state.grid, ans.rho_t, ans.m_t, state.t, state.frame_speed, manifest)
    snapshots.append(path)


def _write_series(path, series):
    cols = series.as_columns()
    keys = list(cols)
    data = np.column_stack([cols[k] for k in keys])
    header = ",".join(keys)
    np.savetxt(path, data, delimiter=",", header=header, comments="")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj
