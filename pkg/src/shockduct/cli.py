"""Command-line entry: profile | periodic | shift | simulate | verify | report."""

import argparse
import json
import os
import sys

import numpy as np

from shockduct import __version__
from shockduct.config import (
    apply_overrides,
    config_to_dict,
    default_config,
    load_config,
    save_config,
    build_perturbation_spec,
)
from shockduct.diagnostics import fit_exponential
from shockduct.errors import ShockductError
from shockduct.gasdyn import GasModel, solve_shock
from shockduct.profile import ProfileSpec, profile_to_csv, solve_profile, tail_rates
from shockduct.utils import thread_limit


def _load_cfg(args):
    cfg = load_config(args.config) if args.config else default_config()
    if args.set:
        cfg = apply_overrides(cfg, args.set)
    if args.out:
        cfg.out_dir = args.out
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.periodic.seed = args.seed
    return cfg


def _outdir(cfg):
    os.makedirs(cfg.out_dir, exist_ok=True)
    return cfg.out_dir


def cmd_profile(args):
    cfg = _load_cfg(args)
    out = _outdir(cfg)
    model = GasModel(cfg.gas.gamma, cfg.gas.mu, cfg.gas.lam)
    tri = solve_shock(cfg.shock.rho_minus, cfg.shock.rho_plus, model)
    prof = solve_profile(
        tri, model, ProfileSpec(eps_tail=cfg.profile.eps_tail, n_points=cfg.profile.n_points)
    )
    profile_to_csv(prof, os.path.join(out, "profile.csv"))
    rate_minus, rate_plus, r2 = tail_rates(prof)
    report = {
        "shock": {
            "s": tri.s,
            "delta": tri.delta,
            "u1_minus": tri.u1_minus,
            "lax_margins": list(tri.lax_margins),
        },
        "tail_rates": {"minus": rate_minus, "plus": rate_plus, "fit_r2": r2},
        "grid": {"xi_min": float(prof.xi[0]), "xi_max": float(prof.xi[-1]), "n": int(prof.xi.size)},
    }
    _write_json(os.path.join(out, "profile_report.json"), report)
    print(f"profile: {prof.xi.size} samples, tail rates ({rate_minus:.4f}, {rate_plus:.4f})")
    return 0


def cmd_periodic(args):
    cfg = _load_cfg(args)
    out = _outdir(cfg)
    from shockduct.shift import run_backgrounds

    model = GasModel(cfg.gas.gamma, cfg.gas.mu, cfg.gas.lam)
    tri = solve_shock(cfg.shock.rho_minus, cfg.shock.rho_plus, model)
    spec = build_perturbation_spec(cfg)
    pair = run_backgrounds(
        spec, tri, model, cfg.grid.dimension, cfg.periodic.n,
        t_end=args.t_end, sample_dt=cfg.shift.sample_dt, cfl=cfg.time.cfl,
    )
    data = np.column_stack([pair.flux_t, pair.sup_minus, pair.sup_plus])
    np.savetxt(
        os.path.join(out, "decay.csv"), data, delimiter=",",
        header="t,sup_minus,sup_plus", comments="",
    )
    report = {}
    for name, sups in (("minus", pair.sup_minus), ("plus", pair.sup_plus)):
        try:
            fit = fit_exponential(pair.flux_t, sups, window=(args.fit_from, args.t_end))
            report[name] = {"rate": fit.rate, "amplitude": fit.amplitude, "r2": fit.r2}
        except ValueError as exc:
            report[name] = {"error": str(exc)}
    _write_json(os.path.join(out, "periodic_report.json"), report)
    print("periodic:", json.dumps(report))
    return 0


def cmd_shift(args):
    cfg = _load_cfg(args)
    out = _outdir(cfg)
    from shockduct.shift import (
        integrate_shifts,
        run_backgrounds,
        shift_rate_fit,
        y_infinity_periodic,
    )

    model = GasModel(cfg.gas.gamma, cfg.gas.mu, cfg.gas.lam)
    tri = solve_shock(cfg.shock.rho_minus, cfg.shock.rho_plus, model)
    prof = solve_profile(
        tri, model, ProfileSpec(eps_tail=cfg.profile.eps_tail, n_points=cfg.profile.n_points)
    )
    spec = build_perturbation_spec(cfg)
    pair = run_backgrounds(
        spec, tri, model, cfg.grid.dimension, cfg.periodic.n,
        t_end=args.t_end, sample_dt=cfg.shift.sample_dt, cfl=cfg.time.cfl,
    )
    curves = integrate_shifts(0.0, 0.0, pair, prof)
    y_inf_p, tail = y_infinity_periodic(pair, tri)
    data = np.column_stack([curves.t, curves.X, curves.Y, curves.Xp, curves.Yp])
    np.savetxt(
        os.path.join(out, "shifts.csv"), data, delimiter=",",
        header="t,X,Y,Xp,Yp", comments="",
    )
    fit = shift_rate_fit(curves, envelope_width=0.9)
    report = {
        "X0": curves.X0,
        "Y0": curves.Y0,
        "X_inf": curves.X_inf,
        "Y_inf": curves.Y_inf,
        "Y_inf_p": y_inf_p,
        "Y_inf_p_tail": tail,
        "x_return_error": abs(curves.X_inf - curves.X0),
        "y_consistency_error": abs(curves.Y_inf - curves.Y0 - y_inf_p),
        "rate_fit": {"rate": fit.rate, "r2": fit.r2},
    }
    _write_json(os.path.join(out, "shift_report.json"), report)
    print("shift:", json.dumps({k: report[k] for k in ("X0", "Y_inf_p", "x_return_error")}))
    return 0


def cmd_simulate(args):
    cfg = _load_cfg(args)
    out = _outdir(cfg)
    from shockduct.runner import run_simulation

    res = run_simulation(cfg, out_dir=out, resume=args.resume)
    verdicts = res.report["verdicts"]
    n_pass = sum(1 for v in verdicts.values() if v.get("pass"))
    print(f"simulate: {n_pass}/{len(verdicts)} verdicts pass; report in {out}/report.json")
    for name, v in verdicts.items():
        print(f"  [{'PASS' if v.get('pass') else 'FAIL'}] {name}")
    return 0 if n_pass == len(verdicts) else 1


def cmd_verify(args):
    cfg = _load_cfg(args)
    out = cfg.out_dir
    from shockduct.verify import verify_run

    report = verify_run(cfg, out)
    _write_json(os.path.join(out, "verify_report.json"), report)
    ok = all(v.get("pass") for v in report["verdicts"].values())
    for name, v in report["verdicts"].items():
        print(f"  [{'PASS' if v.get('pass') else 'FAIL'}] {name}")
    return 0 if ok else 1


def cmd_report(args):
    cfg = _load_cfg(args)
    path = os.path.join(cfg.out_dir, "report.json")
    with open(path) as fh:
        report = json.load(fh)
    print(json.dumps(report, indent=2))
    return 0


def cmd_config(args):
    cfg = _load_cfg(args)
    if args.write:
        save_config(cfg, args.write)
        print(f"wrote {args.write}")
    else:
        print(json.dumps(config_to_dict(cfg), indent=2))
    return 0


def _write_json(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, default=float)
        fh.write("\n")


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="shockduct",
        description="Planar viscous layer stability workbench on the duct",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config leaf (dotted path, repeatable)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="override the random seed")

    p = sub.add_parser("profile", help="solve the traveling layer, export CSV")
    common(p)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("periodic", help="evolve the background pair, fit decay")
    common(p)
    p.add_argument("--t-end", type=float, default=5.0)
    p.add_argument("--fit-from", type=float, default=0.5)
    p.set_defaults(func=cmd_periodic)

    p = sub.add_parser("shift", help="integrate the shift curves and limits")
    common(p)
    p.add_argument("--t-end", type=float, default=40.0)
    p.set_defaults(func=cmd_shift)

    p = sub.add_parser("simulate", help="full lockstep run with diagnostics")
    common(p)
    p.add_argument("--resume", help="snapshot file to continue from")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="re-evaluate verdicts from stored snapshots")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", help="print the stored run report")
    common(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("config", help="print or write the effective configuration")
    common(p)
    p.add_argument("--write", help="write the configuration to this path")
    p.set_defaults(func=cmd_config)

    args = parser.parse_args(argv)
    os.environ.setdefault("SHOCKDUCT_THREADS", str(thread_limit()))
    try:
        return args.func(args)
    except ShockductError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
