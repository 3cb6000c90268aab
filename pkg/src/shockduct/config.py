"""Run configuration: one JSON-serializable tree drives every command."""

import dataclasses
import json
from dataclasses import dataclass, field

from shockduct.errors import ConfigError


@dataclass
class GasConfig:
    gamma: float = 1.5
    mu: float = 0.04
    lam: float = 0.02


@dataclass
class ShockConfig:
    rho_minus: float = 1.1
    rho_plus: float = 0.9


@dataclass
class GridConfig:
    dimension: int = 2
    n_xi: int = 512
    n_perp: int = 32
    L: float = 40.0


@dataclass
class ProfileConfig:
    eps_tail: float = 5e-11
    n_points: int = 4096


@dataclass
class PeriodicConfig:
    n: int = 32
    epsilon: float = 0.02
    n_modes: int = 4
    k_max: int = 4
    seed: int = 7
    axis_only: bool = False
    transverse_only: bool = True
    modes: list | None = None  # explicit [[k...], [[re, im]...]] rows


@dataclass
class BumpConfig:
    field: str = "rho"
    amplitude: float = 0.004
    center: float = -2.0
    width: float = 1.2
    perp_mode: int = 0


@dataclass
class LocalizedConfig:
    bumps: list = field(default_factory=list)


@dataclass
class TimeConfig:
    t_end: float = 60.0
    cfl: float = 0.4
    output_every: int = 25  # steps between diagnostics rows
    snapshot_every: int = 400  # steps between snapshot files


@dataclass
class ShiftConfig:
    sample_dt: float = 0.0125
    pre_t: float = 10.0  # horizon of the flux-quadrature pre-run


@dataclass
class SpongeConfig:
    width: float = 6.0
    strength: float = 6.0
    n_clamp: int = 3
    ad_eps: float = 0.01


@dataclass
class ToleranceConfig:
    zero_mass_per_time: float = 1e-6
    sharp_r2: float = 0.95
    w1inf_ratio: float = 0.10
    w1inf_ref_time: float = 5.0
    location_dx_multiple: float = 2.0
    energy_negative_floor: float = 1e-10
    sharp_fit_window: list = field(default_factory=lambda: [0.5, 6.0])
    energy_fit_window: list = field(default_factory=lambda: [0.5, 5.0])
    raw_mass_window: list = field(default_factory=lambda: [0.0, 8.0])


@dataclass
class WeightsConfig:
    A1: float = 10.0
    A2: float = 1.0


@dataclass
class RunConfig:
    gas: GasConfig = field(default_factory=GasConfig)
    shock: ShockConfig = field(default_factory=ShockConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    profile: ProfileConfig = field(default_factory=ProfileConfig)
    periodic: PeriodicConfig = field(default_factory=PeriodicConfig)
    localized: LocalizedConfig = field(default_factory=LocalizedConfig)
    time: TimeConfig = field(default_factory=TimeConfig)
    shift: ShiftConfig = field(default_factory=ShiftConfig)
    sponge: SpongeConfig = field(default_factory=SpongeConfig)
    tolerances: ToleranceConfig = field(default_factory=ToleranceConfig)
    weights: WeightsConfig = field(default_factory=WeightsConfig)
    out_dir: str = "out"
    seed: int = 7


def default_config():
    cfg = RunConfig()
    cfg.localized.bumps = default_bumps()
    return cfg


def default_bumps():
    """Mixed localized data: a mass-carrying outgoing pulse plus transverse-
    structured bumps feeding the non-mean modes."""
    return [
        BumpConfig(field="rho", amplitude=0.004, center=-2.0, width=1.2, perp_mode=0),
        BumpConfig(field="m1", amplitude=-0.004, center=-2.0, width=1.2, perp_mode=0),
        BumpConfig(field="m2", amplitude=0.003, center=2.0, width=1.0, perp_mode=1),
        BumpConfig(field="rho", amplitude=0.002, center=3.0, width=1.0, perp_mode=2),
    ]


def _to_dict(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _to_dict(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [_to_dict(v) for v in obj]
    return obj


def _from_dict(cls, data, path=""):
    if not dataclasses.is_dataclass(cls):
        return data
    kwargs = {}
    names = {f.name: f for f in dataclasses.fields(cls)}
    for key, value in data.items():
        if key not in names:
            raise ConfigError(f"{path}{key}: unknown field")
        f = names[key]
        sub = f.type if isinstance(f.type, type) else None
        if sub is not None and dataclasses.is_dataclass(sub):
            kwargs[key] = _from_dict(sub, value, path=f"{path}{key}.")
        elif key == "bumps":
            kwargs[key] = [_from_dict(BumpConfig, b, path=f"{path}{key}.") for b in value]
        else:
            kwargs[key] = value
    return cls(**kwargs)


def config_to_dict(cfg):
    return _to_dict(cfg)


def config_from_dict(data):
    cfg = _from_dict(RunConfig, data)
    validate(cfg)
    return cfg


def save_config(cfg, path):
    with open(path, "w") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2)
        fh.write("\n")


def load_config(path):
    with open(path) as fh:
        return config_from_dict(json.load(fh))


def apply_overrides(cfg, overrides):
    """--set a.b.c=value with JSON literal values (bare strings allowed)."""
    data = config_to_dict(cfg)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            if part not in node:
                raise ConfigError(f"{key}: unknown path element '{part}'")
            node = node[part]
        if parts[-1] not in node:
            raise ConfigError(f"{key}: unknown field '{parts[-1]}'")
        node[parts[-1]] = value
    return config_from_dict(data)


def validate(cfg):
    def fail(path, msg):
        raise ConfigError(f"{path}: {msg}")

    if not cfg.gas.gamma > 1.0:
        fail("gas.gamma", "must be > 1")
    if not cfg.gas.mu > 0.0:
        fail("gas.mu", "must be > 0")
    if cfg.gas.mu + cfg.gas.lam < 0.0:
        fail("gas.lam", "mu + lam must be >= 0")
    if cfg.shock.rho_plus <= 0.0:
        fail("shock.rho_plus", "must be > 0")
    if cfg.shock.rho_minus <= cfg.shock.rho_plus:
        fail("shock.rho_minus", "must exceed rho_plus (2-family orientation)")
    if cfg.grid.dimension not in (2, 3):
        fail("grid.dimension", "must be 2 or 3")
    if cfg.grid.n_xi < 32:
        fail("grid.n_xi", "must be at least 32")
    if cfg.grid.n_perp < 4:
        fail("grid.n_perp", "must be at least 4")
    if cfg.grid.L < 3 * cfg.sponge.width:
        fail("grid.L", "must be at least three sponge widths")
    if cfg.periodic.n != cfg.grid.n_perp:
        fail("periodic.n", "must equal grid.n_perp (pointwise blending)")
    if cfg.periodic.epsilon < 0:
        fail("periodic.epsilon", "must be >= 0")
    if cfg.periodic.k_max > cfg.periodic.n // 3:
        fail("periodic.k_max", "exceeds the dealiased band n/3")
    if not 0 < cfg.time.cfl <= 0.4:
        fail("time.cfl", "must lie in (0, 0.4]")
    if cfg.time.t_end <= 0:
        fail("time.t_end", "must be positive")
    for i, b in enumerate(cfg.localized.bumps):
        if b.field not in ("rho", "m1", "m2", "m3"):
            fail(f"localized.bumps[{i}].field", "must be rho or m1..m3")
        if b.width <= 0:
            fail(f"localized.bumps[{i}].width", "must be positive")
        if abs(b.center) + 3 * b.width > cfg.grid.L / 2:
            fail(f"localized.bumps[{i}].center", "support leaves [-L/2, L/2]")
    if not cfg.weights.A1 > cfg.weights.A2 >= 1.0:
        fail("weights.A1", "need A1 > A2 >= 1")
    if not 0 < cfg.profile.eps_tail < 1e-3:
        fail("profile.eps_tail", "must lie in (0, 1e-3)")
    if cfg.shift.sample_dt <= 0:
        fail("shift.sample_dt", "must be positive")
    return cfg


def build_perturbation_spec(cfg):
    """PerturbationSpec from the config block (explicit modes or seeded)."""
    from shockduct.periodic import FourierMode, PerturbationSpec

    pc = cfg.periodic
    if pc.modes:
        modes = tuple(
            FourierMode(
                k=tuple(int(v) for v in row[0]),
                coeffs=tuple(complex(re, im) for re, im in row[1]),
            )
            for row in pc.modes
        )
        return PerturbationSpec(epsilon=pc.epsilon, modes=modes, seed=pc.seed)
    if pc.epsilon == 0.0:
        return PerturbationSpec(epsilon=0.0, modes=())
    d = cfg.grid.dimension
    if pc.transverse_only:
        rng_spec = _transverse_spec(pc, d)
        return rng_spec
    return PerturbationSpec.random(
        pc.seed, d, n_modes=pc.n_modes, k_max=pc.k_max, epsilon=pc.epsilon,
        axis_only=pc.axis_only,
    )


def _transverse_spec(pc, d):
    """Seeded modes with no structure along the duct axis (k1 = 0).

    Wavevectors come from the canonical half-space (first nonzero component
    positive; the conjugate is implicit), so the distinct-mode supply for
    d = 2 is exactly k_max.
    """
    import itertools

    import numpy as np

    from shockduct.periodic import FourierMode, PerturbationSpec

    rng = np.random.default_rng(pc.seed)
    available = []
    for k_perp in itertools.product(range(-pc.k_max, pc.k_max + 1), repeat=d - 1):
        if all(v == 0 for v in k_perp):
            continue
        nz = next(v for v in k_perp if v != 0)
        if nz < 0:
            continue
        available.append((0,) + k_perp)
    n_modes = min(pc.n_modes, len(available))
    picks = rng.permutation(len(available))[:n_modes]
    modes = []
    for idx in sorted(int(i) for i in picks):
        coeffs = tuple(
            complex(a, b) for a, b in zip(rng.normal(size=d + 1), rng.normal(size=d + 1))
        )
        modes.append(FourierMode(k=available[idx], coeffs=coeffs))
    return PerturbationSpec(epsilon=pc.epsilon, modes=tuple(modes), seed=pc.seed)
