"""Gas law, Rankine-Hugoniot shock construction, Lax admissibility, Galilean shifts.

Works in the normalized frame u1_minus = -u1_plus, where the jump conditions
for the 2-family shock close in exact arithmetic:

    a^2 = (p(rho_plus) - p(rho_minus)) * (rho_plus - rho_minus) / (4 rho_plus rho_minus)
    s   = -a * (rho_plus + rho_minus) / (rho_plus - rho_minus),   a = u1_minus > 0.
"""

from dataclasses import dataclass

import numpy as np

from shockduct.errors import OrientationError, ZeroStrengthError


@dataclass(frozen=True)
class GasModel:
    """Gamma-law gas with shear/second viscosities."""

    gamma: float
    mu: float
    lam: float

    def __post_init__(self):
        if not self.gamma > 1.0:
            raise ValueError(f"gamma must be > 1, got {self.gamma}")
        if not self.mu > 0.0:
            raise ValueError(f"mu must be > 0, got {self.mu}")
        if self.mu + self.lam < 0.0:
            raise ValueError(f"mu + lam must be >= 0, got {self.mu + self.lam}")

    @property
    def mu_tilde(self):
        return 2.0 * self.mu + self.lam


def pressure(rho, model):
    """p(rho) = rho**gamma. Rejects nonpositive densities."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0.0):
        raise ValueError("pressure requires rho > 0")
    g = model.gamma
    # gamma = 1.5 and 2 dominate the hot loops; avoid the generic pow there.
    if g == 1.5:
        p = rho * np.sqrt(rho)
    elif g == 2.0:
        p = rho * rho
    else:
        p = rho**g
    return p if p.ndim else float(p)


def pressure_prime(rho, model):
    """p'(rho) = gamma * rho**(gamma-1)."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0.0):
        raise ValueError("pressure_prime requires rho > 0")
    g = model.gamma
    if g == 1.5:
        dp = 1.5 * np.sqrt(rho)
    elif g == 2.0:
        dp = 2.0 * rho
    else:
        dp = g * rho ** (g - 1.0)
    return dp if dp.ndim else float(dp)


def sound_speed(rho, model):
    """c(rho) = sqrt(p'(rho))."""
    return np.sqrt(pressure_prime(rho, model))


@dataclass(frozen=True)
class ShockTriple:
    """End states, speed and admissibility margins of a 2-family shock."""

    rho_minus: float
    rho_plus: float
    u1_minus: float
    u1_plus: float
    s: float
    delta: float
    lax_margins: tuple

    @property
    def m1_minus(self):
        return self.rho_minus * self.u1_minus

    @property
    def m1_plus(self):
        return self.rho_plus * self.u1_plus

    @property
    def jump_rho(self):
        """[rho] = rho_plus - rho_minus (negative for the 2-family)."""
        return self.rho_plus - self.rho_minus

    @property
    def jump_m1(self):
        return self.m1_plus - self.m1_minus

    @property
    def mass_flux(self):
        """j = rho_pm * (u1_pm - s), equal on both sides by RH."""
        return self.rho_minus * (self.u1_minus - self.s)

    def jump_pressure(self, model):
        return pressure(self.rho_plus, model) - pressure(self.rho_minus, model)


def rh_residuals(triple, model):
    """Both Rankine-Hugoniot residuals, normalized by problem scale."""
    dr = triple.jump_rho
    dm = triple.jump_m1
    r1 = -triple.s * dr + dm
    flux = lambda rho, u1: rho * u1 * u1 + pressure(rho, model)
    r2 = -triple.s * dm + flux(triple.rho_plus, triple.u1_plus) - flux(
        triple.rho_minus, triple.u1_minus
    )
    scale1 = 1.0 + abs(triple.s) * abs(dr)
    scale2 = 1.0 + abs(triple.s) * abs(dm) + abs(flux(triple.rho_minus, triple.u1_minus))
    return r1 / scale1, r2 / scale2


def check_lax(triple, model):
    """Signed entropy margins; all three positive iff admissible 2-shock.

    Order: (s - lambda_plus(+ state), lambda_plus(- state) - s, s - lambda_minus(- state)).
    """
    c_minus = sound_speed(triple.rho_minus, model)
    c_plus = sound_speed(triple.rho_plus, model)
    lam_pp = triple.u1_plus + c_plus
    lam_pm = triple.u1_minus + c_minus
    lam_mm = triple.u1_minus - c_minus
    return (triple.s - lam_pp, lam_pm - triple.s, triple.s - lam_mm)


def solve_shock(rho_minus, rho_plus, model):
    """Construct the normalized 2-family shock joining the two densities."""
    if rho_minus <= 0.0 or rho_plus <= 0.0:
        raise ValueError("densities must be positive")
    delta = abs(rho_plus - rho_minus)
    if delta <= 1e-14 * max(rho_minus, rho_plus):
        raise ZeroStrengthError("end states coincide (delta = 0)")
    if rho_minus < rho_plus:
        raise OrientationError(
            "need rho_minus > rho_plus for the 2-family; swap states or use the 1-family"
        )
    dp = pressure(rho_plus, model) - pressure(rho_minus, model)
    dr = rho_plus - rho_minus
    a2 = dp * dr / (4.0 * rho_plus * rho_minus)
    a = np.sqrt(a2)
    s = -a * (rho_plus + rho_minus) / dr
    triple = ShockTriple(
        rho_minus=float(rho_minus),
        rho_plus=float(rho_plus),
        u1_minus=float(a),
        u1_plus=float(-a),
        s=float(s),
        delta=float(delta),
        lax_margins=(0.0, 0.0, 0.0),
    )
    margins = check_lax(triple, model)
    triple = ShockTriple(
        rho_minus=triple.rho_minus,
        rho_plus=triple.rho_plus,
        u1_minus=triple.u1_minus,
        u1_plus=triple.u1_plus,
        s=triple.s,
        delta=triple.delta,
        lax_margins=tuple(float(m) for m in margins),
    )
    r1, r2 = rh_residuals(triple, model)
    if max(abs(r1), abs(r2)) > 1e-12:
        raise ArithmeticError(f"jump-condition residuals too large: {r1:.3e}, {r2:.3e}")
    return triple


def galilean_shift(triple, a, model):
    """Shift the frame velocity by a: u1 -> u1 - a, s -> s - a.

    An exact group action; jump residuals and densities are untouched.
    """
    shifted = ShockTriple(
        rho_minus=triple.rho_minus,
        rho_plus=triple.rho_plus,
        u1_minus=triple.u1_minus - a,
        u1_plus=triple.u1_plus - a,
        s=triple.s - a,
        delta=triple.delta,
        lax_margins=(0.0, 0.0, 0.0),
    )
    margins = check_lax(shifted, model)
    return ShockTriple(
        rho_minus=shifted.rho_minus,
        rho_plus=shifted.rho_plus,
        u1_minus=shifted.u1_minus,
        u1_plus=shifted.u1_plus,
        s=shifted.s,
        delta=shifted.delta,
        lax_margins=tuple(float(m) for m in margins),
    )


def normalize_frame(triple, model):
    """Galilean-shift by the velocity midpoint so u1_minus = -u1_plus."""
    a = 0.5 * (triple.u1_minus + triple.u1_plus)
    return galilean_shift(triple, a, model), a
