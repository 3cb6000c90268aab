"""Viscous shock profile: the traveling-wave connection between the end states.

One integration of the wave ODE in the frame of the shock gives the scalar
autonomous equation

    mu_tilde * u1' = j*u1 + p(j/(u1 - s)) - K,   K = j*u1_minus + p(rho_minus),

with j = rho_pm*(u1_pm - s) < 0 the mass flux. Everything else is algebra on
the normalized layer coordinate eta = (rho - rho_minus)/[rho], which rises
monotonically from 0 to 1 across the layer:

    rho = rho_minus + eta*[rho],  m1 = s*rho + j,  u1 = s + j/rho,

so the samples satisfy the proportionality (rho - rho_minus)/[rho] =
(m1 - m1_minus)/[m1] and the first integral m1 = s*rho + j exactly, and the
layer derivatives eta', eta'' come from the ODE right-hand side analytically
rather than from differencing.

The solver integrates the distance-to-endpoint variable with pure relative
tolerance in both directions from eta(0) = 1/2, which keeps round-off
proportional to the local tail amplitude and preserves strict monotonicity
down to the cutoff.
"""

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import PchipInterpolator

from shockduct.errors import InsufficientTailError, TailTruncationError
from shockduct.gasdyn import pressure, pressure_prime


@dataclass(frozen=True)
class ProfileSpec:
    """Grid and tolerance controls for the profile solve."""

    eps_tail: float = 5e-11  # stop when min(eta, 1 - eta) reaches this
    n_points: int = 4096  # total samples across the layer
    rtol: float = 1e-12  # relative tolerance of the tail integration
    center: float = 0.0  # xi position of the eta = 1/2 normalization


@dataclass
class Profile:
    """Sampled traveling-wave profile with analytic layer derivatives."""

    xi: np.ndarray
    rho_s: np.ndarray
    m1_s: np.ndarray
    u1_s: np.ndarray
    u1_p: np.ndarray
    eta: np.ndarray
    eta_p: np.ndarray
    eta_pp: np.ndarray
    j: float
    K: float
    triple: object
    model: object
    spec: ProfileSpec
    _pchip: object = field(default=None, repr=False)

    @property
    def dxi(self):
        return float(self.xi[1] - self.xi[0])

    def interpolator(self):
        if self._pchip is None:
            self._pchip = PchipInterpolator(self.xi, self.eta, extrapolate=False)
        return self._pchip


def profile_rhs(u1, triple, model):
    """du1/dxi of the integrated wave ODE; negative strictly between the states."""
    u1a = np.asarray(u1, dtype=float)
    lo, hi = triple.u1_plus, triple.u1_minus
    if np.any(u1a < lo - 1e-12) or np.any(u1a > hi + 1e-12):
        raise ValueError("u1 outside the closed interval [u1_plus, u1_minus]")
    if np.any(np.abs(u1a - triple.s) < 1e-14):
        raise ValueError("u1 = s is a pole of the wave ODE")
    j = triple.mass_flux
    K = j * triple.u1_minus + pressure(triple.rho_minus, model)
    rho = j / (u1a - triple.s)
    out = (j * u1a + pressure(rho, model) - K) / model.mu_tilde
    return out if out.ndim else float(out)


def _layer_eval(triple, model):
    """Layer fields as a function of the distance to the nearest end state.

    Evaluating from dist = min(eta, 1 - eta) avoids the cancellation that the
    naive rho_minus + eta*[rho] form suffers deep in the tails: the velocity
    and pressure offsets are formed as products and expm1/log1p differences,
    so the right-hand side keeps full relative accuracy down to dist ~ 1e-300.

    Returns fields_from(dist, side) with side=False near the minus state
    (dist = eta) and side=True near the plus state (dist = 1 - eta), giving
    (rho, u1, g, eta_p, eta_pp).
    """
    j = triple.mass_flux
    drho = triple.jump_rho
    s = triple.s
    mu_t = model.mu_tilde
    gamma = model.gamma
    p_minus = pressure(triple.rho_minus, model)
    p_plus = pressure(triple.rho_plus, model)

    def fields_from(dist, side):
        dist = np.asarray(dist, dtype=float)
        side = np.broadcast_to(np.asarray(side, dtype=bool), dist.shape)
        rho_ref = np.where(side, triple.rho_plus, triple.rho_minus)
        p_ref = np.where(side, p_plus, p_minus)
        sgn = np.where(side, -1.0, 1.0)
        rho = rho_ref + sgn * dist * drho
        u1 = s + j / rho
        # u1 - u1_ref and p - p_ref in product / expm1 form
        du = -sgn * j * dist * drho / (rho * rho_ref)
        dp = p_ref * np.expm1(gamma * np.log1p(sgn * dist * drho / rho_ref))
        g = (j * du + dp) / mu_t
        gp = (j - pressure_prime(rho, model) * rho * rho / j) / mu_t
        ep = -g * rho * rho / (j * drho)
        # eta'' = d(eta')/du * u' with d rho/du = -rho^2/j
        epp = -g * (gp * rho * rho - 2.0 * g * rho**3 / j) / (j * drho)
        return rho, u1, g, ep, epp

    return fields_from


def _fields_from_eta(triple, model, eta):
    """Layer fields from eta values (full relative accuracy lost only at
    the endpoints themselves, where everything vanishes)."""
    fields_from = _layer_eval(triple, model)
    eta = np.asarray(eta, dtype=float)
    side = eta > 0.5
    dist = np.where(side, 1.0 - eta, eta)
    return fields_from(dist, side)


def solve_profile(triple, model, spec=ProfileSpec()):
    """Integrate the layer in both directions and sample it on a uniform grid."""
    if not all(m > 0 for m in triple.lax_margins):
        raise ValueError("profile requires an admissible (entropy-satisfying) shock")
    eps = spec.eps_tail
    if not 0 < eps < 1e-3:
        raise ValueError("eps_tail must lie in (0, 1e-3)")
    fields_from = _layer_eval(triple, model)

    def rhs_fwd(_, w):
        # w = 1 - eta decays toward the + state; w' = -eta'
        return (-fields_from(w[0], True)[3],)

    def rhs_bwd(_, v):
        # v = eta(-tau) decays toward the - state
        return (-fields_from(v[0], False)[3],)

    def make_event():
        def event(_, y):
            return y[0] - eps

        event.terminal = True
        event.direction = -1
        return event

    # crude rate estimate to size the integration span
    ep_mid = float(fields_from(0.5, False)[3])
    span = max(200.0, 40.0 * abs(np.log(eps)) / max(ep_mid, 1e-12))
    sols = {}
    for name, rhs in (("fwd", rhs_fwd), ("bwd", rhs_bwd)):
        sol = solve_ivp(
            rhs,
            (0.0, span),
            [0.5],
            method="DOP853",
            rtol=spec.rtol,
            atol=0.0,
            dense_output=True,
            events=make_event(),
        )
        if sol.status != 1 or len(sol.t_events[0]) == 0:
            raise TailTruncationError(
                f"{name} tail did not reach eps_tail within xi-span {span:.1f}",
                achieved=float(sol.y[0, -1]),
            )
        sols[name] = sol

    xi_plus = float(sols["fwd"].t_events[0][0])
    xi_minus = float(sols["bwd"].t_events[0][0])
    h = (xi_plus + xi_minus) / spec.n_points
    n_plus = int(np.floor(xi_plus / h))
    n_minus = int(np.floor(xi_minus / h))

    w_fwd = sols["fwd"].sol(h * np.arange(1, n_plus + 1))[0]
    v_bwd = sols["bwd"].sol(h * np.arange(1, n_minus + 1))[0]
    dist = np.concatenate([v_bwd[::-1], [0.5], w_fwd])
    side = np.concatenate(
        [np.zeros(n_minus, bool), [False], np.ones(n_plus, bool)]
    )
    eta = np.where(side, 1.0 - dist, dist)
    xi = spec.center + h * np.arange(-n_minus, n_plus + 1)

    rho, u1, g, ep, epp = fields_from(dist, side)
    j = triple.mass_flux
    K = j * triple.u1_minus + pressure(triple.rho_minus, model)
    prof = Profile(
        xi=xi,
        rho_s=rho,
        m1_s=triple.s * rho + j,
        u1_s=u1,
        u1_p=g,
        eta=eta,
        eta_p=ep,
        eta_pp=epp,
        j=j,
        K=K,
        triple=triple,
        model=model,
        spec=spec,
    )
    if np.any(np.diff(prof.eta) <= 0):
        raise ArithmeticError("layer samples lost strict monotonicity")
    return prof


def eval_eta(profile, xi):
    """Monotone interpolation of eta alone (constants beyond the grid)."""
    xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
    eta = profile.interpolator()(xi_arr)
    eta = np.where(xi_arr <= profile.xi[0], 0.0, np.where(xi_arr >= profile.xi[-1], 1.0, eta))
    return np.clip(eta, 0.0, 1.0)


def eval_profile(profile, xi):
    """Profile fields at arbitrary positions; constants beyond the grid.

    Interpolates eta monotonically (PCHIP) and reconstructs every other field
    from it, so the proportionality and first-integral identities hold exactly
    at any query point.
    """
    xi_arr = np.atleast_1d(np.asarray(xi, dtype=float))
    eta = profile.interpolator()(xi_arr)
    low = xi_arr <= profile.xi[0]
    high = xi_arr >= profile.xi[-1]
    eta = np.where(low, 0.0, np.where(high, 1.0, eta))
    eta = np.clip(eta, 0.0, 1.0)

    tri, model = profile.triple, profile.model
    rho, u1, g, ep, epp = _fields_from_eta(tri, model, eta)
    outside = low | high
    ep = np.where(outside, 0.0, ep)
    epp = np.where(outside, 0.0, epp)
    m1 = tri.s * rho + profile.j
    if np.isscalar(xi) or np.ndim(xi) == 0:
        return tuple(float(x) for x in (rho[0], m1[0], u1[0], eta[0], ep[0], epp[0]))
    return rho, m1, u1, eta, ep, epp


def eta_shifted(profile, xi, shift, derivative=0):
    """eta (or eta', eta'') evaluated at xi - shift, vectorized."""
    vals = eval_profile(profile, np.asarray(xi, dtype=float) - shift)
    return vals[3 + derivative]


def tail_rates(profile, fraction=0.3, min_samples=10):
    """Log-linear decay rates of |u1'| on the outer parts of both tails."""
    xi, up = profile.xi, np.abs(profile.u1_p)
    out = []
    for side in (-1, +1):
        if side < 0:
            mask = xi < 0
            pos = -xi[mask]
            y = up[mask]
        else:
            mask = xi > 0
            pos = xi[mask]
            y = up[mask]
        cut = (1.0 - fraction) * pos.max()
        sel = pos >= cut
        if sel.sum() < min_samples:
            raise InsufficientTailError(
                f"only {int(sel.sum())} samples in the outer tail (need {min_samples})"
            )
        x = pos[sel]
        ly = np.log(y[sel])
        A = np.vstack([x, np.ones_like(x)]).T
        coef, res, *_ = np.linalg.lstsq(A, ly, rcond=None)
        slope = coef[0]
        ss_tot = np.sum((ly - ly.mean()) ** 2)
        r2 = 1.0 - (res[0] / ss_tot if res.size and ss_tot > 0 else 0.0)
        out.append((-slope, r2))
    (rate_minus, r2_minus), (rate_plus, r2_plus) = out
    return rate_minus, rate_plus, min(r2_minus, r2_plus)


def ode_defect(profile):
    """Max-norm residual of the momentum wave equation on the sampled grid.

    The convective flux and m1 are differenced (4th order) while the viscous
    term uses the analytic chain; any grid or solver inconsistency shows up.
    """
    xi = profile.xi
    h = profile.dxi
    m1 = profile.m1_s
    flux = m1 * profile.u1_s + pressure(profile.rho_s, profile.model)
    s = profile.triple.s

    def d4(f):
        out = np.full_like(f, np.nan)
        out[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
        return out

    # u'' = g'(u) * g(u)
    rho = profile.rho_s
    g = profile.u1_p
    gp = (profile.j - pressure_prime(rho, profile.model) * rho * rho / profile.j) / profile.model.mu_tilde
    u_pp = gp * g
    resid = -s * d4(m1) + d4(flux) - profile.model.mu_tilde * u_pp
    return float(np.nanmax(np.abs(resid)))


def first_integral_error(profile):
    """max |m1 - s*rho - j| over the grid, relative to |j|."""
    r = profile.m1_s - profile.triple.s * profile.rho_s - profile.j
    return float(np.max(np.abs(r)) / abs(profile.j))


def eta_p_integral(profile):
    """Trapezoid of eta' over the grid plus the analytic tail correction."""
    inner = np.trapezoid(profile.eta_p, profile.xi)
    tail = profile.eta[0] + (1.0 - profile.eta[-1])
    return float(inner + tail)


def profile_to_csv(profile, path):
    """Column dump: xi, rho_s, m1_s, u1_s, eta, eta_p, eta_pp."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["xi", "rho_s", "m1_s", "u1_s", "eta", "eta_p", "eta_pp"])
        for row in zip(
            profile.xi,
            profile.rho_s,
            profile.m1_s,
            profile.u1_s,
            profile.eta,
            profile.eta_p,
            profile.eta_pp,
        ):
            w.writerow([f"{v:.17g}" for v in row])
