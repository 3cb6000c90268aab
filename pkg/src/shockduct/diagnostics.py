"""Norms, decay-rate fits, energy functional, shock tracking, and verdicts."""

from dataclasses import dataclass, field

import numpy as np

from shockduct.errors import MultiCrossingError
from shockduct.gasdyn import pressure_prime
from shockduct.modes import split_modes
from shockduct.profile import eval_profile


@dataclass(frozen=True)
class FitResult:
    rate: float  # positive = decay
    amplitude: float
    r2: float
    n_used: int
    n_masked: int


def fit_exponential(t, y, window=None):
    """Least squares on (t, log y); nonpositive samples are masked and counted."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    sel = np.isfinite(y) & (y > 0)
    if window is not None:
        sel &= (t >= window[0]) & (t <= window[1])
    n_masked = int(np.sum(~sel & np.isfinite(y)))
    t_s, ly = t[sel], np.log(y[sel])
    if t_s.size < 2:
        raise ValueError("need at least two positive samples to fit")
    A = np.vstack([t_s, np.ones_like(t_s)]).T
    coef, res, *_ = np.linalg.lstsq(A, ly, rcond=None)
    slope, intercept = coef
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    if ss_tot == 0.0:
        r2 = 1.0
    else:
        ss_res = float(res[0]) if res.size else float(np.sum((ly - A @ coef) ** 2))
        r2 = 1.0 - ss_res / ss_tot
    return FitResult(
        rate=float(-slope),
        amplitude=float(np.exp(intercept)),
        r2=float(r2),
        n_used=int(t_s.size),
        n_masked=n_masked,
    )


def gradient_fields(f, dxi):
    """All first derivatives of a duct field: 4th-order in xi, spectral transversally."""
    from shockduct.stencils import d1_fd4, transverse_d1

    grads = [d1_fd4(f, dxi)]
    for ax in range(1, np.ndim(f)):
        grads.append(transverse_d1(np.asarray(f, dtype=float), ax))
    return grads


@dataclass(frozen=True)
class Norms:
    l2: float
    h1: float
    linf: float
    w1inf: float


def discrete_norms(f, dxi):
    """L2, H1, Linf, W1inf over the duct with the uniform product quadrature."""
    f = np.asarray(f, dtype=float)
    n_perp = int(np.prod(f.shape[1:])) if f.ndim > 1 else 1
    w = dxi / n_perp
    l2sq = w * float(np.sum(f * f))
    grads = gradient_fields(f, dxi)
    gsq = sum(w * float(np.sum(g * g)) for g in grads)
    linf = float(np.max(np.abs(f)))
    ginf = max(float(np.max(np.abs(g))) for g in grads)
    return Norms(
        l2=np.sqrt(l2sq),
        h1=np.sqrt(l2sq + gsq),
        linf=linf,
        w1inf=max(linf, ginf),
    )


def perturbation_fields(rho, m, rho_t, m_t):
    """(phi, psi, zeta) = (rho - rho_t, m - m_t, m/rho - m_t/rho_t)."""
    phi = rho - rho_t
    psi = m - m_t
    zeta = m / rho - m_t / rho_t
    return phi, psi, zeta


def energy_functional(phi, psi, zeta, profile, x_inf, xi, dxi, A1=10.0, A2=1.0):
    """Weighted quadratic functional of the sharp parts of the perturbation.

    E = A1 * int(p'(rho_ref)|phi#|^2 + |psi#|^2)
      + A2 * int(mu_tilde/(2 rho_ref)|grad phi#|^2 + psi# . grad phi#)
      + int(rho_ref |grad zeta#|^2),
    with rho_ref the reference layer shifted to its limiting position.
    """
    if not A1 > A2 >= 1.0:
        raise ValueError("weights must satisfy A1 > A2 >= 1")
    rho_ref = eval_profile(profile, np.asarray(xi) - x_inf)[0]
    pp_ref = pressure_prime(rho_ref, profile.model)
    shape = (-1,) + (1,) * (np.ndim(phi) - 1)
    rho_ref = rho_ref.reshape(shape)
    pp_ref = pp_ref.reshape(shape)

    _, phi_s = split_modes(phi)
    psi_s = [split_modes(p)[1] for p in psi]
    zeta_s = [split_modes(z)[1] for z in zeta]

    n_perp = int(np.prod(np.shape(phi)[1:]))
    w = dxi / n_perp
    grad_phi = gradient_fields(phi_s, dxi)

    e1 = w * float(np.sum(pp_ref * phi_s * phi_s))
    e1 += w * sum(float(np.sum(p * p)) for p in psi_s)
    cross = w * sum(float(np.sum(p * g)) for p, g in zip(psi_s, grad_phi))
    e2 = w * float(
        np.sum(profile.model.mu_tilde / (2.0 * rho_ref) * sum(g * g for g in grad_phi))
    )
    e3 = w * sum(
        float(np.sum(rho_ref * g * g))
        for z in zeta_s
        for g in gradient_fields(z, dxi)
    )
    return A1 * e1 + A2 * (e2 + cross) + e3


def shock_location(flat_rho, xi, rho_mid, fit_window=None):
    """Sub-grid crossing of the transverse-mean density through the mid level."""
    f = np.asarray(flat_rho, dtype=float) - rho_mid
    sign = np.sign(f)
    crossings = np.nonzero(np.diff(sign < 0))[0]
    if crossings.size == 0:
        raise MultiCrossingError("no mid-level crossing found")
    if crossings.size > 1:
        raise MultiCrossingError(f"{crossings.size} mid-level crossings")
    i = int(crossings[0])
    x0, x1 = xi[i], xi[i + 1]
    y0, y1 = f[i], f[i + 1]
    return float(x0 - y0 * (x1 - x0) / (y1 - y0))


@dataclass
class AlphaProfile:
    xi: np.ndarray
    alpha: np.ndarray
    margin: float  # min(alpha - p'(rho_ref)/2)


def alpha_coefficient(profile):
    """alpha = p'(rho_ref) - u1_ref^2 on the layer grid, with positivity margin."""
    pp = pressure_prime(profile.rho_s, profile.model)
    alpha = pp - profile.u1_s**2
    margin = float(np.min(alpha - 0.5 * pp))
    return AlphaProfile(xi=profile.xi, alpha=alpha, margin=margin)


@dataclass
class DiagnosticsSeries:
    """Per-time diagnostics of a duct run plus post-run fits and verdicts."""

    t: list = field(default_factory=list)
    sup_phi_sharp: list = field(default_factory=list)
    sup_zeta_sharp: list = field(default_factory=list)
    l2_phi_sharp: list = field(default_factory=list)
    l2_psi_sharp: list = field(default_factory=list)
    w1inf_dist: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    shock_loc: list = field(default_factory=list)
    mass_phi: list = field(default_factory=list)
    mass_psi1: list = field(default_factory=list)
    mass_phi_accounted: list = field(default_factory=list)
    mass_psi1_accounted: list = field(default_factory=list)
    bg_sup: list = field(default_factory=list)
    sponge_ratio: list = field(default_factory=list)
    norm_split_err: list = field(default_factory=list)
    fits: dict = field(default_factory=dict)
    limits: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    events: list = field(default_factory=list)

    def as_columns(self):
        cols = {
            "t": self.t,
            "sup_phi_sharp": self.sup_phi_sharp,
            "sup_zeta_sharp": self.sup_zeta_sharp,
            "l2_phi_sharp": self.l2_phi_sharp,
            "l2_psi_sharp": self.l2_psi_sharp,
            "w1inf_dist": self.w1inf_dist,
            "energy": self.energy,
            "shock_loc": self.shock_loc,
            "mass_phi": self.mass_phi,
            "mass_psi1": self.mass_psi1,
            "mass_phi_accounted": self.mass_phi_accounted,
            "mass_psi1_accounted": self.mass_psi1_accounted,
            "bg_sup": self.bg_sup,
            "sponge_ratio": self.sponge_ratio,
        }
        return {k: np.asarray(v) for k, v in cols.items() if len(v)}


def _usable_window(t, y, window, min_samples=3):
    """Fall back to the decaying range when a sparse series starves the window.

    The fallback ends where the series reaches its numerical floor (geometric
    midpoint between the peak and the smallest positive value), so flat tail
    samples cannot flatten the fit.
    """
    if window is None:
        return None
    y = np.asarray(y, dtype=float)
    sel = (t >= window[0]) & (t <= window[1]) & (y > 0)
    if sel.sum() >= min_samples:
        return window
    pos = y > 0
    if pos.sum() < min_samples:
        return None
    cut = np.sqrt(np.max(y[pos]) * np.min(y[pos]))
    live = pos & (y >= cut)
    if live.sum() < min_samples:
        live = pos
    return (float(t[live][0]), float(t[live][-1]))


def stability_verdict(series, tol, dxi, x_inf, s=None):
    """Structured pass/fail for the stability claims measured on one run.

    (a) accounted zero-mode mass drift within tolerance per unit time;
    (b) sharp sup-norm fits an exponential with positive rate and good R2;
    (c) the W1inf distance to the shifted layer at the end is a small
        fraction of its value at the reference time;
    (d) the measured layer position converges to the predicted limit;
    (e) the energy functional stays nonnegative and decays.
    """
    t = np.asarray(series.t)
    out = {}

    # (a) zero-mass budget: the accounted residual must close by the end of
    # the run; the transit-epoch peak (pointwise edge monitor vs the discrete
    # boundary telescope, cancelling after passage) is reported alongside
    final = max(abs(series.mass_phi_accounted[-1]), abs(series.mass_psi1_accounted[-1]))
    peak = max(
        np.max(np.abs(series.mass_phi_accounted)),
        np.max(np.abs(series.mass_psi1_accounted)),
    )
    per_unit = final / max(t[-1], 1.0)
    out["zero_mass"] = {
        "pass": bool(per_unit <= tol["zero_mass_per_time"]),
        "value": float(per_unit),
        "peak": float(peak),
        "threshold": tol["zero_mass_per_time"],
    }

    # (b) sharp-mode exponential decay
    sup = np.maximum(np.asarray(series.sup_phi_sharp), np.asarray(series.sup_zeta_sharp))
    fitw = _usable_window(t, sup, tol.get("sharp_fit_window"))
    try:
        fit = fit_exponential(t, sup, window=fitw)
        out["sharp_decay"] = {
            "pass": bool(fit.rate > 0 and fit.r2 >= tol["sharp_r2"]),
            "rate": fit.rate,
            "r2": fit.r2,
            "threshold_r2": tol["sharp_r2"],
        }
        series.fits["sharp_sup"] = fit
    except ValueError as exc:
        out["sharp_decay"] = {"pass": False, "error": str(exc)}

    # (c) W1inf approach to the shifted layer
    t_ref = tol["w1inf_ref_time"]
    i_ref = int(np.argmin(np.abs(t - t_ref)))
    ratio = series.w1inf_dist[-1] / series.w1inf_dist[i_ref]
    out["w1inf_approach"] = {
        "pass": bool(ratio <= tol["w1inf_ratio"]),
        "value": float(ratio),
        "threshold": tol["w1inf_ratio"],
        "ref": float(series.w1inf_dist[i_ref]),
        "final": float(series.w1inf_dist[-1]),
    }

    # (d) layer location limit
    offset = abs(series.shock_loc[-1] - x_inf)
    out["location"] = {
        "pass": bool(offset <= tol["location_dx_multiple"] * dxi),
        "value": float(offset),
        "threshold": tol["location_dx_multiple"] * dxi,
    }

    # (e) energy decay
    e = np.asarray(series.energy)
    try:
        efit = fit_exponential(
            t, np.maximum(e, 0.0), window=_usable_window(t, e, tol.get("energy_fit_window"))
        )
        out["energy"] = {
            "pass": bool(np.min(e) >= -tol["energy_negative_floor"] and efit.rate > 0),
            "min": float(np.min(e)),
            "rate": efit.rate,
            "r2": efit.r2,
        }
        series.fits["energy"] = efit
    except ValueError as exc:
        out["energy"] = {"pass": False, "min": float(np.min(e)), "error": str(exc)}
    series.verdicts = out
    return out
