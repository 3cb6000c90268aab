"""Composite ansatz: the two oscillatory backgrounds blended through the
shifted layer, and the source terms it leaves in the conservative system.

The density blend uses the layer weight at shift X, the momentum blend at
shift Y. The sources come in four families: a flux correction from the two
different shifts, a density-equation remainder proportional to eta', the
flux/viscous blending defect, and the momentum-equation remainder. With the
shift curves solving their compatibility ODEs, the scalar remainders carry
zero duct mass; with frozen backgrounds and equal constant shifts every
assembled residual vanishes identically.
"""

from dataclasses import dataclass

import numpy as np

from shockduct.diagnostics import discrete_norms
from shockduct.errors import AnsatzOutOfRangeError
from shockduct.gasdyn import pressure
from shockduct.profile import eval_eta, eval_profile
from shockduct.stencils import d1_fd4, transverse_d1


def _col(arr1d, d):
    """Broadcast a 1D xi-profile across the transverse directions."""
    return np.asarray(arr1d).reshape((-1,) + (1,) * (d - 1))


@dataclass
class AnsatzField:
    rho_t: np.ndarray
    m_t: np.ndarray  # (d, ...) components
    u_t: np.ndarray
    eta_X: np.ndarray
    eta_Y: np.ndarray
    t: float


def build_ansatz(grid, t, samp_minus, samp_plus, profile, X, Y, frame_speed=None):
    """Blend the two backgrounds through the layer at shifts X (density) and
    Y (momentum) on the duct grid; positions are frame-aware."""
    tri = profile.triple
    s = tri.s
    if frame_speed is None:
        frame_speed = s
    d = grid.d
    x1 = grid.xi + frame_speed * t
    arg = x1 - s * t
    eta_X = _col(eval_profile(profile, arg - X)[3], d)
    eta_Y = _col(eval_profile(profile, arg - Y)[3], d)

    rho_m = samp_minus.eval("rho", x1)
    rho_p = samp_plus.eval("rho", x1)
    rho_t = rho_m * (1.0 - eta_X) + rho_p * eta_X
    m_t = np.empty((d,) + grid.shape)
    for i in range(d):
        key = f"m{i + 1}"
        m_t[i] = samp_minus.eval(key, x1) * (1.0 - eta_Y) + samp_plus.eval(key, x1) * eta_Y
    if np.min(rho_t) < 0.5 * tri.rho_plus or np.max(rho_t) > 2.0 * tri.rho_minus:
        raise AnsatzOutOfRangeError(
            f"blended density range [{np.min(rho_t):.4g}, {np.max(rho_t):.4g}] "
            f"outside [{0.5 * tri.rho_plus:.4g}, {2 * tri.rho_minus:.4g}]"
        )
    return AnsatzField(rho_t=rho_t, m_t=m_t, u_t=m_t / rho_t, eta_X=eta_X, eta_Y=eta_Y, t=t)


def blend_columns(xi_cols, t, samp_minus, samp_plus, profile, X, Y, frame_speed=None):
    """Blended (rho, m) on a subset of duct columns (sponge/clamp targets)."""
    tri = profile.triple
    s = tri.s
    if frame_speed is None:
        frame_speed = s
    d = samp_minus.d
    x1 = np.asarray(xi_cols) + frame_speed * t
    arg = x1 - s * t
    eta_X = _col(eval_eta(profile, arg - X), d)
    eta_Y = _col(eval_eta(profile, arg - Y), d)
    keys = ["rho"] + [f"m{i + 1}" for i in range(d)]
    f_m = samp_minus.eval_many(keys, x1)
    f_p = samp_plus.eval_many(keys, x1)
    rho = f_m["rho"] * (1.0 - eta_X) + f_p["rho"] * eta_X
    m = np.stack(
        [f_m[f"m{i + 1}"] * (1.0 - eta_Y) + f_p[f"m{i + 1}"] * eta_Y for i in range(d)]
    )
    return rho, m


@dataclass
class SourceTerms:
    F1: np.ndarray  # (d, ...) flux correction of the density equation
    f2: np.ndarray  # scalar remainder of the density equation
    F3: list  # F3[i] = (d, ...) momentum flux defect in direction i
    f4: np.ndarray  # (d, ...) momentum remainder
    t: float


def source_terms(grid, t, samp_minus, samp_plus, profile, X, Y, Xp, Yp, frame_speed=None):
    """All four source families of the blended construction."""
    tri = profile.triple
    model = profile.model
    s = tri.s
    if frame_speed is None:
        frame_speed = s
    d = grid.d
    mu, lam = model.mu, model.lam
    x1 = grid.xi + frame_speed * t
    arg = x1 - s * t

    vx = eval_profile(profile, arg - X)
    vy = eval_profile(profile, arg - Y)
    eta_X, etap_X = _col(vx[3], d), _col(vx[4], d)
    eta_Y, etap_Y = _col(vy[3], d), _col(vy[4], d)

    def both(key, d1=0):
        return samp_minus.eval(key, x1, d1), samp_plus.eval(key, x1, d1)

    rho_m, rho_p = both("rho")
    p_m, p_p = both("p")
    m_m = np.stack([both(f"m{i + 1}")[0] for i in range(d)])
    m_p = np.stack([both(f"m{i + 1}")[1] for i in range(d)])
    u_m = np.stack([both(f"u{i + 1}")[0] for i in range(d)])
    u_p = np.stack([both(f"u{i + 1}")[1] for i in range(d)])

    # blended fields and their analytic derivatives
    w_X, w_Y = 1.0 - eta_X, 1.0 - eta_Y
    rho_t = rho_m * w_X + rho_p * eta_X
    m_t = m_m * w_Y + m_p * eta_Y
    u_t = m_t / rho_t

    def bg_grad(field_m, field_p, key_m, key_p, weight, weightc, etap):
        """d/dx_i of a blended scalar: i = 0 has the layer chain term."""
        grads = []
        d1_m = samp_minus.eval(key_m, x1, 1)
        d1_p = samp_plus.eval(key_p, x1, 1)
        grads.append(d1_m * weightc + d1_p * weight + (field_p - field_m) * etap)
        for ax in range(1, d):
            grads.append(
                transverse_d1(field_m, ax) * weightc + transverse_d1(field_p, ax) * weight
            )
        return grads

    grad_rho_t = bg_grad(rho_m, rho_p, "rho", "rho", eta_X, w_X, etap_X)
    grad_m_t = [
        bg_grad(m_m[i], m_p[i], f"m{i + 1}", f"m{i + 1}", eta_Y, w_Y, etap_Y)
        for i in range(d)
    ]
    # velocity gradients of the blend via the quotient rule
    grad_u_t = [
        [
            (grad_m_t[i][ax] - u_t[i] * grad_rho_t[ax]) / rho_t
            for ax in range(d)
        ]
        for i in range(d)
    ]
    div_u_t = sum(grad_u_t[i][i] for i in range(d))

    # background velocity gradients (exact)
    def u_grad(samp, u_fields, i, ax):
        if ax == 0:
            return samp.eval(f"u{i + 1}", x1, 1)
        return transverse_d1(u_fields[i], ax)

    grad_u_m = [[u_grad(samp_minus, u_m, i, ax) for ax in range(d)] for i in range(d)]
    grad_u_p = [[u_grad(samp_plus, u_p, i, ax) for ax in range(d)] for i in range(d)]
    div_u_m = sum(grad_u_m[i][i] for i in range(d))
    div_u_p = sum(grad_u_p[i][i] for i in range(d))

    F1 = (m_p - m_m) * (eta_X - eta_Y)
    f2 = ((rho_p - rho_m) * (s + Xp) - (m_p[0] - m_m[0])) * etap_X

    F3 = []
    for i in range(d):
        block = u_m[i] * m_m * w_Y + u_p[i] * m_p * eta_Y - u_t[i] * m_t
        block[i] += p_m * w_Y + p_p * eta_Y - pressure(rho_t, model)
        for l in range(d):
            block[l] -= mu * (
                grad_u_m[l][i] * w_Y + grad_u_p[l][i] * eta_Y - grad_u_t[l][i]
            )
        block[i] -= (mu + lam) * (div_u_m * w_Y + div_u_p * eta_Y - div_u_t)
        F3.append(block)

    f4 = ((m_p - m_m) * (s + Yp) - (u_p[0] * m_p - u_m[0] * m_m)) * etap_Y
    f4[0] -= (p_p - p_m) * etap_Y
    for l in range(d):
        f4[l] += mu * (grad_u_p[l][0] - grad_u_m[l][0]) * etap_Y
    f4[0] += (mu + lam) * (div_u_p - div_u_m) * etap_Y

    return SourceTerms(F1=F1, f2=f2, F3=F3, f4=f4, t=t)


def assemble_residuals(sources, grid):
    """g1 = div F1 + f2 and g2 = sum_i d_i F3_i + f4 (4th-order xi, spectral
    transversally)."""
    d = grid.d
    h = grid.dxi

    def div(vec):
        out = d1_fd4(vec[0], h)
        for ax in range(1, d):
            out = out + transverse_d1(vec[ax], ax)
        return out

    g1 = div(sources.F1) + sources.f2
    g2 = np.empty_like(sources.f4)
    for l in range(d):
        g2[l] = d1_fd4(sources.F3[0][l], h) + sources.f4[l]
        for ax in range(1, d):
            g2[l] += transverse_d1(sources.F3[ax][l], ax)
    return g1, g2


def source_masses(sources, grid):
    """Duct integrals of the scalar remainders (zero along solved curves)."""
    return grid.integrate(sources.f2), grid.integrate(sources.f4[0])


def residual_norms(sources, grid):
    """(||g1||_L2, ||g2||_L2) of the assembled residuals."""
    g1, g2 = assemble_residuals(sources, grid)
    n1 = discrete_norms(g1, grid.dxi).l2
    n2 = np.sqrt(sum(discrete_norms(g2[l], grid.dxi).l2 ** 2 for l in range(grid.d)))
    return float(n1), float(n2)
