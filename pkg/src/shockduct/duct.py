"""Nonlinear evolution on the truncated duct in the layer-attached frame.

Hybrid discretization: 4th-order finite differences along the duct axis,
spectral transversally, explicit RK4 in time. The grid moves with the layer
(the axial fluxes carry a -frame_speed*q correction), the three outermost
columns are clamped to the blended composite each step, and a graded
relaxation sponge between the clamp and the interior absorbs outgoing waves
so the truncation mimics the unbounded duct. A conservative 6th-difference
dissipation on the conservative variables guards the unresolved band.
"""

from dataclasses import dataclass, field

import numpy as np

from shockduct.errors import AmplitudeTooLargeError, BlowupDetectedError
from shockduct.gasdyn import pressure, sound_speed
from shockduct.profile import eval_profile
from shockduct.stencils import (
    d1_fd4,
    d2_fd4,
    dissipation6,
    transverse_d1,
    transverse_d2,
    transverse_dealias,
)


@dataclass
class DuctState:
    grid: object
    rho: np.ndarray
    m: np.ndarray  # (d,) + grid.shape
    t: float
    frame_speed: float


@dataclass(frozen=True)
class LocalizedBump:
    field: str  # 'rho' or 'm1'..'m3'
    amplitude: float
    center: float
    width: float
    perp_mode: int = 0


@dataclass(frozen=True)
class LocalizedPerturbationSpec:
    bumps: tuple

    def sample(self, grid):
        """Separable bump fields keyed by component name."""
        meshes = grid.meshes()
        out = {"rho": np.zeros(grid.shape)}
        for i in range(grid.d):
            out[f"m{i + 1}"] = np.zeros(grid.shape)
        for b in self.bumps:
            if abs(b.center) + 3 * b.width > grid.L / 2:
                raise ValueError(
                    f"bump at {b.center} (width {b.width}) leaves [-L/2, L/2]"
                )
            prof = b.amplitude * np.exp(-(((grid.xi - b.center) / b.width) ** 2))
            shape = (-1,) + (1,) * (grid.d - 1)
            fld = np.broadcast_to(prof.reshape(shape), grid.shape).copy()
            if b.perp_mode:
                fld = fld * np.cos(2 * np.pi * b.perp_mode * meshes[1])
            out[b.field] = out[b.field] + fld
        return out


class DuctScheme:
    """Precomputed operators and sponge geometry for one grid/model pair."""

    def __init__(self, grid, model, frame_speed, sponge_width=6.0,
                 sponge_strength=6.0, n_clamp=3, ad_eps=0.01, a_ref=None):
        self.grid = grid
        self.model = model
        self.frame_speed = frame_speed
        self.n_clamp = n_clamp
        xi = grid.xi
        inside = np.abs(xi) <= grid.L - sponge_width
        self.sponge_idx = np.nonzero(~inside)[0]
        ramp = (np.abs(xi[self.sponge_idx]) - (grid.L - sponge_width)) / sponge_width
        sigma = sponge_strength * np.clip(ramp, 0.0, 1.0) ** 3
        self.sigma = sigma.reshape((-1,) + (1,) * (grid.d - 1))
        self.clamp_idx = np.concatenate(
            [np.arange(n_clamp), np.arange(grid.n_xi - n_clamp, grid.n_xi)]
        )
        if a_ref is None:
            a_ref = 1.0
        self.ad_coef = ad_eps * a_ref / grid.dxi
        self.perp_axes = grid.perp_axes
        from shockduct.utils import thread_limit

        # one worker wins below ~10^5 points; cap by the env limit above that
        self.workers = 1 if grid.n_xi * grid.n_perp ** (grid.d - 1) < 100_000 else thread_limit()

    def tendency(self, rho, m, sponge_rho=None, sponge_m=None):
        """Semi-discrete right-hand side plus the sponge sink bookkeeping."""
        if self.grid.d == 2:
            return self._tendency_2d(rho, m, sponge_rho, sponge_m)
        return self._tendency_nd(rho, m, sponge_rho, sponge_m)

    def _tendency_2d(self, rho, m, sponge_rho, sponge_m):
        """Batched fast path for the planar duct."""
        import scipy.fft as sfft

        from shockduct.stencils import _t_wavenumbers, d1_fd4_batch, d2_fd4_batch

        g = self.grid
        h = g.dxi
        s = self.frame_speed
        mu, lam = self.model.mu, self.model.lam
        if not hasattr(self, "_buf"):
            shape = g.shape
            self._buf = {
                "fwd": np.empty((5,) + shape),
                "hat": np.empty((7, shape[0], shape[1] // 2 + 1), dtype=complex),
                "ax": np.empty((5,) + shape),
                "axw": np.empty((5, shape[0] - 4, shape[1])),
                "d1": np.empty((5,) + shape),
                "d2in": np.empty((2,) + shape),
                "d2": np.empty((2,) + shape),
                "d2w": np.empty((2, shape[0] - 4, shape[1])),
            }
        buf = self._buf
        u1 = m[0] / rho
        u2 = m[1] / rho
        p = pressure(rho, self.model)

        # one spectral pass for every transverse derivative
        fwd = buf["fwd"]
        fwd[0] = m[1]
        np.multiply(m[0], u2, out=fwd[1])
        np.multiply(m[1], u2, out=fwd[2])
        fwd[2] += p
        fwd[3] = u1
        fwd[4] = u2
        H = sfft.rfft(fwd, axis=-1, workers=self.workers)
        k = _t_wavenumbers(g.n_perp)
        ik = 1j * k
        out_hat = buf["hat"]
        np.multiply(ik, H[0], out=out_hat[0])  # d2 m2
        np.multiply(ik, H[1], out=out_hat[1])  # d2 (m1 u2)
        np.multiply(ik, H[2], out=out_hat[2])  # d2 (m2 u2 + p)
        np.multiply(ik, H[4], out=out_hat[3])  # d2 u2
        np.multiply(ik, H[3], out=out_hat[4])  # d2 u1
        np.multiply(-(k * k), H[3], out=out_hat[5])  # d22 u1
        np.multiply(-(k * k), H[4], out=out_hat[6])  # d22 u2
        T = sfft.irfft(out_hat, n=g.n_perp, axis=-1, workers=self.workers)

        # one stencil pass for every axial derivative
        ax = buf["ax"]
        np.multiply(rho, -s, out=ax[0])
        ax[0] += m[0]  # flux_rho
        np.multiply(m[0], u1, out=ax[1])
        ax[1] += p
        ax[1] -= s * m[0]  # flux_m1
        np.multiply(m[1], u1, out=ax[2])
        ax[2] -= s * m[1]  # flux_m2
        ax[3] = u1
        ax[4] = T[4]
        D = d1_fd4_batch(ax, h, out=buf["d1"], work=buf["axw"])
        d2in = buf["d2in"]
        d2in[0] = u1
        d2in[1] = u2
        D2 = d2_fd4_batch(d2in, h, out=buf["d2"], work=buf["d2w"])

        # edge fluxes include the viscous part (live while radiation crosses
        # the ends); transverse derivative terms have no transverse mean
        mu_t = 2 * mu + lam
        du2_lo = (-25 * u2[0] + 48 * u2[1] - 36 * u2[2] + 16 * u2[3] - 3 * u2[4]) / (12 * h)
        du2_hi = (25 * u2[-1] - 48 * u2[-2] + 36 * u2[-3] - 16 * u2[-4] + 3 * u2[-5]) / (12 * h)
        bflux = np.array(
            [
                ax[0, 0].mean(), ax[0, -1].mean(),
                ax[1, 0].mean() - mu_t * D[3, 0].mean(),
                ax[1, -1].mean() - mu_t * D[3, -1].mean(),
                ax[2, 0].mean() - mu * du2_lo.mean(),
                ax[2, -1].mean() - mu * du2_hi.mean(),
            ]
        )

        drho = np.negative(D[0])
        drho -= T[0]
        div_u = D[3] + T[3]
        d1_div = d1_fd4(div_u, h)
        dm = np.empty_like(m)
        np.add(D2[0], T[5], out=dm[0])
        dm[0] *= mu
        dm[0] -= D[1]
        dm[0] -= T[1]
        d1_div *= mu + lam
        dm[0] += d1_div
        # d2(div u) = d_xi(d2 u1) + d22 u2
        np.add(D[4], T[6], out=dm[1])
        dm[1] *= mu + lam
        div_u = np.add(D2[1], T[6], out=div_u)  # reuse as scratch
        div_u *= mu
        dm[1] += div_u
        dm[1] -= D[2]
        dm[1] -= T[2]

        sink = np.zeros(3)
        if sponge_rho is not None:
            idx = self.sponge_idx
            gap_r = rho[idx] - sponge_rho
            drho[idx] -= self.sigma * gap_r
            sink[0] = g.dxi * float((self.sigma * gap_r).mean(axis=1).sum())
            for i in range(2):
                gap = m[i][idx] - sponge_m[i]
                dm[i][idx] -= self.sigma * gap
                sink[1 + i] = g.dxi * float((self.sigma * gap).mean(axis=1).sum())
        return drho, dm, sink, bflux

    def _tendency_nd(self, rho, m, sponge_rho, sponge_m):
        g = self.grid
        d = g.d
        h = g.dxi
        s = self.frame_speed
        mu, lam = self.model.mu, self.model.lam
        u = m / rho
        p = pressure(rho, self.model)

        flux_rho = m[0] - s * rho
        drho = -d1_fd4(flux_rho, h)
        for ax in range(1, d):
            drho -= transverse_d1(m[ax], ax)

        div_u = d1_fd4(u[0], h)
        for ax in range(1, d):
            div_u += transverse_d1(u[ax], ax)

        # transverse-mean axial fluxes at the domain ends: the conservation
        # budget must account the genuine through-flux (the oscillation
        # blocks carry different mean momentum flux on the two sides)
        bflux = np.zeros(2 * (1 + d))
        bflux[0] = flux_rho[0].mean()
        bflux[1] = flux_rho[-1].mean()

        def edge_d1(f):
            lo = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
            hi = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * h)
            return float(lo.mean()), float(hi.mean())

        dm = np.empty_like(m)
        for i in range(d):
            flux = m[i] * u[0] - s * m[i]
            if i == 0:
                flux = flux + p
            visc_coef = 2 * mu + lam if i == 0 else mu
            dlo, dhi = edge_d1(u[i])
            bflux[2 + 2 * i] = flux[0].mean() - visc_coef * dlo
            bflux[3 + 2 * i] = flux[-1].mean() - visc_coef * dhi
            ten = -d1_fd4(flux, h)
            for ax in range(1, d):
                gflux = m[i] * u[ax]
                if i == ax:
                    gflux = gflux + p
                ten -= transverse_d1(gflux, ax)
            visc = d2_fd4(u[i], h)
            for ax in range(1, d):
                visc = visc + transverse_d2(u[i], ax)
            ten += mu * visc
            if i == 0:
                ten += (mu + lam) * d1_fd4(div_u, h)
            else:
                ten += (mu + lam) * transverse_d1(div_u, i)
            dm[i] = ten

        sink = np.zeros(1 + d)
        if sponge_rho is not None:
            idx = self.sponge_idx
            gap_r = rho[idx] - sponge_rho
            drho[idx] -= self.sigma * gap_r
            sink[0] = g.dxi * float((self.sigma * gap_r).mean(axis=self.perp_axes).sum())
            for i in range(d):
                gap = m[i][idx] - sponge_m[i]
                dm[i][idx] -= self.sigma * gap
                sink[1 + i] = g.dxi * float((self.sigma * gap).mean(axis=self.perp_axes).sum())
        return drho, dm, sink, bflux

    def dissipate(self, rho, m, dt):
        """Post-step conservative 6th-difference damping; returns leak integrals."""
        g = self.grid
        leak = np.zeros(1 + g.d)
        add = dissipation6(rho, self.ad_coef)
        rho += dt * add
        leak[0] = dt * g.integrate(add)
        for i in range(g.d):
            add = dissipation6(m[i], self.ad_coef)
            m[i] += dt * add
            leak[1 + i] = dt * g.integrate(add)
        return leak

    def dealias(self, rho, m):
        axes = self.perp_axes
        if not axes:
            return rho, m
        rho = transverse_dealias(rho, axes)
        for i in range(self.grid.d):
            m[i] = transverse_dealias(m[i], axes)
        return rho, m


def cfl_dt(state, model, cfl=0.4):
    """Fixed step from the frame-corrected advective and viscous limits."""
    g = state.grid
    u = state.m / state.rho
    c = float(np.max(sound_speed(state.rho, model)))
    adv = (g.dxi / (np.max(np.abs(u[0] - state.frame_speed)) + c))
    dx_perp = 1.0 / g.n_perp
    for ax in range(1, g.d):
        adv = min(adv, dx_perp / (np.max(np.abs(u[ax])) + c))
    visc = min(g.dxi, dx_perp) ** 2 * float(np.min(state.rho)) / model.mu_tilde
    return cfl * min(adv, visc)


def step_duct(state, dt, scheme, targets):
    """One RK4 step with stage-time sponge targets and a final clamp.

    targets(t) must return (rho_cols, m_cols) on the sponge columns; the
    clamp overwrites the outermost columns with the same blended values at
    the end-of-step time. Returns the new state plus bookkeeping sums.
    """
    g = state.grid
    rho0, m0 = state.rho, state.m
    t0 = state.t

    sp0 = targets(t0)
    sp_half = targets(t0 + 0.5 * dt)
    sp1 = targets(t0 + dt)

    try:
        k1r, k1m, s1, b1 = scheme.tendency(rho0, m0, *sp0)
        k2r, k2m, s2, b2 = scheme.tendency(rho0 + 0.5 * dt * k1r, m0 + 0.5 * dt * k1m, *sp_half)
        k3r, k3m, s3, b3 = scheme.tendency(rho0 + 0.5 * dt * k2r, m0 + 0.5 * dt * k2m, *sp_half)
        k4r, k4m, s4, b4 = scheme.tendency(rho0 + dt * k3r, m0 + dt * k3m, *sp1)
    except ValueError as exc:
        # nonpositive density inside a stage state
        raise BlowupDetectedError(str(exc), t=state.t) from exc

    rho = rho0 + (dt / 6.0) * (k1r + 2 * k2r + 2 * k3r + k4r)
    m = m0 + (dt / 6.0) * (k1m + 2 * k2m + 2 * k3m + k4m)
    sink = (dt / 6.0) * (s1 + 2 * s2 + 2 * s3 + s4)
    bflux = (dt / 6.0) * (b1 + 2 * b2 + 2 * b3 + b4)

    ad_leak = scheme.dissipate(rho, m, dt)
    rho, m = scheme.dealias(rho, m)

    # hard clamp of the outermost columns to the blended values
    idx = scheme.clamp_idx
    rho_cols, m_cols = sp1
    pick = _clamp_pick(scheme)
    clamp_delta = np.zeros(1 + g.d)
    new_r = rho_cols[pick]
    clamp_delta[0] = g.dxi * float(
        (new_r - rho[idx]).mean(axis=g.perp_axes).sum() if g.d > 1 else (new_r - rho[idx]).sum()
    )
    rho[idx] = new_r
    for i in range(g.d):
        new_m = m_cols[i][pick]
        clamp_delta[1 + i] = g.dxi * float(
            (new_m - m[i][idx]).mean(axis=g.perp_axes).sum()
            if g.d > 1
            else (new_m - m[i][idx]).sum()
        )
        m[i][idx] = new_m

    if not np.all(np.isfinite(rho)) or np.min(rho) <= 0:
        raise BlowupDetectedError("density lost positivity", t=state.t)
    new = DuctState(grid=g, rho=rho, m=m, t=t0 + dt, frame_speed=state.frame_speed)
    info = {"sink": sink, "ad_leak": ad_leak, "clamp_delta": clamp_delta, "bflux": bflux}
    return new, info


def _clamp_pick(scheme):
    """Positions of the clamp columns inside the sponge-column block."""
    spg = scheme.sponge_idx
    return np.searchsorted(spg, scheme.clamp_idx)


def init_duct(grid, profile, periodic_spec, localized_fields, model, frame_speed=None):
    """Layer profile plus oscillatory sample plus localized bumps at t = 0."""
    if frame_speed is None:
        frame_speed = profile.triple.s
    vals = eval_profile(profile, grid.xi)
    shape = (-1,) + (1,) * (grid.d - 1)
    rho = np.broadcast_to(vals[0].reshape(shape), grid.shape).copy()
    m = np.zeros((grid.d,) + grid.shape)
    m[0] += vals[1].reshape(shape)

    meshes = grid.meshes()
    osc = periodic_spec.sample_at(meshes)
    rho += osc[0]
    for i in range(grid.d):
        m[i] += osc[1 + i]

    rho += localized_fields.get("rho", 0.0)
    for i in range(grid.d):
        m[i] += localized_fields.get(f"m{i + 1}", 0.0)

    if np.min(rho) < 0.25 * profile.triple.rho_plus:
        raise AmplitudeTooLargeError(
            f"initial density min {np.min(rho):.4g} too close to vacuum"
        )
    return DuctState(grid=grid, rho=rho, m=m, t=0.0, frame_speed=frame_speed)
