"""Oscillatory background states: the isentropic system on the torus T^d.

Pseudo-spectral in every direction, classical RK4 in time, 2/3-rule
dealiasing on the nonlinear transforms. The zero Fourier mode of every
tendency vanishes identically, so the field means are conserved to round-off
regardless of aliasing in the products.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from shockduct.errors import AmplitudeTooLargeError, BlowupDetectedError
from shockduct.gasdyn import pressure, pressure_prime


def wavenumbers(n, d):
    """2*pi-scaled integer wavenumbers for rfftn on an n^d grid, broadcastable."""
    ks = []
    for axis in range(d):
        if axis == d - 1:
            k = np.fft.rfftfreq(n, d=1.0 / n)
        else:
            k = np.fft.fftfreq(n, d=1.0 / n)
        shape = [1] * d
        shape[axis] = k.size
        ks.append(2.0 * np.pi * k.reshape(shape))
    return ks


def dealias_mask(n, d):
    """Boolean 2/3-rule mask in rfftn layout (True = keep).

    Cuts per axis at n/3 and radially at the same bound, so the largest
    retained |k|^2 is (2 pi n/3)^2 and the explicit viscous step stays well
    inside the RK4 stability region at CFL 0.4 (a square mask would keep
    corner modes with twice that |k|^2).
    """
    keep = n // 3
    idxs = []
    for axis in range(d):
        if axis == d - 1:
            idx = np.arange(n // 2 + 1)
        else:
            idx = np.rint(np.abs(np.fft.fftfreq(n, d=1.0 / n))).astype(int)
        shape = [1] * d
        shape[axis] = idx.size
        idxs.append(idx.reshape(shape))
    out = idxs[0] <= keep
    for idx in idxs[1:]:
        out = out & (idx <= keep)
    if d > 1:
        out = out & (sum(idx.astype(float) ** 2 for idx in idxs) <= keep * keep)
    return out


@dataclass(frozen=True)
class FourierMode:
    """One complex mode of the initial perturbation (conjugate added implicitly)."""

    k: tuple  # integer wavevector, not all zero
    coeffs: tuple  # complex coefficient per field component (rho, m_1..m_d)


@dataclass(frozen=True)
class PerturbationSpec:
    """Zero-average band-limited initial perturbation on the torus."""

    epsilon: float
    modes: tuple
    seed: int | None = None

    def __post_init__(self):
        for mode in self.modes:
            if all(int(k) == 0 for k in mode.k):
                raise ValueError("zero wavevector is excluded (zero-average data)")

    @staticmethod
    def random(seed, d, n_modes=5, k_max=3, epsilon=0.02, axis_only=False):
        """Deterministic random mode set; axis_only restricts to k = (k1, 0, ...)."""
        rng = np.random.default_rng(seed)
        modes = []
        seen = set()
        attempts = 0
        while len(modes) < n_modes:
            attempts += 1
            if attempts > 1000:
                raise ValueError(
                    f"could not draw {n_modes} distinct modes with k_max={k_max}"
                )
            if axis_only:
                k = (int(rng.integers(1, k_max + 1)),) + (0,) * (d - 1)
            else:
                k = tuple(int(v) for v in rng.integers(-k_max, k_max + 1, size=d))
            if all(v == 0 for v in k) or k in seen:
                continue
            seen.add(k)
            coeffs = tuple(
                complex(a, b)
                for a, b in zip(rng.normal(size=d + 1), rng.normal(size=d + 1))
            )
            modes.append(FourierMode(k=k, coeffs=coeffs))
        return PerturbationSpec(epsilon=epsilon, modes=tuple(modes), seed=seed)

    def sample_on_grid(self, n, d):
        """Real perturbation fields (rho, m_1..m_d) on the n^d collocation grid."""
        axes = [np.arange(n) / n for _ in range(d)]
        grids = np.meshgrid(*axes, indexing="ij")
        return self._sample(grids, n, d)

    def sample_at(self, coords):
        """Same fields at arbitrary coordinate arrays (one per direction)."""
        grids = np.broadcast_arrays(*coords)
        d = len(grids)
        return self._sample(grids, None, d)

    def _sample(self, grids, n, d):
        shape = np.broadcast(*grids).shape
        fields = [np.zeros(shape) for _ in range(d + 1)]
        if self.epsilon == 0.0 or not self.modes:
            return fields
        for mode in self.modes:
            phase = np.zeros(shape)
            for k_i, x_i in zip(mode.k, grids):
                phase = phase + 2.0 * np.pi * k_i * x_i
            cos_p, sin_p = np.cos(phase), np.sin(phase)
            for f, c in zip(fields, mode.coeffs):
                # mode + conjugate: 2 Re(c e^{i phase})
                f += 2.0 * (c.real * cos_p - c.imag * sin_p)
        sup = max(np.max(np.abs(f)) for f in fields)
        if sup > 0:
            scale = self.epsilon / sup
            fields = [f * scale for f in fields]
        return fields

    def max_wavenumber(self):
        return max((max(abs(int(v)) for v in m.k) for m in self.modes), default=0)


@dataclass
class PeriodicState:
    """Conservative fields on T^d with their conserved means."""

    d: int
    n: int
    rho: np.ndarray
    m: np.ndarray  # shape (d,) + (n,)*d
    mean_rho: float
    mean_m: np.ndarray
    model: object
    t: float = 0.0

    def perturbation_sup(self):
        sup = np.max(np.abs(self.rho - self.mean_rho))
        for i in range(self.d):
            sup = max(sup, np.max(np.abs(self.m[i] - self.mean_m[i])))
        return float(sup)

    def mean_deviation(self):
        dev = abs(float(self.rho.mean()) - self.mean_rho)
        for i in range(self.d):
            dev = max(dev, abs(float(self.m[i].mean()) - self.mean_m[i]))
        return dev


def init_periodic(mean_rho, mean_m, spec, d, n, model):
    """Mean state plus sampled perturbation; rejects densities below mean/2."""
    if mean_rho <= 0:
        raise ValueError("mean density must be positive")
    if spec.max_wavenumber() > n // 3:
        raise ValueError("perturbation modes exceed the dealiased band n/3")
    fields = spec.sample_on_grid(n, d)
    rho = mean_rho + fields[0]
    if np.min(rho) < 0.5 * mean_rho:
        raise AmplitudeTooLargeError(
            f"min density {np.min(rho):.4g} below {0.5 * mean_rho:.4g}"
        )
    mean_m = np.asarray(mean_m, dtype=float)
    m = np.stack([mean_m[i] + fields[1 + i] for i in range(d)])
    return PeriodicState(
        d=d, n=n, rho=rho, m=m, mean_rho=float(mean_rho), mean_m=mean_m, model=model
    )


class _SpectralWorkspace:
    """Cached wavenumbers and masks per (n, d)."""

    _cache = {}

    def __new__(cls, n, d):
        key = (n, d)
        if key not in cls._cache:
            obj = object.__new__(cls)
            obj.k = wavenumbers(n, d)
            obj.mask = dealias_mask(n, d)
            obj.k2 = sum(ki * ki for ki in obj.k)
            cls._cache[key] = obj
        return cls._cache[key]


def _tendency(rho, m, model, ws, d):
    """Spectral tendency with one batched forward and one batched inverse FFT."""
    u = m / rho
    p = pressure(rho, model)

    pairs = [(i, jx) for i in range(d) for jx in range(i, d)]
    stack = np.empty((len(pairs) + 2 * d,) + rho.shape)
    for idx, (i, jx) in enumerate(pairs):
        np.multiply(m[i], u[jx], out=stack[idx])
        if i == jx:
            stack[idx] += p
    stack[len(pairs) : len(pairs) + d] = u
    stack[len(pairs) + d :] = m

    axes = tuple(range(1, d + 1))
    H = sfft.rfftn(stack, axes=axes)
    H *= ws.mask
    flux_hat = {pair: H[idx] for idx, pair in enumerate(pairs)}
    u_hat = H[len(pairs) : len(pairs) + d]
    m_hat = H[len(pairs) + d :]

    ik = [1j * ws.k[a] for a in range(d)]
    div_u_hat = sum(ik[a] * u_hat[a] for a in range(d))
    mu, lam = model.mu, model.lam
    out_hat = np.empty((d + 1,) + H.shape[1:], dtype=complex)
    out_hat[0] = -sum(ik[a] * m_hat[a] for a in range(d))
    for i in range(d):
        conv = sum(ik[a] * flux_hat[(min(i, a), max(i, a))] for a in range(d))
        out_hat[1 + i] = -conv - mu * ws.k2 * u_hat[i] + (mu + lam) * ik[i] * div_u_hat

    out = sfft.irfftn(out_hat, s=rho.shape, axes=axes)
    return out[0], out[1:]


def cfl_dt(state, cfl=0.4):
    """dt <= cfl * min(dx/(|u|+c), dx^2 rho_min / mu_tilde)."""
    dx = 1.0 / state.n
    u_sup = max(
        np.max(np.abs(state.m[i] / state.rho)) for i in range(state.d)
    )
    c_sup = float(np.max(np.sqrt(pressure_prime(state.rho, state.model))))
    adv = dx / (u_sup + c_sup)
    visc = dx * dx * float(np.min(state.rho)) / state.model.mu_tilde
    return cfl * min(adv, visc)


def step_periodic(state, dt):
    """One RK4 step; raises BlowupDetected on NaN or nonpositive density."""
    ws = _SpectralWorkspace(state.n, state.d)
    d = state.d
    rho0, m0 = state.rho, state.m

    k1r, k1m = _tendency(rho0, m0, state.model, ws, d)
    k2r, k2m = _tendency(rho0 + 0.5 * dt * k1r, m0 + 0.5 * dt * k1m, state.model, ws, d)
    k3r, k3m = _tendency(rho0 + 0.5 * dt * k2r, m0 + 0.5 * dt * k2m, state.model, ws, d)
    k4r, k4m = _tendency(rho0 + dt * k3r, m0 + dt * k3m, state.model, ws, d)

    rho = rho0 + (dt / 6.0) * (k1r + 2 * k2r + 2 * k3r + k4r)
    m = m0 + (dt / 6.0) * (k1m + 2 * k2m + 2 * k3m + k4m)
    if not np.all(np.isfinite(rho)) or np.min(rho) <= 0:
        raise BlowupDetectedError("density lost positivity", t=state.t)
    return PeriodicState(
        d=d,
        n=state.n,
        rho=rho,
        m=m,
        mean_rho=state.mean_rho,
        mean_m=state.mean_m,
        model=state.model,
        t=state.t + dt,
    )


def flux_functional(state):
    """Torus mean of u1*m1 + p(rho) minus its mean-state value.

    The building block of the oscillation-driven shift limit: the difference
    of this functional between the two backgrounds, integrated over time,
    gives the periodic contribution to the final momentum shift.
    """
    u1m1 = state.m[0] * state.m[0] / state.rho
    p = pressure(state.rho, state.model)
    mean_now = float(np.mean(u1m1 + p))
    u_bar = state.mean_m[0] / state.mean_rho
    mean_ref = u_bar * state.mean_m[0] + pressure(state.mean_rho, state.model)
    return mean_now - float(mean_ref)


@dataclass
class EvolveResult:
    times: np.ndarray
    sups: np.ndarray
    states: list = field(default_factory=list)
    flux: np.ndarray | None = None
    flux_times: np.ndarray | None = None


def evolve(state, t_end, dt=None, sample_every=None, keep_states=False, record_flux=False):
    """March to t_end recording sup-norms (and optionally states / flux series)."""
    if dt is None:
        dt = cfl_dt(state)
    n_steps = int(np.ceil((t_end - state.t) / dt - 1e-12))
    cadence = sample_every if sample_every else 1
    times, sups, states = [state.t], [state.perturbation_sup()], []
    flux = [flux_functional(state)] if record_flux else None
    flux_t = [state.t] if record_flux else None
    if keep_states:
        states.append(state)
    for k in range(n_steps):
        state = step_periodic(state, dt)
        if record_flux:
            flux.append(flux_functional(state))
            flux_t.append(state.t)
        if (k + 1) % cadence == 0 or k == n_steps - 1:
            times.append(state.t)
            sups.append(state.perturbation_sup())
            if keep_states:
                states.append(state)
    return state, EvolveResult(
        times=np.asarray(times),
        sups=np.asarray(sups),
        states=states,
        flux=np.asarray(flux) if record_flux else None,
        flux_times=np.asarray(flux_t) if record_flux else None,
    )


def measure_decay(times, sups, transient=0.0, floor=None):
    """Log-linear decay fit of a sup-norm series after a transient window."""
    from shockduct.diagnostics import fit_exponential

    times = np.asarray(times, dtype=float)
    sups = np.asarray(sups, dtype=float)
    sel = times >= transient
    if floor is not None:
        sel &= sups > floor
    if sel.sum() < 20:
        raise ValueError("need at least 20 samples after the transient window")
    return fit_exponential(times[sel], sups[sel])


class FieldSampler:
    """Spectral evaluation of one background state at arbitrary x1 positions.

    Keeps rfft coefficients along x1 of every field the blended construction
    needs (rho, momentum, velocity, pressure); evaluation at off-grid x1
    returns values on the native transverse grid, exact for the band-limited
    state. x1-derivatives act on the coefficients.
    """

    def __init__(self, state):
        d, n = state.d, state.n
        u = state.m / state.rho
        p = pressure(state.rho, state.model)
        fields = {"rho": state.rho, "p": np.asarray(p)}
        for i in range(d):
            fields[f"m{i + 1}"] = state.m[i]
            fields[f"u{i + 1}"] = u[i]
        self.C = {k: np.fft.rfft(v, axis=0) for k, v in fields.items()}
        self.n = n
        self.d = d
        self.t = state.t
        ks = np.arange(n // 2 + 1)
        wk = np.full(ks.size, 2.0)
        wk[0] = 1.0
        if n % 2 == 0:
            wk[-1] = 1.0
        self.ks = ks
        self.weight = (wk / n).reshape((-1,) + (1,) * (d - 1))

    def eval(self, key, x1, d1=0, _E=None):
        z = self.C[key] * self.weight
        if d1:
            fac = (2j * np.pi * self.ks) ** d1
            if self.n % 2 == 0 and d1 % 2 == 1:
                fac[-1] = 0.0  # Nyquist has no odd derivative
            z = z * fac.reshape(self.weight.shape)
        E = self.basis(x1) if _E is None else _E
        return np.tensordot(E, z, axes=(1, 0)).real

    def basis(self, x1):
        return np.exp(2j * np.pi * np.outer(np.asarray(x1, dtype=float), self.ks))

    def eval_many(self, keys, x1, d1=0):
        """Several fields at the same positions with one basis build."""
        E = self.basis(x1)
        return {key: self.eval(key, x1, d1, _E=E) for key in keys}


class TimeInterpSampler:
    """Linear-in-time blend of two FieldSamplers."""

    def __init__(self, samp_a, samp_b):
        self.a = samp_a
        self.b = samp_b
        self.ta = samp_a.t
        self.tb = samp_b.t

    def at(self, t):
        if self.tb == self.ta:
            return self.a
        w = (t - self.ta) / (self.tb - self.ta)
        out = object.__new__(FieldSampler)
        out.C = {
            k: (1.0 - w) * self.a.C[k] + w * self.b.C[k] for k in self.a.C
        }
        out.n = self.a.n
        out.d = self.a.d
        out.t = t
        out.ks = self.a.ks
        out.weight = self.a.weight
        return out


def linearized_symbol(k_int, mean_rho, mean_m, model, d):
    """(d+1)x(d+1) complex matrix of the system linearized at a constant state,
    acting on the Fourier coefficients (rho_k, m_k) of wavevector 2*pi*k_int."""
    k = 2.0 * np.pi * np.asarray(k_int, dtype=float)
    u = np.asarray(mean_m, dtype=float) / mean_rho
    pp = pressure_prime(mean_rho, model)
    mu, lam = model.mu, model.lam
    k2 = float(k @ k)
    A = np.zeros((d + 1, d + 1), dtype=complex)
    A[0, 1:] = -1j * k
    for i in range(d):
        row = 1 + i
        # convective linearization of m_i m_j / rho and the pressure
        A[row, 0] = 1j * (k @ u) * u[i] - 1j * k[i] * pp
        for jx in range(d):
            A[row, 1 + jx] += -1j * k[jx] * u[i]
        A[row, 1 + i] += -1j * (k @ u)
        # viscous terms act on u = (m - u rho)/rho_bar
        A[row, 0] += (mu * k2 * u[i] + (mu + lam) * k[i] * (k @ u)) / mean_rho
        A[row, 1 + i] += -mu * k2 / mean_rho
        for jx in range(d):
            A[row, 1 + jx] += -(mu + lam) * k[i] * k[jx] / mean_rho
    return A


def acoustic_eigenmode(k_int, mean_rho, mean_m, model, d):
    """Slowest-decaying eigenpair of the linearized symbol at one wavevector."""
    A = linearized_symbol(k_int, mean_rho, mean_m, model, d)
    vals, vecs = np.linalg.eig(A)
    order = np.argsort(vals.real)[::-1]
    lead = order[0]
    return vals[lead], vecs[:, lead]
