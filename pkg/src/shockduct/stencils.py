"""Finite-difference stencils along the duct axis and spectral transverse ops.

All xi-operators are 4th order: central in the interior, one-sided at the
edges. The interior first derivative is in flux form (telescoping exactly),
which is what the conservation accounting leans on.
"""

import numpy as np
import scipy.fft as sfft


def d1_fd4(f, h):
    """4th-order first derivative along axis 0."""
    f = np.asarray(f, dtype=float)
    out = np.empty_like(f)
    out[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
    out[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
    out[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
    out[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12 * h)
    out[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * h)
    return out


def d2_fd4(f, h):
    """4th-order second derivative along axis 0."""
    f = np.asarray(f, dtype=float)
    out = np.empty_like(f)
    h2 = h * h
    out[2:-2] = (
        -f[:-4] + 16 * f[1:-3] - 30 * f[2:-2] + 16 * f[3:-1] - f[4:]
    ) / (12 * h2)
    out[0] = (
        45 * f[0] - 154 * f[1] + 214 * f[2] - 156 * f[3] + 61 * f[4] - 10 * f[5]
    ) / (12 * h2)
    out[1] = (
        10 * f[0] - 15 * f[1] - 4 * f[2] + 14 * f[3] - 6 * f[4] + f[5]
    ) / (12 * h2)
    out[-1] = (
        45 * f[-1] - 154 * f[-2] + 214 * f[-3] - 156 * f[-4] + 61 * f[-5] - 10 * f[-6]
    ) / (12 * h2)
    out[-2] = (
        10 * f[-1] - 15 * f[-2] - 4 * f[-3] + 14 * f[-4] - 6 * f[-5] + f[-6]
    ) / (12 * h2)
    return out


def dissipation6(f, coef):
    """Conservative 6th-difference damping, zero within three cells of the edges.

    coef carries the (speed/h)-scaling; the Fourier symbol is
    -coef * (2 sin(kh/2))^6 <= 0.
    """
    f = np.asarray(f, dtype=float)
    out = np.zeros_like(f)
    out[3:-3] = coef * (
        f[:-6]
        - 6 * f[1:-5]
        + 15 * f[2:-4]
        - 20 * f[3:-3]
        + 15 * f[4:-2]
        - 6 * f[5:-1]
        + f[6:]
    )
    return out


def d1_fd4_batch(F, h, out=None, work=None):
    """d1_fd4 along axis 1 of a stacked (k, n_xi, ...) array, low-garbage."""
    if out is None:
        out = np.empty_like(F)
    core = out[:, 2:-2]
    if work is None:
        work = np.empty_like(core)
    np.subtract(F[:, 3:-1], F[:, 1:-3], out=work)
    work *= 8.0
    np.subtract(F[:, :-4], F[:, 4:], out=core)
    core += work
    core *= 1.0 / (12 * h)
    out[:, 0] = (-25 * F[:, 0] + 48 * F[:, 1] - 36 * F[:, 2] + 16 * F[:, 3] - 3 * F[:, 4]) / (12 * h)
    out[:, 1] = (-3 * F[:, 0] - 10 * F[:, 1] + 18 * F[:, 2] - 6 * F[:, 3] + F[:, 4]) / (12 * h)
    out[:, -2] = (3 * F[:, -1] + 10 * F[:, -2] - 18 * F[:, -3] + 6 * F[:, -4] - F[:, -5]) / (12 * h)
    out[:, -1] = (25 * F[:, -1] - 48 * F[:, -2] + 36 * F[:, -3] - 16 * F[:, -4] + 3 * F[:, -5]) / (12 * h)
    return out


def d2_fd4_batch(F, h, out=None, work=None):
    """d2_fd4 along axis 1 of a stacked (k, n_xi, ...) array, low-garbage."""
    if out is None:
        out = np.empty_like(F)
    h2 = h * h
    core = out[:, 2:-2]
    if work is None:
        work = np.empty_like(core)
    np.add(F[:, 1:-3], F[:, 3:-1], out=work)
    work *= 16.0
    np.add(F[:, :-4], F[:, 4:], out=core)
    core *= -1.0
    core += work
    np.multiply(F[:, 2:-2], -30.0, out=work)
    core += work
    core *= 1.0 / (12 * h2)
    out[:, 0] = (
        45 * F[:, 0] - 154 * F[:, 1] + 214 * F[:, 2] - 156 * F[:, 3] + 61 * F[:, 4] - 10 * F[:, 5]
    ) / (12 * h2)
    out[:, 1] = (
        10 * F[:, 0] - 15 * F[:, 1] - 4 * F[:, 2] + 14 * F[:, 3] - 6 * F[:, 4] + F[:, 5]
    ) / (12 * h2)
    out[:, -1] = (
        45 * F[:, -1] - 154 * F[:, -2] + 214 * F[:, -3] - 156 * F[:, -4] + 61 * F[:, -5] - 10 * F[:, -6]
    ) / (12 * h2)
    out[:, -2] = (
        10 * F[:, -1] - 15 * F[:, -2] - 4 * F[:, -3] + 14 * F[:, -4] - 6 * F[:, -5] + F[:, -6]
    ) / (12 * h2)
    return out


_TRANSVERSE_CACHE = {}


def _t_wavenumbers(n):
    if n not in _TRANSVERSE_CACHE:
        _TRANSVERSE_CACHE[n] = 2.0 * np.pi * np.fft.rfftfreq(n, d=1.0 / n)
    return _TRANSVERSE_CACHE[n]


def transverse_d1(f, axis):
    """Spectral first derivative along one unit-torus axis."""
    f = np.asarray(f, dtype=float)
    n = f.shape[axis]
    k = _t_wavenumbers(n)
    shape = [1] * f.ndim
    shape[axis] = k.size
    return sfft.irfft(1j * k.reshape(shape) * sfft.rfft(f, axis=axis), n=n, axis=axis)


def transverse_d2(f, axis):
    """Spectral second derivative along one unit-torus axis."""
    f = np.asarray(f, dtype=float)
    n = f.shape[axis]
    k = _t_wavenumbers(n)
    shape = [1] * f.ndim
    shape[axis] = k.size
    return sfft.irfft(-(k.reshape(shape) ** 2) * sfft.rfft(f, axis=axis), n=n, axis=axis)


def transverse_dealias(f, axes):
    """2/3-rule mask (with radial cut for two axes) applied to a duct field."""
    f = np.asarray(f, dtype=float)
    if not axes:
        return f
    last = axes[-1]
    fh = sfft.rfftn(f, axes=axes)
    idxs = []
    for ax in axes:
        n = f.shape[ax]
        keep = n // 3
        if ax == last:
            idx = np.arange(n // 2 + 1)
        else:
            idx = np.rint(np.abs(np.fft.fftfreq(n, d=1.0 / n))).astype(int)
        shape = [1] * f.ndim
        shape[ax] = idx.size
        idxs.append((idx.reshape(shape), keep))
    mask = idxs[0][0] <= idxs[0][1]
    for idx, keep in idxs[1:]:
        mask = mask & (idx <= keep)
    if len(idxs) > 1:
        mask = mask & (
            sum((idx.astype(float) / keep) ** 2 for idx, keep in idxs) <= 1.0
        )
    fh *= mask
    return sfft.irfftn(fh, s=[f.shape[a] for a in axes], axes=axes)
