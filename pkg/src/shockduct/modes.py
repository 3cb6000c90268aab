"""Transverse-mean / remainder decomposition on the duct and its consequences.

A field on [-L, L] x T^(d-1) splits into its transverse average (a 1D field
along the duct axis) and the zero-average remainder. The remainder satisfies
the torus Poincare inequality, which is what makes it decay exponentially;
the average is handled through its antiderivative.
"""

from dataclasses import dataclass

import numpy as np

from shockduct.errors import ZeroMassViolationError


def split_modes(field):
    """(flat, sharp): exact transverse mean and zero-mean remainder.

    field has shape (n_xi,) + transverse dims; flat keeps shape (n_xi,).
    """
    field = np.asarray(field)
    axes = tuple(range(1, field.ndim))
    if not axes:
        return field.copy(), np.zeros_like(field)
    flat = field.mean(axis=axes)
    sharp = field - flat.reshape(flat.shape + (1,) * len(axes))
    return flat, sharp


@dataclass
class AntiDerivativePair:
    """Antiderivatives of the zero-mode perturbations with endpoint residuals."""

    Phi: np.ndarray
    Psi1: np.ndarray
    endpoint_phi: float
    endpoint_psi1: float


def antiderivative(flat_phi, flat_psi1, dxi, tol=1e-6, hard_factor=100.0):
    """Cumulative trapezoid from the left end; endpoint residual reported.

    The residual is the total mass; beyond hard_factor*tol it indicates a
    conservation bug and raises instead of being silently renormalized.
    """
    def cum(f):
        f = np.asarray(f, dtype=float)
        out = np.zeros_like(f)
        out[1:] = np.cumsum(0.5 * (f[1:] + f[:-1])) * dxi
        return out

    Phi = cum(flat_phi)
    Psi1 = cum(flat_psi1)
    r_phi, r_psi = float(Phi[-1]), float(Psi1[-1])
    if max(abs(r_phi), abs(r_psi)) > hard_factor * tol:
        raise ZeroMassViolationError(
            f"zero-mode masses ({r_phi:.3e}, {r_psi:.3e}) exceed {hard_factor:.0f}x tolerance"
        )
    return AntiDerivativePair(Phi=Phi, Psi1=Psi1, endpoint_phi=r_phi, endpoint_psi1=r_psi)


def transverse_gradient_sq(sharp):
    """|grad_perp f|^2 summed over transverse directions, spectral derivatives."""
    sharp = np.asarray(sharp, dtype=float)
    d_perp = sharp.ndim - 1
    out = np.zeros_like(sharp)
    for ax in range(1, sharp.ndim):
        n = sharp.shape[ax]
        k = 2.0 * np.pi * np.fft.rfftfreq(n, d=1.0 / n)
        fh = np.fft.rfft(sharp, axis=ax)
        shape = [1] * sharp.ndim
        shape[ax] = k.size
        grad = np.fft.irfft(1j * k.reshape(shape) * fh, n=n, axis=ax)
        out += grad * grad
    return out


def poincare_ratio(sharp):
    """||f_sharp|| / ||grad_perp f_sharp|| in L2; at most 1/(2 pi) on the unit torus."""
    sharp = np.asarray(sharp, dtype=float)
    axes = tuple(range(1, sharp.ndim))
    means = sharp.mean(axis=axes)
    if np.max(np.abs(means)) > 1e-12 * max(1.0, np.max(np.abs(sharp))):
        raise ValueError("poincare_ratio requires a zero transverse mean at every xi")
    num = np.sqrt(np.sum(sharp * sharp))
    den = np.sqrt(np.sum(transverse_gradient_sq(sharp)))
    if den == 0.0:
        if num == 0.0:
            return 0.0
        raise ValueError("zero transverse gradient with nonzero field")
    return float(num / den)
