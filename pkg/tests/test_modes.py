import numpy as np
import pytest

from shockduct.errors import ZeroMassViolationError
from shockduct.modes import antiderivative, poincare_ratio, split_modes


def _random_field(seed, shape=(64, 16)):
    return np.random.default_rng(seed).normal(size=shape)


def test_split_reconstruction_and_sharp_mean():
    f = _random_field(0)
    flat, sharp = split_modes(f)
    assert np.max(np.abs(flat[:, None] + sharp - f)) <= 1e-14
    assert np.max(np.abs(sharp.mean(axis=1))) <= 1e-13


def test_split_transverse_independent_field():
    f = np.outer(np.linspace(-1, 1, 32), np.ones(8))
    flat, sharp = split_modes(f)
    assert np.max(np.abs(sharp)) == 0.0


def test_split_pure_transverse_mode():
    x2 = np.arange(16) / 16
    f = np.broadcast_to(np.sin(2 * np.pi * x2), (32, 16)).copy()
    flat, sharp = split_modes(f)
    assert np.max(np.abs(flat)) <= 1e-15


def test_split_idempotent_and_linear():
    f, g = _random_field(1), _random_field(2)
    flat, sharp = split_modes(f)
    flat2, sharp2 = split_modes(sharp)
    assert np.max(np.abs(flat2)) <= 1e-14
    assert np.max(np.abs(sharp2 - sharp)) <= 1e-14
    fl_sum, sh_sum = split_modes(2.0 * f + g)
    fl_f, sh_f = split_modes(f)
    fl_g, sh_g = split_modes(g)
    assert np.max(np.abs(fl_sum - 2 * fl_f - fl_g)) <= 1e-13
    assert np.max(np.abs(sh_sum - 2 * sh_f - sh_g)) <= 1e-13


def test_parseval_orthogonality():
    f = _random_field(3)
    flat, sharp = split_modes(f)
    n_perp = f.shape[1]
    total = np.sum(f * f) / n_perp
    parts = np.sum(flat * flat) + np.sum(sharp * sharp) / n_perp
    assert total == pytest.approx(parts, rel=1e-12)


def test_split_3d_field():
    f = np.random.default_rng(4).normal(size=(20, 8, 8))
    flat, sharp = split_modes(f)
    assert flat.shape == (20,)
    assert np.max(np.abs(sharp.mean(axis=(1, 2)))) <= 1e-13


def test_antiderivative_zero_input():
    pair = antiderivative(np.zeros(50), np.zeros(50), 0.1)
    assert np.all(pair.Phi == 0) and np.all(pair.Psi1 == 0)


def test_antiderivative_recovers_primitive():
    # fine 1D grid: cumulative trapezoid of B' recovers the bump B
    xi = np.linspace(-40.0, 40.0, 500_001)
    h = xi[1] - xi[0]
    B = np.exp(-(xi**2))
    Bp = -2 * xi * np.exp(-(xi**2))
    pair = antiderivative(Bp, np.zeros_like(Bp), h, tol=1e-6)
    assert np.max(np.abs(pair.Phi - B)) <= 1e-8
    assert abs(pair.endpoint_phi) <= 1e-10


def test_antiderivative_flags_mass_violation():
    xi = np.linspace(-10, 10, 2001)
    h = xi[1] - xi[0]
    bump = np.exp(-(xi**2))  # mass sqrt(pi), far beyond 100x tol
    with pytest.raises(ZeroMassViolationError):
        antiderivative(bump, np.zeros_like(bump), h, tol=1e-6)


def test_poincare_extremal_mode():
    x2 = np.arange(32) / 32
    f = np.broadcast_to(np.sin(2 * np.pi * x2), (16, 32)).copy()
    assert poincare_ratio(f) == pytest.approx(1.0 / (2 * np.pi), rel=1e-12)


def test_poincare_higher_mode():
    x2 = np.arange(32) / 32
    f = np.broadcast_to(np.sin(4 * np.pi * x2), (16, 32)).copy()
    assert poincare_ratio(f) == pytest.approx(1.0 / (4 * np.pi), rel=1e-12)


def test_poincare_random_sweep():
    rng = np.random.default_rng(17)
    bound = 1.0 / (2 * np.pi) + 1e-10
    for _ in range(100):
        coeffs = rng.normal(size=(5, 6)) + 1j * rng.normal(size=(5, 6))
        x2 = np.arange(24) / 24
        xi_mod = rng.normal(size=(12, 1))
        f = np.zeros((12, 24))
        for k in range(1, 7):
            prof = rng.normal(size=(12, 1))
            f += prof * np.real(coeffs[0, k - 1] * np.exp(2j * np.pi * k * x2))[None, :]
        ratio = poincare_ratio(f)
        assert ratio <= bound


def test_poincare_requires_zero_mean():
    f = np.ones((8, 16))
    with pytest.raises(ValueError):
        poincare_ratio(f)
