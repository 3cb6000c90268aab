import numpy as np
import pytest

from shockduct.diagnostics import fit_exponential
from shockduct.errors import AmplitudeTooLargeError
from shockduct.gasdyn import GasModel
from shockduct.periodic import (
    FourierMode,
    PerturbationSpec,
    acoustic_eigenmode,
    cfl_dt,
    evolve,
    flux_functional,
    init_periodic,
    linearized_symbol,
    measure_decay,
    step_periodic,
)

MODEL = GasModel(1.4, 0.1, 0.1)


def test_zero_amplitude_gives_constant_state():
    spec = PerturbationSpec(epsilon=0.0, modes=())
    st = init_periodic(1.0, np.zeros(2), spec, 2, 16, MODEL)
    assert np.all(st.rho == 1.0)
    assert np.all(st.m == 0.0)
    st2 = step_periodic(st, 0.01)
    assert np.max(np.abs(st2.rho - 1.0)) == 0.0
    assert np.max(np.abs(st2.m)) == 0.0


def test_single_cosine_mode_mean_and_max():
    spec = PerturbationSpec(epsilon=0.01, modes=(FourierMode(k=(1, 0), coeffs=(0.5, 0.0, 0.0)),))
    st = init_periodic(1.0, np.zeros(2), spec, 2, 32, MODEL)
    v0 = st.rho - 1.0
    assert abs(v0.mean()) <= 1e-15
    assert np.max(v0) == pytest.approx(0.01, rel=1e-12)


def test_random_spec_zero_average():
    spec = PerturbationSpec.random(7, d=2, n_modes=5, epsilon=0.05)
    st = init_periodic(1.0, np.zeros(2), spec, 2, 32, MODEL)
    assert st.mean_deviation() <= 1e-12


def test_mode_with_zero_wavevector_rejected():
    with pytest.raises(ValueError):
        PerturbationSpec(epsilon=0.1, modes=(FourierMode(k=(0, 0), coeffs=(1.0, 0, 0)),))


def test_amplitude_guard():
    spec = PerturbationSpec(epsilon=0.9, modes=(FourierMode(k=(1, 0), coeffs=(1.0, 0, 0)),))
    with pytest.raises(AmplitudeTooLargeError):
        init_periodic(1.0, np.zeros(2), spec, 2, 32, MODEL)


def test_mean_conservation_over_many_steps():
    spec = PerturbationSpec.random(3, d=2, n_modes=4, epsilon=0.05)
    st = init_periodic(1.0, np.array([0.1, 0.0]), spec, 2, 32, MODEL)
    dt = cfl_dt(st)
    for _ in range(1000):
        st = step_periodic(st, dt)
    assert st.mean_deviation() <= 1e-11


def test_decay_matches_symbol_oracle():
    # oracle: eigenvalues of the linearized Fourier-symbol matrix
    d, n = 2, 32
    lam, vec = acoustic_eigenmode((1, 0), 1.0, np.zeros(2), MODEL, d)
    spec = PerturbationSpec(epsilon=1e-6, modes=(FourierMode(k=(1, 0), coeffs=tuple(vec)),))
    st = init_periodic(1.0, np.zeros(2), spec, d, n, MODEL)
    _, res = evolve(st, 2.0, dt=cfl_dt(st), sample_every=10)
    fit = fit_exponential(res.times, res.sups, window=(0.1, 1.8))
    assert fit.rate == pytest.approx(-lam.real, rel=0.05)
    assert fit.r2 >= 0.99


def test_decay_rate_insensitive_to_amplitude():
    d, n = 2, 32
    rates = []
    for eps in (0.005, 0.01):
        spec = PerturbationSpec.random(5, d=d, n_modes=3, epsilon=eps)
        st = init_periodic(1.0, np.zeros(2), spec, d, n, MODEL)
        _, res = evolve(st, 3.0, dt=cfl_dt(st), sample_every=20)
        rates.append(measure_decay(res.times, res.sups, transient=0.8).rate)
    assert rates[1] == pytest.approx(rates[0], rel=0.10)


def test_measure_decay_exact_series():
    t = np.linspace(0, 10, 50)
    fit = measure_decay(t, 0.05 * np.exp(-0.3 * t))
    assert fit.rate == pytest.approx(0.3, abs=1e-9)
    assert fit.amplitude == pytest.approx(0.05, rel=1e-9)


def test_positivity_maintained():
    spec = PerturbationSpec.random(9, d=2, n_modes=5, epsilon=0.02)
    st = init_periodic(1.0, np.zeros(2), spec, 2, 32, MODEL)
    dt = cfl_dt(st)
    for _ in range(400):
        st = step_periodic(st, dt)
        assert np.min(st.rho) >= 0.5


def test_reflection_symmetry_preserved():
    # rho even / m odd under x -> -x is an invariant of the system
    modes = (
        FourierMode(k=(1, 0), coeffs=(0.5, 0.4j, 0.3j)),
        FourierMode(k=(0, 2), coeffs=(0.2, 0.1j, 0.25j)),
    )
    spec = PerturbationSpec(epsilon=0.01, modes=modes)
    st = init_periodic(1.0, np.zeros(2), spec, 2, 32, MODEL)
    st, _ = evolve(st, 0.5, dt=cfl_dt(st))
    n = st.n
    ridx = (-np.arange(n)) % n
    assert np.max(np.abs(st.rho[np.ix_(ridx, ridx)] - st.rho)) <= 1e-10
    for i in range(2):
        assert np.max(np.abs(st.m[i][np.ix_(ridx, ridx)] + st.m[i])) <= 1e-10


def test_spectral_accuracy_under_refinement():
    # band-limited data: refining 32 -> 64 changes the t=1 solution below 1e-6
    spec = PerturbationSpec.random(13, d=2, n_modes=3, k_max=2, epsilon=0.005)
    outs = {}
    for n in (32, 64):
        st = init_periodic(1.0, np.zeros(2), spec, 2, n, MODEL)
        dt = 0.4 * (1.0 / 64) ** 2 * 0.99 / MODEL.mu_tilde  # common dt
        st, _ = evolve(st, 1.0, dt=dt)
        outs[n] = st
    coarse = outs[32].rho
    fine = outs[64].rho[::2, ::2]
    assert np.max(np.abs(coarse - fine)) <= 1e-6


def test_flux_functional_zero_on_mean_state():
    spec = PerturbationSpec(epsilon=0.0, modes=())
    st = init_periodic(1.1, np.array([0.2, 0.0]), spec, 2, 16, MODEL)
    assert flux_functional(st) == pytest.approx(0.0, abs=1e-14)


def test_linearized_symbol_d1_shape():
    A = linearized_symbol((2,), 1.0, np.array([0.0]), MODEL, 1)
    assert A.shape == (2, 2)
    vals = np.linalg.eigvals(A)
    assert np.all(vals.real < 0)
