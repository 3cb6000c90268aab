import numpy as np
import pytest

from shockduct.ansatz import (
    assemble_residuals,
    blend_columns,
    build_ansatz,
    residual_norms,
    source_masses,
    source_terms,
)
from shockduct.errors import AnsatzOutOfRangeError
from shockduct.gasdyn import GasModel, solve_shock
from shockduct.grids import DuctGrid
from shockduct.periodic import (
    FieldSampler,
    FourierMode,
    PerturbationSpec,
    init_periodic,
    step_periodic,
)
from shockduct.profile import eval_profile, solve_profile
from shockduct.shift import ShiftQuadrature, mean_line_coeffs

MODEL = GasModel(1.5, 0.05, 0.05)


@pytest.fixture(scope="module")
def triple():
    return solve_shock(1.1, 0.9, MODEL)


@pytest.fixture(scope="module")
def prof(triple):
    return solve_profile(triple, MODEL)


@pytest.fixture(scope="module")
def grid():
    return DuctGrid(L=30.0, n_xi=384, n_perp=16)


def _constant_samplers(triple):
    spec = PerturbationSpec(epsilon=0.0, modes=())
    out = []
    for rho, u in ((triple.rho_minus, triple.u1_minus), (triple.rho_plus, triple.u1_plus)):
        st = init_periodic(rho, np.array([rho * u, 0.0]), spec, 2, 16, MODEL)
        out.append(FieldSampler(st))
    return out


def _noisy_states(triple, epsilon=0.02):
    spec = PerturbationSpec(
        epsilon=epsilon,
        modes=(
            FourierMode(k=(1, 0), coeffs=(0.8 + 0.3j, 0.7 - 0.4j, 0.2j)),
            FourierMode(k=(0, 1), coeffs=(0.3 - 0.2j, 0.1 + 0.5j, 0.4 + 0j)),
        ),
    )
    out = []
    for rho, u in ((triple.rho_minus, triple.u1_minus), (triple.rho_plus, triple.u1_plus)):
        out.append(init_periodic(rho, np.array([rho * u, 0.0]), spec, 2, 16, MODEL))
    return out


def test_quiet_blend_is_pure_layer(grid, prof, triple):
    sm, sp = _constant_samplers(triple)
    ans = build_ansatz(grid, 0.7, sm, sp, prof, 0.0, 0.0)
    vals = eval_profile(prof, grid.xi)
    assert np.max(np.abs(ans.rho_t - vals[0][:, None])) <= 1e-13
    assert np.max(np.abs(ans.m_t[0] - vals[1][:, None])) <= 1e-13
    assert np.max(np.abs(ans.m_t[1])) == 0.0


def test_blend_far_field_and_midpoint(grid, prof, triple):
    sm, sp = _constant_samplers(triple)
    ans = build_ansatz(grid, 0.0, sm, sp, prof, 0.0, 0.0)
    i0 = int(np.argmin(np.abs(grid.xi)))
    assert ans.rho_t[0, 0] == pytest.approx(triple.rho_minus, abs=1e-9)
    assert ans.rho_t[-1, 0] == pytest.approx(triple.rho_plus, abs=1e-9)
    assert ans.rho_t[i0].mean() == pytest.approx(
        0.5 * (triple.rho_minus + triple.rho_plus), rel=1e-12
    )


def test_blend_range_guard(grid, prof, triple):
    sm, sp = _constant_samplers(triple)
    spec = PerturbationSpec(
        epsilon=0.8, modes=(FourierMode(k=(0, 1), coeffs=(1.0, 0.0, 0.0)),)
    )
    bad = init_periodic(2.0 * triple.rho_minus, np.zeros(2), spec, 2, 16, MODEL)
    with pytest.raises(AnsatzOutOfRangeError):
        build_ansatz(grid, 0.0, FieldSampler(bad), sp, prof, 0.0, 0.0)


def test_quiet_equal_shift_sources_vanish(grid, prof, triple):
    sm, sp = _constant_samplers(triple)
    src = source_terms(grid, 0.3, sm, sp, prof, 0.0, 0.0, 0.0, 0.0)
    assert np.max(np.abs(src.F1)) == 0.0
    assert np.max(np.abs(src.f2)) <= 1e-14
    assert np.max(np.abs(src.f4)) <= 1e-14
    # the axial-axial block cancels through the first integral of the layer
    assert np.max(np.abs(src.F3[0][0])) <= 1e-12
    g1, g2 = assemble_residuals(src, grid)
    assert np.max(np.abs(g1)) <= 1e-14
    assert np.max(np.abs(g2)) <= 1e-12


def test_quiet_unequal_shifts_leave_flux_sources(grid, prof, triple):
    sm, sp = _constant_samplers(triple)
    src = source_terms(grid, 0.0, sm, sp, prof, 0.2, -0.1, 0.0, 0.0)
    assert np.max(np.abs(src.F1)) > 1e-3


def test_source_masses_vanish_along_solved_rates(grid, prof, triple):
    states = _noisy_states(triple)
    for _ in range(40):
        states = [step_periodic(st, 0.002) for st in states]
    t = states[0].t
    sm, sp = FieldSampler(states[0]), FieldSampler(states[1])
    quad = ShiftQuadrature(prof, 16)
    cm, cp = mean_line_coeffs(states[0]), mean_line_coeffs(states[1])
    X, Y = 0.013, -0.008
    L1x, L2x, _ = quad.L(X, t, cm, cp)
    L1y, _, L3y = quad.L(Y, t, cm, cp)
    xp = -prof.triple.s + L1x / L2x
    yp = -prof.triple.s + L3y / L1y
    src = source_terms(grid, t, sm, sp, prof, X, Y, xp, yp)
    mf2, mf4 = source_masses(src, grid)
    assert abs(mf2) <= 1e-8
    assert abs(mf4) <= 1e-8


def test_source_norms_scale_linearly_in_amplitude(grid, prof, triple):
    norms = {}
    for eps in (0.02, 0.01):
        states = _noisy_states(triple, epsilon=eps)
        for _ in range(60):
            states = [step_periodic(st, 0.002) for st in states]
        sm, sp = FieldSampler(states[0]), FieldSampler(states[1])
        src = source_terms(grid, states[0].t, sm, sp, prof, 0.0, 0.0, 0.0, 0.0)
        norms[eps] = residual_norms(src, grid)
    for k in range(2):
        ratio = norms[0.02][k] / norms[0.01][k]
        assert ratio == pytest.approx(2.0, rel=0.25)


def test_blend_columns_matches_full(grid, prof, triple):
    states = _noisy_states(triple)
    sm, sp = FieldSampler(states[0]), FieldSampler(states[1])
    ans = build_ansatz(grid, 0.4, sm, sp, prof, 0.05, -0.02)
    cols = np.array([3, 100, 383])
    rho_c, m_c = blend_columns(grid.xi[cols], 0.4, sm, sp, prof, 0.05, -0.02)
    assert np.max(np.abs(rho_c - ans.rho_t[cols])) <= 1e-13
    assert np.max(np.abs(m_c[0] - ans.m_t[0][cols])) <= 1e-13


def test_ansatz_mass_rate_matches_sources(grid, prof, triple):
    # with transverse-only oscillation the through-flux cancels exactly, and
    # moving the density shift at a prescribed rate must balance the f2 mass:
    # d/dt int rho_t = -int(div F1 + f2)
    spec = PerturbationSpec(
        epsilon=0.02,
        modes=(
            FourierMode(k=(0, 1), coeffs=(0.3 - 0.2j, 0.1 + 0.5j, 0.4 + 0j)),
            FourierMode(k=(0, 2), coeffs=(0.5 + 0.1j, -0.2 + 0.3j, 0.15j)),
        ),
    )
    states = [
        init_periodic(r, np.array([r * u, 0.0]), spec, 2, 16, MODEL)
        for r, u in ((triple.rho_minus, triple.u1_minus), (triple.rho_plus, triple.u1_plus))
    ]
    for _ in range(30):
        states = [step_periodic(st, 0.002) for st in states]
    xp, yp = 0.013, -0.02  # prescribed (non-solved) shift rates

    s = triple.s

    def snapshot(states, X, Y):
        sm, sp = FieldSampler(states[0]), FieldSampler(states[1])
        t = states[0].t
        ans = build_ansatz(grid, t, sm, sp, prof, X, Y)
        src = source_terms(grid, t, sm, sp, prof, X, Y, xp, yp)
        g1, g2 = assemble_residuals(src, grid)
        # momentum through-flux: the quadratic flux keeps a transverse mean
        # that differs between the two oscillation blocks (the mechanism
        # behind the oscillation-driven shift limit)
        bf = []
        for st in states:
            bf.append(
                float(np.mean(st.m[0] ** 2 / st.rho + _press(st.rho, MODEL)) - s * np.mean(st.m[0]))
            )
        return (
            grid.integrate(ans.rho_t),
            grid.integrate(ans.m_t[0]),
            grid.integrate(g1),
            grid.integrate(g2[0]),
            bf[1] - bf[0],
        )

    from shockduct.gasdyn import pressure as _press

    dt = 0.001
    X0, Y0 = 0.05, -0.03
    mr0, mm0, g1_0, g2_0, bf0 = snapshot(states, X0, Y0)
    states2 = [step_periodic(st, dt) for st in states]
    states2 = [step_periodic(st, dt) for st in states2]
    mr1, mm1, g1_1, g2_1, bf1 = snapshot(states2, X0 + 2 * dt * xp, Y0 + 2 * dt * yp)
    drho_dt = (mr1 - mr0) / (2 * dt)
    dm1_dt = (mm1 - mm0) / (2 * dt)
    assert abs(g1_0) > 1e-4  # the source mass is genuinely nonzero here
    assert drho_dt == pytest.approx(-0.5 * (g1_0 + g1_1), abs=1e-6)
    assert dm1_dt == pytest.approx(-0.5 * (g2_0 + g2_1) - 0.5 * (bf0 + bf1), abs=1e-6)
