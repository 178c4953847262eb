import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from solidhhg.bands import KGrid, momentum_matrices, solve_bands
from solidhhg.dynamics import RelaxationRates, TimeGrid, current, initial_state, propagate, rhs, rk4_matrix
from solidhhg.errors import NumericalError, UsageError
from solidhhg.oracles import expm_trajectory
from solidhhg.potential import PotentialSpec, fourier_coefficients
from solidhhg.pulse import PulseParams
from solidhhg.units import fs_to_au, gvm_to_au

SPEC = PotentialSpec()


@pytest.fixture(scope="module")
def small():
    grid = KGrid(SPEC.lattice_constant, 11)
    bs = solve_bands(fourier_coefficients(SPEC, 32), grid, 4)
    return bs, momentum_matrices(bs)


def short_pulse(F0_gvm=4.0, tau_fs=30.0):
    return PulseParams.from_field(gvm_to_au(F0_gvm), tau=fs_to_au(tau_fs))


def random_density(rng, n):
    X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = X @ X.conj().T
    return rho / np.trace(rho)


def test_default_rates():
    r = RelaxationRates()
    assert r.gamma_d * fs_to_au(1.0) == pytest.approx(0.1)
    assert r.gamma_od * fs_to_au(1.0) == pytest.approx(0.3)
    g = r.matrix(3)
    assert np.all(np.diag(g) == r.gamma_d) and g[0, 1] == r.gamma_od
    with pytest.raises(UsageError):
        RelaxationRates(-1.0, 0.0)


def test_time_grid_lands_on_tau():
    p = PulseParams.from_field(1e-3)
    g = TimeGrid.for_pulse(p)
    assert g.n_steps * g.dt == pytest.approx(p.tau, rel=1e-14)
    assert g.dt <= p.period / 512
    assert g.dt > 0.999 * p.period / 512
    fine = g.refined(2)
    assert fine.t[::2] == pytest.approx(g.t, rel=0, abs=1e-9)
    tail = TimeGrid.for_pulse(p, tail=fs_to_au(10.0))
    assert tail.t[-1] >= p.tau + fs_to_au(10.0) - 1e-9
    with pytest.raises(UsageError):
        TimeGrid.for_pulse(p, dt=-1.0)


def test_initial_state(small):
    bs, _ = small
    s = initial_state(bs, 3)
    assert np.trace(s.rho) == 1
    assert s.rho[0, 0] == 1 and np.count_nonzero(s.rho) == 1
    assert np.trace(s.rho @ s.rho).real == pytest.approx(1.0)
    assert s.k == bs.kgrid.k[3]


def test_equilibrium_is_stationary(small):
    bs, P = small
    rho = np.zeros((bs.kgrid.n_k, 4, 4), complex)
    rho[:, 0, 0] = 1
    d = rhs(rho, 0.0, bs.energies, P.P, RelaxationRates().matrix(4), 0)
    assert np.max(np.abs(d)) == 0.0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), A=st.floats(-1.0, 1.0))
def test_rhs_is_traceless_and_hermitian(small, seed, A):
    bs, P = small
    rng = np.random.default_rng(seed)
    rho = random_density(rng, 4)
    d = rhs(rho, A, bs.energies[2], P.P[2], RelaxationRates().matrix(4), 0)
    assert abs(np.trace(d)) < 1e-12 * max(1.0, np.max(np.abs(d)))
    assert np.max(np.abs(d - d.conj().T)) == 0.0


def test_offdiagonal_decay():
    g = 0.05
    rates = RelaxationRates(0.01, g).matrix(2)
    rho0 = np.array([[0.5, 0.5], [0.5, 0.5]], complex)
    target = np.diag([1.0, 0.0]).astype(complex)
    dt, n = 0.1, 400
    traj = rk4_matrix(rho0, lambda t: np.zeros((2, 2)), rates, target, dt, n)
    t = np.arange(n + 1) * dt
    np.testing.assert_allclose(traj[:, 0, 1].real, 0.5 * np.exp(-g * t), atol=1e-10)


def test_rabi():
    omega = 0.3
    H = np.array([[0.0, omega], [omega, 0.0]])
    dt, n = 0.01, 2000
    traj = rk4_matrix(np.diag([1.0, 0.0]).astype(complex), lambda t: H, np.zeros((2, 2)), np.zeros((2, 2)), dt, n)
    t = np.arange(n + 1) * dt
    np.testing.assert_allclose(traj[:, 1, 1].real, np.sin(omega * t) ** 2, atol=1e-8)


def test_strong_dephasing_kills_coherence():
    g = 50.0
    rates = RelaxationRates(0.0, g).matrix(2)
    rho0 = np.array([[0.5, 0.5], [0.5, 0.5]], complex)
    traj = rk4_matrix(rho0, lambda t: np.diag([0.0, 0.1]), rates, np.zeros((2, 2)), 0.01, 100)
    assert np.max(np.abs(traj[-1, 0, 1])) < 1e-12


def test_current_field_term_is_uniform(small):
    bs, P = small
    rho = np.zeros((bs.kgrid.n_k, 4, 4), complex)
    rho[:, 0, 0] = 1
    j0 = current(rho, 0.0, P.P)
    j1 = current(rho, 0.25, P.P)
    np.testing.assert_allclose(j1 - j0, -0.25, atol=1e-15)
    np.testing.assert_allclose(j0.real, P.P[:, 0, 0].real, atol=0)


def test_driven_run_conserves_trace_and_hermiticity(small):
    bs, P = small
    p = short_pulse()
    prop = propagate(bs, P, p, RelaxationRates(), TimeGrid.for_pulse(p))
    assert prop.trace_error.max() < 1e-8
    assert prop.hermiticity.max() < 1e-10
    assert prop.imag_residue.max() < 1e-8


def test_worker_count_is_bitwise_irrelevant(small):
    bs, P = small
    p = short_pulse()
    g = TimeGrid.for_pulse(p)
    a = propagate(bs, P, p, RelaxationRates(), g, workers=1)
    b = propagate(bs, P, p, RelaxationRates(), g, workers=4)
    assert np.array_equal(a.currents, b.currents)


def test_k_points_are_independent(small):
    bs, P = small
    p = short_pulse()
    g = TimeGrid.for_pulse(p)
    full = propagate(bs, P, p, RelaxationRates(), g)
    part = propagate(bs, P, p, RelaxationRates(), g, indices=[7, 2])
    assert list(part.indices) == [2, 7]
    assert np.array_equal(part.currents, full.currents[[2, 7]])


def test_index_out_of_range(small):
    bs, P = small
    p = short_pulse()
    with pytest.raises(UsageError):
        propagate(bs, P, p, RelaxationRates(), TimeGrid.for_pulse(p), indices=[11])


def test_trace_drift_raises(small):
    bs, P = small
    p = short_pulse(20.0)
    with pytest.raises(NumericalError):
        propagate(bs, P, p, RelaxationRates(), TimeGrid.for_pulse(p, steps_per_cycle=3))


def test_record_matches_currents(small):
    bs, P = small
    p = short_pulse(tau_fs=10.0)
    g = TimeGrid.for_pulse(p)
    prop = propagate(bs, P, p, RelaxationRates(), g, indices=[4], record=True)
    from solidhhg.pulse import vector_potential
    from solidhhg.spectrum import current_contribution

    j = current_contribution(prop.trajectories[:, 0], P.P[4], vector_potential(p, g.t))
    np.testing.assert_allclose(j, prop.currents[0], rtol=0, atol=1e-14 * np.max(np.abs(j)))


def test_step_halving(small):
    bs, P = small
    p = PulseParams.from_field(gvm_to_au(2.0))
    g = TimeGrid.for_pulse(p)
    a = propagate(bs, P, p, RelaxationRates(), g).currents.sum(axis=0)
    b = propagate(bs, P, p, RelaxationRates(), g.refined(2)).currents.sum(axis=0)[::2]
    rms = np.sqrt(np.mean((a - b) ** 2) / np.mean(b ** 2))
    assert rms < 1e-6


def test_rk4_matches_exponential_oracle_short_pulse(small):
    bs, P = small
    p = short_pulse(F0_gvm=0.5, tau_fs=20.0)
    g = TimeGrid.for_pulse(p)
    i = 8
    prop = propagate(bs, P, p, RelaxationRates(), g, indices=[i], record=True)
    ref = expm_trajectory(bs.energies[i], P.P[i], 0, p, RelaxationRates(), g, micro_steps=100)
    assert np.max(np.abs(prop.trajectories[:, 0] - ref)) < 1e-7


def test_rk4_is_fourth_order_in_strong_field(small):
    # at 4 GV/m the default step is not converged to 1e-7, but the error must shrink ~16x per halving
    bs, P = small
    p = short_pulse(tau_fs=20.0)
    i = 8
    errs = []
    for g in (TimeGrid.for_pulse(p), TimeGrid.for_pulse(p).refined(2)):
        prop = propagate(bs, P, p, RelaxationRates(), g, indices=[i], record=True)
        ref = expm_trajectory(bs.energies[i], P.P[i], 0, p, RelaxationRates(), g, micro_steps=50)
        errs.append(np.max(np.abs(prop.trajectories[:, 0] - ref)))
    assert 10 < errs[0] / errs[1] < 24


def test_exponential_oracle_reproduces_free_relaxation():
    # no field: rho stays at the valence projector exactly
    E = np.array([0.0, 0.1])
    P = np.array([[0.0, 0.3], [0.3, 0.0]], complex)
    p = PulseParams(0.0, tau=50.0)
    g = TimeGrid(1.0, 50)
    ref = expm_trajectory(E, P, 0, p, RelaxationRates(0.01, 0.02), g, micro_steps=2)
    target = np.diag([1.0, 0.0])
    assert np.max(np.abs(ref - target)) < 1e-12
