import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nhknot import dilation, evolve, model

LAM = 2.0 * math.pi * 0.085

entry = st.floats(-1.5, 1.5, allow_nan=False)
coeff_arrays = st.builds(lambda *v: np.array(v), *[entry] * 8)


def hopf_schedule(k_over_pi=0.6, t_final=6.0, n=801):
    h = LAM * model.bloch_hamiltonian(model.preset_params("hopf_link"),
                                      k_over_pi * math.pi)
    return h, dilation.compile_dilation(h, np.linspace(0.0, t_final, n))


@given(coeff_arrays)
@settings(max_examples=100)
def test_pauli_roundtrip(coeffs):
    h_sa = dilation.recompose(coeffs)
    assert np.abs(h_sa - h_sa.conj().T).max() < 1e-12
    np.testing.assert_allclose(dilation.pauli_decompose(h_sa), coeffs, atol=1e-10)


def test_metric_series_hermitian_and_bounded():
    _, sched = hopf_schedule()
    herm = max(np.abs(m - m.conj().T).max() for m in sched.M)
    assert herm < 1e-10
    min_eig = min(np.linalg.eigvalsh(m - np.eye(2)).min() for m in sched.M)
    assert min_eig >= sched.margin / 2.0


def test_eta_is_hermitian_positive_sqrt():
    _, sched = hopf_schedule(n=401)
    for i in (0, 200, 400):
        eta = sched.eta[i]
        assert np.abs(eta - eta.conj().T).max() < 1e-10
        assert np.linalg.eigvalsh(eta).min() > 0
        np.testing.assert_allclose(eta @ eta + np.eye(2), sched.M[i], atol=1e-9)


def test_eta_derivative_satisfies_sylvester():
    h, sched = hopf_schedule(n=401)
    for i in (0, 150, 400):
        eta, deta = sched.eta[i], sched.deta[i]
        # d(eta^2)/dt = -i (H^dag M - M H) with M = eta^2 + 1
        m = sched.M[i]
        rhs = -1j * (h.conj().T @ m - m @ h)
        np.testing.assert_allclose(deta @ eta + eta @ deta, rhs, atol=1e-8)


def test_deta_matches_finite_differences():
    _, sched = hopf_schedule(n=801)
    fd = dilation.central_diff(sched.eta, sched.t_grid)
    err = np.abs(sched.deta[1:-1] - fd[1:-1]).max()
    assert err < 1e-3


def test_generators_hermitian():
    _, sched = hopf_schedule(n=401)
    for series in (sched.Lam, sched.Gam):
        assert max(np.abs(g - g.conj().T).max() for g in series) < 1e-8


@pytest.mark.parametrize("tag,k_over_pi", [
    ("unlink", 1.2), ("unknot", 0.3), ("hopf_link", 0.6)])
def test_embedding_reproduces_nh_dynamics(tag, k_over_pi):
    h = LAM * model.bloch_hamiltonian(model.preset_params(tag),
                                      k_over_pi * math.pi)
    t_grid = np.linspace(0.0, 8.0, 2001)
    sched = dilation.compile_dilation(h, t_grid)
    _, psi0 = dilation.prepare_initial(sched.eta0)
    psi4 = dilation.dilated_trajectory(sched, psi0)
    embedded = dilation.project_minus(psi4)
    embedded /= np.linalg.norm(embedded, axis=1)[:, None]

    ref = evolve.integrate_nh(h, np.array([1.0, 0.0], dtype=complex),
                              8.0, dt=t_grid[1] - t_grid[0])
    idx = np.linspace(0, ref.t_grid.size - 1, embedded.shape[0]).astype(int)
    overlap = np.abs(np.einsum("ij,ij->i", embedded.conj(), ref.states[idx]))
    trace_distance = np.sqrt(np.clip(1.0 - overlap**2, 0.0, None))
    assert trace_distance.max() < 1e-4


def test_prepare_initial_state():
    phi, psi0 = dilation.prepare_initial(3.0)
    assert abs(np.linalg.norm(psi0) - 1.0) < 1e-12
    sys_part = dilation.project_minus(psi0)
    sys_part /= np.linalg.norm(sys_part)
    assert abs(abs(sys_part[0]) - 1.0) < 1e-12  # embeds |1>
    assert 0.0 < phi < math.pi


def test_choose_eta0_feasible_and_tight():
    h, _ = hopf_schedule(n=401)
    eta0 = dilation.choose_eta0(h, 6.0, n_grid=401)
    t_grid = np.linspace(0.0, 6.0, 401)
    # feasible at eta0 ...
    dilation.compile_dilation(h, t_grid, eta0=eta0)
    # ... but not much below it
    with pytest.raises(dilation.DilationInfeasibleError):
        dilation.compile_dilation(h, t_grid, eta0=0.5 * eta0)


def test_hsa_matches_generators():
    _, sched = hopf_schedule(n=401)
    h_sa = dilation.hsa_series(sched)
    i = 123
    expected = (np.kron(sched.Lam[i], np.eye(2))
                + np.kron(sched.Gam[i], np.array([[1, 0], [0, -1]])))
    np.testing.assert_allclose(h_sa[i], expected, atol=1e-10)
    np.testing.assert_allclose(h_sa[i], dilation.recompose(sched.coeffs[:, i]),
                               atol=1e-10)


def test_pulse_schedule_shapes_and_rates():
    _, sched = hopf_schedule(n=401)
    pulses = dilation.pulse_schedule(sched.coeffs, 100.0, 90.0, sched.t_grid)
    n = sched.t_grid.size
    for arr in (pulses.Omega1, pulses.Omega2, pulses.phi1, pulses.phi2,
                pulses.omega1, pulses.omega2):
        assert arr.shape == (n,)
    assert (pulses.Omega1 >= 0).all() and (pulses.Omega2 >= 0).all()
    b1, a1, b2, b3, a2, b4, a3, a4 = sched.coeffs
    np.testing.assert_allclose(pulses.omega1 - pulses.omega2,
                               10.0 + 4.0 * a4, atol=1e-12)
