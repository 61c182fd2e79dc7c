import math

import numpy as np
import pytest
from scipy.linalg import expm

from nhknot import evolve, model

E0 = np.array([1.0, 0.0], dtype=complex)


def random_h(rng, scale=1.0):
    return scale * (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))


def test_integrate_matches_expm():
    rng = np.random.default_rng(0)
    for _ in range(10):
        h = random_h(rng)
        traj = evolve.integrate_nh(h, E0, 2.0, dt=1e-3)
        exact = expm(-1j * h * 2.0) @ E0
        exact_n = exact / np.linalg.norm(exact)
        psi = traj.states[-1]
        fid = abs(np.vdot(exact_n, psi)) ** 2
        assert fid > 1.0 - 1e-10
        assert abs(traj.log_norms[-1] - math.log(np.linalg.norm(exact))) < 1e-6


def test_hermitian_case_norm_preserved():
    rng = np.random.default_rng(1)
    h = random_h(rng)
    h = h + h.conj().T
    traj = evolve.integrate_nh(h, E0, 3.0)
    assert np.abs(traj.log_norms).max() < 1e-8


def test_step_guard():
    h = 50.0 * np.eye(2, dtype=complex)
    with pytest.raises(evolve.StepSizeError):
        evolve.integrate_nh(h, E0, 1.0, dt=1.0)


def test_steady_eigenstate_is_attractor():
    params = model.preset_params("hopf_link")
    h = model.bloch_hamiltonian(params, 0.6 * math.pi)
    psi_inf, info = evolve.steady_eigenstate(h, which=1)
    traj = evolve.integrate_nh(h, E0, 30.0)
    fid = abs(np.vdot(psi_inf, traj.states[-1])) ** 2
    assert fid > 1.0 - 1e-8


def test_population_model_matches_integration():
    params = model.preset_params("unknot")
    k = 1.3
    h = model.bloch_hamiltonian(params, k)
    traj = evolve.integrate_nh(h, E0, 6.0, dt=1e-3)
    p_model = evolve.population_model(params, k, traj.t_grid)
    np.testing.assert_allclose(traj.populations, p_model, atol=1e-7)


def test_fit_k_noiseless_exact():
    params = model.preset_params("hopf_link")
    k_true = 0.6 * math.pi
    t = np.linspace(0.0, 8.0, 200)
    p1 = evolve.population_model(params, k_true, t)
    k_fit, stderr, loss = evolve.fit_k(t, p1, params)
    assert abs(k_fit - k_true) < 1e-6
    assert loss < 1e-12


def test_fit_k_with_noise_close():
    params = model.preset_params("hopf_link")
    k_true = 0.6 * math.pi
    t = np.linspace(0.0, 8.0, 200)
    rng = np.random.default_rng(3)
    p1 = np.clip(evolve.population_model(params, k_true, t)
                 + rng.normal(0, 0.03, t.size), 0, 1)
    k_fit, stderr, _ = evolve.fit_k(t, p1, params)
    assert abs(k_fit - k_true) < 0.07 * math.pi
    assert stderr > 0


def test_fit_k_flat_objective_raises():
    params = model.preset_params("hopf_link")
    t = np.linspace(0.0, 8.0, 50)
    with pytest.raises(evolve.EvolveError):
        # lam -> 0 freezes the dynamics; P1 stays at 1 for every k
        evolve.fit_k(t, np.ones_like(t), params, lam=0.0)
