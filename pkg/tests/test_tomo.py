import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nhknot import tomo

angles = st.floats(0.0, math.pi / 2, allow_nan=False)
phases = st.floats(-math.pi, math.pi, allow_nan=False, exclude_max=True)


@st.composite
def pure_params(draw):
    t1, t2, t3 = draw(angles), draw(angles), draw(angles)
    return tomo._params_from_angles(
        np.array([t1, t2, t3, draw(phases), draw(phases)]))


def test_sequences_are_unitary():
    assert len(tomo.SEQUENCES) == 9
    for u in tomo.SEQUENCES:
        np.testing.assert_allclose(u @ u.conj().T, np.eye(4), atol=1e-12)


def test_expected_counts_basis_states():
    rates = tomo.DEFAULT_RATES
    weights = np.empty(4)
    weights[list(tomo.LEVEL_ORDER)] = rates
    for level in range(4):
        state = np.zeros(4)
        state[level] = 1.0
        counts = tomo.expected_counts(state, rates)
        # identity readout x identity permutation detects the bare level rate
        assert abs(counts[0] - weights[level]) < 1e-12


@given(pure_params())
@settings(max_examples=100)
def test_expected_counts_range(params):
    counts = tomo.expected_counts(params)
    assert counts.shape == (9,)
    assert (counts >= 0).all()
    assert counts.max() <= max(tomo.DEFAULT_RATES) + 1e-12


@given(pure_params())
@settings(max_examples=50, deadline=None)
def test_gauge_fix_preserves_counts_and_subspace(params):
    psi = params.state4()
    rng_phase = np.exp(0.7j)
    chi_phase = np.exp(-1.1j)
    # arbitrary global and inter-block phases
    skewed = psi * rng_phase
    skewed[1] *= chi_phase
    skewed[3] *= chi_phase
    fixed = tomo.gauge_fix(skewed)
    np.testing.assert_allclose(tomo.expected_counts(fixed),
                               tomo.expected_counts(params), atol=1e-9)
    fid = tomo.fidelity(fixed.subspace_state(), params.subspace_state())
    if params.alpha**2 + params.beta**2 > 1e-6:
        assert fid > 1.0 - 1e-9


def test_sample_counts_deterministic_and_unbiased():
    expected = tomo.expected_counts(tomo.gauge_fix(
        np.array([0.6, 0.2, 0.6, 0.475177])
        / np.linalg.norm([0.6, 0.2, 0.6, 0.475177])))
    a = tomo.sample_counts(expected, 1000, seed=5)
    b = tomo.sample_counts(expected, 1000, seed=5)
    np.testing.assert_array_equal(a, b)
    big = tomo.sample_counts(expected, 10_000_000, seed=5)
    assert np.abs(big - expected).max() < 5e-3


def test_reconstruction_noiseless_exact():
    rng = np.random.default_rng(4)
    for _ in range(3):
        raw = rng.normal(size=4) + 1j * rng.normal(size=4)
        target = tomo.gauge_fix(raw / np.linalg.norm(raw))
        counts = tomo.expected_counts(target)
        params, loss = tomo.mle_reconstruct(counts, seed=1)
        assert loss < 1e-10
        fid = tomo.fidelity(params.subspace_state(), target.subspace_state())
        assert fid > 1.0 - 1e-6


def test_reconstruction_with_shot_noise():
    rng = np.random.default_rng(9)
    raw = rng.normal(size=4) + 1j * rng.normal(size=4)
    target = tomo.gauge_fix(raw / np.linalg.norm(raw))
    counts = tomo.sample_counts(tomo.expected_counts(target), 100_000, seed=2)
    params, _ = tomo.mle_reconstruct(counts, seed=1)
    fid = tomo.fidelity(params.subspace_state(), target.subspace_state())
    assert fid > 0.99


def test_mle_rejects_bad_input():
    with pytest.raises(ValueError):
        tomo.mle_reconstruct(np.ones(5))


def test_fidelity_bounds():
    a = np.array([1.0, 0.0])
    b = np.array([1.0, 1.0]) / math.sqrt(2)
    assert abs(tomo.fidelity(a, a) - 1.0) < 1e-12
    assert abs(tomo.fidelity(a, b) - 0.5) < 1e-12
