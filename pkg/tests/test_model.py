import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nhknot import model

PRESETS = ("unlink", "unknot", "hopf_link")

finite = st.floats(-3.0, 3.0, allow_nan=False, allow_infinity=False)


@pytest.mark.parametrize("tag", PRESETS)
def test_presets_exist(tag):
    params = model.preset_params(tag)
    h = model.bloch_hamiltonian(params, 0.3)
    assert h.shape == (2, 2)
    assert np.isfinite(h).all()


def test_unknown_preset_raises():
    with pytest.raises((KeyError, ValueError)):
        model.preset_params("trefoil")


@pytest.mark.parametrize("tag", PRESETS)
def test_bloch_hamiltonian_periodic(tag):
    params = model.preset_params(tag)
    for k in (0.0, 0.37, 2.1, 5.9):
        np.testing.assert_allclose(
            model.bloch_hamiltonian(params, k),
            model.bloch_hamiltonian(params, k + 2.0 * math.pi),
            atol=1e-12)


@pytest.mark.parametrize("tag", PRESETS)
def test_bloch_hamiltonian_traceless_offdiagonal(tag):
    params = model.preset_params(tag)
    for k in np.linspace(0, 2 * math.pi, 17):
        h = model.bloch_hamiltonian(params, k)
        assert h[0, 0] == 0 and h[1, 1] == 0


@pytest.mark.parametrize("tag", PRESETS)
def test_off_diagonals_match_hamiltonian(tag):
    params = model.preset_params(tag)
    ks = np.linspace(0, 2 * math.pi, 13)
    top, bot = model.off_diagonals(params, ks)
    for i, k in enumerate(ks):
        h = model.bloch_hamiltonian(params, k)
        assert abs(h[0, 1] - top[i]) < 1e-12
        assert abs(h[1, 0] - bot[i]) < 1e-12


@given(finite)
def test_fold_k_range(k):
    folded = model.fold_k(k)
    assert 0.0 <= folded < 2.0 * math.pi
    assert abs(math.remainder(folded - k, 2.0 * math.pi)) < 1e-9


@pytest.mark.parametrize("tag", PRESETS)
def test_params_dict_roundtrip(tag):
    params = model.preset_params(tag)
    again = model.params_from_dict(model.params_to_dict(params))
    for k in np.linspace(0, 2 * math.pi, 7):
        np.testing.assert_allclose(
            model.bloch_hamiltonian(params, k),
            model.bloch_hamiltonian(again, k), atol=1e-12)
