import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nhknot import model, spectra

PRESETS = {"unlink": 0, "unknot": 1, "hopf_link": 2}

entry = st.floats(-2.0, 2.0, allow_nan=False)
matrix2 = st.builds(
    lambda *v: np.array([[v[0] + 1j * v[1], v[2] + 1j * v[3]],
                         [v[4] + 1j * v[5], v[6] + 1j * v[7]]]),
    *[entry] * 8)


@given(matrix2)
@settings(max_examples=200)
def test_eigensolve2_matches_numpy(h):
    eig = spectra.eigensolve2(h)
    ref = np.linalg.eigvals(h)
    direct = max(abs(eig.values[0] - ref[0]), abs(eig.values[1] - ref[1]))
    crossed = max(abs(eig.values[0] - ref[1]), abs(eig.values[1] - ref[0]))
    assert min(direct, crossed) < 1e-8


@given(matrix2)
@settings(max_examples=200)
def test_eigensolve2_residual(h):
    eig = spectra.eigensolve2(h)
    if eig.exceptional:
        return
    scale = max(np.abs(h).max(), 1.0)
    for j in range(2):
        v = eig.vectors[:, j]
        assert abs(np.linalg.norm(v) - 1.0) < 1e-9
        assert np.linalg.norm(h @ v - eig.values[j] * v) < 1e-7 * scale


def test_eigensolve2_flags_defective():
    eig = spectra.eigensolve2(np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert eig.exceptional


@pytest.mark.parametrize("tag,nu", PRESETS.items())
def test_preset_winding(tag, nu):
    assert spectra.winding_number(model.preset_params(tag)) == nu


@pytest.mark.parametrize("tag", PRESETS)
def test_winding_grid_invariance(tag):
    params = model.preset_params(tag)
    assert spectra.winding_number(params, 64) == spectra.winding_number(params, 2048)


@pytest.mark.parametrize("tag", PRESETS)
def test_winding_of_matrix_function_agrees(tag):
    params = model.preset_params(tag)
    nu = spectra.winding_number(params)
    assert spectra.winding_of_matrix_function(
        lambda k: model.bloch_hamiltonian(params, k)) == nu


@pytest.mark.parametrize("tag", PRESETS)
def test_band_structure_continuity(tag):
    structure = spectra.band_structure(model.preset_params(tag), 256)
    for band in range(2):
        steps = np.abs(np.diff(structure.energies[band]))
        gaps = np.abs(structure.energies[0] - structure.energies[1])
        assert (steps < 0.5 * gaps[1:]).all()
    assert structure.min_gap > 0


@pytest.mark.parametrize("tag,nu", PRESETS.items())
def test_seam_permutation_parity_matches_winding(tag, nu):
    structure = spectra.band_structure(model.preset_params(tag), 512)
    swapped = structure.permutation == (1, 0)
    assert swapped == bool(nu % 2)


@pytest.mark.parametrize("tag,nu", PRESETS.items())
def test_classify(tag, nu):
    label = spectra.classify(model.preset_params(tag))
    assert label.nu == nu
    assert label.tag == tag


def test_vectors_are_eigenvectors():
    params = model.preset_params("hopf_link")
    structure = spectra.band_structure(params, 128)
    for i in (0, 17, 63, 127):
        h = model.bloch_hamiltonian(params, structure.k_grid[i])
        for band in range(2):
            v = structure.vectors[band, i]
            e = structure.energies[band, i]
            assert np.linalg.norm(h @ v - e * v) < 1e-8
