import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from nhknot import berry, model, spectra

PRESETS = {"unlink": 0.0, "unknot": math.pi, "hopf_link": 2.0 * math.pi}

entry = st.floats(-2.0, 2.0, allow_nan=False)


@st.composite
def invertible2(draw):
    m = np.array([[draw(entry) + 1j * draw(entry) for _ in range(2)]
                  for _ in range(2)])
    assume(abs(np.linalg.det(m)) > 0.1)
    return m


@given(invertible2())
@settings(max_examples=100)
def test_left_vectors_biorthonormal(v):
    chi = berry.left_vectors(v)
    np.testing.assert_allclose(chi.conj().T @ v, np.eye(2), atol=1e-8)


def test_biorthogonal_pairs_eigen_relations():
    h = model.bloch_hamiltonian(model.preset_params("hopf_link"), 1.1)
    p1, p2 = berry.biorthogonal_pairs(h)
    for p in (p1, p2):
        assert np.linalg.norm(h @ p.psi - p.eigenvalue * p.psi) < 1e-9
        assert np.linalg.norm(p.chi.conj() @ h - p.eigenvalue * p.chi.conj()) < 1e-9
    assert abs(np.vdot(p1.chi, p2.psi)) < 1e-9


@pytest.mark.parametrize("tag,q_ideal", PRESETS.items())
def test_preset_global_berry_phase(tag, q_ideal):
    structure = spectra.band_structure(model.preset_params(tag), 512)
    result = berry.global_berry_phase(structure)
    assert abs(abs(result.q_raw) - q_ideal) < 1e-3 * math.pi


@pytest.mark.parametrize("tag", PRESETS)
def test_parity_identity(tag):
    structure = spectra.band_structure(model.preset_params(tag), 512)
    result = berry.global_berry_phase(structure)
    assert abs(cmath.exp(1j * result.q_raw) - result.parity) < 1e-3


def test_gauge_invariance_under_random_phases():
    structure = spectra.band_structure(model.preset_params("unknot"), 256)
    rng = np.random.default_rng(7)
    phases = np.exp(1j * rng.uniform(0, 2 * math.pi, size=(2, structure.n_grid)))
    gauged = spectra.BandStructure(
        k_grid=structure.k_grid,
        energies=structure.energies,
        vectors=structure.vectors * phases[:, :, None],
        permutation=structure.permutation,
        min_gap=structure.min_gap)
    q0 = berry.global_berry_phase(structure).q_raw
    q1 = berry.global_berry_phase(gauged).q_raw
    # per-link angles wrap, so the raw sum is gauge invariant modulo 2pi
    assert abs(cmath.exp(1j * q0) - cmath.exp(1j * q1)) < 1e-8


def test_discretization_error_shrinks():
    params = model.preset_params("hopf_link")
    coarse = berry.global_berry_phase(spectra.band_structure(params, 128))
    fine = berry.global_berry_phase(spectra.band_structure(params, 1024))
    assert fine.discretization_error < coarse.discretization_error
    assert abs(abs(fine.q_raw) - 2 * math.pi) < coarse.discretization_error + 1e-6


def test_bloch_projections_on_sphere():
    structure = spectra.band_structure(model.preset_params("unlink"), 128)
    proj = berry.bloch_projections(structure)
    assert proj.shape == (2, 128, 2)
    assert (proj**2).sum(axis=-1).max() <= 1.0 + 1e-9
