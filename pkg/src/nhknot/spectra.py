"""Complex band structures, braid winding number and knot-phase classification."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, bloch_hamiltonian, off_diagonals

TWO_PI = 2.0 * math.pi

DEFAULT_GRID = 1024
SEPARABILITY_TOL = 1e-8
PHASE_STEP_BOUND = math.pi / 2
WINDING_RESIDUE_TOL = 0.01
MAX_REFINEMENTS = 8


class SpectraError(Exception):
    pass


class InseparableBandsError(SpectraError):
    """Bands touch (or nearly touch) somewhere on the grid."""


class ExceptionalPointError(SpectraError):
    """The matrix is defective or det(H - tr/2) vanishes."""


@dataclass
class Eigen2:
    values: np.ndarray  # (2,) complex
    vectors: np.ndarray  # (2, 2) complex, columns are unit eigenvectors
    exceptional: bool


@dataclass
class BandStructure:
    """Continuation-tracked eigenvalue/eigenvector curves over [0, 2pi)."""

    k_grid: np.ndarray  # (N,)
    energies: np.ndarray  # (2, N) complex, tracked
    vectors: np.ndarray  # (2, N, 2) complex, vectors[n, i] is the band-n eigenvector at k_i
    permutation: tuple  # sigma: tracked label at k=2pi -> label at k=0
    min_gap: float

    @property
    def n_grid(self) -> int:
        return self.k_grid.size


@dataclass
class PhaseLabel:
    nu: int
    tag: str
    min_gap: float
    grid_size: int


def _fix_phase(v: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude component real positive."""
    idx = int(np.argmax(np.abs(v)))
    a = v[idx]
    if abs(a) == 0.0:
        return v
    return v * (abs(a) / a)


def eigensolve2(h: np.ndarray) -> Eigen2:
    """Closed-form eigendecomposition of a 2x2 complex matrix.

    Eigenvectors carry a deterministic gauge (largest component real
    positive). A defective matrix is flagged as an exceptional point; both
    (coincident) roots are still returned.
    """
    h = np.asarray(h, dtype=complex)
    a, b = h[0, 0], h[0, 1]
    c, d = h[1, 0], h[1, 1]
    mean = 0.5 * (a + d)
    disc = 0.25 * (a - d) ** 2 + b * c
    root = np.sqrt(disc)
    values = np.array([mean + root, mean - root])

    scale = max(np.max(np.abs(h)), 1.0)
    vectors = np.empty((2, 2), dtype=complex)
    exceptional = False
    for j, e in enumerate(values):
        cand1 = np.array([b, e - a])
        cand2 = np.array([e - d, c])
        cand = cand1 if np.linalg.norm(cand1) >= np.linalg.norm(cand2) else cand2
        nrm = np.linalg.norm(cand)
        if nrm < 1e-14 * scale:
            # diagonal (or scalar) matrix: coordinate eigenvectors
            cand = np.eye(2, dtype=complex)[:, j]
            nrm = 1.0
        vectors[:, j] = _fix_phase(cand / nrm)
    if abs(root) < 1e-12 * scale:
        # coincident eigenvalues; defective unless H is (numerically) scalar
        if np.linalg.norm(h - mean * np.eye(2)) > 1e-12 * scale:
            exceptional = True
        else:
            vectors = np.eye(2, dtype=complex)
    return Eigen2(values=values, vectors=vectors, exceptional=exceptional)


def _eigenvalues_on_grid(params: ModelParams, k_grid: np.ndarray) -> np.ndarray:
    """Unordered eigenvalue pairs (+sqrt, -sqrt branch) over the grid, shape (2, N)."""
    top, bot = off_diagonals(params, k_grid)
    root = np.sqrt(top * bot)
    return np.stack([root, -root])


def band_structure(
    params: ModelParams,
    n_grid: int = DEFAULT_GRID,
    separability_tol: float = SEPARABILITY_TOL,
) -> BandStructure:
    """Diagonalize over a uniform k grid and track bands by continuation.

    Nearest-neighbor matching in the complex plane; the grid is doubled
    whenever a continuation step moves an eigenvalue by more than half the
    local gap.
    """
    if n_grid < 16:
        raise ValueError("n_grid must be at least 16")
    n = int(n_grid)
    for _ in range(MAX_REFINEMENTS):
        k_grid = np.linspace(0.0, TWO_PI, n, endpoint=False)
        pairs = _eigenvalues_on_grid(params, k_grid)  # (2, N), unordered
        gaps = np.abs(pairs[0] - pairs[1])
        min_gap = float(gaps.min())
        if min_gap < separability_tol:
            raise InseparableBandsError(
                f"bands inseparable: min gap {min_gap:.3e} below {separability_tol:.1e}"
            )
        tracked, swaps_ok = _track(pairs, gaps)
        if swaps_ok:
            break
        n *= 2
    else:
        raise SpectraError("band tracking did not converge under grid refinement")

    # seam: continue one more step to k = 2pi (same eigenvalue set as k = 0)
    last = tracked[:, -1]
    e0 = pairs[:, 0]
    # nearest-neighbor assignment of the tracked labels at 2pi to the k=0 labels
    if abs(last[0] - e0[0]) + abs(last[1] - e0[1]) <= abs(last[0] - e0[1]) + abs(last[1] - e0[0]):
        perm = (0, 1)
    else:
        perm = (1, 0)

    vectors = np.empty((2, n, 2), dtype=complex)
    for i, k in enumerate(k_grid):
        eig = eigensolve2(bloch_hamiltonian(params, k))
        # order eigenvectors to match tracked energies
        if abs(eig.values[0] - tracked[0, i]) <= abs(eig.values[0] - tracked[1, i]):
            order = (0, 1)
        else:
            order = (1, 0)
        vectors[0, i] = eig.vectors[:, order[0]]
        vectors[1, i] = eig.vectors[:, order[1]]

    return BandStructure(
        k_grid=k_grid,
        energies=tracked,
        vectors=vectors,
        permutation=perm,
        min_gap=min_gap,
    )


def _track(pairs: np.ndarray, gaps: np.ndarray):
    """Nearest-neighbor continuation of the two eigenvalue branches.

    Returns (tracked (2, N), ok) where ok is False when some step moved an
    eigenvalue by more than half the local gap (undersampled grid).
    """
    n = pairs.shape[1]
    tracked = np.empty_like(pairs)
    tracked[:, 0] = pairs[:, 0]
    ok = True
    for i in range(1, n):
        prev = tracked[:, i - 1]
        cur = pairs[:, i]
        d_keep = abs(cur[0] - prev[0]) + abs(cur[1] - prev[1])
        d_swap = abs(cur[1] - prev[0]) + abs(cur[0] - prev[1])
        if d_swap < d_keep:
            cur = cur[::-1]
        tracked[:, i] = cur
        step = max(abs(cur[0] - prev[0]), abs(cur[1] - prev[1]))
        if step > 0.5 * gaps[i]:
            ok = False
            break
    return tracked, ok


def winding_number(
    params: ModelParams,
    n_grid: int = DEFAULT_GRID,
    return_raw: bool = False,
):
    """Braid winding number from the unwrapped phase of det(H - tr(H)/2).

    The grid is refined until every consecutive phase increment is below
    pi/2; the pre-rounding value must sit within 0.01 of an integer.
    """
    n = int(n_grid)
    for _ in range(MAX_REFINEMENTS):
        k_grid = np.linspace(0.0, TWO_PI, n + 1)  # closed: endpoint included
        top, bot = off_diagonals(params, k_grid)
        # diagonal is zero for this family, so H - tr/2 = H and det = -h12*h21
        f = -top * bot
        if np.min(np.abs(f)) < 1e-12:
            raise ExceptionalPointError("det(H - tr/2) vanishes on the grid")
        phases = np.unwrap(np.angle(f))
        steps = np.abs(np.diff(phases))
        if steps.max() < PHASE_STEP_BOUND:
            break
        n *= 2
    else:
        raise SpectraError("winding-number grid refinement did not converge")

    raw = (phases[-1] - phases[0]) / TWO_PI
    nu = int(round(raw))
    residue = abs(raw - nu)
    if residue > WINDING_RESIDUE_TOL:
        raise SpectraError(f"winding residue {residue:.3e} exceeds {WINDING_RESIDUE_TOL}")
    if return_raw:
        return nu, raw
    return nu


def winding_of_matrix_function(h_fn, n_grid: int = DEFAULT_GRID, return_raw: bool = False):
    """Winding number for an arbitrary 2x2 matrix family k -> H(k).

    Same det-phase unwrapping as :func:`winding_number`, but the trace
    subtraction is performed explicitly, so families with a nonzero
    (k-dependent) diagonal are handled.
    """
    n = int(n_grid)
    for _ in range(MAX_REFINEMENTS):
        k_grid = np.linspace(0.0, TWO_PI, n + 1)
        f = np.empty(n + 1, dtype=complex)
        for i, k in enumerate(k_grid):
            h = np.asarray(h_fn(k), dtype=complex)
            shifted = h - 0.5 * np.trace(h) * np.eye(2)
            f[i] = shifted[0, 0] * shifted[1, 1] - shifted[0, 1] * shifted[1, 0]
        if np.min(np.abs(f)) < 1e-12:
            raise ExceptionalPointError("det(H - tr/2) vanishes on the grid")
        phases = np.unwrap(np.angle(f))
        steps = np.abs(np.diff(phases))
        if steps.max() < PHASE_STEP_BOUND:
            break
        n *= 2
    else:
        raise SpectraError("winding-number grid refinement did not converge")
    raw = (phases[-1] - phases[0]) / TWO_PI
    nu = int(round(raw))
    if abs(raw - nu) > WINDING_RESIDUE_TOL:
        raise SpectraError(f"winding residue {abs(raw - nu):.3e} exceeds {WINDING_RESIDUE_TOL}")
    if return_raw:
        return nu, raw
    return nu


_NU_TAGS = {0: "unlink", 1: "unknot", 2: "hopf_link"}


def classify(params: ModelParams, n_grid: int = DEFAULT_GRID) -> PhaseLabel:
    """Knot-phase label from the winding number."""
    structure = band_structure(params, n_grid)
    nu = winding_number(params, n_grid)
    tag = _NU_TAGS.get(nu, f"braid({nu})")
    return PhaseLabel(nu=nu, tag=tag, min_gap=structure.min_gap, grid_size=structure.n_grid)
