"""Nine-sequence photoluminescence count model and pure-state MLE tomography.

Level numbering for the PL rates is (1,2,3,4) = (|0,1>, |-1,1>, |0,0>,
|-1,0>), i.e. indices (0, 2, 1, 3) of the product-basis 4-vector used by
:mod:`nhknot.nvsim`. The nine sequences are the 3x3 grid of electron readout
rotations {I, R_-y(pi/2), R_-x(pi/2)} (applied in both nuclear subspaces)
crossed with population permutations {I, R^e(pi), R^n(pi)}, permutation
applied first and varying fastest in the sequence index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .dilation import I2, SX, SY

LEVEL_ORDER = (0, 2, 1, 3)
DEFAULT_RATES = (1.0, 0.7, 1.0, 0.7)
N_STARTS = 16
EARLY_EXIT_LOSS = 1e-12


class TomoError(Exception):
    pass


@dataclass(frozen=True)
class PureStateParams:
    """Six-parameter pure state with both |0>_e coefficients real (gauge)."""

    alpha: float
    beta: float
    gamma: float
    delta: float
    epsilon: float
    zeta: float

    def __post_init__(self):
        norm = self.alpha**2 + self.beta**2 + self.delta**2 + self.epsilon**2
        if abs(norm - 1.0) > 1e-8:
            raise ValueError(f"state not normalized: |psi|^2 = {norm:.10f}")

    def state4(self) -> np.ndarray:
        """4-vector in the {|0,1>, |0,0>, |-1,1>, |-1,0>} basis."""
        return np.array([
            self.alpha,
            self.delta,
            self.beta * np.exp(1j * self.gamma),
            self.epsilon * np.exp(1j * self.zeta),
        ])

    def subspace_state(self) -> np.ndarray:
        """Normalized electron state in the nuclear |1> subspace."""
        v = np.array([self.alpha, self.beta * np.exp(1j * self.gamma)])
        n = np.linalg.norm(v)
        if n == 0:
            raise TomoError("no weight in the nuclear |1> subspace")
        return v / n


def _rot_electron(axis: np.ndarray, angle: float) -> np.ndarray:
    """Electron rotation exp(-i angle/2 axis.sigma) in both nuclear subspaces."""
    gen = axis[0] * SX + axis[1] * SY + axis[2] * np.diag([1.0, -1.0])
    r = math.cos(angle / 2.0) * I2 - 1j * math.sin(angle / 2.0) * gen
    return np.kron(r, I2)


def _pair_pi(i: int, j: int) -> np.ndarray:
    """Selective pi pulse (-i sigma_x) on one pair of levels."""
    u = np.eye(4, dtype=complex)
    u[i, i] = u[j, j] = 0.0
    u[i, j] = u[j, i] = -1j
    return u


_READOUTS = (
    np.eye(4, dtype=complex),
    _rot_electron(np.array([0.0, -1.0, 0.0]), math.pi / 2.0),  # R_-y(pi/2)
    _rot_electron(np.array([-1.0, 0.0, 0.0]), math.pi / 2.0),  # R_-x(pi/2)
)
_PERMS = (
    np.eye(4, dtype=complex),
    _pair_pi(0, 2),  # R^e(pi): |0,1> <-> |-1,1>
    _pair_pi(0, 1),  # R^n(pi): |0,1> <-> |0,0>
)
SEQUENCES = tuple(
    (readout @ perm) for readout in _READOUTS for perm in _PERMS
)


def expected_counts(state, rates=DEFAULT_RATES) -> np.ndarray:
    """Expected counts C1..C9 for a pure state (params or 4-vector)."""
    if isinstance(state, PureStateParams):
        psi = state.state4()
    else:
        psi = np.asarray(state, dtype=complex)
        if abs(np.linalg.norm(psi) - 1.0) > 1e-8:
            raise ValueError("state must be normalized")
    rates = np.asarray(rates, dtype=float)
    if rates.shape != (4,) or (rates <= 0).any():
        raise ValueError("need four positive PL rates")
    weights = np.empty(4)
    weights[list(LEVEL_ORDER)] = rates
    pops = np.abs(np.einsum("sij,j->si", np.stack(SEQUENCES), psi)) ** 2
    return pops @ weights


def sample_counts(expected: np.ndarray, shots: int, seed=None) -> np.ndarray:
    """Poisson shot noise: C_i ~ Poisson(shots * C~_i) / shots."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(seed)
    return rng.poisson(shots * np.asarray(expected, dtype=float)) / shots


def _params_from_angles(x: np.ndarray) -> PureStateParams:
    t1, t2, t3, gamma, zeta = x
    s1, s2 = math.sin(t1), math.sin(t2)
    return PureStateParams(
        alpha=abs(math.cos(t1)),
        beta=abs(s1 * math.cos(t2)),
        gamma=_wrap(gamma),
        delta=abs(s1 * s2 * math.cos(t3)),
        epsilon=abs(s1 * s2 * math.sin(t3)),
        zeta=_wrap(zeta),
    )


def _wrap(phi: float) -> float:
    out = math.remainder(phi, 2.0 * math.pi)
    return out if -math.pi < out <= math.pi else math.pi


def mle_reconstruct(counts, rates=DEFAULT_RATES, n_starts: int = N_STARTS,
                    seed: int = 0):
    """Least-squares pure-state reconstruction from nine counts.

    Minimizes sum_i (C_i - C~_i)^2 over the spherically parameterized state
    with derivative-free local searches from ``n_starts`` random starts.
    Returns (PureStateParams, loss); the physically reported state is
    ``params.subspace_state()``.
    """
    counts = np.asarray(counts, dtype=float)
    if counts.shape != (9,):
        raise ValueError("need nine counts")
    rng = np.random.default_rng(seed)

    def loss(x):
        model_counts = expected_counts(_params_from_angles(x), rates)
        return float(np.sum((counts - model_counts) ** 2))

    # deterministic phase-grid starts first (the spurious local minima live
    # mostly in the two phases), then random restarts
    phase_grid = (-0.75 * math.pi, -0.25 * math.pi, 0.25 * math.pi, 0.75 * math.pi)
    starts = [np.array([math.pi / 4, math.pi / 4, math.pi / 4, g, z])
              for g in phase_grid for z in phase_grid]
    starts += [rng.uniform([0.0, 0.0, 0.0, -math.pi, -math.pi],
                           [math.pi / 2, math.pi / 2, math.pi / 2, math.pi, math.pi])
               for _ in range(max(int(n_starts), 1))]

    opts = {"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000, "maxfev": 6000}
    best = None
    for x0 in starts:
        res = minimize(loss, x0, method="Nelder-Mead", options=opts)
        if best is None or res.fun < best.fun:
            best = res
        if best.fun < EARLY_EXIT_LOSS:
            break
    if best is None or not np.isfinite(best.fun):
        raise TomoError("all reconstruction starts failed")
    # a fresh simplex around the optimum escapes premature collapse
    polish = minimize(loss, best.x, method="Nelder-Mead", options=opts)
    if polish.fun < best.fun:
        best = polish
    return _params_from_angles(best.x), float(best.fun)


def gauge_fix(state4: np.ndarray) -> PureStateParams:
    """Project a normalized 4-vector into the six-parameter model class.

    A global phase makes the |0,1> amplitude real non-negative; the nuclear
    |0> block is rephased so the |0,0> amplitude is real non-negative too
    (the inter-block phase is dropped -- the count model never observes the
    nuclear |1> block through it, so the reported subspace state is intact).
    """
    psi = np.asarray(state4, dtype=complex)
    if abs(np.linalg.norm(psi) - 1.0) > 1e-8:
        raise ValueError("state must be normalized")
    a0, d0, b0, e0 = psi[0], psi[1], psi[2], psi[3]
    phase0 = a0 / abs(a0) if abs(a0) > 1e-12 else 1.0
    phase1 = d0 / abs(d0) if abs(d0) > 1e-12 else phase0
    alpha = abs(a0)
    beta = b0 / phase0
    delta = abs(d0)
    eps = e0 / phase1
    return PureStateParams(
        alpha=alpha, beta=abs(beta), gamma=_wrap(float(np.angle(beta))) if abs(beta) > 1e-12 else 0.0,
        delta=delta, epsilon=abs(eps), zeta=_wrap(float(np.angle(eps))) if abs(eps) > 1e-12 else 0.0,
    )


def fidelity(state: np.ndarray, reference: np.ndarray) -> float:
    """|<reference|state>|^2 for normalized pure states."""
    state = np.asarray(state, dtype=complex)
    reference = np.asarray(reference, dtype=complex)
    ns, nr = np.linalg.norm(state), np.linalg.norm(reference)
    if ns == 0 or nr == 0:
        raise ValueError("zero vector has no fidelity")
    return float(abs(np.vdot(reference, state) / (ns * nr)) ** 2)
