"""Non-Hermitian Schrodinger evolution, steady-state eigenstates and k fitting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .model import ModelParams, bloch_hamiltonian
from .spectra import eigensolve2

TWO_PI = 2.0 * math.pi

STEP_GUARD = 0.01  # dt * ||H|| must stay below this
CONVERGENCE_EXPONENT = 14.0  # (delta Im E) * T for 1e-6 subdominant suppression


class EvolveError(Exception):
    pass


class StepSizeError(EvolveError):
    pass


class NoDominantBandError(EvolveError):
    pass


class KUnidentifiableError(EvolveError):
    pass


@dataclass
class NhTrajectory:
    """Renormalized NH trajectory with a separate norm ledger."""

    t_grid: np.ndarray
    states: np.ndarray  # (N, 2), unit norm at every time
    log_norms: np.ndarray  # log of the raw (unnormalized) norm factor
    populations: np.ndarray  # P1(t) = |<basis1|psi>|^2 of the normalized state


def _spectral_norm(h: np.ndarray) -> float:
    return float(np.linalg.norm(h, 2))


def integrate_nh(
    h: np.ndarray,
    psi0: np.ndarray,
    t_final: float,
    dt: float | None = None,
) -> NhTrajectory:
    """Fixed-step RK4 integration of i d/dt psi = H psi with per-step renormalization.

    The raw norm growth is logged separately so growing modes never
    overflow.
    """
    h = np.asarray(h, dtype=complex)
    psi = np.asarray(psi0, dtype=complex).copy()
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > 1e-8:
        raise ValueError("psi0 must be normalized")
    hnorm = max(_spectral_norm(h), 1e-30)
    dt_max = STEP_GUARD / hnorm
    if dt is None:
        dt = 0.5 * dt_max
    elif dt > dt_max:
        raise StepSizeError(f"dt={dt:.3e} violates the step guard; use dt <= {dt_max:.3e}")
    n_steps = max(1, int(math.ceil(t_final / dt)))
    dt = t_final / n_steps

    a = -1j * h
    t_grid = np.empty(n_steps + 1)
    states = np.empty((n_steps + 1, 2), dtype=complex)
    log_norms = np.empty(n_steps + 1)
    t_grid[0] = 0.0
    states[0] = psi / nrm
    log_norms[0] = math.log(nrm)
    log_norm = log_norms[0]
    psi = states[0].copy()
    for i in range(1, n_steps + 1):
        k1 = a @ psi
        k2 = a @ (psi + 0.5 * dt * k1)
        k3 = a @ (psi + 0.5 * dt * k2)
        k4 = a @ (psi + dt * k3)
        psi = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        nrm = np.linalg.norm(psi)
        psi /= nrm
        log_norm += math.log(nrm)
        t_grid[i] = i * dt
        states[i] = psi
        log_norms[i] = log_norm
    populations = np.abs(states[:, 0]) ** 2
    return NhTrajectory(t_grid=t_grid, states=states, log_norms=log_norms, populations=populations)


def renormalized_population(traj: NhTrajectory) -> np.ndarray:
    """P1(t): weight of the first basis component of the normalized state."""
    return np.abs(traj.states[:, 0]) ** 2


def steady_eigenstate(h: np.ndarray, which: int = 1, tol: float = 1e-10):
    """Dominant eigenstate via long NH evolution under +H (which=1) or -H (which=2).

    Returns (state, fidelity vs direct diagonalization). Requires a nonzero
    imaginary eigenvalue gap; the run time satisfies (dIm E) * T >= 14 and
    integration continues until the change per unit time drops below tol.
    """
    if which not in (1, 2):
        raise ValueError("which must be 1 or 2")
    h = np.asarray(h, dtype=complex)
    eig = eigensolve2(h)
    gap = abs(eig.values[0].imag - eig.values[1].imag)
    if gap < 1e-6:
        raise NoDominantBandError(f"imaginary eigenvalue gap {gap:.2e} < 1e-6")

    h_run = h if which == 1 else -h
    eig_run = eigensolve2(h_run)
    dom = int(np.argmax(eig_run.values.imag))
    target = eig_run.vectors[:, dom]

    psi = np.array([1.0, 0.0], dtype=complex)
    if abs(np.vdot(target, psi)) < 1e-6:
        psi = np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)

    t_run = CONVERGENCE_EXPONENT / gap
    traj = integrate_nh(h_run, psi, t_run)
    psi = traj.states[-1]
    dt_chunk = 1.0 / gap
    for _ in range(200):
        traj = integrate_nh(h_run, psi, dt_chunk)
        new = traj.states[-1]
        change = math.sqrt(max(0.0, 1.0 - abs(np.vdot(psi, new)) ** 2)) / dt_chunk
        psi = new
        if change < tol:
            break
    # report the eigenstate of +H corresponding to the selector
    fid = abs(np.vdot(target, psi)) ** 2
    return psi, float(fid)


def population_model(params: ModelParams, k: float, t: np.ndarray, lam: float = 1.0,
                     psi0: np.ndarray | None = None) -> np.ndarray:
    """Closed-form P1(t) from the two-eigenvector expansion of the initial state."""
    h = lam * bloch_hamiltonian(params, k)
    eig = eigensolve2(h)
    if eig.exceptional:
        raise EvolveError("exceptional point: population model undefined")
    if psi0 is None:
        psi0 = np.array([1.0, 0.0], dtype=complex)
    coeff = np.linalg.solve(eig.vectors, psi0)
    t = np.asarray(t, dtype=float)
    # shift Im E to avoid overflow at large t; an overall factor drops out of P1
    im_max = eig.values.imag.max()
    amp = coeff[None, :] * np.exp(-1j * (t[:, None] * eig.values[None, :]) - t[:, None] * im_max)
    psi_t = amp @ eig.vectors.T
    norms = np.sum(np.abs(psi_t) ** 2, axis=1)
    return np.abs(psi_t[:, 0]) ** 2 / norms


def fit_k(
    t_samples: np.ndarray,
    p1_samples: np.ndarray,
    params: ModelParams,
    lam: float = 1.0,
    n_scan: int = 64,
):
    """Least-squares fit of the quasi-momentum from a P1(t) trace.

    A coarse scan over k in [0, 2pi) seeds a bounded local refinement; the
    standard error comes from the residual curvature at the optimum.
    """
    t_samples = np.asarray(t_samples, dtype=float)
    p1_samples = np.asarray(p1_samples, dtype=float)
    if t_samples.size < 8:
        raise ValueError("need at least 8 samples")

    def sse(k: float) -> float:
        model = population_model(params, k, t_samples, lam)
        return float(np.sum((model - p1_samples) ** 2))

    k_scan = np.linspace(0.0, TWO_PI, n_scan, endpoint=False)
    scan = np.array([sse(k) for k in k_scan])
    if scan.max() - scan.min() < 1e-12:
        raise KUnidentifiableError("objective is flat in k")
    half = TWO_PI / n_scan
    # refine every local minimum of the (periodic) scan, keep the best
    k_fit, loss = None, float("inf")
    for i in range(n_scan):
        if scan[i] <= scan[i - 1] and scan[i] <= scan[(i + 1) % n_scan]:
            res = optimize.minimize_scalar(
                sse, bounds=(k_scan[i] - half, k_scan[i] + half), method="bounded",
                options={"xatol": 1e-10},
            )
            if res.fun < loss:
                k_fit, loss = float(res.x) % TWO_PI, float(res.fun)

    # curvature of the objective (second central difference)
    eps = 1e-4
    curv = (sse(k_fit + eps) - 2.0 * loss + sse(k_fit - eps)) / eps**2
    dof = max(t_samples.size - 1, 1)
    sigma2 = loss / dof
    stderr = math.sqrt(2.0 * sigma2 / curv) if curv > 0 else float("inf")
    return k_fit, stderr, loss
