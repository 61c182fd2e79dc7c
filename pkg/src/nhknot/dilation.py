"""Hermitian dilation of 2x2 non-Hermitian Hamiltonians and pulse compilation.

A NH system Hamiltonian H_s is embedded into a Hermitian two-qubit
Hamiltonian Lambda(t) x I + Gamma(t) x sigma_z via the metric operator
M(t) (i dM/dt = H_s^dag M - M H_s) and its square-root factor eta
(M = eta^dag eta + I). The eight Pauli coefficients of the dilated
Hamiltonian map onto two-tone drive amplitudes, phases and frequencies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_MARGIN = 0.1
ETA0_CAP = 1e3

I2 = np.eye(2, dtype=complex)
SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SY = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

# H_sa = B1 I.I + A1 sx.I + B2 sy.I + B3 sz.I
#      + A2 I.sz + B4 sx.sz + A3 sy.sz + A4 sz.sz
COEFF_NAMES = ("B1", "A1", "B2", "B3", "A2", "B4", "A3", "A4")
_BASIS = [
    np.kron(I2, I2), np.kron(SX, I2), np.kron(SY, I2), np.kron(SZ, I2),
    np.kron(I2, SZ), np.kron(SX, SZ), np.kron(SY, SZ), np.kron(SZ, SZ),
]


# Ancilla carrier states. The system vector rides on ANC_MINUS and eta @ system
# on ANC_PLUS; the relative -i phase between the two sigma_y eigenstates is what
# makes Lambda x I + Gamma x sigma_z generate the embedded dynamics with both
# generators Hermitian.
ANC_MINUS = np.array([1.0, -1.0j]) / np.sqrt(2.0)
ANC_PLUS = -1.0j * np.array([1.0, 1.0j]) / np.sqrt(2.0)


class DilationError(Exception):
    pass


class DilationInfeasibleError(DilationError):
    pass


@dataclass
class DilationSchedule:
    """Time grids of the metric operator, dilated generators and coefficients."""

    t_grid: np.ndarray
    M: np.ndarray  # (N, 2, 2) Hermitian
    eta: np.ndarray  # (N, 2, 2) Hermitian positive sqrt of M - I
    deta: np.ndarray  # (N, 2, 2) d eta / dt (finite differences)
    Lam: np.ndarray  # (N, 2, 2) Hermitian
    Gam: np.ndarray  # (N, 2, 2) Hermitian
    coeffs: np.ndarray  # (8, N) real; ordered as COEFF_NAMES
    eta0: float
    margin: float


@dataclass
class PulseSchedule:
    """Two-tone drive parameters (Rabi amplitudes in ordinary MHz)."""

    t_grid: np.ndarray
    Omega1: np.ndarray
    Omega2: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    omega1: np.ndarray  # instantaneous angular frequency offsets included
    omega2: np.ndarray


def _as_h_fn(h):
    """Accept a constant 2x2 matrix or a callable t -> 2x2 matrix."""
    if callable(h):
        return h
    h = np.asarray(h, dtype=complex)
    return lambda t: h


def solve_M(h, m0: np.ndarray, t_grid: np.ndarray, margin: float = DEFAULT_MARGIN) -> np.ndarray:
    """RK4 integration of i dM/dt = H^dag M - M H with re-symmetrization.

    Raises :class:`DilationInfeasibleError` when min eig(M - I) falls below
    ``margin``.
    """
    h_fn = _as_h_fn(h)
    t_grid = np.asarray(t_grid, dtype=float)
    m = np.asarray(m0, dtype=complex).copy()
    if np.linalg.norm(m - m.conj().T) > 1e-12 * max(np.linalg.norm(m), 1.0):
        raise ValueError("M0 must be Hermitian")
    out = np.empty((t_grid.size, 2, 2), dtype=complex)
    out[0] = m

    def rhs(t, mm):
        hh = h_fn(t)
        return -1j * (hh.conj().T @ mm - mm @ hh)

    for i in range(1, t_grid.size):
        t0, t1 = t_grid[i - 1], t_grid[i]
        dt = t1 - t0
        k1 = rhs(t0, m)
        k2 = rhs(t0 + 0.5 * dt, m + 0.5 * dt * k1)
        k3 = rhs(t0 + 0.5 * dt, m + 0.5 * dt * k2)
        k4 = rhs(t1, m + dt * k3)
        m = m + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        m = 0.5 * (m + m.conj().T)
        w = np.linalg.eigvalsh(m)
        if w.min() - 1.0 < margin:
            raise DilationInfeasibleError(
                f"dilation infeasible: min eig(M - I) = {w.min() - 1.0:.4f} < {margin}"
                f" at t = {t1:.4g}; increase eta0"
            )
        out[i] = m
    return out


def hermitian_sqrt(m: np.ndarray) -> np.ndarray:
    """Unique Hermitian positive square root of a positive-definite matrix."""
    w, v = np.linalg.eigh(m)
    if w.min() <= 0:
        raise DilationError("matrix not positive definite; no Hermitian sqrt")
    return (v * np.sqrt(w)) @ v.conj().T


def eta_series(m_series: np.ndarray) -> np.ndarray:
    """eta(t): Hermitian positive square root of M(t) - I at each grid point."""
    return np.stack([hermitian_sqrt(m - I2) for m in m_series])


def central_diff(series: np.ndarray, t_grid: np.ndarray) -> np.ndarray:
    """Central finite differences along axis 0 (one-sided at the ends)."""
    return np.gradient(series, t_grid, axis=0, edge_order=2)


def eta_derivative(eta: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Exact d(eta)/dt at one point from the metric-operator ODE.

    With M = eta^2 + I and i dM/dt = H^dag M - M H, d(eta)/dt solves the
    Sylvester relation eta' eta + eta eta' = dM/dt, diagonal in eta's
    eigenbasis. Avoids finite-difference noise on the matrix square root.
    """
    m = eta @ eta + I2
    dm = -1j * (h.conj().T @ m - m @ h)
    w, v = np.linalg.eigh(eta)
    rhs = v.conj().T @ dm @ v
    denom = w[:, None] + w[None, :]
    deta = v @ (rhs / denom) @ v.conj().T
    return 0.5 * (deta + deta.conj().T)


def dilated_generators(h: np.ndarray, eta: np.ndarray, deta: np.ndarray):
    """System operators (Lambda, Gamma) of the dilated Hamiltonian at one point.

    Both results must be Hermitian; a residual beyond 1e-6 signals eta and M
    out of sync.
    """
    m = eta.conj().T @ eta + I2
    m_inv = np.linalg.inv(m)
    lam = (h + (1j * deta + eta @ h) @ eta) @ m_inv
    gam = 1j * (h @ eta - eta @ h - 1j * deta) @ m_inv
    scale = max(np.linalg.norm(gam), np.linalg.norm(lam), 1.0)
    herm_res = max(
        np.linalg.norm(gam - gam.conj().T),
        np.linalg.norm(lam - lam.conj().T),
    )
    if herm_res > 1e-6 * scale:
        raise DilationError(
            f"non-Hermitian dilated generators (residual {herm_res:.2e}): eta/M out of sync"
        )
    return 0.5 * (lam + lam.conj().T), 0.5 * (gam + gam.conj().T)


def pauli_decompose(h_sa: np.ndarray) -> np.ndarray:
    """Coefficients of a 4x4 Hermitian matrix in the {I,sx,sy,sz} x {I,sz} basis.

    Returns the eight reals ordered as ``COEFF_NAMES``; raises if the matrix
    has weight outside the ancilla-diagonal span.
    """
    h_sa = np.asarray(h_sa, dtype=complex)
    coeffs = np.array([np.trace(b @ h_sa).real / 4.0 for b in _BASIS])
    recomposed = recompose(coeffs)
    if np.linalg.norm(recomposed - h_sa) > 1e-8 * max(np.linalg.norm(h_sa), 1.0):
        raise DilationError("matrix has components outside the 8-element basis")
    return coeffs


def recompose(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`pauli_decompose`."""
    return sum(c * b for c, b in zip(coeffs, _BASIS))


def compile_dilation(
    h,
    t_grid: np.ndarray,
    eta0: float | None = None,
    margin: float = DEFAULT_MARGIN,
) -> DilationSchedule:
    """Full dilation pipeline: M(t), eta(t), (Lambda, Gamma) and Pauli coefficients."""
    t_grid = np.asarray(t_grid, dtype=float)
    h_fn = _as_h_fn(h)
    if eta0 is None:
        eta0 = choose_eta0(h, t_grid[-1], margin, n_grid=t_grid.size)
    m0 = (eta0**2 + 1.0) * I2
    m_series = solve_M(h_fn, m0, t_grid, margin)
    eta = eta_series(m_series)
    deta = np.stack([
        eta_derivative(eta[i], h_fn(t_grid[i])) for i in range(t_grid.size)
    ])
    n = t_grid.size
    lam = np.empty((n, 2, 2), dtype=complex)
    gam = np.empty((n, 2, 2), dtype=complex)
    coeffs = np.empty((8, n))
    for i in range(n):
        lam[i], gam[i] = dilated_generators(h_fn(t_grid[i]), eta[i], deta[i])
        h_sa = np.kron(lam[i], I2) + np.kron(gam[i], SZ)
        coeffs[:, i] = pauli_decompose(h_sa)
    return DilationSchedule(
        t_grid=t_grid, M=m_series, eta=eta, deta=deta, Lam=lam, Gam=gam,
        coeffs=coeffs, eta0=float(eta0), margin=margin,
    )


def choose_eta0(
    h,
    t_final: float,
    margin: float = DEFAULT_MARGIN,
    n_grid: int = 2001,
    rel_tol: float = 1e-3,
) -> float:
    """Smallest feasible eta0 by doubling then bisection.

    Feasible means solve_M with M0 = (eta0^2 + 1) I keeps
    min eig(M - I) >= margin over [0, t_final].
    """
    t_grid = np.linspace(0.0, t_final, int(n_grid))
    h_fn = _as_h_fn(h)

    def feasible(e0: float) -> bool:
        try:
            solve_M(h_fn, (e0**2 + 1.0) * I2, t_grid, margin)
            return True
        except DilationInfeasibleError:
            return False

    lo = math.sqrt(margin)
    hi = max(2.0 * lo, 1.0)
    while not feasible(hi):
        lo = hi
        hi *= 2.0
        if hi > ETA0_CAP:
            raise DilationInfeasibleError(f"no feasible eta0 below {ETA0_CAP}")
    if feasible(lo):
        return lo
    while (hi - lo) > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def pulse_schedule(coeffs: np.ndarray, omega_t1: float, omega_t2: float,
                   t_grid: np.ndarray) -> PulseSchedule:
    """Closed-form two-tone pulse parameters from the eight Pauli coefficients.

    omega_t1/omega_t2 are the bare transition angular frequencies of the two
    nuclear subspaces. A zero-amplitude tone gets phase 0 by convention.
    """
    b1, a1, b2, b3, a2, b4, a3, a4 = coeffs
    omega_big1 = np.hypot(a1 + b4, b2 + a3) / math.pi
    omega_big2 = np.hypot(a1 - b4, a3 - b2) / math.pi
    phi1 = np.where(omega_big1 > 0, np.arctan2(-b2 - a3, a1 + b4), 0.0)
    phi2 = np.where(omega_big2 > 0, np.arctan2(a3 - b2, a1 - b4), 0.0)
    omega1 = omega_t1 + 2.0 * b3 + 2.0 * a4
    omega2 = omega_t2 + 2.0 * b3 - 2.0 * a4
    return PulseSchedule(
        t_grid=np.asarray(t_grid, dtype=float),
        Omega1=omega_big1, Omega2=omega_big2,
        phi1=phi1, phi2=phi2, omega1=omega1, omega2=omega2,
    )


def prepare_initial(eta0: float):
    """RF phase and dilated initial 4-vector for a scalar eta(0) = eta0 I.

    Basis order is (system x ancilla); the ancilla carriers ANC_MINUS and
    ANC_PLUS hold the system vector and eta0 times the system vector.
    """
    if eta0 <= 0:
        raise ValueError("eta0 must be positive")
    phi = math.atan((eta0**2 - 1.0) / (2.0 * eta0)) + math.pi / 2.0
    anc = (ANC_MINUS + eta0 * ANC_PLUS) / math.sqrt(1.0 + eta0**2)
    sys0 = np.array([1.0, 0.0], dtype=complex)
    return phi, np.kron(sys0, anc)


def project_minus(psi4: np.ndarray) -> np.ndarray:
    """System 2-vector in the ancilla minus-carrier subspace (unnormalized)."""
    psi4 = np.asarray(psi4)
    return psi4.reshape(*psi4.shape[:-1], 2, 2) @ ANC_MINUS.conj()


def hsa_series(schedule: DilationSchedule) -> np.ndarray:
    """Dilated Hamiltonian H_sa(t) reconstructed from the coefficient series."""
    n = schedule.t_grid.size
    out = np.empty((n, 4, 4), dtype=complex)
    for i in range(n):
        out[i] = recompose(schedule.coeffs[:, i])
    return out


def dilated_trajectory(schedule: DilationSchedule, psi0: np.ndarray) -> np.ndarray:
    """RK4 evolution of the 4-level state under H_sa(t) on the schedule grid.

    The grid must have an even number of intervals; one RK4 step spans two
    grid cells so that midpoint Hamiltonians come straight off the grid.
    """
    t = schedule.t_grid
    n = t.size
    if n % 2 == 0:
        raise ValueError("schedule grid must have an odd number of points (even intervals)")
    h = hsa_series(schedule)
    out = np.empty((n, 4), dtype=complex)
    psi = np.asarray(psi0, dtype=complex).copy()
    out[0] = psi
    for i in range(0, n - 2, 2):
        dt = t[i + 2] - t[i]
        k1 = -1j * (h[i] @ psi)
        k2 = -1j * (h[i + 1] @ (psi + 0.5 * dt * k1))
        k3 = -1j * (h[i + 1] @ (psi + 0.5 * dt * k2))
        k4 = -1j * (h[i + 2] @ (psi + dt * k3))
        psi = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        # midpoint value for completeness: linear interpolation is adequate
        out[i + 1] = 0.5 * (out[i] + psi)
        out[i + 2] = psi
    return out
