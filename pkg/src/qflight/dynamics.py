"""Density matrices and the time-dependent decay rate from the amplitude.

Everything here is exact algebra in the solved amplitude: the single-qubit
state (excited population |C_e|^2 with the surviving ground coherence),
the two-qubit state of two identical uncoupled qubit-cavity subsystems,
and the decay rate Gamma(t) = -2 Re[c'/c] with its rotating-frame Lamb
shift companion Omega(t) = -2 Im[c'/c] (the constant 2*omega0 carrier
offset is frame-dependent and excluded).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .volterra import AmplitudeTrajectory, TimeGrid

RATE_MASK_THRESHOLD = 1e-8   # |c| below this leaves Gamma/Omega undefined

_HERM_TOL = 1e-12
_TRACE_TOL = 1e-12
_EIG_TOL = -1e-10


class StateError(ValueError):
    """Invalid quantum state input."""


def validate_density_matrix(rho: np.ndarray, dim: int) -> np.ndarray:
    """Hermiticity, unit trace, and positivity checks; returns the matrix."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (dim, dim):
        raise StateError(f"expected {dim}x{dim} matrix, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > _HERM_TOL:
        raise StateError("matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > _TRACE_TOL or abs(np.trace(rho).imag) > _TRACE_TOL:
        raise StateError(f"trace must be 1 (got {np.trace(rho)})")
    evals = np.linalg.eigvalsh(rho)
    if evals.min() < _EIG_TOL:
        raise StateError(f"negative eigenvalue {evals.min()}")
    return rho


def single_qubit_state(traj: AmplitudeTrajectory, c_e0: complex, c_g0: complex,
                       t_index: int) -> np.ndarray:
    """Reduced single-qubit density matrix in the {|e>, |g>} basis.

    ``traj`` carries the normalized amplitude (c(0) = 1); the initial
    superposition weights scale it internally.  The coherence carries the
    rotating-frame amplitude; the carrier phase cancels in populations.
    """
    norm = abs(c_e0) ** 2 + abs(c_g0) ** 2
    if abs(norm - 1.0) > 1e-12:
        raise StateError(f"initial state must be normalized (|c_e0|^2+|c_g0|^2 = {norm})")
    ce = c_e0 * traj.amplitude[t_index]
    pop = abs(ce) ** 2
    coh = np.conj(c_g0) * ce
    return np.array([[pop, coh], [np.conj(coh), 1.0 - pop]], dtype=complex)


@dataclass(frozen=True)
class RateSeries:
    """Gamma(t)/gamma and rotating-frame Omega(t)/gamma with a validity mask.

    Masked nodes are exactly those with |c| < RATE_MASK_THRESHOLD, where
    the rate diverges at amplitude zeros; masked values are stored as 0
    and serialized as empty fields downstream.
    """

    grid: TimeGrid
    gamma_t: np.ndarray
    omega_t: np.ndarray
    mask: np.ndarray


def rate_series(traj: AmplitudeTrajectory) -> RateSeries:
    """Decay rate and Lamb shift from the stored equation-of-motion derivative."""
    c = traj.amplitude
    mask = np.abs(c) < RATE_MASK_THRESHOLD
    safe = np.where(mask, 1.0, c)
    ratio = traj.derivative / safe
    gamma = np.where(mask, 0.0, -2.0 * ratio.real)
    omega = np.where(mask, 0.0, -2.0 * ratio.imag)
    return RateSeries(grid=traj.grid, gamma_t=gamma, omega_t=omega, mask=mask)


def evolve_two_qubit_elements(rho0: np.ndarray, c) -> dict:
    """All ten independent elements of the evolved two-qubit state.

    Vectorised over an array of amplitudes c (normalized so c(0) = 1).
    Basis order |e_A e_B>, |e_A g_B>, |g_A e_B>, |g_A g_B>.  Populations
    feed down as each qubit decays independently; rho44 closes the trace
    exactly.  The rho24/rho34 coherences pick up the feed-in from rho13
    and rho12 respectively, which selection rules allow when the partner
    qubit decays.
    """
    c = np.asarray(c, dtype=complex)
    p = np.abs(c) ** 2
    loss = 1.0 - p
    el = {}
    el[(0, 0)] = rho0[0, 0].real * p * p
    el[(1, 1)] = rho0[1, 1].real * p + rho0[0, 0].real * p * loss
    el[(2, 2)] = rho0[2, 2].real * p + rho0[0, 0].real * p * loss
    el[(3, 3)] = 1.0 - el[(0, 0)] - el[(1, 1)] - el[(2, 2)]
    el[(0, 1)] = rho0[0, 1] * p * c
    el[(0, 2)] = rho0[0, 2] * p * c
    el[(0, 3)] = rho0[0, 3] * c * c
    el[(1, 2)] = rho0[1, 2] * p
    el[(1, 3)] = rho0[1, 3] * c + rho0[0, 2] * c * loss
    el[(2, 3)] = rho0[2, 3] * c + rho0[0, 1] * c * loss
    return el


def assemble_two_qubit(rho0: np.ndarray, c_e_t: complex) -> np.ndarray:
    """Two-qubit density matrix at one time, lower triangle by conjugation."""
    rho0 = validate_density_matrix(rho0, 4)
    if abs(c_e_t) > 1.0 + 1e-9:
        raise StateError(f"|c| must not exceed 1 (got {abs(c_e_t)})")
    el = evolve_two_qubit_elements(rho0, np.array([c_e_t]))
    rho = np.zeros((4, 4), dtype=complex)
    for (i, j), v in el.items():
        rho[i, j] = v[0]
        if i != j:
            rho[j, i] = np.conj(v[0])
    return rho
