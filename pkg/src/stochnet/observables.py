"""Observables extracted from single- and two-particle density matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, InvariantViolationError, SameSiteError

IMAG_RESIDUE_TOL = 1e-12
JOINT_FLOOR = -1e-9
JOINT_SUM_TOL = 1e-9


def _as_matrix(rho):
    mat = getattr(rho, "rho", rho)
    return np.asarray(mat, dtype=complex)


@dataclass(frozen=True)
class JointProbabilityMatrix:
    """Gamma_pq = Re rho[(p,q),(p,q)]: one particle at p, the other at q.

    Raw values are retained (no clipping); entries may undershoot zero by at
    most 1e-9 and the total must be 1 within 1e-9.
    """

    dim: int
    gamma_mat: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.gamma_mat, dtype=float)
        if mat.shape != (self.dim, self.dim):
            raise DimensionMismatchError(
                f"joint probabilities have shape {mat.shape}, expected ({self.dim}, {self.dim})")
        if mat.min() < JOINT_FLOOR:
            raise InvariantViolationError(
                f"joint probability {mat.min():.2e} below {JOINT_FLOOR:g}")
        total = mat.sum()
        if abs(total - 1.0) > JOINT_SUM_TOL:
            raise InvariantViolationError(
                f"joint probabilities sum to {total!r}, expected 1")
        mat.setflags(write=False)
        object.__setattr__(self, "gamma_mat", mat)


def populations(rho):
    """Diagonal populations as a real vector; imaginary residues must be tiny."""
    mat = _as_matrix(rho)
    diag = mat.diagonal()
    residue = np.abs(diag.imag).max() if diag.size else 0.0
    if residue > IMAG_RESIDUE_TOL:
        raise InvariantViolationError(
            f"population imaginary residue {residue:.2e} exceeds {IMAG_RESIDUE_TOL:g}")
    return diag.real.copy()


def coherence(rho, n, m):
    """Off-diagonal element rho[n, m] between two distinct sites (0-based)."""
    if n == m:
        raise SameSiteError(f"coherence needs two distinct sites, got ({n}, {m})")
    mat = _as_matrix(rho)
    return complex(mat[n, m])


def joint_probability(rho2) -> JointProbabilityMatrix:
    """Diagonal of a two-particle density as an N x N joint-probability matrix."""
    mat = _as_matrix(rho2)
    dim = int(round(np.sqrt(mat.shape[0])))
    if dim * dim != mat.shape[0]:
        raise DimensionMismatchError(
            f"two-particle density dimension {mat.shape[0]} is not a perfect square")
    gamma = mat.diagonal().real.reshape(dim, dim)
    return JointProbabilityMatrix(dim, gamma)


def bunching_ratio(joint: JointProbabilityMatrix) -> float:
    """Total probability of finding both particles on the same site."""
    value = float(np.trace(joint.gamma_mat))
    if not -1e-9 <= value <= 1.0 + 1e-9:
        raise InvariantViolationError(f"bunching ratio {value!r} outside [0, 1]")
    return value


def delta_rho(a, b):
    """Element-wise | |a| - |b| |: compares magnitudes, not complex entries."""
    ma, mb = _as_matrix(a), _as_matrix(b)
    if ma.shape != mb.shape:
        raise DimensionMismatchError(f"shape mismatch: {ma.shape} vs {mb.shape}")
    return np.abs(np.abs(ma) - np.abs(mb))


def complex_difference(a, b):
    """Element-wise |a - b|; the complex-valued counterpart of delta_rho.

    Kept under a separate name so magnitude comparisons and full complex
    comparisons cannot be conflated.
    """
    ma, mb = _as_matrix(a), _as_matrix(b)
    if ma.shape != mb.shape:
        raise DimensionMismatchError(f"shape mismatch: {ma.shape} vs {mb.shape}")
    return np.abs(ma - mb)


@dataclass(frozen=True)
class DensityDiagnostics:
    trace_deviation: float
    hermiticity_residual: float
    min_eigenvalue: float
    purity: float


def validate_density(rho) -> DensityDiagnostics:
    """Diagnostics record for any square density matrix; never raises, never mutates."""
    mat = _as_matrix(rho)
    herm = float(np.abs(mat - mat.conj().T).max())
    sym = (mat + mat.conj().T) / 2
    eigs = np.linalg.eigvalsh(sym)
    return DensityDiagnostics(
        trace_deviation=float(abs(mat.trace() - 1.0)),
        hermiticity_residual=herm,
        min_eigenvalue=float(eigs.min()),
        purity=float((mat @ mat).trace().real),
    )
