"""Single-particle master equation for stochastically coupled networks.

The noise-averaged density matrix rho_nm evolves under

    d(rho_nm)/dt = -[i(omega_n - omega_m) + (1/2) sum_j (gamma_nj + gamma_mj)] rho_nm
                   + i sum_j (kappa_mj rho_nj - kappa_nj rho_jm)
                   + gamma_nm rho_mn
                   + delta_nm sum_j gamma_nj rho_jj

which is the exact average of the stochastic coupling dynamics in the
Stratonovich convention (equivalently -i[H, rho] - 1/2 sum over pairs of
gamma_ab [V_ab, [V_ab, rho]] with V_ab = |a><b| + |b><a|).  Note the third
term couples each coherence to its *transposed* partner rho_mn; using
rho_nm there is not trace-consistent with the trajectory average.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import (
    DegenerateNullSpaceError,
    DimensionMismatchError,
    InvariantViolationError,
    NoConvergenceError,
)
from .network import validate_network
from .ode import SolverOptions, TimeGrid, integrate

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-9
EIGENVALUE_FLOOR = -1e-7


class DensityMatrix:
    """Validated N x N density matrix: Hermitian, unit trace, positive.

    Tolerances: Hermiticity 1e-12, trace 1e-9, smallest eigenvalue >= -1e-7.
    """

    __slots__ = ("rho",)

    def __init__(self, rho, *, time=None):
        mat = np.array(rho, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionMismatchError(f"density matrix must be square, got {mat.shape}")
        herm = np.abs(mat - mat.conj().T).max()
        if herm > HERMITIAN_TOL:
            raise InvariantViolationError(
                f"density matrix not Hermitian (residual {herm:.2e})", time=time)
        tr = mat.trace()
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvariantViolationError(
                f"trace deviates from 1 by {abs(tr - 1.0):.2e}", time=time)
        lo = np.linalg.eigvalsh(mat).min()
        if lo < EIGENVALUE_FLOOR:
            raise InvariantViolationError(
                f"smallest eigenvalue {lo:.2e} below {EIGENVALUE_FLOOR:g}", time=time)
        mat.setflags(write=False)
        self.rho = mat

    @property
    def dim(self):
        return self.rho.shape[0]

    @classmethod
    def from_site(cls, site, n_sites):
        """Pure state with the particle localized on one site (0-based)."""
        if not 0 <= site < n_sites:
            raise DimensionMismatchError(f"site {site} outside 0..{n_sites - 1}")
        mat = np.zeros((n_sites, n_sites), dtype=complex)
        mat[site, site] = 1.0
        return cls(mat)

    @classmethod
    def from_pure(cls, psi):
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, n_sites):
        return cls(np.eye(n_sites, dtype=complex) / n_sites)

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim})"


def _as_matrix(rho):
    return rho.rho if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)


class _SingleTables:
    """Per-network constants for the hot RHS path."""

    def __init__(self, net):
        g = net.gamma_row_sums
        self.ham = net.hamiltonian.astype(complex)
        self.half_decay = 0.5 * (g[:, None] + g[None, :])
        self.gamma = net.gamma
        self.idx = np.arange(net.n_sites)


@lru_cache(maxsize=64)
def _single_tables(net):
    return _SingleTables(net)


def _rhs_matrix(net, rho):
    """drho/dt for a raw (N, N) complex array; hot path for the integrators."""
    tab = _single_tables(net)
    out = -1j * (tab.ham @ rho - rho @ tab.ham)
    out -= tab.half_decay * rho
    out += tab.gamma * rho.T  # noise feeds each coherence from its transpose partner
    out[tab.idx, tab.idx] += tab.gamma @ rho.diagonal()
    return out


def single_rhs(net, rho):
    """Right-hand side of the single-particle master equation."""
    net = validate_network(net)
    mat = _as_matrix(rho)
    if mat.shape != (net.n_sites, net.n_sites):
        raise DimensionMismatchError(
            f"rho has shape {mat.shape}, network has {net.n_sites} sites")
    return _rhs_matrix(net, mat)


def evolve_single(net, rho0, grid: TimeGrid, opts: SolverOptions = SolverOptions()):
    """Integrate the master equation; every snapshot is re-validated.

    Returns ``[(t, DensityMatrix), ...]`` at the grid's sample times.
    """
    net = validate_network(net)
    if not isinstance(rho0, DensityMatrix):
        rho0 = DensityMatrix(rho0)
    n = net.n_sites
    if rho0.dim != n:
        raise DimensionMismatchError(f"rho0 has dim {rho0.dim}, network has {n} sites")

    def rhs(t, y):
        return _rhs_matrix(net, y.reshape(n, n)).ravel()

    raw = integrate(rhs, rho0.rho.ravel(), grid, opts)
    return [(t, DensityMatrix(y.reshape(n, n), time=t)) for t, y in raw]


def liouvillian_matrix_single(net) -> np.ndarray:
    """The master equation as an N^2 x N^2 matrix over row-major flattened rho.

    Index convention: element (n, m) of rho sits at flat index n*N + m, so
    ``single_rhs(net, rho).ravel() == L @ rho.ravel()``.  Assembled from
    Kronecker identities, independently of the element-wise RHS.
    """
    net = validate_network(net)
    n = net.n_sites
    eye = np.eye(n)
    h = net.hamiltonian
    lmat = -1j * (np.kron(h, eye) - np.kron(eye, h.T)).astype(complex)
    g = net.gamma_row_sums
    lmat -= np.diag((0.5 * (g[:, None] + g[None, :])).ravel())
    for a in range(n):
        for b in range(n):
            if a != b:
                lmat[a * n + b, b * n + a] += net.gamma[a, b]
            lmat[a * n + a, b * n + b] += net.gamma[a, b]
    return lmat


def _null_space_state(net, tol):
    lmat = liouvillian_matrix_single(net)
    n = net.n_sites
    w, v = np.linalg.eig(lmat)
    near_zero = np.abs(w) < max(100 * tol, 1e-9)
    count = int(near_zero.sum())
    if count == 0:
        raise NoConvergenceError("Liouvillian has no numerically zero eigenvalue")
    if count > 1:
        raise DegenerateNullSpaceError(
            f"stationary subspace has dimension {count}; steady state is not unique")
    vec = v[:, int(np.nonzero(near_zero)[0][0])].reshape(n, n)
    vec = (vec + vec.conj().T) / 2
    tr = vec.trace().real
    if abs(tr) < 1e-12:
        raise DegenerateNullSpaceError("null vector is traceless; steady state undetermined")
    return vec / tr


def steady_state_single(net, rho0, tol=1e-8):
    """Stationary state, cross-checked between two independent routes.

    Integrates from ``rho0`` until ``max|drho/dt| < tol`` and separately
    extracts the unit-trace null vector of the Liouvillian; the two must
    agree within ``10 * tol``.  Requires noise somewhere in the network,
    otherwise the dynamics never relaxes.
    """
    net = validate_network(net)
    if not isinstance(rho0, DensityMatrix):
        rho0 = DensityMatrix(rho0)
    if np.all(net.gamma == 0.0):
        raise NoConvergenceError("gamma is identically zero: unitary dynamics never relaxes")

    null_state = _null_space_state(net, tol)

    t_cap = 2000.0
    window = 25.0
    t = 0.0
    current = rho0
    opts = SolverOptions(dt=1e-3, mode="adaptive", rel_tol=min(1e-8, tol / 10), abs_tol=1e-14)
    while True:
        grid = TimeGrid(0.0, window, np.array([window]))
        current = evolve_single(net, current, grid, opts)[-1][1]
        t += window
        residual = np.abs(_rhs_matrix(net, current.rho)).max()
        if residual < tol:
            break
        if t >= t_cap:
            raise NoConvergenceError(
                f"residual {residual:.2e} after {t:g} ps (tol {tol:g})")
    gap = np.abs(current.rho - null_state).max()
    if gap > 10 * tol:
        raise InvariantViolationError(
            f"integration and null-space steady states disagree by {gap:.2e} "
            f"(allowed {10 * tol:.2e})")
    return DensityMatrix(null_state)
