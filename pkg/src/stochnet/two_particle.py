"""Two-particle states and their master equation.

States of two non-interacting particles on an N-site network live on pair
amplitudes psi[p, q]; densities are N^2 x N^2 matrices rho[(p,q), (p',q')]
with the row-major pair index p*N + q.  Both particles ride the same
fluctuating couplings, so the noise generator acts identically on each
tensor factor.

The right-hand side is assembled term group by term group (one helper per
group, each unit-tested against an explicit loop transcription).  Two decay
terms deserve a warning: they couple rho[(p,q),(p',q')] to the *pair-swapped*
elements rho[(q,p),(p',q')] and rho[(p,q),(q',p')].  On exchange-symmetric
(bosonic) states this is identical to a scalar -gamma_pq - gamma_p'q'
prefactor, but only the swapped form conserves trace on general Hermitian
input and matches the trajectory average for distinguishable or fermionic
inputs.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import (
    BadSitePairError,
    DimensionMismatchError,
    InvariantViolationError,
    UnitarityLostError,
    ZeroAmplitudeError,
)
from .network import validate_network
from .ode import SolverOptions, TimeGrid, integrate

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-9
EIGENVALUE_FLOOR = -1e-7
SYMMETRY_TOL = 1e-12
EXCHANGE_DRIFT_TOL = 1e-9

BOSON = "boson"
FERMION = "fermion"


class InputAmplitudeProfile:
    """Initial pair-amplitude profile xi[m, n], normalized to unit total weight."""

    __slots__ = ("xi",)

    def __init__(self, xi):
        mat = np.array(xi, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionMismatchError(f"profile must be square, got shape {mat.shape}")
        norm = np.linalg.norm(mat)
        if abs(norm - 1.0) > 1e-12:
            raise InvariantViolationError(f"profile norm {norm!r} differs from 1")
        mat.setflags(write=False)
        self.xi = mat

    @property
    def dim(self):
        return self.xi.shape[0]


class TwoParticleAmplitude:
    """Normalized pair amplitude psi[p, q] with definite exchange statistics.

    ``pre_normalization_norm`` records the amplitude norm before the final
    renormalization when the object came out of a +/- composition.
    """

    __slots__ = ("psi", "statistics", "pre_normalization_norm")

    def __init__(self, psi, statistics, pre_normalization_norm=None):
        mat = np.array(psi, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionMismatchError(f"amplitude must be square, got shape {mat.shape}")
        if statistics not in (BOSON, FERMION):
            raise ValueError(f"statistics must be '{BOSON}' or '{FERMION}', got {statistics!r}")
        norm = np.linalg.norm(mat)
        if abs(norm - 1.0) > 1e-12:
            raise InvariantViolationError(f"amplitude norm {norm!r} differs from 1")
        sign = 1.0 if statistics == BOSON else -1.0
        defect = np.abs(mat - sign * mat.T).max()
        if defect > SYMMETRY_TOL:
            raise InvariantViolationError(
                f"{statistics} amplitude breaks exchange symmetry by {defect:.2e}")
        mat.setflags(write=False)
        self.psi = mat
        self.statistics = statistics
        self.pre_normalization_norm = pre_normalization_norm

    @property
    def dim(self):
        return self.psi.shape[0]


class TwoParticleDensity:
    """Validated N^2 x N^2 two-particle density matrix (pair index p*N + q)."""

    __slots__ = ("rho", "dim")

    def __init__(self, rho, *, time=None):
        mat = np.array(rho, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionMismatchError(f"density must be square, got shape {mat.shape}")
        n = int(round(np.sqrt(mat.shape[0])))
        if n * n != mat.shape[0]:
            raise DimensionMismatchError(
                f"density dimension {mat.shape[0]} is not a perfect square")
        herm = np.abs(mat - mat.conj().T).max()
        if herm > HERMITIAN_TOL:
            raise InvariantViolationError(
                f"two-particle density not Hermitian (residual {herm:.2e})", time=time)
        tr = mat.trace()
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvariantViolationError(
                f"two-particle trace deviates from 1 by {abs(tr - 1.0):.2e}", time=time)
        lo = np.linalg.eigvalsh(mat).min()
        if lo < EIGENVALUE_FLOOR:
            raise InvariantViolationError(
                f"smallest eigenvalue {lo:.2e} below {EIGENVALUE_FLOOR:g}", time=time)
        mat.setflags(write=False)
        self.rho = mat
        self.dim = n

    def tensor(self):
        """View as R[p, q, p', q']."""
        return self.rho.reshape(self.dim, self.dim, self.dim, self.dim)

    @classmethod
    def from_amplitude(cls, amp):
        psi = amp.psi if isinstance(amp, TwoParticleAmplitude) else np.asarray(amp, complex)
        flat = psi.ravel()
        return cls(np.outer(flat, flat.conj()))

    @classmethod
    def from_mixture(cls, components):
        """Statistical mixture of (weight, pair-amplitude matrix) terms."""
        acc = None
        for weight, psi in components:
            flat = np.asarray(psi, dtype=complex).ravel()
            term = weight * np.outer(flat, flat.conj())
            acc = term if acc is None else acc + term
        return cls(acc)

    def __repr__(self):
        return f"TwoParticleDensity(dim={self.dim})"


def compose_two_particle_amplitude(unitary, xi, statistics) -> TwoParticleAmplitude:
    """Propagate an input profile through a single-particle unitary.

    Implements psi[p, q] = sum_{m,n} xi[m, n] (U[p, n] U[q, m] +/- U[p, m] U[q, n])
    as U (xi +/- xi^T) U^T, then renormalizes (the +/- composition does not
    preserve the profile norm) and records the pre-normalization norm.
    """
    u = np.asarray(unitary, dtype=complex)
    profile = xi.xi if isinstance(xi, InputAmplitudeProfile) else InputAmplitudeProfile(xi).xi
    if u.shape != profile.shape:
        raise DimensionMismatchError(
            f"unitary shape {u.shape} does not match profile shape {profile.shape}")
    defect = np.abs(u.conj().T @ u - np.eye(u.shape[0])).max()
    if defect > 1e-4:
        raise UnitarityLostError(f"propagator unitarity defect {defect:.2e} exceeds 1e-4")
    if statistics == BOSON:
        sym = profile + profile.T
    elif statistics == FERMION:
        sym = profile - profile.T
    else:
        raise ValueError(f"statistics must be '{BOSON}' or '{FERMION}', got {statistics!r}")
    psi = u @ sym @ u.T
    norm = np.linalg.norm(psi)
    if norm < 1e-10:
        raise ZeroAmplitudeError(
            f"{statistics} symmetrization annihilated the input profile")
    return TwoParticleAmplitude(psi / norm, statistics, pre_normalization_norm=float(norm))


def canonical_two_particle_state(kind, sites, n_sites) -> TwoParticleDensity:
    """The three reference inputs on sites (a, b), 0-based, a < b.

    separable:  pure (|1_a,1_b> + |1_b,1_a>)/sqrt(2)
    incoherent: mixture (|1_a,1_b><...| + |1_b,1_a><...|)/2
    entangled:  pure (|1_a,1_a> + |1_b,1_b>)/sqrt(2)
    """
    a, b = sites
    if not (0 <= a < b < n_sites):
        raise BadSitePairError(
            f"sites ({a}, {b}) must satisfy 0 <= a < b < {n_sites}")

    def basis(p, q):
        m = np.zeros((n_sites, n_sites), dtype=complex)
        m[p, q] = 1.0
        return m

    if kind == "separable":
        return TwoParticleDensity.from_amplitude((basis(a, b) + basis(b, a)) / np.sqrt(2))
    if kind == "incoherent":
        return TwoParticleDensity.from_mixture([(0.5, basis(a, b)), (0.5, basis(b, a))])
    if kind == "entangled":
        return TwoParticleDensity.from_amplitude((basis(a, a) + basis(b, b)) / np.sqrt(2))
    raise ValueError(f"unknown canonical state kind {kind!r}")


# --------------------------------------------------------------------------
# Master-equation right-hand side, one helper per term group.  All helpers
# take and return (N, N, N, N) tensors R[p, q, a, b] ~ rho[(p,q), (a,b)].
# --------------------------------------------------------------------------

class _Tables:
    """Per-network constants used by the two-particle RHS."""

    def __init__(self, net):
        n = net.n_sites
        om = net.omega
        g = net.gamma_row_sums
        freq = om[:, None, None, None] + om[None, :, None, None] \
            - om[None, None, :, None] - om[None, None, None, :]
        decay = g[:, None, None, None] + g[None, :, None, None] \
            + g[None, None, :, None] + g[None, None, None, :]
        self.prefactor = -1j * freq - 0.5 * decay
        self.kappa = net.kappa
        self.gamma = net.gamma
        self.n = n
        self.idx = np.arange(n)


@lru_cache(maxsize=64)
def _tables(net):
    return _Tables(net)


def _energy_decay_term(tab, r):
    """-i (omega_p + omega_q - omega_p' - omega_q') R minus the half-sum decay."""
    return tab.prefactor * r


def _pair_swap_decay_term(tab, r):
    """-gamma_pq R[q,p,a,b] - gamma_ab R[p,q,b,a]; scalar only on symmetric states."""
    g = tab.gamma
    return (- g[:, :, None, None] * r.transpose(1, 0, 2, 3)
            - g[None, None, :, :] * r.transpose(0, 1, 3, 2))


def _hopping_term(tab, r):
    """Coherent hopping: the four kappa sums (commutator with H2 minus energies)."""
    k = tab.kappa
    return (-1j * (np.einsum("lq,plab->pqab", k, r) + np.einsum("lp,lqab->pqab", k, r))
            + 1j * (np.einsum("lb,pqal->pqab", k, r) + np.einsum("la,pqlb->pqab", k, r)))


def _double_occupancy_feed_term(tab, r):
    """-delta_pq sum_l gamma_lp R[l,l,a,b] and the mirrored column version."""
    g = tab.gamma
    idx = tab.idx
    out = np.zeros_like(r)
    row_diag = np.einsum("llab->lab", r)
    out[idx, idx] -= np.einsum("pl,lab->pab", g, row_diag)
    col_diag = np.einsum("pqll->pql", r)
    out[:, :, idx, idx] -= np.einsum("al,pql->pqa", g, col_diag)
    return out


def _matched_index_feed_term(tab, r):
    """The four delta-matched gamma sums (delta_qq', delta_qp', delta_pq', delta_pp')."""
    g = tab.gamma
    idx = tab.idx
    n = tab.n
    out = np.zeros_like(r)
    # q == b: sum_l gamma_lq R[p,l,a,l]
    t = np.einsum("lq,pal->pqa", g, np.einsum("plal->pal", r))
    out[:, idx, :, idx] += t.transpose(1, 0, 2)
    # q == a: sum_l gamma_lq R[p,l,l,b]  (adjacent advanced indices stay in place)
    t = np.einsum("lq,plb->pqb", g, np.einsum("pllb->plb", r))
    out[:, idx, idx, :] += t
    # p == b: sum_l gamma_lp R[l,q,a,l]
    t = np.einsum("lp,qal->pqa", g, np.einsum("lqal->qal", r))
    out[idx, :, :, idx] += t
    # p == a: sum_l gamma_lp R[l,q,l,b]
    t = np.einsum("lp,qlb->pqb", g, np.einsum("lqlb->qlb", r))
    out[idx, :, idx, :] += t
    return out


def _exchange_term(tab, r):
    """gamma-weighted couplings to index-permuted elements (the robust coherences)."""
    g = tab.gamma
    return (g[None, :, None, :] * r.transpose(0, 3, 2, 1)
            + g[None, :, :, None] * r.transpose(0, 2, 1, 3)
            + g[:, None, :, None] * r.transpose(2, 1, 0, 3)
            + g[:, None, None, :] * r.transpose(3, 1, 2, 0))


def _rhs_tensor(tab, r):
    out = _energy_decay_term(tab, r)
    out += _pair_swap_decay_term(tab, r)
    out += _hopping_term(tab, r)
    out += _double_occupancy_feed_term(tab, r)
    out += _matched_index_feed_term(tab, r)
    out += _exchange_term(tab, r)
    return out


def two_rhs(net, rho):
    """Right-hand side of the two-particle master equation (N^2 x N^2 in and out)."""
    net = validate_network(net)
    n = net.n_sites
    mat = rho.rho if isinstance(rho, TwoParticleDensity) else np.asarray(rho, dtype=complex)
    if mat.shape != (n * n, n * n):
        raise DimensionMismatchError(
            f"two-particle rho has shape {mat.shape}, expected {(n * n, n * n)}")
    tab = _tables(net)
    return _rhs_tensor(tab, mat.reshape(n, n, n, n)).reshape(n * n, n * n)


def liouvillian_matrix_two(net) -> np.ndarray:
    """Explicit N^4 x N^4 superoperator; small networks and tests only.

    Built from Kronecker identities on the two-particle space (H2 commutator
    plus the pair double-commutators), independently of the term-group RHS.
    """
    net = validate_network(net)
    n = net.n_sites
    d = n * n
    eye_site = np.eye(n)
    eye_pair = np.eye(d)
    h2 = np.kron(net.hamiltonian, eye_site) + np.kron(eye_site, net.hamiltonian)
    lmat = -1j * (np.kron(h2, eye_pair) - np.kron(eye_pair, h2.T)).astype(complex)
    for a in range(n):
        for b in range(a + 1, n):
            if net.gamma[a, b] == 0.0:
                continue
            v = np.zeros((n, n))
            v[a, b] = v[b, a] = 1.0
            w = np.kron(v, eye_site) + np.kron(eye_site, v)
            w2 = w @ w
            lmat -= 0.5 * net.gamma[a, b] * (
                np.kron(w2, eye_pair) + np.kron(eye_pair, w2.T) - 2 * np.kron(w, w.T))
    return lmat


def _exchange_defect(mat, n):
    r = mat.reshape(n, n, n, n)
    return np.abs(r - r.transpose(1, 0, 2, 3)).max()


def evolve_two(net, rho0, grid: TimeGrid, opts: SolverOptions = SolverOptions()):
    """Integrate the two-particle master equation with invariant monitoring.

    Snapshots are validated like the input; if rho0 is exchange-symmetric
    under swapping the first pair index (bosonic input), that symmetry must
    survive within 1e-9 at every sample time.
    """
    net = validate_network(net)
    if not isinstance(rho0, TwoParticleDensity):
        rho0 = TwoParticleDensity(rho0)
    n = net.n_sites
    if rho0.dim != n:
        raise DimensionMismatchError(f"rho0 has dim {rho0.dim}, network has {n} sites")
    tab = _tables(net)
    track_exchange = _exchange_defect(rho0.rho, n) <= 1e-12

    def rhs(t, y):
        return _rhs_tensor(tab, y.reshape(n, n, n, n)).ravel()

    raw = integrate(rhs, rho0.rho.ravel(), grid, opts)
    out = []
    for t, y in raw:
        mat = y.reshape(n * n, n * n)
        if track_exchange:
            drift = _exchange_defect(mat, n)
            if drift > EXCHANGE_DRIFT_TOL:
                raise InvariantViolationError(
                    f"bosonic exchange symmetry drifted by {drift:.2e}", time=t)
        out.append((t, TwoParticleDensity(mat, time=t)))
    return out
