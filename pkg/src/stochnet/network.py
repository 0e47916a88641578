"""Network model: sites, mean couplings and coupling-noise intensities.

A network is a set of N sites with energies ``omega_n`` (ps^-1), mean
couplings ``kappa_nm`` (ps^-1) and noise intensities ``gamma_nm`` (ps^-1).
Noise lives only on the couplings, so both matrices are symmetric with an
exactly zero diagonal.  Site indices are 0-based everywhere in the Python
API; configuration files use 1-based labels and the translation happens in
:func:`parse_network_config` / :func:`serialize_network_spec` only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AsymmetricMatrixError,
    ConfigParseError,
    DimensionMismatchError,
    InvariantViolationError,
    NegativeNoiseError,
    NonzeroDiagonalError,
    TooFewSitesError,
)

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True)
class NetworkSpec:
    """Raw, not-yet-validated description of a stochastically coupled network."""

    n_sites: int
    omega: np.ndarray
    kappa: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "omega", np.asarray(self.omega, dtype=float))
        object.__setattr__(self, "kappa", np.asarray(self.kappa, dtype=float))
        object.__setattr__(self, "gamma", np.asarray(self.gamma, dtype=float))


@dataclass(frozen=True)
class HermitianMatrix:
    """A square complex matrix checked to equal its own conjugate transpose."""

    dim: int
    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        if entries.shape != (self.dim, self.dim):
            raise DimensionMismatchError(
                f"expected a {self.dim}x{self.dim} matrix, got shape {entries.shape}")
        residual = np.abs(entries - entries.conj().T).max()
        if residual > HERMITIAN_TOL:
            raise InvariantViolationError(
                f"matrix is not Hermitian (residual {residual:.2e})")
        object.__setattr__(self, "entries", entries)


class ValidatedNetwork:
    """Immutable handle produced by :func:`validate_network`.

    Carries the validated arrays plus quantities shared by the dynamics
    modules (mean Hamiltonian, noise row sums, the ordered list of site
    pairs).  Safe to share across threads.
    """

    __slots__ = ("n_sites", "omega", "kappa", "gamma",
                 "hamiltonian", "gamma_row_sums", "pair_rows", "pair_cols",
                 "pair_gammas")

    def __init__(self, spec: NetworkSpec):
        n = spec.n_sites
        self.n_sites = n
        self.omega = spec.omega.copy()
        self.kappa = spec.kappa.copy()
        self.gamma = spec.gamma.copy()
        self.hamiltonian = np.diag(self.omega) + self.kappa
        self.gamma_row_sums = self.gamma.sum(axis=1)
        rows, cols = np.triu_indices(n, 1)
        self.pair_rows = rows.astype(np.int64)
        self.pair_cols = cols.astype(np.int64)
        self.pair_gammas = self.gamma[rows, cols].copy()
        for arr in (self.omega, self.kappa, self.gamma, self.hamiltonian,
                    self.gamma_row_sums, self.pair_rows, self.pair_cols,
                    self.pair_gammas):
            arr.setflags(write=False)

    def spec(self) -> NetworkSpec:
        return NetworkSpec(self.n_sites, self.omega.copy(), self.kappa.copy(),
                           self.gamma.copy())

    def __repr__(self):
        return f"ValidatedNetwork(n_sites={self.n_sites})"


def validate_network(spec) -> ValidatedNetwork:
    """Check every NetworkSpec invariant and return an immutable handle.

    Idempotent: a ValidatedNetwork passes through unchanged.  Symmetry is
    required exactly (the config parser symmetrizes sparse input, so any
    asymmetry in a spec is a construction mistake, not rounding).
    """
    if isinstance(spec, ValidatedNetwork):
        return spec
    n = spec.n_sites
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise TooFewSitesError(f"need at least 2 sites, got {n!r}")
    if spec.omega.shape != (n,):
        raise DimensionMismatchError(
            f"omega has shape {spec.omega.shape}, expected ({n},)")
    for name, mat in (("kappa", spec.kappa), ("gamma", spec.gamma)):
        if mat.shape != (n, n):
            raise DimensionMismatchError(
                f"{name} has shape {mat.shape}, expected ({n}, {n})")
        bad = np.argwhere(mat != mat.T)
        if bad.size:
            i, j = bad[0]
            raise AsymmetricMatrixError(
                f"{name}[{i},{j}] = {mat[i, j]!r} but {name}[{j},{i}] = {mat[j, i]!r}")
        diag = np.diagonal(mat)
        if np.any(diag != 0.0):
            i = int(np.nonzero(diag)[0][0])
            raise NonzeroDiagonalError(
                f"{name}[{i},{i}] = {diag[i]!r}; diagonal entries must be exactly zero")
    if np.any(spec.gamma < 0):
        i, j = np.argwhere(spec.gamma < 0)[0]
        raise NegativeNoiseError(f"gamma[{i},{j}] = {spec.gamma[i, j]!r} is negative")
    if not (np.all(np.isfinite(spec.omega)) and np.all(np.isfinite(spec.kappa))
            and np.all(np.isfinite(spec.gamma))):
        raise InvariantViolationError("network arrays contain NaN or Inf")
    return ValidatedNetwork(spec)


def mean_hamiltonian(net) -> HermitianMatrix:
    """Mean (noise-averaged) Hamiltonian: omega_n on the diagonal, kappa_nm off it."""
    net = validate_network(net)
    return HermitianMatrix(net.n_sites, net.hamiltonian.astype(complex))


# --------------------------------------------------------------------------
# Config-file parsing.  The on-disk format uses 1-based site labels; edges
# may be given as [i, j, value] triples (symmetrized) or as full matrices.
# --------------------------------------------------------------------------

def _parse_edge_entries(value, n, field_name):
    mat = np.zeros((n, n))
    if isinstance(value, (int, float)):
        mat[:] = float(value)
        np.fill_diagonal(mat, 0.0)
        return mat
    if isinstance(value, dict):
        if set(value) != {"matrix"}:
            raise ConfigParseError(
                f"{field_name}: object form must have exactly one key 'matrix'")
        dense = np.asarray(value["matrix"], dtype=float)
        if dense.shape != (n, n):
            raise ConfigParseError(
                f"{field_name}: dense matrix has shape {dense.shape}, expected ({n}, {n})")
        return dense
    if isinstance(value, list):
        for entry in value:
            if not (isinstance(entry, list) and len(entry) == 3):
                raise ConfigParseError(
                    f"{field_name}: edge entries must be [site_i, site_j, value] triples, "
                    f"got {entry!r}")
            i, j, v = entry
            if not (isinstance(i, int) and isinstance(j, int)):
                raise ConfigParseError(f"{field_name}: site labels must be integers, got {entry!r}")
            if not (1 <= i <= n and 1 <= j <= n):
                raise ConfigParseError(
                    f"{field_name}: site pair ({i}, {j}) outside 1..{n}")
            if i == j:
                raise ConfigParseError(f"{field_name}: self-coupling ({i}, {j}) not allowed")
            mat[i - 1, j - 1] = float(v)
            mat[j - 1, i - 1] = float(v)
        return mat
    raise ConfigParseError(
        f"{field_name}: expected a scalar, an edge list or a dense matrix, got {type(value).__name__}")


def parse_network_config(document) -> NetworkSpec:
    """Parse the ``network`` section of a config document into a NetworkSpec.

    Accepts a JSON string or an already-decoded mapping.  Unspecified noise
    entries default to zero; sparse edge lists are symmetrized; site labels
    in the file are 1-based.
    """
    if isinstance(document, (str, bytes)):
        try:
            data = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ConfigParseError(f"network: invalid JSON ({exc})") from exc
    else:
        data = document
    if not isinstance(data, dict):
        raise ConfigParseError(f"network: expected an object, got {type(data).__name__}")
    known = {"n_sites", "omega", "couplings", "noise"}
    for key in data:
        if key not in known:
            raise ConfigParseError(f"network.{key}: unknown field")
    try:
        n = data["n_sites"]
    except KeyError:
        raise ConfigParseError("network.n_sites: missing") from None
    if not isinstance(n, int) or n < 2:
        raise TooFewSitesError(f"network.n_sites: need an integer >= 2, got {n!r}")
    omega_raw = data.get("omega")
    if omega_raw is None:
        raise ConfigParseError("network.omega: missing")
    if isinstance(omega_raw, (int, float)):
        omega = np.full(n, float(omega_raw))
    else:
        omega = np.asarray(omega_raw, dtype=float)
        if omega.shape != (n,):
            raise DimensionMismatchError(
                f"network.omega: length {omega.shape} does not match n_sites={n}")
    kappa = _parse_edge_entries(data.get("couplings", []), n, "network.couplings")
    gamma = _parse_edge_entries(data.get("noise", []), n, "network.noise")
    return NetworkSpec(n, omega, kappa, gamma)


def serialize_network_spec(spec: NetworkSpec) -> dict:
    """Canonical JSON form of a NetworkSpec (1-based edge triples, sorted)."""
    def edges(mat):
        out = []
        for i in range(spec.n_sites):
            for j in range(i + 1, spec.n_sites):
                if mat[i, j] != 0.0:
                    out.append([i + 1, j + 1, float(mat[i, j])])
        return out

    return {
        "n_sites": int(spec.n_sites),
        "omega": [float(x) for x in spec.omega],
        "couplings": edges(spec.kappa),
        "noise": edges(spec.gamma),
    }
