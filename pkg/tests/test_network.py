import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from stochnet import (
    NetworkSpec,
    ValidatedNetwork,
    mean_hamiltonian,
    parse_network_config,
    serialize_network_spec,
    validate_network,
)
from stochnet.errors import (
    AsymmetricMatrixError,
    ConfigParseError,
    DimensionMismatchError,
    InvariantViolationError,
    NegativeNoiseError,
    NonzeroDiagonalError,
    TooFewSitesError,
)

from conftest import make_paper_network


def spec_3site(kappa=None, gamma=None, omega=None):
    if kappa is None:
        kappa = np.array([[0, 2, 1], [2, 0, 1], [1, 1, 0.0]])
    if gamma is None:
        gamma = 0.38 * (np.ones((3, 3)) - np.eye(3))
    if omega is None:
        omega = np.array([5.0, 5.0, 5.0])
    return NetworkSpec(3, omega, kappa, gamma)


def test_paper_network_is_valid():
    net = validate_network(spec_3site())
    assert isinstance(net, ValidatedNetwork)
    assert net.n_sites == 3


def test_validation_is_idempotent():
    net = validate_network(spec_3site())
    assert validate_network(net) is net


def test_asymmetric_coupling_rejected():
    kappa = np.array([[0, 2, 1], [3, 0, 1], [1, 1, 0.0]])
    with pytest.raises(AsymmetricMatrixError, match=r"kappa\[0,1\]"):
        validate_network(spec_3site(kappa=kappa))


def test_negative_noise_rejected():
    gamma = np.array([[0, -0.1, 0.38], [-0.1, 0, 0.38], [0.38, 0.38, 0.0]])
    with pytest.raises(NegativeNoiseError):
        validate_network(spec_3site(gamma=gamma))


def test_nonzero_diagonal_rejected():
    kappa = np.array([[0.5, 2, 1], [2, 0, 1], [1, 1, 0.0]])
    with pytest.raises(NonzeroDiagonalError):
        validate_network(spec_3site(kappa=kappa))
    gamma = np.diag([0.0, 1e-12, 0.0])
    with pytest.raises(NonzeroDiagonalError):
        validate_network(spec_3site(gamma=gamma))


def test_too_few_sites():
    with pytest.raises(TooFewSitesError):
        validate_network(NetworkSpec(1, np.array([1.0]), np.zeros((1, 1)), np.zeros((1, 1))))


def test_shape_mismatch():
    with pytest.raises(DimensionMismatchError):
        validate_network(NetworkSpec(3, np.array([5.0, 5.0]),
                                     np.zeros((3, 3)), np.zeros((3, 3))))


def test_nan_rejected():
    omega = np.array([5.0, np.nan, 5.0])
    with pytest.raises(InvariantViolationError):
        validate_network(spec_3site(omega=omega))


def test_mean_hamiltonian_paper_network():
    h = mean_hamiltonian(make_paper_network())
    assert np.array_equal(h.entries.real, [[5, 2, 1], [2, 5, 1], [1, 1, 5]])
    assert np.all(h.entries.imag == 0)


def test_mean_hamiltonian_two_site():
    spec = NetworkSpec(2, np.zeros(2), np.array([[0, 1], [1, 0.0]]), np.zeros((2, 2)))
    h = mean_hamiltonian(spec)
    assert np.array_equal(h.entries.real, [[0, 1], [1, 0]])


def test_mean_hamiltonian_uncoupled_is_diagonal():
    spec = NetworkSpec(4, np.array([1.0, 2.0, 3.0, 4.0]), np.zeros((4, 4)), np.zeros((4, 4)))
    h = mean_hamiltonian(spec)
    assert np.array_equal(h.entries, np.diag([1.0, 2.0, 3.0, 4.0]).astype(complex))


@given(st.integers(2, 6), st.integers(0, 10_000))
def test_mean_hamiltonian_exactly_hermitian(n, seed):
    rng = np.random.default_rng(seed)
    kappa = rng.normal(size=(n, n))
    kappa = kappa + kappa.T
    np.fill_diagonal(kappa, 0.0)
    gamma = np.abs(rng.normal(size=(n, n)))
    gamma = (gamma + gamma.T) / 2
    np.fill_diagonal(gamma, 0.0)
    spec = NetworkSpec(n, rng.normal(size=n), kappa, gamma)
    h = mean_hamiltonian(spec).entries
    assert np.array_equal(h, h.conj().T)  # real symmetric input: exact


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

PAPER_DOC = {
    "n_sites": 3,
    "omega": [5.0, 5.0, 5.0],
    "couplings": [[1, 2, 2.0], [1, 3, 1.0], [2, 3, 1.0]],
    "noise": [[1, 2, 0.38], [1, 3, 0.38], [2, 3, 0.38]],
}


def test_parse_edge_list_matches_paper_network():
    spec = parse_network_config(PAPER_DOC)
    ref = make_paper_network()
    assert np.array_equal(spec.kappa, ref.kappa)
    assert np.array_equal(spec.gamma, ref.gamma)
    assert np.array_equal(spec.omega, ref.omega)


def test_parse_accepts_json_text():
    spec = parse_network_config(json.dumps(PAPER_DOC))
    assert spec.n_sites == 3


def test_parse_empty_couplings_gives_zero_kappa():
    spec = parse_network_config({"n_sites": 3, "omega": [1, 2, 3]})
    assert np.all(spec.kappa == 0)
    assert np.all(spec.gamma == 0)


def test_parse_uniform_noise_scalar():
    doc = dict(PAPER_DOC, noise=0.38)
    spec = parse_network_config(doc)
    assert np.array_equal(spec.gamma, 0.38 * (np.ones((3, 3)) - np.eye(3)))


def test_parse_omega_length_mismatch():
    doc = dict(PAPER_DOC, omega=[5.0, 5.0])
    with pytest.raises(DimensionMismatchError, match="omega"):
        parse_network_config(doc)


def test_parse_unknown_field():
    with pytest.raises(ConfigParseError, match="frequencies"):
        parse_network_config(dict(PAPER_DOC, frequencies=[1]))


@pytest.mark.parametrize("edge", [[0, 2, 1.0], [1, 4, 1.0], [2, 2, 1.0]])
def test_parse_bad_edges(edge):
    with pytest.raises(ConfigParseError):
        parse_network_config(dict(PAPER_DOC, couplings=[edge]))


def test_parse_invalid_json():
    with pytest.raises(ConfigParseError, match="JSON"):
        parse_network_config("{not json")


@given(st.integers(2, 5), st.integers(0, 10_000))
def test_serialize_parse_roundtrip(n, seed):
    rng = np.random.default_rng(seed)
    kappa = np.zeros((n, n))
    gamma = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < 0.7:
                kappa[i, j] = kappa[j, i] = rng.normal()
            if rng.random() < 0.7:
                gamma[i, j] = gamma[j, i] = abs(rng.normal())
    spec = NetworkSpec(n, rng.normal(size=n), kappa, gamma)
    back = parse_network_config(serialize_network_spec(spec))
    assert back.n_sites == spec.n_sites
    assert np.array_equal(back.omega, spec.omega)
    assert np.array_equal(back.kappa, spec.kappa)
    assert np.array_equal(back.gamma, spec.gamma)


def test_roundtrip_through_json_text():
    spec = make_paper_network().spec()
    text = json.dumps(serialize_network_spec(spec))
    back = parse_network_config(text)
    assert np.array_equal(back.kappa, spec.kappa)
    assert np.array_equal(back.gamma, spec.gamma)
