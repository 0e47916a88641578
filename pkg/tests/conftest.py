import hypothesis
import numpy as np
import pytest

from stochnet import NetworkSpec, validate_network

hypothesis.settings.register_profile(
    "stochnet", deadline=None, max_examples=40,
    suppress_health_check=[hypothesis.HealthCheck.too_slow])
hypothesis.settings.load_profile("stochnet")


def make_paper_network():
    """Fully connected 3-site network with uniform coupling noise 0.38 ps^-1."""
    kappa = np.array([[0.0, 2.0, 1.0],
                      [2.0, 0.0, 1.0],
                      [1.0, 1.0, 0.0]])
    gamma = 0.38 * (np.ones((3, 3)) - np.eye(3))
    return validate_network(NetworkSpec(3, np.array([5.0, 5.0, 5.0]), kappa, gamma))


def random_network(rng, n_sites, gamma_scale=0.5, kappa_scale=1.5):
    """Random symmetric network for property batteries."""
    kappa = rng.normal(scale=kappa_scale, size=(n_sites, n_sites))
    kappa = kappa + kappa.T
    np.fill_diagonal(kappa, 0.0)
    gamma = np.abs(rng.normal(scale=gamma_scale, size=(n_sites, n_sites)))
    gamma = (gamma + gamma.T) / 2
    np.fill_diagonal(gamma, 0.0)
    omega = rng.normal(loc=3.0, scale=1.0, size=n_sites)
    return validate_network(NetworkSpec(n_sites, omega, kappa, gamma))


def random_hermitian(rng, n):
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (x + x.conj().T) / 2


def random_density(rng, n):
    """Random full-rank density matrix."""
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    rho = x @ x.conj().T
    return rho / rho.trace()


@pytest.fixture
def paper_network():
    return make_paper_network()


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
