import numpy as np
import pytest
from hypothesis import given, strategies as st

from stochnet import (
    DensityMatrix,
    TimeGrid,
    bunching_ratio,
    canonical_two_particle_state,
    coherence,
    complex_difference,
    delta_rho,
    evolve_single,
    joint_probability,
    populations,
    steady_state_single,
    validate_density,
)
from stochnet.errors import DimensionMismatchError, InvariantViolationError, SameSiteError

from conftest import make_paper_network, random_density


def test_populations_site_basis():
    assert np.array_equal(populations(DensityMatrix.from_site(0, 3)), [1, 0, 0])


def test_populations_maximally_mixed():
    assert np.allclose(populations(DensityMatrix.maximally_mixed(4)), 0.25)


def test_populations_rejects_imaginary_diagonal():
    bad = np.eye(2, dtype=complex) / 2
    bad[0, 0] += 1e-6j
    with pytest.raises(InvariantViolationError):
        populations(bad)


def test_populations_relax_to_uniform():
    net = make_paper_network()
    ss = steady_state_single(net, DensityMatrix.from_site(0, 3), tol=1e-9)
    assert np.abs(populations(ss) - 1 / 3).max() < 1e-6


def test_coherence_is_conjugate_symmetric(rng):
    rho = random_density(rng, 4)
    assert coherence(rho, 1, 3) == np.conj(coherence(rho, 3, 1))


def test_coherence_plus_state():
    rho = DensityMatrix.from_pure(np.array([1.0, 1.0]) / np.sqrt(2))
    assert coherence(rho, 0, 1) == pytest.approx(0.5)


def test_coherence_same_site_rejected():
    with pytest.raises(SameSiteError):
        coherence(DensityMatrix.maximally_mixed(2), 1, 1)


def test_joint_probability_separable_input():
    rho = canonical_two_particle_state("separable", (0, 1), 3)
    g = joint_probability(rho).gamma_mat
    assert g[0, 1] == pytest.approx(0.5)
    assert g[1, 0] == pytest.approx(0.5)
    assert g.sum() == pytest.approx(1.0)
    assert bunching_ratio(joint_probability(rho)) == pytest.approx(0.0)


def test_joint_probability_entangled_input():
    rho = canonical_two_particle_state("entangled", (0, 1), 3)
    g = joint_probability(rho).gamma_mat
    assert g[0, 0] == pytest.approx(0.5)
    assert g[1, 1] == pytest.approx(0.5)
    assert bunching_ratio(joint_probability(rho)) == pytest.approx(1.0)


@given(st.integers(0, 10_000))
def test_joint_probability_sums_to_one(seed):
    rng = np.random.default_rng(seed)
    rho = random_density(rng, 9)
    joint = joint_probability(rho)
    assert abs(joint.gamma_mat.sum() - 1.0) < 1e-9
    assert 0.0 <= bunching_ratio(joint) <= 1.0 + 1e-9


def test_delta_rho_identical_inputs(rng):
    rho = random_density(rng, 3)
    assert np.all(delta_rho(rho, rho) == 0.0)


def test_delta_rho_ignores_global_phase():
    psi = np.array([1.0, 1.0j]) / np.sqrt(2)
    a = np.outer(psi, psi.conj())
    b = np.outer(psi * np.exp(0.7j), (psi * np.exp(0.7j)).conj())
    # same pure state up to a phase: identical magnitudes everywhere
    assert delta_rho(a, b).max() < 1e-15


def test_delta_rho_is_symmetric(rng):
    a, b = random_density(rng, 3), random_density(rng, 3)
    assert np.array_equal(delta_rho(a, b), delta_rho(b, a))


def test_delta_rho_differs_from_complex_difference():
    a = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    b = np.array([[0.0, -1.0], [-1.0, 0.0]], dtype=complex)
    assert delta_rho(a, b).max() == 0.0       # equal magnitudes
    assert complex_difference(a, b).max() == 2.0


def test_delta_rho_shape_mismatch():
    with pytest.raises(DimensionMismatchError):
        delta_rho(np.eye(2), np.eye(3))


def test_validate_density_maximally_mixed():
    d = validate_density(DensityMatrix.maximally_mixed(4))
    assert d.trace_deviation < 1e-15
    assert d.min_eigenvalue == pytest.approx(0.25)
    assert d.purity == pytest.approx(0.25)


def test_validate_density_pure_state():
    d = validate_density(DensityMatrix.from_site(1, 3))
    assert d.purity == pytest.approx(1.0)


def test_validate_density_reports_corruption():
    bad = np.array([[0.5, 0.3], [0.1, 0.5]], dtype=complex)
    d = validate_density(bad)
    assert d.hermiticity_residual == pytest.approx(0.2)


def test_purity_separates_canonical_inputs():
    pur = {kind: validate_density(canonical_two_particle_state(kind, (0, 1), 3)).purity
           for kind in ("separable", "incoherent", "entangled")}
    assert pur["separable"] == pytest.approx(1.0)
    assert pur["entangled"] == pytest.approx(1.0)
    assert pur["incoherent"] == pytest.approx(0.5)
