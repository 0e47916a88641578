import numpy as np
import pytest
from scipy.linalg import expm

from stochnet import SolverOptions, TimeGrid, integrate, rk4_step
from stochnet.errors import NonFiniteStateError, StepUnderflowError
from stochnet.single_particle import DensityMatrix, evolve_single

from conftest import make_paper_network


def test_zero_rhs_keeps_state():
    y = np.array([1.0 + 2.0j, -0.5j])
    out = rk4_step(lambda t, x: np.zeros_like(x), y, 0.0, 0.1)
    assert np.array_equal(out, y)
    assert out is not y


def test_exponential_decay_local_error():
    # y' = -y over one step: RK4 truncation is O(dt^5), ~dt^5/120 here
    out = rk4_step(lambda t, x: -x, np.array([1.0 + 0j]), 0.0, 0.1)
    err = abs(out[0] - np.exp(-0.1))
    assert err < 1e-7
    assert err > 1e-9  # sanity: we really are measuring truncation, not roundoff


def test_unitary_rotation_preserves_norm_per_step():
    out = rk4_step(lambda t, x: 1j * x, np.array([1.0 + 0j]), 0.0, 0.1)
    assert abs(abs(out[0]) - 1.0) < 1e-7


def test_integrate_matches_matrix_exponential():
    rng = np.random.default_rng(5)
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    a = a - a.conj().T  # anti-Hermitian: bounded dynamics
    y0 = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    grid = TimeGrid(0.0, 1.0, np.array([0.25, 0.5, 1.0]))
    res = integrate(lambda t, y: a @ y, y0, grid, SolverOptions(dt=1e-3))
    for t, y in res:
        assert np.abs(y - expm(a * t) @ y0).max() < 1e-8


def test_empty_sample_times():
    grid = TimeGrid(0.0, 1.0, np.array([]))
    assert integrate(lambda t, y: -y, np.array([1.0 + 0j]), grid, SolverOptions()) == []


def test_sample_at_t_start_returns_initial_state():
    grid = TimeGrid(0.0, 1.0, np.array([0.0, 1.0]))
    res = integrate(lambda t, y: -y, np.array([1.0 + 0j]), grid, SolverOptions())
    assert res[0][0] == 0.0
    assert res[0][1][0] == 1.0 + 0j


def test_adaptive_matches_fixed_on_paper_problem():
    net = make_paper_network()
    rho0 = DensityMatrix.from_site(0, 3)
    grid = TimeGrid.linspace(0.0, 5.0, 11)
    fixed = evolve_single(net, rho0, grid, SolverOptions(dt=1e-3, mode="fixed"))
    adaptive = evolve_single(net, rho0, grid,
                             SolverOptions(dt=1e-3, mode="adaptive", rel_tol=1e-10))
    for (_, a), (_, b) in zip(fixed, adaptive):
        assert np.abs(a.rho - b.rho).max() < 1e-7


def test_fourth_order_convergence():
    rng = np.random.default_rng(11)
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    a = a - a.conj().T
    y0 = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    exact = expm(a * 1.0) @ y0
    errs = []
    for dt in (0.02, 0.01):
        grid = TimeGrid(0.0, 1.0, np.array([1.0]))
        _, y = integrate(lambda t, y: a @ y, y0, grid, SolverOptions(dt=dt))[0]
        errs.append(np.abs(y - exact).max())
    ratio = errs[0] / errs[1]
    assert 12.0 < ratio < 20.0


def test_linearity():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    x = rng.standard_normal(3) + 0j
    y = rng.standard_normal(3) + 0j
    grid = TimeGrid(0.0, 0.5, np.array([0.5]))
    opts = SolverOptions(dt=1e-3)

    def run(v):
        return integrate(lambda t, u: a @ u, v, grid, opts)[0][1]

    lhs = run(2.0 * x + 0.7j * y)
    rhs = 2.0 * run(x) + 0.7j * run(y)
    assert np.abs(lhs - rhs).max() < 1e-10


def test_non_finite_state_raises():
    with pytest.raises(NonFiniteStateError):
        rk4_step(lambda t, x: x * np.inf, np.array([1.0 + 0j]), 0.0, 0.1)


def test_step_underflow_in_adaptive_mode():
    # discontinuous rhs keeps the Richardson error estimate O(1): no dt works
    def rhs(t, y):
        return np.array([1e6 if t > 0.5 else -1e6 + 0j])

    grid = TimeGrid(0.0, 1.0, np.array([1.0]))
    opts = SolverOptions(dt=0.1, mode="adaptive", rel_tol=1e-14, abs_tol=1e-14)
    with pytest.raises(StepUnderflowError):
        integrate(rhs, np.array([0.0 + 0j]), grid, opts)


def test_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0, np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        TimeGrid(0.0, 1.0, np.array([1.5]))
    with pytest.raises(ValueError):
        TimeGrid(1.0, 0.0, np.array([]))


def test_solver_options_validation():
    with pytest.raises(ValueError):
        SolverOptions(dt=0.0)
    with pytest.raises(ValueError):
        SolverOptions(mode="rk45")
    with pytest.raises(ValueError):
        SolverOptions(rel_tol=-1.0)
