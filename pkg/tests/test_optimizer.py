import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gekrig.errors import IllConditionedError, InvalidArgumentError, OptimizationFailedError
from gekrig.optimizer import SearchSpace, maximize_derivative_free, maximize_gradient_based, start_points


def bowl(c):
    c = np.asarray(c, dtype=float)
    return lambda th: -np.sum((np.log10(th) - c) ** 2)


def test_search_space_validation():
    with pytest.raises(InvalidArgumentError):
        SearchSpace([0.0], [1.0])
    with pytest.raises(InvalidArgumentError):
        SearchSpace([2.0], [1.0])


def test_interior_maximum_found():
    res = maximize_derivative_free(bowl([-1.0, 0.7]), SearchSpace.default(2), seed=1)
    np.testing.assert_allclose(np.log10(res.theta), [-1.0, 0.7], atol=1e-3)


def test_boundary_maximum_is_clipped():
    res = maximize_derivative_free(bowl([3.5]), SearchSpace.default(1), seed=0)
    assert res.theta[0] == pytest.approx(1e2)
    assert res.converged


def test_multimodal_matches_grid_argmax():
    def f(th):
        z = np.log10(th[0])
        return np.sin(3 * z) + 0.3 * z
    space = SearchSpace.default(1)
    grid = np.linspace(-6, 2, 20001)
    best = grid[np.argmax(np.sin(3 * grid) + 0.3 * grid)]
    res = maximize_derivative_free(f, space, starts=10, seed=4)
    assert abs(np.log10(res.theta[0]) - best) < 1e-2


def test_budget_must_cover_a_simplex():
    with pytest.raises(InvalidArgumentError):
        maximize_derivative_free(bowl([0, 0, 0]), SearchSpace.default(3), budget=4)


def test_all_failures_raise():
    def broken(th):
        raise IllConditionedError("no", 1e20, 1e-4)
    with pytest.raises(OptimizationFailedError) as err:
        maximize_derivative_free(broken, SearchSpace.default(1), budget=5, starts=2)
    assert isinstance(err.value.last_error, IllConditionedError)


def test_deterministic_for_seed():
    f = bowl([0.2, -2.0, 1.0])
    a = maximize_derivative_free(f, SearchSpace.default(3), seed=7)
    b = maximize_derivative_free(f, SearchSpace.default(3), seed=7)
    np.testing.assert_array_equal(a.theta, b.theta)


def test_start_points_first_at_half():
    pts = start_points(SearchSpace.default(3), 10, seed=0)
    assert pts.shape == (10, 3)
    np.testing.assert_allclose(pts[0], np.log10(0.5))


@given(st.integers(1, 4), st.integers(0, 2**31))
def test_trace_monotone_and_iterates_feasible(dim, seed):
    r = np.random.default_rng(seed)
    c = r.uniform(-5, 1.5, dim)
    space = SearchSpace.default(dim)
    seen = []

    def f(th):
        seen.append(th.copy())
        return bowl(c)(th) + 0.1 * np.sin(5 * np.sum(np.log10(th)))
    res = maximize_derivative_free(f, space, starts=2, seed=seed)
    assert np.all(np.diff(res.trace) >= 0)
    pts = np.array(seen)
    assert np.all(pts >= space.lower) and np.all(pts <= space.upper)
    seen.clear()
    res2 = maximize_gradient_based(f, lambda th: _num_grad(f, th), res.theta, space)
    assert np.all(np.diff(res2.trace) >= 0)
    pts = np.array(seen)
    assert np.all(pts >= space.lower) and np.all(pts <= space.upper)


def _num_grad(f, th, h=1e-7):
    g = np.zeros_like(th)
    for k in range(th.size):
        e = np.zeros_like(th)
        e[k] = h * th[k]
        g[k] = (f(th + e) - f(th - e)) / (2 * e[k])
    return g


def bowl_grad(c):
    c = np.asarray(c, dtype=float)
    return lambda th: -2 * (np.log10(th) - c) / (th * np.log(10))


def test_quasi_newton_quadratic_bowl():
    c = [-0.5, 1.2]
    res = maximize_gradient_based(bowl(c), bowl_grad(c), [1.0, 1.0], SearchSpace.default(2))
    np.testing.assert_allclose(np.log10(res.theta), c, atol=1e-6)
    assert res.objective >= bowl(c)(np.array([1.0, 1.0])) - 1e-12


def test_quasi_newton_at_optimum_stays_put():
    c = [0.3]
    theta0 = 10 ** np.array(c)
    res = maximize_gradient_based(bowl(c), bowl_grad(c), theta0, SearchSpace.default(1))
    np.testing.assert_allclose(res.theta, theta0, rtol=1e-12)
    assert res.grad_evals == 1


def test_quasi_newton_rejects_nonfinite_gradient():
    with pytest.raises(OptimizationFailedError):
        maximize_gradient_based(bowl([0.0]), lambda th: np.array([np.nan]), [0.5], SearchSpace.default(1))


def test_quasi_newton_start_must_be_feasible():
    with pytest.raises(InvalidArgumentError):
        maximize_gradient_based(bowl([0.0]), bowl_grad([0.0]), [1e3], SearchSpace.default(1))
