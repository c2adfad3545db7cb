import math

import numpy as np
import pytest

from occfactor.solvers import (BoundMinProblem, NnlsProblem,
                               NonFiniteObjectiveError, check_gradient,
                               minimize_bounded, solve_nnls)


def test_nnls_identity_targets():
    x = solve_nnls(NnlsProblem(np.eye(2), np.array([1.0, 2.0])))
    assert np.allclose(x, [1.0, 2.0], atol=1e-12)


def test_nnls_clips_negative_component():
    x = solve_nnls(NnlsProblem(np.eye(2), np.array([-1.0, 3.0])))
    assert np.allclose(x, [0.0, 3.0], atol=1e-12)


def test_nnls_interior_solution_matches_normal_equations():
    # A^T A = [[2,1],[1,1]], A^T b = [3,2]  ->  x = (1, 1), strictly feasible
    a = np.array([[1.0, 1.0], [1.0, 0.0]])
    x = solve_nnls(NnlsProblem(a, np.array([2.0, 1.0])))
    assert np.allclose(x, [1.0, 1.0], atol=1e-10)


def test_nnls_weighted_equals_scaled_rows(rng):
    a = rng.standard_normal((12, 5))
    b = rng.standard_normal(12)
    w = rng.random(12) + 0.1
    weighted = solve_nnls(NnlsProblem(a, b, row_weights=w))
    scaled = solve_nnls(NnlsProblem(a * np.sqrt(w)[:, None], b * np.sqrt(w)))
    assert np.allclose(weighted, scaled, atol=1e-10)


def _kkt_residuals(a, b, w, x):
    aw = a * np.sqrt(w)[:, None]
    bw = b * np.sqrt(w)
    grad = aw.T @ (aw @ x - bw)
    scale = max(1.0, float(np.max(np.abs(aw.T @ bw))))
    return grad, scale


@pytest.mark.parametrize("trial", range(20))
def test_nnls_kkt_conditions(trial):
    rng = np.random.default_rng(1000 + trial)
    m = int(rng.integers(3, 40))
    p = int(rng.integers(2, 25))
    a = rng.standard_normal((m, p))
    if trial % 3 == 0:
        a[:, -1] = a[:, 0]  # duplicated column: rank-deficient passive sets
    b = rng.standard_normal(m)
    w = rng.random(m)
    x = solve_nnls(NnlsProblem(a, b, row_weights=w))
    grad, scale = _kkt_residuals(a, b, w, x)
    assert np.all(x >= 0)
    free = x > 0
    assert np.all(grad[~free] >= -1e-8 * scale)
    if free.any():
        assert np.max(np.abs(grad[free])) <= 1e-8 * scale


def test_nnls_never_worse_than_zero(rng):
    for _ in range(10):
        a = rng.standard_normal((8, 6))
        b = rng.standard_normal(8)
        w = rng.random(8)
        x = solve_nnls(NnlsProblem(a, b, row_weights=w))
        value = np.sum(w * (a @ x - b) ** 2)
        at_zero = np.sum(w * b ** 2)
        assert value <= at_zero + 1e-12


def test_nnls_rejects_bad_inputs():
    with pytest.raises(ValueError):
        NnlsProblem(np.eye(2), np.zeros(3))
    with pytest.raises(ValueError):
        NnlsProblem(np.eye(2), np.zeros(2), row_weights=np.array([-1.0, 1.0]))


def test_minimize_unconstrained_quadratic():
    result = minimize_bounded(BoundMinProblem(
        objective=lambda x: float((x[0] - 3.0) ** 2),
        gradient=lambda x: np.array([2.0 * (x[0] - 3.0)]),
        lower_bounds=np.array([0.0]),
        x0=np.array([0.0])))
    assert result.converged
    assert result.x[0] == pytest.approx(3.0, abs=1e-7)


def test_minimize_active_bound():
    result = minimize_bounded(BoundMinProblem(
        objective=lambda x: float((x[0] + 1.0) ** 2),
        gradient=lambda x: np.array([2.0 * (x[0] + 1.0)]),
        lower_bounds=np.array([0.0]),
        x0=np.array([5.0])))
    assert result.converged
    assert result.x[0] == 0.0


def _poisson_toy():
    # rows (1,0), (1,1), (0,1) with y = (0.5, 0.2, 0.4); the stationary
    # conditions a(1+b) = 0.7, b(1+a) = 0.6 for a = exp(-t1), b = exp(-t2)
    # are solved exactly by a = 0.5, b = 0.4, i.e. t = (ln 2, ln 2.5)
    design = np.array([[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    y = np.array([0.5, 0.2, 0.4])

    def objective(t):
        s = design @ t
        return float(np.sum(np.exp(-s) + y * s))

    def gradient(t):
        s = design @ t
        return design.T @ (y - np.exp(-s))

    return design, y, objective, gradient


def test_minimize_matches_grid_search_oracle():
    _, _, objective, gradient = _poisson_toy()
    result = minimize_bounded(BoundMinProblem(
        objective=objective, gradient=gradient,
        lower_bounds=np.zeros(2), x0=np.zeros(2)))
    grid = np.arange(0.0, 5.0 + 1e-9, 1e-3)
    best = (math.inf, None, None)
    for t1 in grid:
        exp_t1 = math.exp(-t1)
        values = (exp_t1 + 0.5 * t1
                  + exp_t1 * np.exp(-grid) + 0.2 * (t1 + grid)
                  + np.exp(-grid) + 0.4 * grid)
        j = int(np.argmin(values))
        if values[j] < best[0]:
            best = (float(values[j]), t1, float(grid[j]))
    assert result.x[0] == pytest.approx(best[1], abs=2e-3)
    assert result.x[1] == pytest.approx(best[2], abs=2e-3)
    assert result.x[0] == pytest.approx(math.log(2.0), abs=1e-6)
    assert result.x[1] == pytest.approx(math.log(2.5), abs=1e-6)


def test_minimize_monotone_history():
    _, _, objective, gradient = _poisson_toy()
    result = minimize_bounded(BoundMinProblem(
        objective=objective, gradient=gradient,
        lower_bounds=np.zeros(2), x0=np.array([4.0, 4.0])))
    assert np.all(np.diff(result.history) <= 0)


def test_minimize_convex_start_independence():
    _, _, objective, gradient = _poisson_toy()
    runs = [minimize_bounded(BoundMinProblem(
        objective=objective, gradient=gradient,
        lower_bounds=np.zeros(2), x0=np.array(start)))
        for start in ([0.0, 0.0], [4.5, 0.1], [1.0, 3.0])]
    values = [run.fun for run in runs]
    assert max(values) - min(values) < 1e-6


def test_minimize_step_scale_reaches_same_optimum():
    _, _, objective, gradient = _poisson_toy()
    base = minimize_bounded(BoundMinProblem(
        objective=objective, gradient=gradient,
        lower_bounds=np.zeros(2), x0=np.zeros(2)))
    scaled = minimize_bounded(BoundMinProblem(
        objective=objective, gradient=gradient,
        lower_bounds=np.zeros(2), x0=np.zeros(2)), step_scale=10.0)
    assert scaled.fun == pytest.approx(base.fun, abs=1e-8)


def test_minimize_respects_bounds_throughout():
    calls = []

    def objective(x):
        calls.append(x.copy())
        return float(np.sum(x ** 2))

    result = minimize_bounded(BoundMinProblem(
        objective=objective,
        gradient=lambda x: 2.0 * x,
        lower_bounds=np.array([1.0, -math.inf]),
        x0=np.array([2.0, 2.0])))
    assert result.x[0] >= 1.0
    assert all(x[0] >= 1.0 - 1e-12 for x in calls)
    assert result.x[1] == pytest.approx(0.0, abs=1e-7)


def test_minimize_nonfinite_start_raises():
    with pytest.raises(NonFiniteObjectiveError) as err:
        minimize_bounded(BoundMinProblem(
            objective=lambda x: float("nan"),
            gradient=lambda x: np.zeros(1),
            lower_bounds=np.array([-math.inf]),
            x0=np.array([0.0])))
    assert err.value.x.shape == (1,)


def test_check_gradient_passes_and_fails():
    design, y, objective, gradient = _poisson_toy()
    problem = BoundMinProblem(objective=objective, gradient=gradient,
                              lower_bounds=np.zeros(2), x0=np.ones(2))
    assert check_gradient(problem, n_probes=10, seed=3) < 1e-5
    broken = BoundMinProblem(objective=objective,
                             gradient=lambda t: gradient(t) + 0.05,
                             lower_bounds=np.zeros(2), x0=np.ones(2))
    with pytest.raises(AssertionError):
        check_gradient(broken, n_probes=5, seed=3)
