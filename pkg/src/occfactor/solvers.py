"""Constrained-optimization primitives for the fitting pipeline.

Two solvers: weighted nonnegative least squares via the Lawson-Hanson
active-set method, and bound-constrained smooth minimization via the
limited-memory projected quasi-Newton method (scipy's L-BFGS-B engine behind
this module's contract).  Objective/gradient callbacks must be pure; both
solvers are deterministic and re-entrant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "NnlsProblem",
    "BoundMinProblem",
    "MinimizeResult",
    "NonFiniteObjectiveError",
    "solve_nnls",
    "minimize_bounded",
    "check_gradient",
]


class NonFiniteObjectiveError(RuntimeError):
    """Objective or gradient became non-finite; carries the offending point."""

    def __init__(self, message, x):
        super().__init__(message)
        self.x = np.array(x)


@dataclass(frozen=True)
class NnlsProblem:
    """min over x >= 0 of  sum_i w_i (a_i . x - b_i)^2."""

    a: np.ndarray
    b: np.ndarray
    row_weights: Optional[np.ndarray] = None

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.ndim != 2 or b.shape != (a.shape[0],):
            raise ValueError(f"inconsistent shapes a={a.shape}, b={b.shape}")
        if self.row_weights is not None:
            w = np.asarray(self.row_weights, dtype=float)
            if w.shape != (a.shape[0],):
                raise ValueError("row_weights must have one entry per row")
            if np.any(w < 0):
                raise ValueError("row_weights must be nonnegative")
            object.__setattr__(self, "row_weights", w)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


def solve_nnls(problem: NnlsProblem, max_iter=None, tol=None) -> np.ndarray:
    """Lawson-Hanson active-set solve of a weighted NNLS problem.

    Row weights are folded in by scaling rows with sqrt(w).  Terminates at
    the KKT point of the scaled problem: dual values of clamped coordinates
    below ``tol``, least-squares optimality on the free set.  Rank-deficient
    passive sets fall back to the pseudoinverse solution, so a (possibly
    non-unique) minimizer is always returned.
    """
    a, b = problem.a, problem.b
    if problem.row_weights is not None:
        scale = np.sqrt(problem.row_weights)
        a = a * scale[:, None]
        b = b * scale
    m, p = a.shape
    if max_iter is None:
        max_iter = 3 * max(p, 10)
    grad0 = a.T @ b
    if tol is None:
        tol = 10 * np.finfo(float).eps * max(m, p) * max(1.0, np.max(np.abs(grad0)))

    x = np.zeros(p)
    passive = np.zeros(p, dtype=bool)
    # duals skipped until the iterate next moves; breaks ties on degenerate
    # (e.g. duplicated) columns whose sub-solution refuses to go positive
    excluded = np.zeros(p, dtype=bool)
    w = grad0.copy()  # dual vector A^T (b - A x), x = 0 initially
    for _ in range(max_iter):
        candidates = np.where(~passive & ~excluded, w, -np.inf)
        j = int(np.argmax(candidates))
        if candidates[j] <= tol:
            break
        passive[j] = True
        moved = False
        for _ in range(p + 1):
            sub = np.zeros(p)
            cols = np.flatnonzero(passive)
            sol, _, _, _ = np.linalg.lstsq(a[:, cols], b, rcond=None)
            sub[cols] = sol
            if np.all(sub[cols] > 0):
                x = sub
                moved = True
                break
            # step toward the subproblem solution until a coordinate hits 0
            blocking = cols[sub[cols] <= 0]
            denom = x[blocking] - sub[blocking]
            ratios = np.where(denom > 0, x[blocking] / np.where(denom > 0, denom, 1.0), 0.0)
            alpha = float(np.min(ratios))
            if alpha > 0:
                x = x + alpha * (sub - x)
                moved = True
            drop = x[cols] <= 1e-13 * max(1.0, float(np.max(np.abs(x), initial=0.0)))
            dropped = cols[drop]
            passive[dropped] = False
            x[~passive] = 0.0
            if alpha == 0.0 and j in dropped:
                excluded[j] = True
                break
        if moved:
            excluded[:] = False
            w = a.T @ (b - a @ x)
    return x


@dataclass(frozen=True)
class BoundMinProblem:
    """Smooth objective with exact gradient and per-coordinate lower bounds.

    ``lower_bounds`` may contain ``-inf`` for unconstrained coordinates.
    The gradient must match finite differences of the objective;
    :func:`check_gradient` probes that agreement at random feasible points
    (the test suite runs it on every objective this package fits).
    """

    objective: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    lower_bounds: np.ndarray
    x0: np.ndarray

    def __post_init__(self):
        lb = np.asarray(self.lower_bounds, dtype=float)
        x0 = np.asarray(self.x0, dtype=float)
        if lb.shape != x0.shape or x0.ndim != 1:
            raise ValueError("x0 and lower_bounds must be 1-D with equal length")
        object.__setattr__(self, "lower_bounds", lb)
        object.__setattr__(self, "x0", x0)


@dataclass
class MinimizeResult:
    x: np.ndarray
    fun: float
    grad_norm: float
    n_iter: int
    converged: bool
    history: list = field(default_factory=list)


def _projected_gradient_norm(x, g, lb):
    pg = np.where(x <= lb, np.minimum(g, 0.0), g)
    return float(np.max(np.abs(pg))) if pg.size else 0.0


def minimize_bounded(problem: BoundMinProblem, grad_tol=1e-8, max_iter=2000,
                     step_scale=1.0, memory=10) -> MinimizeResult:
    """Bound-constrained limited-memory quasi-Newton minimization (L-BFGS-B).

    Stops when the sup-norm of the projected gradient drops below
    ``grad_tol``; hitting ``max_iter`` or running out of representable
    progress instead is reported through ``converged=False`` on the result.
    Iterates never violate the bounds and the recorded objective history is
    non-increasing.  ``step_scale`` multiplies the effective initial
    line-search step (the restart knob: rerun with a larger value to escape
    shallow basins); it is realized by an exact variable rescaling, which
    leaves the problem and its KKT points unchanged.
    """
    from scipy.optimize import minimize as _scipy_minimize

    if not np.isfinite(step_scale) or step_scale <= 0:
        raise ValueError("step_scale must be positive")
    lb = problem.lower_bounds
    x0 = np.maximum(problem.x0, lb)
    f0 = float(problem.objective(x0))
    if not np.isfinite(f0):
        raise NonFiniteObjectiveError("objective not finite at the initial point", x0)

    s = float(step_scale)

    def fun(z):
        value = float(problem.objective(s * z))
        # the line search treats an overflowing trial point as a rejection
        return value if not math.isnan(value) else math.inf

    def jac(z):
        g = s * np.asarray(problem.gradient(s * z), dtype=float)
        return np.where(np.isfinite(g), g, 0.0)

    history = [f0]

    def record(zk):
        history.append(fun(zk))

    res = _scipy_minimize(
        fun,
        x0 / s,
        jac=jac,
        method="L-BFGS-B",
        bounds=[(b / s if np.isfinite(b) else None, None) for b in lb],
        callback=record,
        options={"maxiter": max_iter, "gtol": grad_tol, "ftol": 1e-16,
                 "maxcor": memory, "maxls": 50},
    )
    x = np.maximum(s * res.x, lb)
    f = float(problem.objective(x))
    g = np.asarray(problem.gradient(x), dtype=float)
    if not np.all(np.isfinite(g)):
        raise NonFiniteObjectiveError("gradient not finite at the final point", x)
    if not np.isfinite(f):
        raise NonFiniteObjectiveError("objective not finite at the final point", x)
    if f < history[-1]:
        history.append(f)
    grad_norm = _projected_gradient_norm(x, g, lb)
    return MinimizeResult(
        x=x,
        fun=f,
        grad_norm=grad_norm,
        n_iter=int(res.nit),
        converged=bool(grad_norm <= grad_tol),
        history=history,
    )


def check_gradient(problem: BoundMinProblem, n_probes=20, seed=0, rel_tol=1e-5,
                   spread=1.0, fd_step=1e-6):
    """Compare the gradient against central differences at random feasible points.

    Raises ``AssertionError`` when the worst relative error exceeds
    ``rel_tol``; returns that error otherwise.  Intended for debugging and
    the test suite.
    """
    rng = np.random.default_rng(seed)
    lb = problem.lower_bounds
    worst = 0.0
    for _ in range(n_probes):
        x = problem.x0 + spread * rng.standard_normal(problem.x0.shape)
        x = np.maximum(x, lb + fd_step)
        g = np.asarray(problem.gradient(x), dtype=float)
        fd = np.empty_like(g)
        for j in range(len(x)):
            e = np.zeros_like(x)
            e[j] = fd_step
            fd[j] = (problem.objective(x + e) - problem.objective(x - e)) / (2 * fd_step)
        denom = max(float(np.linalg.norm(g)), 1e-12)
        worst = max(worst, float(np.linalg.norm(g - fd)) / denom)
    if worst > rel_tol:
        raise AssertionError(f"gradient mismatch: relative error {worst:.3e}")
    return worst
