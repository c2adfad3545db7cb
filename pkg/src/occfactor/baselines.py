"""Alternative regression schemes for the magnitude fit, kept for comparison.

These are the standard approaches one would try first on the log-linear
coefficient model: weighted least squares with coefficient-derived weights,
iteratively reweighted least squares with three weight updates, and the
iterated-OLS transformation for Poisson-style responses with many zeros.
They are unconstrained (no nonnegativity on the weights) and are expected to
underperform the two-stage fitter on states with many near-zero
coefficients; the point of keeping them is reproducible side-by-side
reports, so every scheme returns its full iteration history and an honest
convergence flag instead of raising on divergence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ansatz import FitConfig, _EXP_CLIP

__all__ = ["BaselineScheme", "BaselineFit", "fit_baseline", "baseline_magnitudes"]

_KINDS = ("weighted_abs", "weighted_square", "irls_pnorm", "irls_capped",
          "irls_kl", "iols")


@dataclass(frozen=True)
class BaselineScheme:
    """A baseline fitter: its kind plus the hyperparameters it reads.

    ``p`` is the residual exponent of ``irls_pnorm``; ``delta`` is the guard
    of ``irls_capped``/``irls_kl`` and the shift of ``iols``.
    """

    kind: str
    p: float = 1.0
    delta: float = 1e-3
    max_iter: int = 100
    tol: float = 1e-8

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown baseline kind {self.kind!r}; choose from {_KINDS}")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class BaselineFit:
    """Result of a baseline regression.

    ``weights`` are the unconstrained linear coefficients over the feature
    columns (intercept first).  ``history`` holds one objective value per
    iteration: the unweighted sum of squared residuals of the scheme's
    working regression.  ``ridge_fallback`` reports that at least one
    weighted solve hit a rank-deficient system and used the ridge-regularized
    normal equations instead.
    """

    weights: np.ndarray
    converged: bool
    history: list = field(default_factory=list)
    ridge_fallback: bool = False


def _weighted_lstsq(design, y, w):
    """Weighted LS via sqrt-scaled rows; ridge 1e-10 on rank deficiency.

    Weights are rescaled to a unit maximum first (the solution is invariant)
    so extreme IRLS weights cannot overflow the scaled system.
    """
    peak = float(np.max(w))
    sw = np.sqrt(w / peak) if peak > 0 else np.sqrt(w)
    a = design * sw[:, None]
    b = y * sw
    beta, _, rank, _ = np.linalg.lstsq(a, b, rcond=None)
    if rank == design.shape[1]:
        return beta, False
    gram = a.T @ a
    gram[np.diag_indices_from(gram)] += 1e-10
    rhs = a.T @ b
    try:
        return np.linalg.solve(gram, rhs), True
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(gram, rhs, rcond=None)[0], True


def _log_targets(coeffs, config):
    c2 = np.maximum(coeffs ** 2, config.clamp_epsilon ** 2)
    return -np.log(c2)


def fit_baseline(psi, features, scheme: BaselineScheme,
                 config: FitConfig = FitConfig()) -> BaselineFit:
    """Run one baseline scheme on a CI vector over the given features.

    The weighted and IRLS schemes regress ``y = -ln(max(c^2, clamp^2))`` on
    the features; ``iols`` iterates the shifted-log transformation of the
    raw squared coefficients (zeros included).  Iterative schemes stop when
    the relative coefficient change drops below ``scheme.tol`` and report
    ``converged=False`` when ``max_iter`` is exhausted instead.
    """
    if features.basis != psi.basis:
        raise ValueError("feature matrix and CI vector use different bases")
    design = features.matrix
    coeffs = psi.coefficients

    if scheme.kind in ("weighted_abs", "weighted_square"):
        y = _log_targets(coeffs, config)
        w = np.abs(coeffs) if scheme.kind == "weighted_abs" else coeffs ** 2
        beta, ridge = _weighted_lstsq(design, y, w)
        history = [float(np.sum((y - design @ beta) ** 2))]
        return BaselineFit(weights=beta, converged=True, history=history,
                           ridge_fallback=ridge)
    if scheme.kind == "iols":
        return _fit_iols(design, coeffs ** 2, scheme)
    return _fit_irls(design, _log_targets(coeffs, config), scheme)


def _fit_irls(design, y, scheme):
    # the unweighted starting solve counts as the first iteration, keeping
    # len(history) <= max_iter
    beta, ridge = _weighted_lstsq(design, y, np.ones(len(y)))
    history = [float(np.sum((y - design @ beta) ** 2))]
    converged = False
    for _ in range(scheme.max_iter - 1):
        resid = y - design @ beta
        absr = np.maximum(np.abs(resid), 1e-15)
        if scheme.kind == "irls_pnorm":
            w = absr ** (scheme.p - 2.0)
        elif scheme.kind == "irls_capped":
            w = 1.0 / np.maximum(scheme.delta, absr)
        else:  # irls_kl, guarded like irls_capped where the log degenerates
            fitted = np.maximum(design @ beta, scheme.delta)
            ratio = np.maximum(y, scheme.delta) / fitted
            denom = np.maximum(np.abs(np.log(ratio)), scheme.delta)
            w = fitted / denom
        w = np.where(np.isfinite(w), w, 1e15)
        beta_new, r = _weighted_lstsq(design, y, w)
        ridge = ridge or r
        history.append(float(np.sum((y - design @ beta_new) ** 2)))
        change = np.linalg.norm(beta_new - beta) / max(1.0, np.linalg.norm(beta))
        beta = beta_new
        if change < scheme.tol:
            converged = True
            break
    return BaselineFit(weights=beta, converged=converged, history=history,
                       ridge_fallback=ridge)


def _fit_iols(design, counts, scheme):
    """Iterated OLS on the shifted-log response for zero-inflated targets.

    The working response reduces algebraically to
    ``X beta + (Y exp(-X beta) - 1) / (1 + delta)``, whose fixed point
    satisfies the Poisson moment condition ``X^T (Y exp(-X beta) - 1) = 0``.
    """
    delta = scheme.delta
    beta, ridge = _weighted_lstsq(design, np.log(counts + delta),
                                  np.ones(len(counts)))
    history = [float(np.sum((counts - _exp_linear(design, beta)) ** 2))]
    converged = False
    ones = np.ones(len(counts))
    for _ in range(scheme.max_iter - 1):
        working = design @ beta + (counts * _exp_linear(design, -beta) - 1.0) / (1.0 + delta)
        beta_new, r = _weighted_lstsq(design, working, ones)
        ridge = ridge or r
        history.append(float(np.sum((counts - _exp_linear(design, beta_new)) ** 2)))
        change = np.linalg.norm(beta_new - beta) / max(1.0, np.linalg.norm(beta))
        beta = beta_new
        if change < scheme.tol:
            converged = True
            break
    return BaselineFit(weights=beta, converged=converged, history=history,
                       ridge_fallback=ridge)


def _exp_linear(design, beta):
    return np.exp(np.clip(design @ beta, -_EXP_CLIP, _EXP_CLIP))


def baseline_magnitudes(fit: BaselineFit, features, scheme: BaselineScheme) -> np.ndarray:
    """Unnormalized coefficient magnitudes implied by a baseline fit.

    The y-regression schemes model ``-ln c^2``, so magnitudes are
    ``exp(-(X beta)/2)``; ``iols`` models ``c^2 = exp(X beta)`` directly.
    """
    score = features.matrix @ fit.weights
    if scheme.kind == "iols":
        return np.exp(np.clip(score, -_EXP_CLIP, _EXP_CLIP) / 2.0)
    return np.exp(np.clip(-score, -_EXP_CLIP, _EXP_CLIP) / 2.0)
