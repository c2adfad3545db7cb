"""Occupation-product model of CI coefficients and its fitting procedure.

The squared magnitude of every CI coefficient is modeled as
``exp(-(A + sum_T omega_T prod_{i in T} n_i))`` over index tuples ``T`` of
size up to the chosen order, with ``omega_T >= 0`` and a free intercept
``A``.  Magnitudes are fitted in two stages: a convex Poisson maximum
likelihood stage treating the squared coefficients as the counts of a
log-linear rate model, followed by a nonlinear least-squares refinement of
the coefficients themselves, warm-started from stage one and run at two
initial line-search step sizes (keeping the better) since the refinement
landscape is nonconvex.
Signs come from a separate weighted nonnegative least-squares regression of
the phase (0 or pi) on the same features, with coefficient magnitude as the
row weight, and are read back through the 2-pi-periodic threshold rule.

Spin-orbital feature indices: alpha orbitals are ``0 .. n-1``, beta
orbitals ``n .. 2n-1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from itertools import combinations

import numpy as np

from .fci import CIVector, compute_rdm1, compute_rdm2, energy_from_rdms
from .solvers import BoundMinProblem, NnlsProblem, minimize_bounded, solve_nnls

__all__ = [
    "FeatureMatrix",
    "AnsatzModel",
    "FitConfig",
    "MagnitudeFitError",
    "build_features",
    "fit_magnitudes",
    "fit_phase",
    "phase_weights",
    "predicted_signs",
    "fit_ansatz",
    "predict",
    "save_model",
    "load_model",
]

_EXP_CLIP = 350.0  # |exponent| cap keeping exp() and its square finite


class MagnitudeFitError(RuntimeError):
    """Magnitude fit aborted; carries the objectives of both stages."""

    def __init__(self, message, stage1_objective=None, stage2_objective=None):
        super().__init__(message)
        self.stage1_objective = stage1_objective
        self.stage2_objective = stage2_objective


@dataclass(frozen=True)
class FeatureMatrix:
    """0/1 design matrix of occupation products over a determinant basis.

    Column ``j`` corresponds to ``columns[j]``, an ascending spin-orbital
    index tuple; the leading column is the empty tuple (intercept, all
    ones).  Columns are ordered by ascending tuple length, then
    lexicographically.
    """

    order: int
    columns: tuple
    matrix: np.ndarray
    basis: tuple

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "basis", tuple(self.basis))

    @property
    def n_columns(self) -> int:
        return len(self.columns)


def build_features(basis, order: int) -> FeatureMatrix:
    """Order-``k`` occupation-product features for a determinant list.

    Produces ``1 + sum_{j<=k} C(K, j)`` columns over ``K = 2 n_spatial``
    spin-orbitals; row entries are products of the determinant's occupation
    numbers over each column's index tuple.
    """
    basis = tuple(basis)
    n_spin = 2 * basis[0].n_spatial
    if not 1 <= order <= n_spin:
        raise ValueError(f"order must lie in [1, {n_spin}], got {order}")
    occ = np.stack([d.occupation_vector() for d in basis]).astype(float)
    cols = [()]
    for size in range(1, order + 1):
        cols.extend(combinations(range(n_spin), size))
    matrix = np.empty((len(basis), len(cols)))
    matrix[:, 0] = 1.0
    for j, tup in enumerate(cols[1:], start=1):
        matrix[:, j] = occ[:, tup].prod(axis=1) if len(tup) > 1 else occ[:, tup[0]]
    return FeatureMatrix(order=order, columns=cols, matrix=matrix, basis=basis)


@dataclass(frozen=True)
class AnsatzModel:
    """Fitted occupation-product model: intercept, magnitude and phase weights.

    ``omega[j]`` belongs to ``columns[j + 1]`` (the intercept column has no
    magnitude weight beyond ``a``); ``v_phase[j]`` belongs to ``columns[j]``
    including the intercept.  ``magnitude_target`` records whether the
    exponential models ``c^2`` ("squared") or ``|c|`` ("absolute").
    """

    order: int
    columns: tuple
    a: float
    omega: np.ndarray
    v_phase: np.ndarray
    magnitude_target: str = "squared"
    diagnostics: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        omega = np.array(self.omega, dtype=float)
        v_phase = np.array(self.v_phase, dtype=float)
        p = len(self.columns)
        if omega.shape != (p - 1,):
            raise ValueError(f"omega must have {p - 1} entries, got {omega.shape}")
        if v_phase.shape != (p,):
            raise ValueError(f"v_phase must have {p} entries, got {v_phase.shape}")
        if np.any(omega < 0) or np.any(v_phase < 0):
            raise ValueError("omega and v_phase must be nonnegative")
        if self.magnitude_target not in ("squared", "absolute"):
            raise ValueError(f"unknown magnitude target {self.magnitude_target!r}")
        omega.setflags(write=False)
        v_phase.setflags(write=False)
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "v_phase", v_phase)
        object.__setattr__(self, "a", float(self.a))

    @property
    def n_parameters(self) -> int:
        """Magnitude parameter count (intercept plus one weight per column)."""
        return len(self.columns)


@dataclass(frozen=True)
class FitConfig:
    """Knobs of the fitting procedure.

    ``clamp_epsilon`` floors coefficient magnitudes so numerically different
    zeros (1e-10, 1e-20, ...) are treated identically; such rows also get
    zero weight in the phase regression.  ``step_scale`` feeds the first
    refinement run and ``restart_step_scale`` the second; the better of the
    two is kept.
    """

    clamp_epsilon: float = 1e-10
    magnitude_target: str = "squared"
    step_scale: float = 1.0
    restart_step_scale: float = 10.0
    grad_tol: float = 1e-9
    max_iter: int = 10000

    def __post_init__(self):
        if self.clamp_epsilon <= 0:
            raise ValueError("clamp_epsilon must be positive")
        if self.magnitude_target not in ("squared", "absolute"):
            raise ValueError(f"unknown magnitude target {self.magnitude_target!r}")


def poisson_loss(theta, design, y):
    """Stage-one objective: sum_i exp(-s_i) + y_i s_i with s = design @ theta.

    This is the Poisson negative log-likelihood (up to a constant) of the
    response ``y`` under the log-link mean ``exp(-s)``, so its minimizer
    satisfies the moment conditions ``design.T @ (y - exp(-s)) = 0`` on the
    free coordinates.
    """
    s = np.clip(design @ theta, -_EXP_CLIP, None)
    with np.errstate(over="ignore"):
        return float(np.sum(np.exp(-s) + y * s))


def poisson_loss_gradient(theta, design, y):
    s = np.clip(design @ theta, -_EXP_CLIP, None)
    with np.errstate(over="ignore"):
        return design.T @ (y - np.exp(-s))


def refinement_loss(theta, design, target):
    """Stage-two objective: sum_i (t_i - exp(-s_i))^2."""
    s = np.clip(design @ theta, -_EXP_CLIP, _EXP_CLIP)
    with np.errstate(over="ignore"):
        return float(np.sum((target - np.exp(-s)) ** 2))


def refinement_loss_gradient(theta, design, target):
    s = np.clip(design @ theta, -_EXP_CLIP, _EXP_CLIP)
    model = np.exp(-s)
    return design.T @ (2.0 * (target - model) * model)


def _check_alignment(psi, features):
    if features.basis != psi.basis:
        raise ValueError("feature matrix and CI vector use different bases")


def fit_magnitudes(psi: CIVector, features: FeatureMatrix,
                   config: FitConfig = FitConfig()) -> AnsatzModel:
    """Fit the nonnegative magnitude weights by the two-stage procedure.

    Stage one fits the convex Poisson maximum-likelihood model of the target
    coefficients; stage two refines by least squares on the coefficients
    themselves (``c^2`` or ``|c|`` per the config), warm-started from stage
    one with the intercept re-solved to the optimal scale.  The refinement
    is nonconvex, so it is run at both ``step_scale`` and the larger
    ``restart_step_scale`` and the lower objective kept; in particular a
    refinement that fails to improve on its warm start is always retried
    with the larger step.
    """
    _check_alignment(psi, features)
    design = features.matrix
    p = design.shape[1]
    if config.magnitude_target == "squared":
        target = psi.coefficients ** 2
        floor = config.clamp_epsilon ** 2
    else:
        target = np.abs(psi.coefficients)
        floor = config.clamp_epsilon
    # Poisson response: the target coefficients themselves, floored so that
    # numerically different representations of zero are treated identically
    y = np.maximum(target, floor)
    lower = np.full(p, -np.inf)
    lower[1:] = 0.0  # the intercept is the only unconstrained coordinate

    x0 = np.zeros(p)
    x0[0] = -math.log(max(float(np.mean(y)), 1e-300))
    stage1 = minimize_bounded(
        BoundMinProblem(
            objective=lambda th: poisson_loss(th, design, y),
            gradient=lambda th: poisson_loss_gradient(th, design, y),
            lower_bounds=lower,
            x0=x0,
        ),
        grad_tol=config.grad_tol,
        max_iter=config.max_iter,
    )

    warm = stage1.x.copy()
    warm[0] = _optimal_intercept(warm, design, target)
    warm_value = refinement_loss(warm, design, target)

    def _refine(step_scale):
        return minimize_bounded(
            BoundMinProblem(
                objective=lambda th: refinement_loss(th, design, target),
                gradient=lambda th: refinement_loss_gradient(th, design, target),
                lower_bounds=lower,
                x0=warm,
            ),
            grad_tol=config.grad_tol,
            max_iter=config.max_iter,
            step_scale=step_scale,
        )

    try:
        stage2 = _refine(config.step_scale)
        retry = _refine(config.restart_step_scale)
        restarted = retry.fun < stage2.fun
        if restarted:
            stage2 = retry
    except RuntimeError as exc:
        raise MagnitudeFitError(
            f"magnitude refinement failed: {exc}",
            stage1_objective=stage1.fun,
            stage2_objective=None,
        ) from exc

    theta = stage2.x
    return AnsatzModel(
        order=features.order,
        columns=features.columns,
        a=float(theta[0]),
        omega=theta[1:],
        v_phase=np.zeros(p),
        magnitude_target=config.magnitude_target,
        diagnostics={
            "stage1_objective": stage1.fun,
            "stage1_converged": stage1.converged,
            "stage1_omega": stage1.x[1:].copy(),
            "warm_start_objective": warm_value,
            "stage2_objective": stage2.fun,
            "stage2_converged": stage2.converged,
            "restarted": restarted,
        },
    )


def _optimal_intercept(theta, design, target):
    """Closed-form intercept minimizing the refinement loss at fixed omega."""
    s = np.clip(design[:, 1:] @ theta[1:], -_EXP_CLIP, _EXP_CLIP)
    base = np.exp(-s)
    denom = float(base @ base)
    scale = float(target @ base) / denom if denom > 0 else 0.0
    scale = min(max(scale, 1e-300), 1e300)
    return -math.log(scale)


def phase_weights(psi: CIVector, features: FeatureMatrix,
                  config: FitConfig = FitConfig()) -> np.ndarray:
    """Nonnegative phase weights from weighted NNLS on the sign targets.

    Target is 0 for positive and pi for negative coefficients; each row is
    weighted by ``|c|``, and rows at or below the clamp threshold are
    dropped (their sign carries no weight, so either prediction is
    acceptable).
    """
    _check_alignment(psi, features)
    coeffs = psi.coefficients
    keep = np.abs(coeffs) > config.clamp_epsilon
    if not keep.any():
        return np.zeros(features.n_columns)
    phases = np.where(coeffs < 0, math.pi, 0.0)[keep]
    weights = np.abs(coeffs)[keep]
    return solve_nnls(NnlsProblem(a=features.matrix[keep], b=phases,
                                  row_weights=weights))


def fit_phase(psi: CIVector, features: FeatureMatrix,
              model: AnsatzModel, config: FitConfig = FitConfig()) -> AnsatzModel:
    """Attach NNLS-fitted phase weights to a magnitude model."""
    return replace(model, v_phase=phase_weights(psi, features, config))


def predicted_signs(v_phase: np.ndarray, features: FeatureMatrix) -> np.ndarray:
    """Signs from the 2-pi-wrapped linear phase score (the threshold rule)."""
    phase = (features.matrix @ v_phase) % (2.0 * math.pi)
    return np.where((phase > math.pi / 2) & (phase < 3 * math.pi / 2), -1.0, 1.0)


def fit_ansatz(psi: CIVector, features: FeatureMatrix,
               config: FitConfig = FitConfig()) -> AnsatzModel:
    """Magnitude fit followed by phase fit."""
    model = fit_magnitudes(psi, features, config)
    return fit_phase(psi, features, model, config)


def predict(model: AnsatzModel, features: FeatureMatrix,
            integrals=None) -> CIVector:
    """Evaluate the model on a determinant basis as a normalized CI vector.

    The linear phase score is wrapped into [0, 2 pi); scores strictly
    between pi/2 and 3 pi/2 flip the sign.  When an integral set is given
    the energy of the predicted state is evaluated through its reduced
    density matrices.
    """
    if model.columns != features.columns:
        raise ValueError("model and feature matrix have different column sets")
    s = model.a + features.matrix[:, 1:] @ model.omega
    s = np.clip(s, -_EXP_CLIP, _EXP_CLIP)
    magnitude = np.exp(-s)
    if model.magnitude_target == "squared":
        magnitude = np.sqrt(magnitude)
    coeffs = predicted_signs(model.v_phase, features) * magnitude
    coeffs /= np.linalg.norm(coeffs)
    psi = CIVector(basis=features.basis, coefficients=coeffs)
    if integrals is not None:
        energy = energy_from_rdms(compute_rdm1(psi), compute_rdm2(psi), integrals)
        psi = replace(psi, energy=energy)
    return psi


# ---------------------------------------------------------------------------
# plain-text model serialization


def save_model(model: AnsatzModel, path) -> None:
    """Write ``order``, ``A``, then one ``indices omega v_phase`` line per column.

    Floats are printed with the shortest decimal representation that parses
    back exactly, so save/load round-trips are bit-exact.  The intercept
    column is spelled ``-`` and carries a zero omega slot (its magnitude
    weight is the ``A`` line).
    """
    lines = [f"order {model.order}", f"A {float(model.a)!r}"]
    for j, tup in enumerate(model.columns):
        name = ",".join(str(i) for i in tup) if tup else "-"
        omega = 0.0 if j == 0 else float(model.omega[j - 1])
        lines.append(f"{name} {omega!r} {float(model.v_phase[j])!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path, magnitude_target="squared") -> AnsatzModel:
    """Read a model written by :func:`save_model`.

    The serialized form does not record the magnitude-target convention;
    pass the one the model was fitted with (default matches
    :class:`FitConfig`).
    """
    with open(path, encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if len(lines) < 3 or not lines[0].startswith("order ") or not lines[1].startswith("A "):
        raise ValueError("malformed model file: expected 'order', 'A', column lines")
    order = int(lines[0].split()[1])
    a = float(lines[1].split()[1])
    columns, omega, v_phase = [], [], []
    for line in lines[2:]:
        name, om, vp = line.split()
        columns.append(() if name == "-" else tuple(int(t) for t in name.split(",")))
        if columns[-1]:
            omega.append(float(om))
        v_phase.append(float(vp))
    return AnsatzModel(order=order, columns=tuple(columns), a=a,
                       omega=np.array(omega), v_phase=np.array(v_phase),
                       magnitude_target=magnitude_target)
