"""Fit-quality metrics, the end-to-end evaluation pipeline, and sweeps.

A sweep runs exact diagonalization plus the fitting pipeline over a grid of
on-site repulsions and approximation orders and emits one CSV row per cell.
Cells over different ``u`` are independent; setting ``OCCFACTOR_THREADS``
above 1 evaluates them concurrently (rows are sorted before emission, so the
output is identical either way).
"""

from __future__ import annotations

import json
import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import fci
from .ansatz import (FitConfig, build_features, fit_ansatz, phase_weights,
                     predict, predicted_signs)
from .baselines import baseline_magnitudes, fit_baseline
from .integrals import HubbardSpec, build_hubbard
from .natorb import no_pipeline

__all__ = [
    "FitReport",
    "SweepSpec",
    "overlap",
    "r_squared",
    "relative_log_error",
    "evaluate_fit",
    "sweep",
    "write_csv",
    "CSV_COLUMNS",
]

LOG_ERROR_FLOOR = -16.0


def _coefficients(vector):
    coeffs = getattr(vector, "coefficients", vector)
    return np.asarray(coeffs, dtype=float)


def _check_bases(pred, truth):
    pred_basis = getattr(pred, "basis", None)
    truth_basis = getattr(truth, "basis", None)
    if pred_basis is not None and truth_basis is not None and pred_basis != truth_basis:
        raise ValueError("vectors live on different determinant bases")


def overlap(pred, truth) -> float:
    """|<pred|truth>| between unit-norm coefficient vectors."""
    _check_bases(pred, truth)
    a, b = _coefficients(pred), _coefficients(truth)
    if a.shape != b.shape:
        raise ValueError("coefficient vectors have different lengths")
    return float(abs(a @ b))


def r_squared(pred, truth) -> float:
    """Coefficient of determination on signed CI coefficients.

    Returns NaN (with a warning) when the truth vector is constant, where
    the definition degenerates.
    """
    _check_bases(pred, truth)
    a, b = _coefficients(pred), _coefficients(truth)
    if a.shape != b.shape:
        raise ValueError("coefficient vectors have different lengths")
    denom = float(np.sum((b - b.mean()) ** 2))
    if denom == 0.0 or np.all(b == b[0]):
        warnings.warn("r_squared undefined for a constant truth vector",
                      RuntimeWarning, stacklevel=2)
        return float("nan")
    return 1.0 - float(np.sum((b - a) ** 2)) / denom


def relative_log_error(e_true: float, e_approx: float) -> float:
    """log10 |(e_true - e_approx) / e_true|, floored at -16 on exact match."""
    if e_true == 0.0:
        raise ValueError("relative log error undefined for e_true = 0")
    ratio = abs((e_true - e_approx) / e_true)
    if ratio == 0.0:
        return LOG_ERROR_FLOOR
    return max(math.log10(ratio), LOG_ERROR_FLOOR)


@dataclass(frozen=True)
class FitReport:
    """Quality summary of one fitted model against the exact state."""

    order: int
    overlap: float
    r_squared: float
    e_true: float
    e_approx: float
    rel_log_error: float
    n_parameters: int
    fci_dimension: int
    parameter_fraction: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def _predict_baseline(psi, features, scheme, config, integrals):
    """Signed, normalized prediction from a baseline magnitude fit.

    Baselines only model magnitudes; signs come from the same phase
    regression the main fitter uses, so reports stay comparable.
    """
    bfit = fit_baseline(psi, features, scheme, config)
    magnitude = baseline_magnitudes(bfit, features, scheme)
    signs = predicted_signs(phase_weights(psi, features, config), features)
    coeffs = signs * magnitude
    coeffs = coeffs / np.linalg.norm(coeffs)
    pred = fci.CIVector(basis=features.basis, coefficients=coeffs)
    energy = fci.energy_from_rdms(fci.compute_rdm1(pred), fci.compute_rdm2(pred),
                                  integrals)
    return replace(pred, energy=energy), bfit


def evaluate_fit(integrals, n_alpha, n_beta, order, *, basis="no",
                 scheme="main", config: FitConfig = FitConfig(), mode="auto",
                 solver_kwargs=None):
    """Solve, fit, predict, and score one system at one order.

    ``basis`` selects the orbital basis the fit runs in ("site" keeps the
    input basis, "no" rotates to natural orbitals first); ``scheme`` is
    "main" for the two-stage fitter or a :class:`BaselineScheme`.

    Returns ``(report, model, psi, pred)`` where ``psi`` is the exact state
    in the fitting basis and ``model`` the fitted
    :class:`~occfactor.ansatz.AnsatzModel` (or
    :class:`~occfactor.baselines.BaselineFit`).
    """
    if basis not in ("site", "no"):
        raise ValueError(f"basis must be 'site' or 'no', got {basis!r}")
    solver_kwargs = solver_kwargs or {}
    if basis == "no":
        psi, integrals_eval, _ = no_pipeline(integrals, n_alpha, n_beta,
                                             mode=mode, **solver_kwargs)
    else:
        psi = fci.solve_ground_state(integrals, n_alpha, n_beta, mode=mode,
                                     **solver_kwargs)
        integrals_eval = integrals
    features = build_features(psi.basis, order)
    if scheme == "main":
        model = fit_ansatz(psi, features, config)
        pred = predict(model, features, integrals=integrals_eval)
    else:
        pred, model = _predict_baseline(psi, features, scheme, config,
                                        integrals_eval)
    report = FitReport(
        order=order,
        overlap=overlap(pred, psi),
        r_squared=r_squared(pred, psi),
        e_true=psi.energy,
        e_approx=pred.energy,
        rel_log_error=relative_log_error(psi.energy, pred.energy),
        n_parameters=features.n_columns,
        fci_dimension=len(psi.basis),
        parameter_fraction=features.n_columns / len(psi.basis),
    )
    return report, model, psi, pred


# ---------------------------------------------------------------------------
# sweeps over (u, order) grids

DEFAULT_U_VALUES = (-10.0, -5.0, -2.0, -1.0, 0.0, 1.0, 2.0, 5.0, 10.0)

CSV_COLUMNS = ("u", "order", "overlap", "r2", "e_true", "e_approx",
               "rel_log_error", "n_params", "fraction", "wall_seconds", "error")


@dataclass(frozen=True)
class SweepSpec:
    """Grid definition: a Hubbard chain swept over u and fitting order."""

    n_sites: int
    orders: tuple
    u_values: tuple = DEFAULT_U_VALUES
    basis: str = "no"
    boundary: str = "open"
    alpha: float = 0.0
    beta: float = -1.0
    n_alpha: int = None
    n_beta: int = None
    mode: str = "auto"
    config: FitConfig = FitConfig()

    def electron_counts(self):
        if (self.n_alpha is None) != (self.n_beta is None):
            raise ValueError("set both n_alpha and n_beta or neither")
        if self.n_alpha is None:
            if self.n_sites % 2:
                raise ValueError(
                    "odd site count needs explicit n_alpha/n_beta (no half filling)")
            return self.n_sites // 2, self.n_sites // 2
        return self.n_alpha, self.n_beta


def thread_cap() -> int:
    """Worker cap from OCCFACTOR_THREADS (default 1: fully serial sweeps)."""
    try:
        return max(1, int(os.environ.get("OCCFACTOR_THREADS", "1")))
    except ValueError:
        return 1


def _sweep_one_u(spec, u):
    n_alpha, n_beta = spec.electron_counts()
    rows = []
    integrals = build_hubbard(HubbardSpec(n_sites=spec.n_sites, u=u,
                                          alpha=spec.alpha, beta=spec.beta,
                                          boundary=spec.boundary))
    try:
        if spec.basis == "no":
            psi, integrals_eval, _ = no_pipeline(integrals, n_alpha, n_beta,
                                                 mode=spec.mode)
        else:
            psi = fci.solve_ground_state(integrals, n_alpha, n_beta,
                                         mode=spec.mode)
            integrals_eval = integrals
    except Exception as exc:  # noqa: BLE001 - failed cells are reported, not fatal
        return [{"u": u, "order": order, "error": f"{type(exc).__name__}: {exc}"}
                for order in spec.orders]
    for order in spec.orders:
        start = time.perf_counter()
        try:
            features = build_features(psi.basis, order)
            model = fit_ansatz(psi, features, spec.config)
            pred = predict(model, features, integrals=integrals_eval)
            report = FitReport(
                order=order,
                overlap=overlap(pred, psi),
                r_squared=r_squared(pred, psi),
                e_true=psi.energy,
                e_approx=pred.energy,
                rel_log_error=relative_log_error(psi.energy, pred.energy),
                n_parameters=features.n_columns,
                fci_dimension=len(psi.basis),
                parameter_fraction=features.n_columns / len(psi.basis),
            )
        except Exception as exc:  # noqa: BLE001
            rows.append({"u": u, "order": order,
                         "error": f"{type(exc).__name__}: {exc}"})
            continue
        row = {"u": u, "order": order, "report": report,
               "wall_seconds": time.perf_counter() - start, "error": ""}
        rows.append(row)
    return rows


def sweep(spec: SweepSpec):
    """Run the grid; returns rows sorted by (u, order).

    Each row is a dict with keys ``u``, ``order``, ``report`` (absent on
    failure), ``wall_seconds``, and ``error`` (empty string on success).
    Per-cell failures are recorded and the sweep continues.
    """
    workers = thread_cap()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda u: _sweep_one_u(spec, u), spec.u_values))
    else:
        chunks = [_sweep_one_u(spec, u) for u in spec.u_values]
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda row: (row["u"], row["order"]))
    return rows


def _format_cell(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows) -> str:
    """Render sweep rows as CSV text (header + one line per cell)."""
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        report = row.get("report")
        if report is None:
            cells = [_format_cell(row["u"]), str(row["order"]),
                     "", "", "", "", "", "", "", "",
                     row["error"].replace(",", ";")]
        else:
            cells = [
                _format_cell(float(row["u"])),
                str(row["order"]),
                repr(report.overlap),
                repr(report.r_squared),
                repr(report.e_true),
                repr(report.e_approx),
                repr(report.rel_log_error),
                str(report.n_parameters),
                repr(report.parameter_fraction),
                repr(float(row["wall_seconds"])),
                "",
            ]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_csv(rows, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(rows_to_csv(rows))
