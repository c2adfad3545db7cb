import math

import numpy as np
import pytest

from occfactor.ansatz import FeatureMatrix, build_features, fit_ansatz, predict
from occfactor.baselines import (BaselineScheme, baseline_magnitudes,
                                 fit_baseline)
from occfactor.fci import CIVector, enumerate_basis

from test_ansatz import _uniform_state, product_state


def test_scheme_validation():
    with pytest.raises(ValueError):
        BaselineScheme(kind="magic")
    with pytest.raises(ValueError):
        BaselineScheme(kind="iols", delta=0.0)
    with pytest.raises(ValueError):
        BaselineScheme(kind="irls_capped", max_iter=0)


def test_weighted_square_matches_main_on_uniform_state():
    # the feature matrix is rank-deficient at fixed electron count, so raw
    # coefficient vectors are non-unique; the fitted y values are what both
    # routes must agree on
    psi = _uniform_state()
    feats = build_features(psi.basis, 1)
    result = fit_baseline(psi, feats, BaselineScheme(kind="weighted_square"))
    fitted_y = feats.matrix @ result.weights
    assert np.allclose(fitted_y, -math.log(0.25), atol=1e-6)
    main = predict(fit_ansatz(psi, feats), feats)
    baseline_pred = baseline_magnitudes(result, feats,
                                        BaselineScheme(kind="weighted_square"))
    baseline_pred = baseline_pred / np.linalg.norm(baseline_pred)
    assert np.allclose(baseline_pred, np.abs(main.coefficients), atol=1e-6)
    assert result.converged
    assert len(result.history) == 1


@pytest.mark.parametrize("kind", ["weighted_abs", "weighted_square"])
def test_weighted_schemes_nail_top_coefficient_on_log_linear_truth(kind):
    for seed in (0, 1):
        rng = np.random.default_rng(seed)
        p = rng.uniform(0.2, 0.8, size=4)
        psi, _, _ = product_state(p)
        feats = build_features(psi.basis, 1)
        result = fit_baseline(psi, feats, BaselineScheme(kind=kind))
        magnitude = baseline_magnitudes(result, feats, BaselineScheme(kind=kind))
        magnitude = magnitude / np.linalg.norm(magnitude)
        top = int(np.argmax(np.abs(psi.coefficients)))
        truth = abs(psi.coefficients[top])
        assert abs(magnitude[top] - truth) <= 0.05 * truth


def test_irls_reporting_contract(no_solution):
    psi_no, _, _ = no_solution(6, 2.0)
    feats = build_features(psi_no.basis, 1)
    scheme = BaselineScheme(kind="irls_capped", delta=1e-3, max_iter=40)
    result = fit_baseline(psi_no, feats, scheme)
    assert isinstance(result.converged, bool)
    assert 1 <= len(result.history) <= scheme.max_iter
    assert all(math.isfinite(v) for v in result.history)


@pytest.mark.parametrize("kind", ["irls_pnorm", "irls_kl"])
def test_other_irls_variants_run_and_report(kind, no_solution):
    psi_no, _, _ = no_solution(6, 1.0)
    feats = build_features(psi_no.basis, 1)
    scheme = BaselineScheme(kind=kind, p=1.0, delta=1e-3, max_iter=25)
    result = fit_baseline(psi_no, feats, scheme)
    assert len(result.history) <= scheme.max_iter
    assert result.weights.shape == (feats.n_columns,)


def test_iols_converges_on_product_instance():
    p = (0.9, 0.1, 0.8, 0.3)
    psi, _, c2 = product_state(p)
    feats = build_features(psi.basis, 1)
    scheme = BaselineScheme(kind="iols", delta=1.0, max_iter=500, tol=1e-12)
    result = fit_baseline(psi, feats, scheme)
    assert result.converged
    magnitude = baseline_magnitudes(result, feats, scheme)
    magnitude = magnitude / np.linalg.norm(magnitude)
    main = predict(fit_ansatz(psi, feats), feats)
    order = np.argsort(-np.abs(psi.coefficients))[:4]
    assert np.allclose(magnitude[order], np.abs(psi.coefficients[order]),
                       atol=1e-3)
    assert np.allclose(magnitude[order], np.abs(main.coefficients[order]),
                       atol=1e-3)


def test_baselines_do_not_mutate_inputs(no_solution):
    psi_no, _, _ = no_solution(6, 1.0)
    feats = build_features(psi_no.basis, 1)
    coeffs_before = psi_no.coefficients.copy()
    matrix_before = feats.matrix.copy()
    for kind in ("weighted_abs", "irls_capped", "iols"):
        fit_baseline(psi_no, feats, BaselineScheme(kind=kind, max_iter=5))
    assert np.array_equal(psi_no.coefficients, coeffs_before)
    assert np.array_equal(feats.matrix, matrix_before)


def test_singular_normal_equations_use_ridge_not_crash():
    basis = tuple(enumerate_basis(2, 1, 1))
    matrix = np.ones((4, 3))
    matrix[:, 1] = [1.0, 0.0, 1.0, 0.0]
    matrix[:, 2] = matrix[:, 1]  # exact duplicate column
    feats = FeatureMatrix(order=1, columns=((), (0,), (1,)), matrix=matrix,
                          basis=basis)
    psi = CIVector(basis=basis, coefficients=np.full(4, 0.5))
    result = fit_baseline(psi, feats, BaselineScheme(kind="weighted_abs"))
    assert result.ridge_fallback
    assert np.all(np.isfinite(result.weights))


def test_alignment_check():
    psi = _uniform_state()
    other = tuple(enumerate_basis(3, 1, 1))
    feats = build_features(other, 1)
    with pytest.raises(ValueError):
        fit_baseline(psi, feats, BaselineScheme(kind="weighted_abs"))
