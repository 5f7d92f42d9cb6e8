"""Tests for recovery metrics, clustering quality, AIC and spectra."""

import math
from dataclasses import replace

import numpy as np
import pytest

from hybridsub.core.evaluation import (
    FitReport,
    aic_degrees_of_freedom,
    aic_score,
    cluster_quality,
    kmeans,
    reconstruction_error,
    s_recovery_error,
    select_by_aic,
    silhouette,
    spectrum_profile,
    subspace_error,
    support_f1,
)
from hybridsub.core.exceptions import DimensionMismatchError, InvalidParameterError
from hybridsub.core.hsl import HslModel


def _orthonormal(rng, p, k):
    return np.linalg.qr(rng.normal(size=(p, k)))[0]


def test_subspace_error_extremes(rng):
    V = _orthonormal(rng, 10, 3)
    L = rng.normal(size=(8, 3)) @ V.T
    assert subspace_error(L, V) == pytest.approx(0.0, abs=1e-7)
    Q = _orthonormal(rng, 10, 6)
    assert subspace_error(rng.normal(size=(8, 3)) @ Q[:, 3:].T, Q[:, :3]) == pytest.approx(1.0)


def test_subspace_error_small_rotation(rng):
    V = np.eye(4)[:, :1]
    for eps in (1e-3, 1e-2):
        rotated = np.array([[math.cos(eps), math.sin(eps), 0.0, 0.0]])
        # one principal angle eps: ||P - Ph||_F = sqrt(2) sin(eps), normalised by sqrt(2)
        assert subspace_error(rotated, V, 1) == pytest.approx(math.sin(eps), rel=1e-6)


def test_subspace_error_is_basis_invariant(rng):
    V = _orthonormal(rng, 9, 2)
    L = rng.normal(size=(7, 9))
    R = _orthonormal(rng, 2, 2)
    assert subspace_error(L, V @ R, 2) == pytest.approx(subspace_error(L, V, 2), abs=1e-12)


def test_subspace_error_validation(rng):
    with pytest.raises(InvalidParameterError):
        subspace_error(rng.normal(size=(2, 5)), _orthonormal(rng, 5, 3), 3)
    with pytest.raises(DimensionMismatchError):
        subspace_error(rng.normal(size=(6, 5)), _orthonormal(rng, 4, 2), 2)


def test_s_recovery_error(rng):
    S = rng.normal(size=(4, 5))
    assert s_recovery_error(S, S) == 0.0
    assert s_recovery_error(np.zeros_like(S), S) == pytest.approx(np.linalg.norm(S))
    assert s_recovery_error(np.zeros_like(S), S, normalized=True) == pytest.approx(1.0)
    other = rng.normal(size=(4, 5))
    assert s_recovery_error(other, S) == pytest.approx(math.sqrt(np.sum((other - S) ** 2)))


def test_support_f1_cases():
    assert support_f1([0.0, 2.0, 0.0, 3.0], [1, 3]) == (1.0, 1.0, 1.0)
    assert support_f1(np.zeros(4), [1])[2] == 0.0
    assert support_f1(np.zeros(4), [])[2] == 1.0
    precision, recall, f1 = support_f1([1.0, 1.0, 1.0, 1.0], [0, 1])
    assert (precision, recall) == (0.5, 1.0)
    assert f1 == pytest.approx(2.0 / 3.0)
    assert support_f1([1e-7, 1.0], [1], zero_tol=1e-6) == (1.0, 1.0, 1.0)


def test_support_f1_is_permutation_invariant(rng):
    b = rng.normal(size=10) * (rng.random(10) < 0.5)
    truth = [0, 2, 5, 7]
    perm = rng.permutation(10)
    inverse = np.argsort(perm)
    assert support_f1(b[perm], [int(inverse[j]) for j in truth]) == support_f1(b, truth)


def test_reconstruction_error(rng):
    X = rng.normal(size=(3, 4))
    assert reconstruction_error(X, X) == 0.0
    assert reconstruction_error(X, np.zeros_like(X)) == pytest.approx(np.linalg.norm(X))
    with pytest.raises(DimensionMismatchError):
        reconstruction_error(X, np.zeros((4, 3)))


def test_kmeans_and_silhouette_on_separated_blobs(rng):
    points = np.vstack([rng.normal(size=(30, 2)), rng.normal(size=(30, 2)) + 20.0])
    labels = kmeans(points, 2, seed=0, restarts=5)
    assert silhouette(points, labels) > 0.7
    relabeled = 1 - labels
    assert silhouette(points, relabeled) == pytest.approx(silhouette(points, labels))
    mean, std = cluster_quality(points, 2, initializations=3, seed=1)
    assert mean > 0.7 and std >= 0.0


def test_silhouette_degenerate_cases():
    points = np.ones((5, 2))
    assert silhouette(points, [0, 0, 1, 1, 1]) == 0.0
    assert silhouette(np.arange(10.0).reshape(5, 2), np.zeros(5)) == 0.0
    with pytest.raises(InvalidParameterError):
        kmeans(points, 6)


def test_silhouette_is_isometry_invariant(rng):
    points = rng.normal(size=(20, 3))
    labels = np.arange(20) % 3
    Q = _orthonormal(rng, 3, 3)
    assert silhouette(points @ Q + 4.0, labels) == pytest.approx(silhouette(points, labels))


def _model(n, p, k, active):
    b = np.zeros(p)
    b[:active] = 1.0
    return HslModel(Z=np.zeros((n, k)), A=np.zeros((k, p)), W=np.zeros((n, p)), b=b)


def test_aic_degrees_of_freedom_and_monotonicity(rng):
    small, large = _model(6, 5, 2, 1), _model(6, 5, 2, 3)
    assert aic_degrees_of_freedom(small) == 2 * 11 + 7
    assert aic_degrees_of_freedom(large) == 2 * 11 + 21
    X = rng.normal(size=(6, 5))
    # Equal RSS (zero factors): the sparser model wins
    assert aic_score(X, small) < aic_score(X, large)


def test_aic_drops_by_log_two_when_rss_halves(rng):
    X = rng.normal(size=(6, 5))
    model = _model(6, 5, 2, 0)
    n, p = X.shape
    difference = aic_score(X, model) - aic_score(X / math.sqrt(2.0), model)
    assert difference == pytest.approx(n * p * math.log(2.0))


def test_select_by_aic_is_reproducible(small_instance, quick_config):
    X = small_instance.X
    first = select_by_aic(X, [0.01, 0.1], quick_config)
    second = select_by_aic(X, [0.01, 0.1], quick_config)
    assert (first.lambda_, first.gamma, first.aic) == (second.lambda_, second.gamma, second.aic)
    assert first.aic == min(row["aic"] for row in first.table)
    with pytest.raises(InvalidParameterError):
        select_by_aic(X, [], quick_config)


def test_select_by_aic_scores_unterminated_paths(small_instance, quick_config):
    config = replace(quick_config, max_path_steps=1, eta=1e-9)
    selection = select_by_aic(small_instance.X, [0.01, 0.1], config)
    assert len(selection.table) == 4
    assert all(row["path_terminated"] is False for row in selection.table)
    assert selection.aic == min(row["aic"] for row in selection.table)


def test_spectrum_profile(rng):
    X = rng.normal(size=(8, 5))
    profile = spectrum_profile(X, k=2)
    s = np.linalg.svd(X, compute_uv=False)
    np.testing.assert_allclose(profile.singular_values, s)
    assert profile.head_drop == pytest.approx(s[2] / s[0])
    assert profile.tail_half_ratio == pytest.approx(s[2] / s[0])
    assert spectrum_profile(X).head_drop is None
    permuted = spectrum_profile(X[rng.permutation(8)], k=2)
    np.testing.assert_allclose(permuted.singular_values, s, atol=1e-8)


def test_fit_report_dict_round_trip():
    report = FitReport(method_name="pca", reconstruction_error=1.5)
    data = report.to_dict()
    assert data["subspace_error"] is None
    restored = FitReport.from_dict(data)
    assert restored.method_name == "pca" and math.isnan(restored.subspace_error)
    assert restored.reconstruction_error == 1.5
