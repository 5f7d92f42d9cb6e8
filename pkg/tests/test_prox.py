"""Tests for projection and proximal operators against brute-force minimisers."""

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from hybridsub.core.exceptions import DimensionMismatchError, InvalidParameterError
from hybridsub.core.prox import columnwise_l2_prox, elementwise_l1_prox, l1_prox, l2_prox, lf_project


def _radial_oracle(a, u):
    """argmin_y 0.5||y - a||^2 + u||y||; the minimiser lies on the ray through a."""
    norm = np.linalg.norm(a)
    if norm == 0.0:
        return np.zeros_like(a)
    res = minimize_scalar(lambda s: 0.5 * (s - 1.0) ** 2 * norm ** 2 + u * abs(s) * norm,
                          bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-12})
    s = res.x if res.fun < 0.5 * norm ** 2 else 0.0
    return s * a


def _scalar_oracle(b, u):
    res = minimize_scalar(lambda y: 0.5 * (y - b) ** 2 + u * abs(y),
                          bounds=(-abs(b) - 1.0, abs(b) + 1.0), method="bounded",
                          options={"xatol": 1e-12})
    return res.x if res.fun < 0.5 * b ** 2 else 0.0


def test_l2_prox_matches_oracle(rng):
    for _ in range(100):
        a = rng.normal(size=rng.integers(1, 6)) * rng.uniform(0.1, 3.0)
        u = rng.uniform(0.0, 3.0)
        np.testing.assert_allclose(l2_prox(a, u), _radial_oracle(a, u), atol=1e-6)


def test_l1_prox_matches_oracle(rng):
    for _ in range(100):
        b = rng.normal() * 2.0
        u = rng.uniform(0.0, 2.0)
        assert l1_prox(b, u) == pytest.approx(_scalar_oracle(b, u), abs=1e-6)


def test_lf_project_matches_oracle(rng):
    for _ in range(100):
        m = rng.normal(size=(3, 4)) * rng.uniform(0.05, 1.0)
        norm = np.linalg.norm(m)
        res = minimize_scalar(lambda s: (s - 1.0) ** 2, bounds=(0.0, min(1.0, 1.0 / norm)),
                              method="bounded", options={"xatol": 1e-12})
        np.testing.assert_allclose(lf_project(m), res.x * m, atol=1e-6)


def test_lf_project_leaves_interior_points():
    m = np.full((2, 2), 0.25)
    assert lf_project(m) is m
    np.testing.assert_allclose(np.linalg.norm(lf_project(np.full((2, 2), 3.0))), 1.0)


def test_l2_prox_edge_cases():
    np.testing.assert_array_equal(l2_prox(np.zeros(3), 0.0), np.zeros(3))
    np.testing.assert_array_equal(l2_prox(np.array([3.0, 4.0]), 5.0), np.zeros(2))
    np.testing.assert_array_equal(l2_prox(np.array([3.0, 4.0]), 0.0), [3.0, 4.0])
    np.testing.assert_allclose(l2_prox(np.array([3.0, 4.0]), 2.5), [1.5, 2.0])
    with pytest.raises(InvalidParameterError):
        l2_prox(np.ones(2), -1.0)


def test_l1_prox_examples():
    assert l1_prox(3.0, 1.0) == 2.0
    assert l1_prox(-0.5, 1.0) == 0.0
    assert l1_prox(-3.0, 1.0) == -2.0


def test_columnwise_and_elementwise_apply_per_entry(rng):
    m = rng.normal(size=(4, 5))
    t = rng.uniform(0.0, 2.0, size=5)
    expected = np.column_stack([l2_prox(m[:, j], t[j]) for j in range(5)])
    np.testing.assert_allclose(columnwise_l2_prox(m, t), expected)

    v = rng.normal(size=6)
    s = rng.uniform(0.0, 1.0, size=6)
    np.testing.assert_allclose(elementwise_l1_prox(v, s), [l1_prox(x, u) for x, u in zip(v, s)])


def test_threshold_validation():
    with pytest.raises(DimensionMismatchError):
        columnwise_l2_prox(np.ones((2, 3)), [1.0, 1.0])
    with pytest.raises(InvalidParameterError):
        elementwise_l1_prox(np.ones(2), [1.0, -1.0])


def test_operators_are_non_expansive(rng):
    for _ in range(50):
        x, y = rng.normal(size=(3, 4)), rng.normal(size=(3, 4))
        t = rng.uniform(0.0, 1.0, size=4)
        assert np.linalg.norm(columnwise_l2_prox(x, t) - columnwise_l2_prox(y, t)) <= np.linalg.norm(x - y) + 1e-12
        assert np.linalg.norm(lf_project(x) - lf_project(y)) <= np.linalg.norm(x - y) + 1e-12
        e = rng.uniform(0.0, 1.0, size=(3, 4))
        assert np.linalg.norm(elementwise_l1_prox(x, e) - elementwise_l1_prox(y, e)) <= np.linalg.norm(x - y) + 1e-12
