"""Tests for dense matrix helpers, SVD and seeded sampling."""

import numpy as np
import pytest

from hybridsub.core.exceptions import DimensionMismatchError, InvalidParameterError, NonFiniteError
from hybridsub.core.linalg import (
    RngStream,
    as_matrix,
    column_l2_norms,
    column_scale,
    frobenius_norm,
    matmul,
    numerical_rank,
    sample_gaussian,
    sample_uniform_shell,
    sub,
    svd,
)


def test_as_matrix_rejects_non_finite():
    with pytest.raises(NonFiniteError):
        as_matrix([[1.0, np.nan]])


def test_as_matrix_copies_and_promotes_vectors():
    data = np.arange(4.0)
    m = as_matrix(data)
    assert m.shape == (1, 4)
    m[0, 0] = 99.0
    assert data[0] == 0.0


def test_shape_checks():
    a, b = np.ones((2, 3)), np.ones((2, 3))
    with pytest.raises(DimensionMismatchError):
        matmul(a, b)
    with pytest.raises(DimensionMismatchError):
        sub(a, np.ones((3, 2)))
    with pytest.raises(DimensionMismatchError):
        column_scale(a, [1.0, 2.0])


def test_column_scale_is_right_diagonal_product(rng):
    m = rng.normal(size=(4, 3))
    v = np.array([2.0, -1.0, 0.5])
    np.testing.assert_allclose(column_scale(m, v), m @ np.diag(v))


def test_svd_reconstructs_and_orders(rng):
    m = rng.normal(size=(7, 5))
    result = svd(m)
    assert result.rank == 5
    assert np.all(np.diff(result.singular_values) <= 0)
    np.testing.assert_allclose(result.reconstruct(), m, atol=1e-12)
    np.testing.assert_allclose(result.U.T @ result.U, np.eye(5), atol=1e-12)
    np.testing.assert_allclose(result.Vt @ result.Vt.T, np.eye(5), atol=1e-12)


def test_svd_truncate_is_best_approximation(rng):
    m = rng.normal(size=(10, 8))
    result = svd(m)
    approx = result.truncate(3).reconstruct()
    tail = np.sum(result.singular_values[3:] ** 2)
    assert frobenius_norm(m - approx) ** 2 == pytest.approx(tail, rel=1e-10)
    with pytest.raises(InvalidParameterError):
        result.truncate(9)


def test_svd_rejects_empty():
    with pytest.raises(DimensionMismatchError):
        svd(np.zeros((0, 3)))


def test_numerical_rank(rng):
    low = rng.normal(size=(9, 2)) @ rng.normal(size=(2, 6))
    assert numerical_rank(low) == 2
    assert numerical_rank(np.zeros((3, 3))) == 0


def test_rng_stream_replays_and_separates():
    first = sample_gaussian(RngStream(5, 1), 3, 4)
    again = sample_gaussian(RngStream(5, 1), 3, 4)
    other = sample_gaussian(RngStream(5, 2), 3, 4)
    np.testing.assert_array_equal(first, again)
    assert not np.allclose(first, other)
    np.testing.assert_array_equal(sample_gaussian(RngStream(5).child(1), 3, 4), first)


def test_rng_stream_accepts_large_stream_ids():
    stream = RngStream(0, 2 ** 63 - 1)
    assert stream.generator.normal() == RngStream(0, 2 ** 63 - 1).generator.normal()


def test_sample_gaussian_edge_cases():
    rng = RngStream(0)
    np.testing.assert_array_equal(sample_gaussian(rng, 2, 2, mean=3.0, variance=0.0), np.full((2, 2), 3.0))
    with pytest.raises(InvalidParameterError):
        sample_gaussian(rng, 2, 2, variance=-1.0)


def test_sample_uniform_shell_magnitudes():
    draws = sample_uniform_shell(RngStream(3), 0.5, 1.5, size=2000)
    assert np.all((np.abs(draws) >= 0.5) & (np.abs(draws) <= 1.5))
    assert np.any(draws < 0) and np.any(draws > 0)
    assert isinstance(sample_uniform_shell(RngStream(3), 0.5, 1.5), float)
    with pytest.raises(InvalidParameterError):
        sample_uniform_shell(RngStream(3), 1.5, 0.5)


def test_sample_uniform_shell_is_centred():
    draws = sample_uniform_shell(RngStream(9), 0.5, 1.5, size=10 ** 6)
    # E[x^2] on the symmetric shell is (1.5^3 - 0.5^3) / 3
    sd = np.sqrt((1.5 ** 3 - 0.5 ** 3) / 3.0 / draws.size)
    assert abs(draws.mean()) <= 3.0 * sd


def test_matmul_is_associative(rng):
    a, b, c = rng.normal(size=(4, 5)), rng.normal(size=(5, 3)), rng.normal(size=(3, 6))
    np.testing.assert_allclose(matmul(matmul(a, b), c), matmul(a, matmul(b, c)), rtol=1e-12, atol=1e-12)


def test_singular_values_ignore_row_and_column_order(rng):
    m = rng.normal(size=(7, 5))
    permuted = m[rng.permutation(7)][:, rng.permutation(5)]
    np.testing.assert_allclose(svd(permuted).singular_values, svd(m).singular_values, rtol=1e-10)
    np.testing.assert_allclose(np.sort(column_l2_norms(permuted)), np.sort(column_l2_norms(m)))
