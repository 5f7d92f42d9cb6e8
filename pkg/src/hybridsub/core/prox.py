"""Projection and proximal operators.

All operators are pure. Matrix arguments are processed column-wise
(group l2 shrinkage) or element-wise (soft thresholding) with one threshold
per column or element.
"""

import numpy as np
from numpy.typing import ArrayLike

from .exceptions import DimensionMismatchError, InvalidParameterError
from .linalg import DenseMatrix, frobenius_norm


def _check_threshold(u: float) -> float:
    u = float(u)
    if not u >= 0:
        raise InvalidParameterError(f"threshold must be >= 0, got {u}")
    return u


def _check_thresholds(thresholds: ArrayLike, expected: int, what: str) -> np.ndarray:
    t = np.asarray(thresholds, dtype=np.float64).reshape(-1)
    if t.shape[0] != expected:
        raise DimensionMismatchError(f"{len(t)} thresholds for {expected} {what}")
    if np.any(np.isnan(t)) or np.any(t < 0):
        raise InvalidParameterError("thresholds must be >= 0")
    return t


def lf_project(m: DenseMatrix) -> DenseMatrix:
    """Project onto the unit Frobenius ball: ``m / max(1, ||m||_F)``."""
    norm = frobenius_norm(m)
    if norm <= 1.0:
        return m
    return m / norm


def l2_prox(a: ArrayLike, u: float) -> np.ndarray:
    """Prox of ``u * ||.||_2``: radial shrinkage, zero when ``||a|| <= u``."""
    u = _check_threshold(u)
    a = np.asarray(a, dtype=np.float64)
    norm = float(np.linalg.norm(a))
    if norm <= u:
        return np.zeros_like(a)
    if u == 0.0:
        return a.copy()
    return a * ((norm - u) / norm)


def l1_prox(b: float, u: float) -> float:
    """Soft threshold ``sgn(b) * max(0, |b| - u)``."""
    u = _check_threshold(u)
    b = float(b)
    return float(np.sign(b) * max(0.0, abs(b) - u))


def columnwise_l2_prox(m: DenseMatrix, thresholds: ArrayLike) -> DenseMatrix:
    """Apply ``l2_prox`` to every column j with threshold ``thresholds[j]``."""
    t = _check_thresholds(thresholds, m.shape[1], "columns")
    norms = np.linalg.norm(m, axis=0)
    keep = norms > t
    factor = np.zeros_like(norms)
    # inf thresholds never reach this branch since norms > inf is False
    factor[keep] = (norms[keep] - t[keep]) / norms[keep]
    return m * factor[np.newaxis, :]


def elementwise_l1_prox(v: ArrayLike, thresholds: ArrayLike) -> np.ndarray:
    """Soft-threshold every element with its own threshold."""
    v = np.asarray(v, dtype=np.float64)
    t = _check_thresholds(thresholds, v.size, "elements").reshape(v.shape)
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)
