"""Comparison methods: PCA, Robust PCA and Outlier Pursuit.

RPCA and Outlier Pursuit are solved with the inexact augmented Lagrange
multiplier scheme: alternate singular value thresholding of ``L`` with
shrinkage of ``S`` and a dual ascent step, growing the penalty ``mu``
geometrically.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .exceptions import InvalidParameterError
from .linalg import DenseMatrix, as_matrix, frobenius_norm, svd
from .prox import columnwise_l2_prox, elementwise_l1_prox
from ..utils.logger import logger


@dataclass(frozen=True, eq=False)
class LowRankSparseDecomposition:
    """``X ~ L + S`` with a low-rank ``L`` and a sparse ``S``."""

    L: DenseMatrix
    S: DenseMatrix
    rank_of_L: int
    iterations: int
    converged: bool
    method: str = ""
    lambda_: Optional[float] = None
    target_rank: Optional[int] = None

    @property
    def target_rank_met(self) -> Optional[bool]:
        if self.target_rank is None:
            return None
        return self.rank_of_L == self.target_rank

    def feature_scores(self) -> np.ndarray:
        """Column norms of ``S``: how strongly each feature is treated as sparse."""
        return np.linalg.norm(self.S, axis=0)

    def sample_embedding(self, k: int) -> DenseMatrix:
        """``U_k diag(sigma_k)`` of ``L``: a k-dimensional representation of the samples."""
        result = svd(self.L)
        k = min(k, result.rank)
        return result.U[:, :k] * result.singular_values[np.newaxis, :k]


def singular_value_threshold(m: DenseMatrix, tau: float) -> Tuple[DenseMatrix, int]:
    """Prox of ``tau * ||.||_*``; returns the shrunk matrix and its rank."""
    result = svd(m)
    s = result.singular_values
    shrunk = np.maximum(s - tau, 0.0)
    # Values that survive only by rounding count as zero
    cutoff = np.finfo(float).eps * max(m.shape) * (s[0] if s.size else 0.0)
    shrunk[shrunk <= cutoff] = 0.0
    rank = int(np.count_nonzero(shrunk))
    L = (result.U[:, :rank] * shrunk[np.newaxis, :rank]) @ result.Vt[:rank, :]
    return L, rank


def pca(X: DenseMatrix, k: int) -> LowRankSparseDecomposition:
    """Best rank-k approximation by truncated SVD."""
    X = as_matrix(X, "X")
    if not 1 <= k <= min(X.shape):
        raise InvalidParameterError(f"k={k} outside [1, {min(X.shape)}]")
    L = svd(X).truncate(k).reconstruct()
    return LowRankSparseDecomposition(L=L, S=np.zeros_like(X), rank_of_L=k, iterations=1,
                                      converged=True, method="pca")


def rpca(X: DenseMatrix, lambda_: Optional[float] = None, rho: float = 1.5,
         tol: float = 1e-7, max_iters: int = 1000) -> LowRankSparseDecomposition:
    """Robust PCA: ``min ||L||_* + lambda ||S||_1  s.t.  X = L + S``.

    ``lambda_=None`` uses ``1 / sqrt(n)``.
    """
    X = as_matrix(X, "X")
    n = X.shape[0]
    lam = 1.0 / math.sqrt(n) if lambda_ is None else float(lambda_)
    if not lam > 0:
        raise InvalidParameterError(f"lambda must be > 0, got {lam}")
    if rho <= 1:
        raise InvalidParameterError(f"rho must be > 1, got {rho}")

    norm_x = frobenius_norm(X)
    if norm_x == 0.0:
        return LowRankSparseDecomposition(L=np.zeros_like(X), S=np.zeros_like(X), rank_of_L=0,
                                          iterations=0, converged=True, method="rpca", lambda_=lam)

    sigma1 = float(np.linalg.norm(X, 2))
    Y = X / max(sigma1, float(np.abs(X).max()) / lam)
    mu = 1.25 / sigma1
    mu_bar = mu * 1e7
    S = np.zeros_like(X)
    L = np.zeros_like(X)
    rank = 0
    converged = False
    iteration = 0
    for iteration in range(1, max_iters + 1):
        L, rank = singular_value_threshold(X - S + Y / mu, 1.0 / mu)
        S = elementwise_l1_prox(X - L + Y / mu, np.full(X.shape, lam / mu))
        gap = X - L - S
        Y = Y + mu * gap
        mu = min(rho * mu, mu_bar)
        if frobenius_norm(gap) / norm_x < tol:
            converged = True
            break

    if not converged:
        logger.warning(f"RPCA did not converge in {max_iters} iterations (lambda={lam:.4g})")
    logger.debug(f"RPCA: {iteration} iterations, rank(L)={rank}")
    return LowRankSparseDecomposition(L=L, S=S, rank_of_L=rank, iterations=iteration,
                                      converged=converged, method="rpca", lambda_=lam)


def _row_sparse_pursuit(M: DenseMatrix, lam: float, tol: float, max_iters: int,
                        rho: float = 1.5) -> Tuple[DenseMatrix, DenseMatrix, int, int, bool]:
    """``min ||L||_* + lam * sum_i ||S(i, :)||_2  s.t.  M = L + S``."""
    norm_m = frobenius_norm(M)
    if norm_m == 0.0:
        return np.zeros_like(M), np.zeros_like(M), 0, 0, True

    sigma1 = float(np.linalg.norm(M, 2))
    # Dual norm of the row-group norm is the largest row norm
    Y = M / max(sigma1, float(np.linalg.norm(M, axis=1).max()) / lam)
    mu = 1.25 / sigma1
    mu_bar = mu * 1e7
    thresholds = np.empty(M.shape[0])
    S = np.zeros_like(M)
    L = np.zeros_like(M)
    rank = 0
    converged = False
    iteration = 0
    for iteration in range(1, max_iters + 1):
        L, rank = singular_value_threshold(M - S + Y / mu, 1.0 / mu)
        thresholds.fill(lam / mu)
        S = columnwise_l2_prox((M - L + Y / mu).T, thresholds).T
        gap = M - L - S
        Y = Y + mu * gap
        mu = min(rho * mu, mu_bar)
        if frobenius_norm(gap) / norm_m < tol:
            converged = True
            break
    return L, S, rank, iteration, converged


def outlier_pursuit(X: DenseMatrix, lambda_: Optional[float] = None,
                    target_rank: Optional[int] = None, tol: float = 1e-7,
                    max_iters: int = 1000, bisect_iters: int = 40) -> LowRankSparseDecomposition:
    """Outlier Pursuit on ``X^T`` so that whole features become outliers.

    Rows of ``X^T`` are features, so the row-group penalty selects features;
    the result is transposed back, leaving ``S`` column-sparse in the original
    orientation. With ``target_rank`` set, lambda is chosen by bisection on a
    log scale so that ``rank(L)`` equals the target; if no lambda in the
    bracket reaches it, the decomposition with the nearest rank is returned
    and ``target_rank_met`` is False.
    """
    X = as_matrix(X, "X")
    M = np.ascontiguousarray(X.T)

    if target_rank is None:
        if lambda_ is None or not lambda_ > 0:
            raise InvalidParameterError("outlier_pursuit needs lambda > 0 or a target_rank")
        L, S, rank, iters, converged = _row_sparse_pursuit(M, float(lambda_), tol, max_iters)
        if not converged:
            logger.warning(f"Outlier Pursuit did not converge in {max_iters} iterations")
        return LowRankSparseDecomposition(L=np.ascontiguousarray(L.T), S=np.ascontiguousarray(S.T),
                                          rank_of_L=rank, iterations=iters, converged=converged,
                                          method="op", lambda_=float(lambda_))

    if not 0 <= target_rank <= min(X.shape):
        raise InvalidParameterError(f"target_rank={target_rank} outside [0, {min(X.shape)}]")
    return _tune_outlier_pursuit(M, target_rank, lambda_, tol, max_iters, bisect_iters)


def _tune_outlier_pursuit(M: DenseMatrix, target_rank: int, lambda_hint: Optional[float],
                          tol: float, max_iters: int, bisect_iters: int) -> LowRankSparseDecomposition:
    """Bisection on log(lambda); rank(L) grows with lambda."""
    total_iters = 0
    best = None

    def run(lam: float):
        nonlocal total_iters, best
        L, S, rank, iters, converged = _row_sparse_pursuit(M, lam, tol, max_iters)
        total_iters += iters
        candidate = (abs(rank - target_rank), -lam, lam, L, S, rank, converged)
        if best is None or candidate[:2] < best[:2]:
            best = candidate
        logger.debug(f"OP tuning: lambda={lam:.5g} -> rank {rank}")
        return rank

    center = lambda_hint if lambda_hint and lambda_hint > 0 else 1.0 / math.sqrt(max(M.shape))
    lo, hi = math.log(center) - math.log(100.0), math.log(center) + math.log(100.0)
    # Widen the bracket until it straddles the target (a few decades at most)
    for _ in range(6):
        if run(math.exp(lo)) <= target_rank:
            break
        lo -= math.log(10.0)
    for _ in range(6):
        if run(math.exp(hi)) >= target_rank:
            break
        hi += math.log(10.0)

    if best[0] != 0:
        for _ in range(bisect_iters):
            mid = 0.5 * (lo + hi)
            rank = run(math.exp(mid))
            if rank == target_rank:
                break
            if rank < target_rank:
                lo = mid
            else:
                hi = mid

    _, _, lam, L, S, rank, converged = best
    if rank != target_rank:
        logger.warning(f"Outlier Pursuit tuning reached rank {rank}, not the target {target_rank} "
                       f"(nearest lambda={lam:.5g})")
    else:
        logger.debug(f"Outlier Pursuit tuned lambda={lam:.5g} for rank {rank}")
    return LowRankSparseDecomposition(L=np.ascontiguousarray(L.T), S=np.ascontiguousarray(S.T),
                                      rank_of_L=rank, iterations=total_iters, converged=converged,
                                      method="op", lambda_=lam, target_rank=target_rank)
