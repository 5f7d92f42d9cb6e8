"""Evaluation metrics and model selection."""

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import ArrayLike
from sklearn.cluster import KMeans
from sklearn.metrics import silhouette_score

from .exceptions import DimensionMismatchError, InvalidParameterError, PathNotTerminatedError
from .hsl import HslConfig, HslModel, fit_warm_start_path
from .linalg import DenseMatrix, as_matrix, frobenius_norm, svd
from ..utils.logger import logger

REPORT_SCHEMA_VERSION = 1
DEFAULT_ZERO_TOL = 1e-6


@dataclass
class FitReport:
    """Metrics of one fitted method on one dataset."""

    method_name: str
    subspace_error: float = float("nan")
    s_error: float = float("nan")
    s_error_normalized: float = float("nan")
    f1: float = float("nan")
    precision: float = float("nan")
    recall: float = float("nan")
    reconstruction_error: float = float("nan")
    silhouette: Optional[float] = None
    aic: Optional[float] = None
    iterations: int = 0
    converged: bool = True
    wall_time_seconds: float = 0.0
    seed: int = 0
    gamma: Optional[float] = None
    lambda_: Optional[float] = None
    rank_of_L: Optional[int] = None
    schema_version: int = REPORT_SCHEMA_VERSION

    def to_dict(self) -> dict:
        """Convert to dictionary (NaN becomes None for JSON)."""
        data = asdict(self)
        return {key: (None if isinstance(value, float) and math.isnan(value) else value)
                for key, value in data.items()}

    @classmethod
    def from_dict(cls, data: dict) -> "FitReport":
        """Create from dictionary."""
        values = {}
        for name in cls.__dataclass_fields__:
            if name in data:
                value = data[name]
                if value is None and name not in ("silhouette", "aic", "gamma", "lambda_", "rank_of_L"):
                    value = float("nan")
                values[name] = value
        return cls(**values)


def subspace_error(L_hat: DenseMatrix, V: DenseMatrix, k: Optional[int] = None) -> float:
    """Normalised projector distance between ``span(V)`` and the top-k row space of ``L_hat``.

    ``||V V^T - Vh Vh^T||_F / sqrt(2k)``: 0 for equal subspaces, 1 for
    orthogonal ones.
    """
    k = V.shape[1] if k is None else k
    if k < 1 or k > min(L_hat.shape):
        raise InvalidParameterError(f"k={k} not supported by L_hat of shape {L_hat.shape}")
    if V.shape != (L_hat.shape[1], k):
        raise DimensionMismatchError(f"basis has shape {V.shape}, expected {(L_hat.shape[1], k)}")
    V_hat = svd(L_hat).Vt[:k].T
    # ||P - Ph||_F^2 = 2k - 2 ||V^T Vh||_F^2 avoids forming p x p projectors
    overlap = float(np.sum((V.T @ V_hat) ** 2))
    return math.sqrt(max(2.0 * k - 2.0 * overlap, 0.0) / (2.0 * k))


def s_recovery_error(S_hat: DenseMatrix, S_true: DenseMatrix, normalized: bool = False) -> float:
    """``||S_hat - S_true||_F``, optionally divided by ``||S_true||_F``."""
    if S_hat.shape != S_true.shape:
        raise DimensionMismatchError(f"S_hat {S_hat.shape} vs S_true {S_true.shape}")
    error = frobenius_norm(S_hat - S_true)
    if not normalized:
        return error
    norm = frobenius_norm(S_true)
    return error / norm if norm > 0 else (0.0 if error == 0 else float("inf"))


def support_f1(b_hat: ArrayLike, support_true: Iterable[int],
               zero_tol: float = DEFAULT_ZERO_TOL) -> Tuple[float, float, float]:
    """Precision, recall and F1 of ``{j : |b_hat_j| > zero_tol}`` against the true support."""
    predicted = set(np.flatnonzero(np.abs(np.asarray(b_hat, dtype=np.float64)) > zero_tol).tolist())
    truth = set(int(j) for j in support_true)
    if not predicted and not truth:
        return 1.0, 1.0, 1.0
    if not predicted or not truth:
        return (0.0 if predicted else 1.0), (0.0 if truth else 1.0), 0.0
    hits = len(predicted & truth)
    precision = hits / len(predicted)
    recall = hits / len(truth)
    f1 = 0.0 if hits == 0 else 2.0 * precision * recall / (precision + recall)
    return precision, recall, f1


def reconstruction_error(X: DenseMatrix, L_hat: DenseMatrix) -> float:
    """Euclidean distance ``||X - L_hat||_F``."""
    if X.shape != L_hat.shape:
        raise DimensionMismatchError(f"X {X.shape} vs L_hat {L_hat.shape}")
    return frobenius_norm(X - L_hat)


def kmeans(points: DenseMatrix, num_clusters: int, seed: int = 0, restarts: int = 10) -> np.ndarray:
    """Lloyd's algorithm from k-means++ seeds, best of ``restarts`` by inertia."""
    points = as_matrix(points, "points")
    if not 1 <= num_clusters <= points.shape[0]:
        raise InvalidParameterError(f"num_clusters={num_clusters} for {points.shape[0]} points")
    model = KMeans(n_clusters=num_clusters, init="k-means++", n_init=restarts,
                   random_state=seed % (2 ** 32))
    return model.fit_predict(points)


def silhouette(points: DenseMatrix, labels: ArrayLike) -> float:
    """Mean silhouette with Euclidean distances; 0 for a single cluster or identical points."""
    points = as_matrix(points, "points")
    labels = np.asarray(labels)
    if labels.shape[0] != points.shape[0]:
        raise DimensionMismatchError(f"{labels.shape[0]} labels for {points.shape[0]} points")
    num_labels = np.unique(labels).size
    if num_labels < 2 or num_labels >= points.shape[0]:
        return 0.0
    if np.all(points == points[0]):
        return 0.0
    return float(silhouette_score(points, labels, metric="euclidean"))


def cluster_quality(points: DenseMatrix, num_clusters: int, initializations: int,
                    seed: int = 0) -> Tuple[float, float]:
    """Mean and standard deviation of silhouette over independently seeded k-means runs."""
    scores = [silhouette(points, kmeans(points, num_clusters, seed=seed + i, restarts=1))
              for i in range(initializations)]
    return float(np.mean(scores)), float(np.std(scores))


def aic_degrees_of_freedom(model: HslModel, zero_tol: float = 0.0) -> int:
    """``k (n + p) + (n + 1) * #{j : |b_j| > zero_tol}``."""
    n, p = model.shape
    active = int(np.count_nonzero(np.abs(model.b) > zero_tol))
    return model.k * (n + p) + (n + 1) * active


def aic_score(X: DenseMatrix, model: HslModel) -> float:
    """``n p ln(RSS / (n p)) + 2 df`` for a fitted HSL model."""
    n, p = X.shape
    R = X - model.low_rank() - model.high_dim()
    rss = max(float(np.vdot(R, R)), np.finfo(float).tiny)
    return n * p * math.log(rss / (n * p)) + 2.0 * aic_degrees_of_freedom(model)


@dataclass(eq=False)
class AicSelection:
    """Outcome of an AIC grid search."""

    model: HslModel
    lambda_: float
    gamma: float
    aic: float
    table: List[Dict[str, float]] = field(default_factory=list)


def select_by_aic(X: DenseMatrix, lambdas: Sequence[float], config: HslConfig) -> AicSelection:
    """Grid search over lambda and every warm-start path element, minimising AIC.

    Ties keep the first cell in (lambda, path order), so the selection is
    reproducible for fixed data, grid and seed.
    """
    X = as_matrix(X, "X")
    if not lambdas:
        raise InvalidParameterError("empty lambda grid")
    logger.info(f"AIC degrees of freedom: k(n+p) + (n+1)*|active gates|, k={config.k}")
    table = []
    best: Optional[AicSelection] = None
    for lam in lambdas:
        try:
            path, terminated = fit_warm_start_path(X, lam, config.eta, config), True
        except PathNotTerminatedError as e:
            logger.warning(f"AIC grid: lambda={lam:.4g} path did not terminate, scoring its fits: {e}")
            path, terminated = e.path, False
        for model in path:
            score = aic_score(X, model)
            table.append({"lambda": float(lam), "gamma": model.gamma_at_fit, "aic": score,
                          "active_features": int(np.count_nonzero(model.b)),
                          "path_terminated": terminated})
            if best is None or score < best.aic:
                best = AicSelection(model=model, lambda_=float(lam), gamma=model.gamma_at_fit, aic=score)
    best.table = table
    logger.info(f"AIC selected lambda={best.lambda_:.4g}, gamma={best.gamma:.4g} (AIC {best.aic:.6g})")
    return best


@dataclass(eq=False)
class SpectrumProfile:
    """Singular value spectrum with head/tail summaries."""

    singular_values: np.ndarray
    k: Optional[int]
    head_drop: Optional[float]
    tail_half_ratio: float

    def ratio(self, index: int) -> float:
        """``sigma_index / sigma_1`` with a 1-based index."""
        s = self.singular_values
        if not 1 <= index <= s.size:
            raise InvalidParameterError(f"index {index} outside [1, {s.size}]")
        return float(s[index - 1] / s[0]) if s[0] > 0 else 0.0

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "head_drop": self.head_drop,
            "tail_half_ratio": self.tail_half_ratio,
            "num_singular_values": int(self.singular_values.size),
            "sigma_1": float(self.singular_values[0]) if self.singular_values.size else 0.0,
        }


def spectrum_profile(X: DenseMatrix, k: Optional[int] = None) -> SpectrumProfile:
    """Full spectrum, ``sigma_{k+1} / sigma_1`` and ``sigma_{ceil(r/2)} / sigma_1``."""
    X = as_matrix(X, "X")
    s = svd(X).singular_values
    profile = SpectrumProfile(singular_values=s, k=k, head_drop=None, tail_half_ratio=0.0)
    profile.tail_half_ratio = profile.ratio(math.ceil(s.size / 2))
    if k is not None and k < s.size:
        profile.head_drop = profile.ratio(k + 1)
    return profile


class Stopwatch:
    """Wall-clock timer used for report timings."""

    def __enter__(self) -> "Stopwatch":
        self.start = time.perf_counter()
        self.elapsed = 0.0
        return self

    def __exit__(self, *exc) -> None:
        self.elapsed = time.perf_counter() - self.start
