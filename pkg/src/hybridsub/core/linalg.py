"""Dense matrix arithmetic, factorizations, norms and seeded sampling.

Matrices are plain ``numpy.ndarray`` objects in float64, C (row-major)
order. ``as_matrix`` is the single gate through which external data enters
the library: it enforces the shape, dtype and finiteness invariants that the
rest of the package relies on.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike

from .exceptions import (
    DimensionMismatchError,
    InvalidParameterError,
    NonFiniteError,
    SvdConvergenceError,
)
from ..utils.logger import logger

DenseMatrix = np.ndarray


def as_matrix(data: ArrayLike, name: str = "matrix") -> DenseMatrix:
    """Convert ``data`` to a finite 2-D float64 row-major array."""
    m = np.array(data, dtype=np.float64, order="C", copy=True)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise DimensionMismatchError(f"{name} must be 2-D, got {m.ndim} dimensions")
    if not np.all(np.isfinite(m)):
        raise NonFiniteError(f"{name} contains NaN or Inf entries")
    return m


def as_vector(data: ArrayLike, name: str = "vector") -> np.ndarray:
    """Convert ``data`` to a finite 1-D float64 array."""
    v = np.array(data, dtype=np.float64, copy=True).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise NonFiniteError(f"{name} contains NaN or Inf entries")
    return v


def freeze(m: np.ndarray) -> np.ndarray:
    """Mark an array read-only so it can be shared between threads."""
    m.flags.writeable = False
    return m


def _require_same_shape(a: DenseMatrix, b: DenseMatrix, op: str) -> None:
    if a.shape != b.shape:
        raise DimensionMismatchError(f"{op}: shapes {a.shape} and {b.shape} differ")


def matmul(a: DenseMatrix, b: DenseMatrix) -> DenseMatrix:
    """Standard matrix product ``a @ b``."""
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionMismatchError(f"matmul: cannot multiply {a.shape} by {b.shape}")
    return a @ b


def add(a: DenseMatrix, b: DenseMatrix) -> DenseMatrix:
    _require_same_shape(a, b, "add")
    return a + b


def sub(a: DenseMatrix, b: DenseMatrix) -> DenseMatrix:
    _require_same_shape(a, b, "sub")
    return a - b


def hadamard(a: DenseMatrix, b: DenseMatrix) -> DenseMatrix:
    _require_same_shape(a, b, "hadamard")
    return a * b


def scale(m: DenseMatrix, factor: float) -> DenseMatrix:
    return m * float(factor)


def transpose(m: DenseMatrix) -> DenseMatrix:
    return np.ascontiguousarray(m.T)


def column_scale(m: DenseMatrix, v: ArrayLike) -> DenseMatrix:
    """Return ``m @ diag(v)``: column j multiplied by ``v[j]``."""
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if m.ndim != 2 or v.shape[0] != m.shape[1]:
        raise DimensionMismatchError(
            f"column_scale: vector of length {v.shape[0]} for {m.shape} matrix"
        )
    return m * v[np.newaxis, :]


def frobenius_norm(m: DenseMatrix) -> float:
    return float(np.linalg.norm(m, "fro")) if m.size else 0.0


def column_l2_norms(m: DenseMatrix) -> np.ndarray:
    return np.linalg.norm(m, axis=0)


@dataclass(frozen=True, eq=False)
class SvdResult:
    """Thin SVD ``U diag(singular_values) Vt``."""

    U: DenseMatrix
    singular_values: np.ndarray
    Vt: DenseMatrix

    @property
    def rank(self) -> int:
        return int(self.singular_values.shape[0])

    def truncate(self, k: int) -> "SvdResult":
        """Keep the leading ``k`` triplets."""
        if not 0 <= k <= self.rank:
            raise InvalidParameterError(f"truncate: k={k} outside [0, {self.rank}]")
        return SvdResult(self.U[:, :k], self.singular_values[:k], self.Vt[:k, :])

    def reconstruct(self) -> DenseMatrix:
        return (self.U * self.singular_values[np.newaxis, :]) @ self.Vt


def svd(m: DenseMatrix) -> SvdResult:
    """Full thin SVD with r = min(rows, cols) triplets.

    ``gesdd`` is tried first; on LAPACK non-convergence the slower but more
    robust ``gesvd`` driver is used before giving up.
    """
    if m.ndim != 2 or m.size == 0:
        raise DimensionMismatchError(f"svd: matrix must be nonempty 2-D, got shape {m.shape}")
    for driver in ("gesdd", "gesvd"):
        try:
            U, s, Vt = scipy.linalg.svd(
                m, full_matrices=False, check_finite=False, lapack_driver=driver
            )
            return SvdResult(U, s, Vt)
        except np.linalg.LinAlgError as e:
            logger.warning(f"SVD driver {driver} failed on {m.shape} matrix: {e}")
    raise SvdConvergenceError(f"SVD did not converge for {m.shape} matrix")


def numerical_rank(m: DenseMatrix, rtol: float = 1e-10) -> int:
    """Number of singular values above ``rtol * sigma_1``."""
    s = svd(m).singular_values
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


@dataclass
class RngStream:
    """Seeded random stream identified by ``(seed, stream_id)``.

    Streams with distinct ``stream_id`` under one seed are statistically
    independent; identical pairs replay identical sequences. Instances are
    single-owner: give every parallel task its own stream.
    """

    seed: int
    stream_id: int = 0
    _generator: Optional[np.random.Generator] = field(default=None, init=False, repr=False)

    @property
    def generator(self) -> np.random.Generator:
        if self._generator is None:
            sequence = np.random.SeedSequence(
                entropy=int(self.seed) & 0xFFFFFFFFFFFFFFFF,
                spawn_key=(int(self.stream_id) & 0xFFFFFFFFFFFFFFFF,),
            )
            self._generator = np.random.Generator(np.random.PCG64(sequence))
        return self._generator

    def child(self, stream_id: int) -> "RngStream":
        """A fresh stream sharing this seed."""
        return RngStream(self.seed, stream_id)


def sample_gaussian(rng: RngStream, rows: int, cols: int,
                    mean: float = 0.0, variance: float = 1.0) -> DenseMatrix:
    """i.i.d. N(mean, variance) entries."""
    if variance < 0:
        raise InvalidParameterError(f"variance must be >= 0, got {variance}")
    if rows < 0 or cols < 0:
        raise InvalidParameterError(f"invalid shape ({rows}, {cols})")
    if variance == 0:
        return np.full((rows, cols), float(mean))
    return rng.generator.normal(mean, np.sqrt(variance), size=(rows, cols))


def sample_uniform_shell(rng: RngStream, lo_mag: float, hi_mag: float,
                         size: Union[None, int, Sequence[int], Tuple[int, ...]] = None
                         ) -> Union[float, np.ndarray]:
    """Uniform draws from ``[-hi, -lo] U [lo, hi]``.

    Returns a float when ``size`` is None, else an array of that shape.
    """
    if not 0 <= lo_mag < hi_mag:
        raise InvalidParameterError(f"need 0 <= lo < hi, got lo={lo_mag}, hi={hi_mag}")
    g = rng.generator
    magnitude = g.uniform(lo_mag, hi_mag, size=size)
    sign = np.where(g.random(size=size) < 0.5, -1.0, 1.0)
    out = sign * magnitude
    if size is None:
        return float(out)
    return out
