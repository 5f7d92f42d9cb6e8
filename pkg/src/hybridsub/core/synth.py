"""Synthetic data with known low-rank and high-dimensional structure."""

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

from .exceptions import InvalidParameterError
from .linalg import (
    DenseMatrix,
    RngStream,
    freeze,
    numerical_rank,
    sample_gaussian,
    sample_uniform_shell,
)
from ..utils.helpers import parse_theta
from ..utils.logger import logger

LOW_RANK, HIGH_DIM, BOTH = 0, 1, 2

# Magnitude range of loadings and gates
SHELL = (0.5, 1.5)
_MAX_REJECTIONS = 20


@dataclass(frozen=True)
class SynthSpec:
    """Generator parameters.

    ``num_highd`` switches to the fixed-count variant: exactly that many
    features are high-d and the rest low-rank (``theta`` is then ignored).
    ``highd_scale`` multiplies the high-d component; values below 1 make its
    features harder to tell apart from the low-rank ones.
    """

    n: int = 100
    p: int = 200
    k: int = 20
    sigma2: float = 1.0
    theta: Tuple[float, float, float] = (0.9, 0.1, 0.0)
    seed: int = 0
    num_highd: Optional[int] = None
    highd_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "theta", parse_theta(self.theta))
        if min(self.n, self.p, self.k) < 1:
            raise InvalidParameterError("n, p and k must be >= 1")
        if self.k > min(self.n, self.p):
            raise InvalidParameterError(f"k={self.k} exceeds min(n, p)={min(self.n, self.p)}")
        if self.sigma2 < 0:
            raise InvalidParameterError(f"sigma2 must be >= 0, got {self.sigma2}")
        if self.num_highd is not None and not 0 <= self.num_highd <= self.p:
            raise InvalidParameterError(f"num_highd={self.num_highd} outside [0, {self.p}]")
        if self.highd_scale < 0:
            raise InvalidParameterError(f"highd_scale must be >= 0, got {self.highd_scale}")

    @classmethod
    def from_settings(cls, settings) -> "SynthSpec":
        values = settings.get_category("synth")
        return cls(
            n=int(values["n"]), p=int(values["p"]), k=int(values["k"]),
            sigma2=float(values["sigma2"]), theta=tuple(values["theta"]),
            seed=int(values["seed"]),
            num_highd=None if values.get("num_highd") is None else int(values["num_highd"]),
            highd_scale=float(values.get("highd_scale", 1.0)),
        )

    def with_seed(self, seed: int) -> "SynthSpec":
        return replace(self, seed=int(seed))

    def to_dict(self) -> dict:
        data = asdict(self)
        data["theta"] = list(self.theta)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "SynthSpec":
        return cls(
            n=data.get("n", 100), p=data.get("p", 200), k=data.get("k", 20),
            sigma2=data.get("sigma2", 1.0), theta=tuple(data.get("theta", (0.9, 0.1, 0.0))),
            seed=data.get("seed", 0), num_highd=data.get("num_highd"),
            highd_scale=data.get("highd_scale", 1.0),
        )


@dataclass(frozen=True, eq=False)
class SynthInstance:
    """Generated data with its ground truth.

    ``X = true_Z true_A + true_W diag(true_b) + E``; the noise ``E`` is not
    stored.
    """

    X: DenseMatrix
    true_Z: DenseMatrix
    true_A: DenseMatrix
    true_W: DenseMatrix
    true_b: np.ndarray
    support_lowr: np.ndarray
    support_highd: np.ndarray
    spec: SynthSpec = field(default_factory=SynthSpec)

    def __post_init__(self):
        for array in (self.X, self.true_Z, self.true_A, self.true_W, self.true_b,
                      self.support_lowr, self.support_highd):
            freeze(array)

    @property
    def true_L(self) -> DenseMatrix:
        return self.true_Z @ self.true_A

    @property
    def true_S(self) -> DenseMatrix:
        return self.true_W * self.true_b[np.newaxis, :]

    def true_basis(self) -> DenseMatrix:
        """Orthonormal basis (p x r) of the row space of the true low-rank component."""
        L = self.true_L
        if not np.any(L):
            return np.zeros((L.shape[1], 0))
        _, s, Vt = np.linalg.svd(L, full_matrices=False)
        r = int(np.sum(s > 1e-10 * s[0]))
        return np.ascontiguousarray(Vt[:r].T)


def _memberships(spec: SynthSpec, rng: RngStream) -> np.ndarray:
    """Per-feature component label (LOW_RANK, HIGH_DIM or BOTH)."""
    g = rng.generator
    if spec.num_highd is not None:
        labels = np.full(spec.p, LOW_RANK)
        labels[g.choice(spec.p, size=spec.num_highd, replace=False)] = HIGH_DIM
        return labels
    return g.choice(3, size=spec.p, p=np.asarray(spec.theta))


def generate_hybrid(spec: SynthSpec, stream_id: int = 0) -> SynthInstance:
    """Hybrid generator: low-rank features ``Z A`` plus gated high-d features ``W diag(b)``.

    Rows of Z and W are standard normal; loadings are uniform on
    ``[-1.5, -0.5] U [0.5, 1.5]`` and gates on ``sqrt(k)`` times that set.
    A feature labelled low-rank has its gate zeroed, a high-d feature its
    loading column; features labelled ``BOTH`` keep both.
    """
    rng = RngStream(spec.seed, stream_id)
    n, p, k = spec.n, spec.p, spec.k
    labels = _memberships(spec, rng)
    Z = sample_gaussian(rng, n, k)
    W = sample_gaussian(rng, n, p)
    A = sample_uniform_shell(rng, *SHELL, size=(k, p))
    b = math.sqrt(k) * sample_uniform_shell(rng, *SHELL, size=p) * spec.highd_scale
    A[:, labels == HIGH_DIM] = 0.0
    b[labels == LOW_RANK] = 0.0
    E = sample_gaussian(rng, n, p, 0.0, spec.sigma2)
    X = Z @ A + W * b[np.newaxis, :] + E

    support_highd = np.flatnonzero(b != 0.0)
    support_lowr = np.flatnonzero(np.any(A != 0.0, axis=0))
    logger.debug(f"generate_hybrid: n={n}, p={p}, k={k}, {support_highd.size} high-d features")
    return SynthInstance(X=X, true_Z=Z, true_A=A, true_W=W, true_b=b,
                         support_lowr=support_lowr, support_highd=support_highd, spec=spec)


def generate_categorical(spec: SynthSpec, stream_id: int = 0) -> SynthInstance:
    """Spectrum-study generator: each column is either ``Z A(:, j)`` or ``W(:, j)`` plus noise.

    Z has N(0, 1/k) entries so both kinds of column carry unit variance per
    entry; A and W are standard normal. Rank-deficient draws of Z or A are
    rejected and redrawn.
    """
    if spec.theta[2] != 0.0:
        raise InvalidParameterError("categorical generator requires theta_3 = 0")
    rng = RngStream(spec.seed, stream_id)
    n, p, k = spec.n, spec.p, spec.k
    labels = _memberships(spec, rng)

    for _ in range(_MAX_REJECTIONS):
        Z = sample_gaussian(rng, n, k, 0.0, 1.0 / k)
        A = sample_gaussian(rng, k, p)
        if numerical_rank(Z) == k and numerical_rank(A) == k:
            break
        logger.debug("generate_categorical: rank-deficient factor, redrawing")
    else:
        raise InvalidParameterError("could not draw full-rank factors")

    W = sample_gaussian(rng, n, p) * spec.highd_scale
    E = sample_gaussian(rng, n, p, 0.0, spec.sigma2)
    high = labels == HIGH_DIM
    A[:, high] = 0.0
    b = high.astype(np.float64)
    W[:, ~high] = 0.0
    X = Z @ A + W + E
    return SynthInstance(X=X, true_Z=Z, true_A=A, true_W=W, true_b=b,
                         support_lowr=np.flatnonzero(~high), support_highd=np.flatnonzero(high),
                         spec=spec)
