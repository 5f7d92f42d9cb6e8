"""Hybrid subspace learning: objective, gradients and solvers.

The model decomposes ``X (n x p)`` as ``Z A + W diag(b)`` where ``Z A`` is a
rank-k component and ``W diag(b)`` carries the features that stay in the
original space. It minimises

    ||X - Z A - W diag(b)||_F^2 + gamma * sum_j |b_j| ||A_j||_2 + lambda * ||b||_1

subject to ``||Z||_F <= 1`` and ``||W||_F <= 1``. The problem is convex in
``{W, A}`` for fixed ``{Z, b}`` and vice versa, so ``fit`` alternates two
accelerated proximal gradient solves. ``fit_warm_start_path`` raises gamma
from zero, warm-starting every fit, until no feature is shared by both
components.
"""

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import (
    DimensionMismatchError,
    InvalidParameterError,
    NonFiniteError,
    PathNotTerminatedError,
)
from .linalg import (
    DenseMatrix,
    RngStream,
    as_matrix,
    column_l2_norms,
    freeze,
    sample_gaussian,
    svd,
)
from .prox import columnwise_l2_prox, elementwise_l1_prox, lf_project
from ..utils.logger import logger

# Slack allowed on the sufficient-decrease test, relative to the smooth value
_DECREASE_SLACK = 1e-12
_MIN_STEP = 1e-300
INIT_METHODS = ("spectral", "random")


@dataclass(frozen=True)
class HslConfig:
    """Hyperparameters and solver controls for HSL."""

    k: int = 20
    lambda_: float = 0.01
    gamma: float = 0.0
    alpha0: Optional[float] = None
    eta: Optional[float] = None
    eta_rule: str = "kkt"
    inner_tol: float = 1e-7
    outer_tol: float = 1e-6
    max_inner_iters: int = 500
    max_outer_iters: int = 100
    overlap_eps: float = 1e-8
    max_path_steps: int = 300
    backtrack: float = 0.5
    seed: int = 0
    init_stream: int = 0
    init: str = "spectral"

    def __post_init__(self):
        if self.k < 1:
            raise InvalidParameterError(f"k must be >= 1, got {self.k}")
        if self.lambda_ < 0 or self.gamma < 0:
            raise InvalidParameterError("lambda and gamma must be >= 0")
        if self.eta is not None and self.eta < 0:
            raise InvalidParameterError(f"eta must be >= 0, got {self.eta}")
        if self.alpha0 is not None and not self.alpha0 > 0:
            raise InvalidParameterError(f"alpha0 must be > 0, got {self.alpha0}")
        if min(self.inner_tol, self.outer_tol, self.overlap_eps) <= 0:
            raise InvalidParameterError("tolerances must be > 0")
        if self.max_inner_iters < 1 or self.max_outer_iters < 1 or self.max_path_steps < 1:
            raise InvalidParameterError("iteration caps must be >= 1")
        if not 0 < self.backtrack < 1:
            raise InvalidParameterError(f"backtrack factor must be in (0, 1), got {self.backtrack}")
        if self.eta_rule not in ("kkt", "column-energy"):
            raise InvalidParameterError(f"unknown eta rule '{self.eta_rule}'")
        if self.init not in INIT_METHODS:
            raise InvalidParameterError(f"unknown init method '{self.init}'")

    @classmethod
    def from_settings(cls, settings) -> "HslConfig":
        """Build from the ``hsl`` category of a ``Settings`` object."""
        values = settings.get_category("hsl")
        return cls(
            k=int(values["k"]),
            lambda_=float(values["lambda"]),
            gamma=float(values["gamma"]),
            alpha0=None if values.get("alpha0") is None else float(values["alpha0"]),
            eta=None if values.get("eta") is None else float(values["eta"]),
            eta_rule=str(values.get("eta_rule", "kkt")),
            inner_tol=float(values["inner_tol"]),
            outer_tol=float(values["outer_tol"]),
            max_inner_iters=int(values["max_inner_iters"]),
            max_outer_iters=int(values["max_outer_iters"]),
            overlap_eps=float(values["overlap_eps"]),
            max_path_steps=int(values["max_path_steps"]),
            seed=int(values["seed"]),
            init_stream=int(values.get("init_stream", 0)),
            init=str(values.get("init", "spectral")),
        )

    def with_gamma(self, gamma: float) -> "HslConfig":
        return replace(self, gamma=float(gamma))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class HslModel:
    """Fitted (or initial) HSL factors.

    ``objective_trace`` holds the full objective before the first outer
    iteration followed by its value after every outer iteration.
    ``monotone`` is False when some outer iteration raised the objective by
    more than 1e-10.
    """

    Z: DenseMatrix
    A: DenseMatrix
    W: DenseMatrix
    b: np.ndarray
    gamma_at_fit: float = float("nan")
    lambda_at_fit: float = float("nan")
    objective_trace: Tuple[float, ...] = field(default_factory=tuple)
    converged: bool = False
    outer_iterations: int = 0
    monotone: bool = True

    def __post_init__(self):
        for array in (self.Z, self.A, self.W, self.b):
            freeze(array)

    @property
    def k(self) -> int:
        return self.Z.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.W.shape

    @property
    def final_objective(self) -> float:
        return self.objective_trace[-1] if self.objective_trace else float("nan")

    def low_rank(self) -> DenseMatrix:
        """The low-rank component ``Z A``."""
        return self.Z @ self.A

    def high_dim(self) -> DenseMatrix:
        """The high-dimensional component ``W diag(b)``."""
        return self.W * self.b[np.newaxis, :]

    def overlap(self) -> float:
        """``||A diag(b)||_{1,2}``; zero once every feature picked one component."""
        return overlap_penalty(self.A, self.b)

    def support(self, zero_tol: float = 1e-6) -> np.ndarray:
        """Indices of features with an active gate ``|b_j| > zero_tol``."""
        return np.flatnonzero(np.abs(self.b) > zero_tol)

    def exclusivity_gap(self) -> float:
        """``max_j min(|b_j|, ||A_j||)``; zero under perfect mutual exclusivity."""
        if self.b.size == 0:
            return 0.0
        return float(np.max(np.minimum(np.abs(self.b), column_l2_norms(self.A))))


def _check_shapes(X: DenseMatrix, Z: DenseMatrix, A: DenseMatrix,
                  W: DenseMatrix, b: np.ndarray) -> None:
    n, p = X.shape
    k = Z.shape[1] if Z.ndim == 2 else -1
    expected = {"Z": (n, k), "A": (k, p), "W": (n, p), "b": (p,)}
    actual = {"Z": Z.shape, "A": A.shape, "W": W.shape, "b": b.shape}
    for name, shape in expected.items():
        if actual[name] != shape:
            raise DimensionMismatchError(
                f"{name} has shape {actual[name]}, expected {shape} for X of shape {X.shape}"
            )


def residual(X: DenseMatrix, Z: DenseMatrix, A: DenseMatrix,
             W: DenseMatrix, b: np.ndarray) -> DenseMatrix:
    """``R = X - Z A - W diag(b)``."""
    _check_shapes(X, Z, A, W, b)
    return X - Z @ A - W * b[np.newaxis, :]


def loss(X: DenseMatrix, Z: DenseMatrix, A: DenseMatrix,
         W: DenseMatrix, b: np.ndarray) -> float:
    """Squared Frobenius residual."""
    R = residual(X, Z, A, W, b)
    return float(np.vdot(R, R))


def overlap_penalty(A: DenseMatrix, b: np.ndarray) -> float:
    """``sum_j |b_j| ||A(:, j)||_2``."""
    return float(np.dot(np.abs(b), column_l2_norms(A)))


def _penalties(A: DenseMatrix, b: np.ndarray, lambda_: float, gamma: float) -> float:
    return gamma * overlap_penalty(A, b) + lambda_ * float(np.sum(np.abs(b)))


def objective_value(X: DenseMatrix, Z: DenseMatrix, A: DenseMatrix, W: DenseMatrix,
                    b: np.ndarray, lambda_: float, gamma: float) -> float:
    """Full objective for explicit factors."""
    return loss(X, Z, A, W, b) + _penalties(A, b, lambda_, gamma)


def objective(X: DenseMatrix, model: HslModel, lambda_: float, gamma: float) -> float:
    """Full objective ``loss + gamma * psi(A, b) + lambda * ||b||_1`` of a model."""
    return objective_value(X, model.Z, model.A, model.W, model.b, lambda_, gamma)


def grad_W(X, Z, A, W, b) -> DenseMatrix:
    return -2.0 * residual(X, Z, A, W, b) * b[np.newaxis, :]


def grad_A(X, Z, A, W, b) -> DenseMatrix:
    return -2.0 * Z.T @ residual(X, Z, A, W, b)


def grad_Z(X, Z, A, W, b) -> DenseMatrix:
    return -2.0 * residual(X, Z, A, W, b) @ A.T


def grad_b(X, Z, A, W, b) -> np.ndarray:
    return -2.0 * np.einsum("ij,ij->j", W, residual(X, Z, A, W, b))


def loss_gradients(X, Z, A, W, b) -> Tuple[DenseMatrix, DenseMatrix, DenseMatrix, np.ndarray]:
    """All four gradients of the smooth loss from a single residual: (W, A, Z, b)."""
    R = residual(X, Z, A, W, b)
    return (
        -2.0 * R * b[np.newaxis, :],
        -2.0 * Z.T @ R,
        -2.0 * R @ A.T,
        -2.0 * np.einsum("ij,ij->j", W, R),
    )


Blocks = Tuple[np.ndarray, np.ndarray]


def _accelerated_prox_grad(
    x0: Blocks,
    smooth: Callable[[Blocks], float],
    gradient: Callable[[Blocks], Blocks],
    prox: Callable[[Blocks, float], Blocks],
    penalty: Callable[[Blocks], float],
    alpha: float,
    config: HslConfig,
    label: str,
) -> Tuple[Blocks, int, bool]:
    """FISTA with backtracking and monotone restarts on a two-block variable.

    Every accepted iterate has an objective no larger than the previous one;
    when the momentum step would increase it, momentum is reset and the step
    is retried from the current iterate.
    """
    x = x0
    fx = smooth(x) + penalty(x)
    y = x
    t = 1.0
    momentum = False
    converged = False
    iteration = 0

    while iteration < config.max_inner_iters:
        iteration += 1
        fy = smooth(y)
        gy = gradient(y)
        while True:
            candidate = prox((y[0] - alpha * gy[0], y[1] - alpha * gy[1]), alpha)
            d0, d1 = candidate[0] - y[0], candidate[1] - y[1]
            inner = float(np.vdot(gy[0], d0) + np.vdot(gy[1], d1))
            dist2 = float(np.vdot(d0, d0) + np.vdot(d1, d1))
            f_smooth = smooth(candidate)
            bound = fy + inner + dist2 / (2.0 * alpha)
            if f_smooth <= bound + _DECREASE_SLACK * abs(fy):
                break
            alpha *= config.backtrack
            if alpha < _MIN_STEP:
                raise NonFiniteError(f"{label}: step size underflow during line search")

        f_candidate = f_smooth + penalty(candidate)
        if not math.isfinite(f_candidate):
            raise NonFiniteError(f"{label}: objective became non-finite (step {alpha:.3g})")

        if f_candidate > fx:
            if not momentum:
                # Plain step cannot improve at working precision
                converged = True
                break
            y, t, momentum = x, 1.0, False
            continue

        change = (fx - f_candidate) / max(abs(fx), np.finfo(float).tiny)
        x_prev, x, fx = x, candidate, f_candidate
        t_next = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
        beta = (t - 1.0) / t_next
        y = (x[0] + beta * (x[0] - x_prev[0]), x[1] + beta * (x[1] - x_prev[1]))
        momentum = beta > 0.0
        t = t_next
        if change < config.inner_tol:
            converged = True
            break

    logger.debug(f"{label}: {iteration} iterations, objective {fx:.10g}, converged={converged}")
    return x, iteration, converged


def _initial_step(lipschitz: float, config: HslConfig) -> float:
    if config.alpha0 is not None:
        return config.alpha0
    return 1.0 / lipschitz if lipschitz > 0 else 1.0


def fit_inner_WA(X: DenseMatrix, Z: DenseMatrix, b: np.ndarray,
                 W0: DenseMatrix, A0: DenseMatrix, config: HslConfig
                 ) -> Tuple[DenseMatrix, DenseMatrix]:
    """Minimise over ``{W, A}`` with ``{Z, b}`` fixed."""
    _check_shapes(X, Z, A0, W0, b)
    gamma, lambda_ = config.gamma, config.lambda_
    abs_b = np.abs(b)
    b_row = b[np.newaxis, :]

    def smooth(x: Blocks) -> float:
        W, A = x
        R = X - Z @ A - W * b_row
        return float(np.vdot(R, R))

    def gradient(x: Blocks) -> Blocks:
        W, A = x
        R = X - Z @ A - W * b_row
        return -2.0 * R * b_row, -2.0 * Z.T @ R

    def prox(v: Blocks, alpha: float) -> Blocks:
        return lf_project(v[0]), columnwise_l2_prox(v[1], alpha * gamma * abs_b)

    def penalty(x: Blocks) -> float:
        return _penalties(x[1], b, lambda_, gamma)

    sigma_z = np.linalg.norm(Z, 2) if Z.size else 0.0
    b_max = float(abs_b.max()) if b.size else 0.0
    alpha = _initial_step(2.0 * (sigma_z ** 2 + b_max ** 2), config)
    (W, A), _, _ = _accelerated_prox_grad(
        (np.array(W0, dtype=np.float64), np.array(A0, dtype=np.float64)),
        smooth, gradient, prox, penalty, alpha, config, "WA-step")
    return W, A


def fit_inner_Zb(X: DenseMatrix, W: DenseMatrix, A: DenseMatrix,
                 Z0: DenseMatrix, b0: np.ndarray, config: HslConfig
                 ) -> Tuple[DenseMatrix, np.ndarray]:
    """Minimise over ``{Z, b}`` with ``{W, A}`` fixed."""
    _check_shapes(X, Z0, A, W, b0)
    gamma, lambda_ = config.gamma, config.lambda_
    a_norms = column_l2_norms(A)
    b_weights = gamma * a_norms + lambda_

    def smooth(x: Blocks) -> float:
        Z, b = x
        R = X - Z @ A - W * b[np.newaxis, :]
        return float(np.vdot(R, R))

    def gradient(x: Blocks) -> Blocks:
        Z, b = x
        R = X - Z @ A - W * b[np.newaxis, :]
        return -2.0 * R @ A.T, -2.0 * np.einsum("ij,ij->j", W, R)

    def prox(v: Blocks, alpha: float) -> Blocks:
        return lf_project(v[0]), elementwise_l1_prox(v[1], alpha * b_weights)

    def penalty(x: Blocks) -> float:
        return float(np.dot(b_weights, np.abs(x[1])))

    sigma_a = np.linalg.norm(A, 2) if A.size else 0.0
    w_max = float(column_l2_norms(W).max()) if W.size else 0.0
    alpha = _initial_step(2.0 * (sigma_a ** 2 + w_max ** 2), config)
    (Z, b), _, _ = _accelerated_prox_grad(
        (np.array(Z0, dtype=np.float64), np.array(b0, dtype=np.float64)),
        smooth, gradient, prox, penalty, alpha, config, "Zb-step")
    return Z, b


def random_init(n: int, p: int, k: int, rng: RngStream) -> HslModel:
    """Random starting point: small Gaussian Z, W (projected), unit-scale A, b = 1."""
    Z = lf_project(sample_gaussian(rng, n, k, 0.0, 1.0 / (n * k)))
    W = lf_project(sample_gaussian(rng, n, p, 0.0, 1.0 / (n * p)))
    A = sample_gaussian(rng, k, p, 0.0, 1.0 / k)
    b = np.ones(p)
    return HslModel(Z=Z, A=A, W=W, b=b)


def spectral_init(X: DenseMatrix, k: int) -> HslModel:
    """Data-scale starting point with ``Z A + W diag(b) = X``.

    ``Z A`` is the rank-k truncated SVD of X with ``||Z||_F = 1``. The
    residual columns ``R_j`` go to the high-dimensional component with
    ``b_j`` proportional to ``||R_j||^(2/3)``, the split of R that minimises
    ``||b||_1`` under ``||W||_F = 1``.
    """
    X = as_matrix(X, "X")
    n, p = X.shape
    result = svd(X)
    r = min(k, result.rank)
    Z = np.zeros((n, k))
    A = np.zeros((k, p))
    Z[:, :r] = result.U[:, :r] / math.sqrt(k)
    A[:r, :] = math.sqrt(k) * result.singular_values[:r, np.newaxis] * result.Vt[:r, :]
    R = X - Z @ A
    r_norms = column_l2_norms(R)
    weights = np.cbrt(r_norms) ** 2
    total = float(np.sum(weights))
    if total <= 0.0:
        return HslModel(Z=Z, A=A, W=np.zeros((n, p)), b=np.zeros(p))
    b = math.sqrt(total) * weights
    W = np.divide(R, b[np.newaxis, :], out=np.zeros_like(R), where=b[np.newaxis, :] > 0)
    return HslModel(Z=Z, A=A, W=lf_project(W), b=b)


def initial_model(X: DenseMatrix, config: HslConfig) -> HslModel:
    """Starting point for a fit, chosen by ``config.init``."""
    n, p = X.shape
    if config.init == "random":
        return random_init(n, p, config.k, RngStream(config.seed, config.init_stream))
    return spectral_init(X, config.k)


def fit(X: DenseMatrix, config: HslConfig, init: HslModel) -> HslModel:
    """Alternate the ``{W, A}`` and ``{Z, b}`` solves until the objective settles."""
    X = as_matrix(X, "X")
    Z = lf_project(np.array(init.Z, dtype=np.float64))
    A = np.array(init.A, dtype=np.float64)
    W = lf_project(np.array(init.W, dtype=np.float64))
    b = np.array(init.b, dtype=np.float64)
    _check_shapes(X, Z, A, W, b)
    if Z.shape[1] != config.k:
        raise DimensionMismatchError(f"init has k={Z.shape[1]} but config.k={config.k}")

    lambda_, gamma = config.lambda_, config.gamma
    trace = [objective_value(X, Z, A, W, b, lambda_, gamma)]
    converged = False
    monotone = True
    outer = 0
    for outer in range(1, config.max_outer_iters + 1):
        W, A = fit_inner_WA(X, Z, b, W, A, config)
        Z, b = fit_inner_Zb(X, W, A, Z, b, config)
        value = objective_value(X, Z, A, W, b, lambda_, gamma)
        previous = trace[-1]
        trace.append(value)
        if value > previous + 1e-10:
            monotone = False
            logger.error(f"Objective increased at outer iteration {outer}: {previous:.12g} -> {value:.12g}")
        logger.debug(f"outer {outer}: objective {value:.10g}, overlap {overlap_penalty(A, b):.3g}")
        if abs(previous - value) <= config.outer_tol * max(abs(previous), np.finfo(float).tiny):
            converged = True
            break

    if not converged:
        logger.warning(
            f"HSL fit hit max_outer_iters={config.max_outer_iters} at gamma={gamma:.4g} "
            f"(last objective {trace[-1]:.6g})"
        )
    logger.debug(f"HSL fit finished: gamma={gamma:.4g}, {outer} outer iterations, objective {trace[-1]:.8g}")
    return HslModel(Z=Z, A=A, W=W, b=b, gamma_at_fit=gamma, lambda_at_fit=lambda_,
                    objective_trace=tuple(trace), converged=converged, outer_iterations=outer,
                    monotone=monotone)


def gamma_scale(X: DenseMatrix, model: HslModel, lambda_: float, rule: str = "kkt") -> float:
    """Scale of gamma at which overlapping features start to separate.

    ``kkt``: for each feature active in both components, the smallest gamma
    at which zeroing either its loading column or its gate satisfies the
    block optimality condition; the scale is the largest such value.
    ``column-energy``: ``2 * max_j ||X(:, j)||^2``.
    """
    X = as_matrix(X, "X")
    if rule == "column-energy":
        return 2.0 * float(np.max(column_l2_norms(X)) ** 2) if X.size else 0.0

    Z, A, W, b = model.Z, model.A, model.W, model.b
    a_norms = column_l2_norms(A)
    shared = np.flatnonzero((np.abs(b) > 0) & (a_norms > 0))
    if shared.size == 0:
        return 0.0
    low = Z @ A[:, shared]
    high = W[:, shared] * b[shared]
    x = X[:, shared]
    # gamma needed to zero A(:, j): ||2 Z^T (X_j - b_j W_j)|| / |b_j|
    kill_a = np.linalg.norm(2.0 * Z.T @ (x - high), axis=0) / np.abs(b[shared])
    # gamma needed to zero b(j): (|2 W_j^T (X_j - Z A_j)| - lambda) / ||A_j||
    kill_b = np.maximum(np.abs(2.0 * np.einsum("ij,ij->j", W[:, shared], x - low)) - lambda_, 0.0)
    kill_b = kill_b / a_norms[shared]
    return float(np.max(np.minimum(kill_a, kill_b)))


def default_eta(X: DenseMatrix, model: HslModel, lambda_: float, rule: str = "kkt") -> float:
    """gamma increment: one thirtieth of ``gamma_scale``."""
    scale = gamma_scale(X, model, lambda_, rule)
    if scale <= 0.0 and rule == "kkt":
        scale = gamma_scale(X, model, lambda_, "column-energy")
    return scale / 30.0 if scale > 0.0 else 1.0


def fit_warm_start_path(X: DenseMatrix, lambda_: float, eta: Optional[float],
                        config: HslConfig) -> List[HslModel]:
    """Fit an increasing gamma sequence from 0, warm-starting each fit.

    Stops at the first gamma whose fit has ``||A diag(b)||_{1,2} <= overlap_eps``;
    that element's gamma is the path's gamma_max. ``eta=None`` derives the
    increment from the gamma=0 fit (see ``default_eta``).
    """
    X = as_matrix(X, "X")
    if eta is not None and not eta > 0:
        raise InvalidParameterError(f"eta must be > 0, got {eta}")
    cfg = replace(config, lambda_=float(lambda_), gamma=0.0)
    model = initial_model(X, cfg)

    path: List[HslModel] = []
    gamma = 0.0
    step = eta
    for index in range(cfg.max_path_steps + 1):
        model = fit(X, cfg.with_gamma(gamma), model)
        path.append(model)
        overlap = model.overlap()
        logger.debug(f"path step {index}: gamma={gamma:.6g}, overlap={overlap:.3g}")
        if overlap <= cfg.overlap_eps:
            logger.info(f"Warm-start path reached zero overlap at gamma={gamma:.6g} after {index + 1} fits")
            return path
        if step is None:
            step = default_eta(X, model, cfg.lambda_, cfg.eta_rule)
            logger.info(f"Using gamma increment eta={step:.6g} ({cfg.eta_rule} rule)")
        gamma += step

    raise PathNotTerminatedError(
        f"overlap still {path[-1].overlap():.3g} after {len(path)} fits (gamma={gamma - step:.6g}); "
        f"increase max_path_steps or eta",
        path=path, last_gamma=path[-1].gamma_at_fit, last_overlap=path[-1].overlap(),
    )


def fit_cold_start_scan(X: DenseMatrix, lambda_: float, gammas: Sequence[float],
                        config: HslConfig) -> List[HslModel]:
    """Fit every gamma independently from its own random initialisation."""
    X = as_matrix(X, "X")
    n, p = X.shape
    cfg = replace(config, lambda_=float(lambda_))
    models = []
    for index, gamma in enumerate(gammas):
        init = random_init(n, p, cfg.k, RngStream(cfg.seed, cfg.init_stream + index + 1))
        models.append(fit(X, cfg.with_gamma(gamma), init))
    return models


def gamma_max(path: Sequence[HslModel]) -> float:
    """gamma of the path's terminal element."""
    if not path:
        raise InvalidParameterError("empty path")
    return path[-1].gamma_at_fit


def model_at_gamma(path: Sequence[HslModel], gamma: float) -> HslModel:
    """Path element whose gamma is closest to ``gamma``."""
    if not path:
        raise InvalidParameterError("empty path")
    return min(path, key=lambda m: abs(m.gamma_at_fit - gamma))
