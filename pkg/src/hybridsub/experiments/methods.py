"""Run one decomposition method on a data matrix and score it."""

import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np

from ..core.baselines import LowRankSparseDecomposition, outlier_pursuit, pca, rpca
from ..core.evaluation import (
    FitReport,
    Stopwatch,
    aic_score,
    reconstruction_error,
    s_recovery_error,
    select_by_aic,
    subspace_error,
    support_f1,
)
from ..core.exceptions import InvalidParameterError, PathNotTerminatedError
from ..core.hsl import HslConfig, HslModel, fit, fit_warm_start_path, initial_model, objective
from ..core.linalg import DenseMatrix
from ..core.synth import SynthInstance
from ..utils.logger import logger

METHODS = ("hsl", "pca", "rpca", "op")
SELECTIONS = ("gamma-max", "aic", "fixed")


@dataclass(eq=False)
class MethodResult:
    """Estimates produced by one method."""

    method: str
    L_hat: DenseMatrix
    S_hat: DenseMatrix
    feature_scores: np.ndarray
    iterations: int
    converged: bool
    wall_time_seconds: float
    model: Union[HslModel, LowRankSparseDecomposition, None] = None
    lambda_: Optional[float] = None
    gamma: Optional[float] = None
    objective: Optional[float] = None
    details: Dict[str, Any] = field(default_factory=dict)

    def sample_embedding(self, k: int) -> DenseMatrix:
        """k-dimensional sample representation used for clustering."""
        if isinstance(self.model, HslModel):
            return np.array(self.model.Z)
        return self.model.sample_embedding(k)


def _from_hsl(model: HslModel, X: DenseMatrix, elapsed: float, iterations: int,
              converged: bool, details: Dict[str, Any]) -> MethodResult:
    return MethodResult(
        method="hsl", L_hat=model.low_rank(), S_hat=model.high_dim(),
        feature_scores=np.abs(np.array(model.b)), iterations=iterations, converged=converged,
        wall_time_seconds=elapsed, model=model, lambda_=model.lambda_at_fit, gamma=model.gamma_at_fit,
        objective=objective(X, model, model.lambda_at_fit, model.gamma_at_fit),
        details=details,
    )


def run_hsl(X: DenseMatrix, config: HslConfig, selection: str = "gamma-max",
            lambdas: Optional[Sequence[float]] = None) -> MethodResult:
    """HSL with warm starts up to gamma_max, AIC selection, or one fit at ``config.gamma``."""
    details: Dict[str, Any] = {"selection": selection}
    with Stopwatch() as watch:
        if selection == "fixed":
            init = initial_model(X, config)
            model = fit(X, config, init)
            iterations, converged = model.outer_iterations, model.converged
        elif selection == "aic":
            chosen = select_by_aic(X, list(lambdas or [config.lambda_]), config)
            model = chosen.model
            details["aic"] = chosen.aic
            details["aic_table"] = chosen.table
            iterations, converged = model.outer_iterations, model.converged
        elif selection == "gamma-max":
            try:
                path = fit_warm_start_path(X, config.lambda_, config.eta, config)
                converged = all(m.converged for m in path)
                details["path_terminated"] = True
            except PathNotTerminatedError as e:
                logger.warning(f"Using last path element: {e}")
                path = e.path
                converged = False
                details["path_terminated"] = False
            model = path[-1]
            details["path_length"] = len(path)
            iterations = sum(m.outer_iterations for m in path)
        else:
            raise InvalidParameterError(f"unknown HSL selection '{selection}'")
    return _from_hsl(model, X, watch.elapsed, iterations, converged, details)


def _from_decomposition(d: LowRankSparseDecomposition, elapsed: float) -> MethodResult:
    return MethodResult(
        method=d.method, L_hat=d.L, S_hat=d.S, feature_scores=d.feature_scores(),
        iterations=d.iterations, converged=d.converged, wall_time_seconds=elapsed,
        model=d, lambda_=d.lambda_,
    )


def _oracle_pick(candidates, instance: SynthInstance) -> LowRankSparseDecomposition:
    """Candidate with the best subspace recovery against the ground truth."""
    V = instance.true_basis()
    if V.shape[1] == 0:
        return candidates[0]
    return min(candidates, key=lambda d: subspace_error(d.L, V, V.shape[1]))


def run_baseline(method: str, X: DenseMatrix, k: int, settings, tuning: str = "fixed",
                 instance: Optional[SynthInstance] = None,
                 lambda_scale: Optional[float] = None) -> MethodResult:
    """PCA, RPCA or Outlier Pursuit.

    ``tuning="fixed"``: RPCA uses ``rpca.lambda`` (default 1/sqrt(n)) and OP
    tunes lambda so rank(L) = k unless ``op.lambda`` is set.
    ``tuning="oracle"``: every lambda in ``sweep.oracle_scales`` times the
    default is tried and the best subspace recovery wins (needs ground truth).
    ``lambda_scale`` forces ``scale * default`` (precision-recall sweeps).
    """
    n, p = X.shape
    rpca_opts = settings.get_category("rpca")
    op_opts = settings.get_category("op")
    rpca_base = 1.0 / math.sqrt(n)
    op_base = 1.0 / math.sqrt(p)

    def run_rpca(lam):
        return rpca(X, lam, rho=float(rpca_opts["rho"]), tol=float(rpca_opts["tol"]),
                    max_iters=int(rpca_opts["max_iters"]))

    def run_op(lam=None, target=None):
        return outlier_pursuit(X, lam, target_rank=target, tol=float(op_opts["tol"]),
                               max_iters=int(op_opts["max_iters"]),
                               bisect_iters=int(op_opts["bisect_iters"]))

    with Stopwatch() as watch:
        if method == "pca":
            decomposition = pca(X, k)
        elif method == "rpca":
            if lambda_scale is not None:
                decomposition = run_rpca(lambda_scale * rpca_base)
            elif tuning == "oracle" and instance is not None:
                scales = settings.get("sweep.oracle_scales")
                decomposition = _oracle_pick([run_rpca(s * rpca_base) for s in scales], instance)
            else:
                lam = rpca_opts.get("lambda")
                decomposition = run_rpca(None if lam is None else float(lam))
        elif method == "op":
            if lambda_scale is not None:
                decomposition = run_op(lambda_scale * op_base)
            elif tuning == "oracle" and instance is not None:
                scales = settings.get("sweep.oracle_scales")
                decomposition = _oracle_pick([run_op(s * op_base) for s in scales], instance)
            elif op_opts.get("lambda") is not None:
                decomposition = run_op(float(op_opts["lambda"]))
            else:
                target = op_opts.get("target_rank")
                decomposition = run_op(target=k if target is None else int(target))
        else:
            raise InvalidParameterError(f"unknown method '{method}'")
    return _from_decomposition(decomposition, watch.elapsed)


def build_report(result: MethodResult, X: DenseMatrix, instance: Optional[SynthInstance] = None,
                 zero_tol: float = 1e-6, seed: int = 0) -> FitReport:
    """Score a result; ground-truth metrics only when ``instance`` is given."""
    report = FitReport(
        method_name=result.method,
        reconstruction_error=reconstruction_error(X, result.L_hat),
        iterations=result.iterations,
        converged=result.converged,
        wall_time_seconds=result.wall_time_seconds,
        seed=seed,
        gamma=result.gamma,
        lambda_=result.lambda_,
    )
    if isinstance(result.model, HslModel):
        report.aic = aic_score(X, result.model)
        report.rank_of_L = int(np.linalg.matrix_rank(result.L_hat)) if result.L_hat.size else 0
    elif isinstance(result.model, LowRankSparseDecomposition):
        report.rank_of_L = result.model.rank_of_L

    if instance is not None:
        V = instance.true_basis()
        if V.shape[1] >= 1:
            report.subspace_error = subspace_error(result.L_hat, V, V.shape[1])
        report.s_error = s_recovery_error(result.S_hat, instance.true_S)
        report.s_error_normalized = s_recovery_error(result.S_hat, instance.true_S, normalized=True)
        report.precision, report.recall, report.f1 = support_f1(
            result.feature_scores, instance.support_highd, zero_tol)
    return report


def run_method(method: str, X: DenseMatrix, settings, k: int, seed: int = 0, stream_id: int = 0,
               instance: Optional[SynthInstance] = None, tuning: str = "fixed",
               selection: str = "gamma-max", lambdas: Optional[Sequence[float]] = None,
               lambda_scale: Optional[float] = None) -> MethodResult:
    """Dispatch by method name with the resolved settings."""
    if method == "hsl":
        config = replace(HslConfig.from_settings(settings), k=k, seed=seed, init_stream=stream_id)
        if lambda_scale is not None:
            config = replace(config, lambda_=config.lambda_ * lambda_scale)
        return run_hsl(X, config, selection, lambdas)
    return run_baseline(method, X, k, settings, tuning, instance, lambda_scale)
