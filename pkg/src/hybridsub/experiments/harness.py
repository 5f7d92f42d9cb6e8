"""Seeded experiment grids over synthetic data.

Every experiment is a list of grid cells. For each cell and trial ``t`` the
data come from the generator seeded with the master seed on stream ``t``,
so all methods of a trial see the same matrix. Method ``m`` initialises
from stream ``stream_id_for(t, m)``. Rows are sorted by grid key before
anything is written, which keeps the tables identical for any ``jobs``.
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from ..core.evaluation import spectrum_profile, support_f1
from ..core.exceptions import InvalidParameterError, PathNotTerminatedError
from ..core.hsl import (
    HslConfig,
    fit_cold_start_scan,
    fit_warm_start_path,
    gamma_max,
    model_at_gamma,
    objective,
)
from ..core.linalg import DenseMatrix
from ..core.synth import SynthInstance, SynthSpec, generate_categorical, generate_hybrid
from ..storage.matrix_files import load_instance, write_json, write_table_csv
from ..storage.models import TrialRow
from ..storage.result_storage import ResultStorage
from ..utils.config import Settings
from ..utils.helpers import format_cell, format_duration, json_clean, mean_and_stderr, stream_id_for
from ..utils.logger import logger
from .methods import METHODS, build_report, run_method

TUNINGS = ("fixed", "oracle")

# Grid axes of each experiment kind, in column order
CELL_AXES: Dict[str, Tuple[str, ...]] = {
    "fit": (),
    "sweep-noise": ("sigma2",),
    "sweep-k": ("k",),
    "sweep-theta": ("theta2",),
    "phase-transition": ("k", "s"),
    "warmstart-compare": ("gamma_fraction",),
    "spectrum": ("theta1",),
    "pr-curve": ("scale",),
}
EXPERIMENT_KINDS = tuple(CELL_AXES)

_REPORT_METRICS = (
    "subspace_error", "s_error", "s_error_normalized", "f1", "precision", "recall",
    "reconstruction_error", "objective", "iterations", "wall_time_seconds",
)
KIND_METRICS: Dict[str, Tuple[str, ...]] = {
    "fit": _REPORT_METRICS,
    "sweep-noise": _REPORT_METRICS,
    "sweep-k": _REPORT_METRICS,
    "sweep-theta": _REPORT_METRICS,
    "phase-transition": ("subspace_error", "f1", "success", "iterations", "wall_time_seconds"),
    "warmstart-compare": ("gamma", "objective", "f1", "overlap"),
    "spectrum": ("sigma_k_ratio", "head_drop", "tail_half_ratio"),
    "pr-curve": ("precision", "recall", "f1", "wall_time_seconds"),
}

# Methods without a sparsity parameter to vary
_NO_PR_CURVE = ("pca",)


@dataclass
class ExperimentConfig:
    """Everything one harness run needs."""

    kind: str
    synth: SynthSpec = field(default_factory=SynthSpec)
    methods: Tuple[str, ...] = METHODS
    trials: int = 10
    out_dir: Path = Path("results")
    jobs: int = 1
    master_seed: int = 0
    tuning: str = "fixed"
    zero_tol: float = 1e-6
    strict: bool = False
    data_path: Optional[Path] = None
    header: bool = False
    db_path: Optional[Path] = None
    settings: Settings = field(default_factory=Settings, repr=False)

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise InvalidParameterError(
                f"unknown experiment kind '{self.kind}' (choose from {', '.join(EXPERIMENT_KINDS)})")
        if self.trials < 1:
            raise InvalidParameterError(f"trials must be >= 1, got {self.trials}")
        if self.jobs < 1:
            raise InvalidParameterError(f"jobs must be >= 1, got {self.jobs}")
        if self.tuning not in TUNINGS:
            raise InvalidParameterError(f"unknown baseline tuning '{self.tuning}'")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown or not self.methods:
            raise InvalidParameterError(f"unknown or empty method list: {list(self.methods)}")
        self.methods = tuple(self.methods)
        self.out_dir = Path(self.out_dir)
        if self.data_path is not None:
            self.data_path = Path(self.data_path)
            if self.kind != "fit":
                raise InvalidParameterError("an input data file is only accepted by the 'fit' experiment")
            if not self.data_path.exists():
                raise InvalidParameterError(f"data file {self.data_path} does not exist")

    @classmethod
    def from_settings(cls, kind: str, settings: Settings, out_dir, data_path=None,
                      header: bool = False, db_path=None) -> "ExperimentConfig":
        harness = settings.get_category("harness")
        return cls(
            kind=kind,
            synth=SynthSpec.from_settings(settings),
            methods=tuple(harness["methods"]),
            trials=int(harness["trials"]),
            out_dir=Path(out_dir),
            jobs=int(harness["jobs"]),
            master_seed=int(harness["master_seed"]),
            tuning=str(harness["baseline_tuning"]),
            zero_tol=float(harness["zero_tol"]),
            strict=bool(harness["strict"]),
            data_path=data_path,
            header=header,
            db_path=None if db_path is None else Path(db_path),
            settings=settings,
        )

    @property
    def axes(self) -> Tuple[str, ...]:
        return CELL_AXES[self.kind]

    @property
    def metrics(self) -> Tuple[str, ...]:
        return KIND_METRICS[self.kind]

    def database_path(self) -> Path:
        return self.db_path if self.db_path is not None else self.out_dir / "results.db"

    def cells(self) -> List[Dict[str, Any]]:
        """Grid cells of this experiment, in axis order."""
        sweep = self.settings.get_category("sweep")
        if self.kind == "fit":
            return [{}]
        if self.kind == "sweep-noise":
            return [{"sigma2": float(v)} for v in sweep["noise_levels"]]
        if self.kind == "sweep-k":
            return [{"k": int(v)} for v in sweep["k_values"]]
        if self.kind == "sweep-theta":
            return [{"theta2": float(v)} for v in sweep["theta2_values"]]
        if self.kind == "phase-transition":
            return [{"k": int(k), "s": int(s)}
                    for k in sweep["phase_k_values"] for s in sweep["phase_s_values"]]
        if self.kind == "warmstart-compare":
            return [{"gamma_fraction": float(v)} for v in sweep["gamma_fractions"]]
        if self.kind == "spectrum":
            return [{"theta1": float(v)} for v in sweep["spectrum_theta1_values"]]
        return [{"scale": float(v)} for v in sweep["pr_scales"]]

    def cell_spec(self, cell: Dict[str, Any]) -> SynthSpec:
        """Generator parameters of a grid cell."""
        spec = self.synth.with_seed(self.master_seed)
        if "sigma2" in cell:
            spec = replace(spec, sigma2=cell["sigma2"])
        if "k" in cell:
            spec = replace(spec, k=cell["k"])
        if "s" in cell:
            # Phase transitions are measured on noise-free data
            spec = replace(spec, num_highd=cell["s"], sigma2=0.0)
        if "theta2" in cell:
            spec = replace(spec, theta=(1.0 - cell["theta2"], cell["theta2"], 0.0), num_highd=None)
        if "theta1" in cell:
            spec = replace(spec, theta=(cell["theta1"], 1.0 - cell["theta1"], 0.0), num_highd=None)
        return spec

    def describe(self) -> Dict[str, Any]:
        """Resolved configuration, echoed into reports and the database."""
        return {
            "kind": self.kind,
            "methods": list(self.methods),
            "trials": self.trials,
            "jobs": self.jobs,
            "master_seed": self.master_seed,
            "tuning": self.tuning,
            "zero_tol": self.zero_tol,
            "strict": self.strict,
            "data_path": None if self.data_path is None else str(self.data_path),
            "synth": self.synth.to_dict(),
            "settings": self.settings.export_settings(),
        }


@dataclass
class ExperimentOutcome:
    """Rows, aggregated table and written files of one run."""

    config: ExperimentConfig
    rows: List[TrialRow]
    table: List[Dict[str, Any]]
    paths: Dict[str, Path] = field(default_factory=dict)
    run_id: Optional[int] = None

    @property
    def non_converged(self) -> int:
        return sum(1 for row in self.rows if row.extra.get("converged") is False)

    @property
    def exit_code(self) -> int:
        return 3 if self.config.strict and self.non_converged else 0


class ExperimentRunner:
    """Run the trials of an ``ExperimentConfig`` and write its tables."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self._loaded: Optional[Tuple[DenseMatrix, Optional[SynthInstance]]] = None
        if config.data_path is not None:
            self._loaded = load_instance(config.data_path, header=config.header)

    def _data(self, spec: SynthSpec, trial: int) -> Tuple[DenseMatrix, Optional[SynthInstance]]:
        if self._loaded is not None:
            return self._loaded
        instance = generate_hybrid(spec, stream_id=trial)
        return instance.X, instance

    def _method_row(self, cell: Dict[str, Any], method: str, trial: int, X: DenseMatrix,
                    instance: Optional[SynthInstance], k: int,
                    lambda_scale: Optional[float] = None) -> TrialRow:
        cfg = self.config
        result = run_method(method, X, cfg.settings, k, seed=cfg.master_seed,
                            stream_id=stream_id_for(trial, method), instance=instance,
                            tuning=cfg.tuning, lambda_scale=lambda_scale)
        report = build_report(result, X, instance, cfg.zero_tol, seed=cfg.master_seed)
        metrics = {name: getattr(report, name) for name in _REPORT_METRICS if hasattr(report, name)}
        metrics["objective"] = result.objective
        if cfg.kind == "phase-transition":
            threshold = float(cfg.settings.get("sweep.success_subspace_error"))
            error = report.subspace_error
            metrics["success"] = float(not math.isnan(error) and error <= threshold and report.f1 == 1.0)
        return TrialRow(cell=dict(cell), method=method, trial=trial, metrics=metrics,
                        extra={"converged": bool(result.converged)})

    def _trial_rows(self, cell: Dict[str, Any], trial: int) -> List[TrialRow]:
        cfg = self.config
        spec = cfg.cell_spec(cell)
        if cfg.kind == "spectrum":
            instance = generate_categorical(spec, stream_id=trial)
            profile = spectrum_profile(instance.X, spec.k)
            metrics = {
                "sigma_k_ratio": profile.ratio(spec.k),
                "head_drop": profile.head_drop if profile.head_drop is not None else float("nan"),
                "tail_half_ratio": profile.tail_half_ratio,
            }
            return [TrialRow(cell=dict(cell), method="svd", trial=trial, metrics=metrics)]

        X, instance = self._data(spec, trial)
        rows = []
        for method in cfg.methods:
            if cfg.kind == "pr-curve":
                if method in _NO_PR_CURVE:
                    continue
                rows.append(self._method_row(cell, method, trial, X, instance, spec.k,
                                             lambda_scale=cell["scale"]))
            else:
                rows.append(self._method_row(cell, method, trial, X, instance, spec.k))
        logger.debug(f"{cfg.kind} cell {cell} trial {trial}: {len(rows)} methods done")
        return rows

    def _warmstart_rows(self, trial: int) -> List[TrialRow]:
        """Warm path vs. independent cold fits at fractions of the path's gamma_max."""
        cfg = self.config
        spec = cfg.cell_spec({})
        X, instance = self._data(spec, trial)
        hsl = replace(HslConfig.from_settings(cfg.settings), k=spec.k, seed=cfg.master_seed,
                      init_stream=stream_id_for(trial, "hsl-warm"))
        try:
            path = fit_warm_start_path(X, hsl.lambda_, hsl.eta, hsl)
        except PathNotTerminatedError as e:
            logger.warning(f"Trial {trial}: {e}")
            path = e.path
        top = gamma_max(path)
        cells = cfg.cells()
        warm = [model_at_gamma(path, cell["gamma_fraction"] * top) for cell in cells]
        gammas = [model.gamma_at_fit for model in warm]
        cold = fit_cold_start_scan(X, hsl.lambda_, gammas,
                                   replace(hsl, init_stream=stream_id_for(trial, "hsl-cold")))

        rows = []
        for cell, gamma, pair in zip(cells, gammas, zip(warm, cold)):
            for method, model in zip(("hsl-warm", "hsl-cold"), pair):
                f1 = support_f1(model.b, instance.support_highd, cfg.zero_tol)[2]
                metrics = {
                    "gamma": gamma,
                    "objective": objective(X, model, hsl.lambda_, gamma),
                    "f1": f1,
                    "overlap": model.overlap(),
                    "iterations": model.outer_iterations,
                }
                rows.append(TrialRow(cell=dict(cell), method=method, trial=trial, metrics=metrics,
                                     extra={"converged": bool(model.converged)}))
        return rows

    def _tasks(self) -> List[Callable[[], List[TrialRow]]]:
        cfg = self.config
        if cfg.kind == "warmstart-compare":
            return [lambda t=t: self._warmstart_rows(t) for t in range(cfg.trials)]
        return [lambda c=cell, t=t: self._trial_rows(c, t)
                for cell in cfg.cells() for t in range(cfg.trials)]

    def sort_key(self, row: TrialRow):
        return tuple(row.cell[a] for a in self.config.axes), row.method, row.trial

    def collect(self) -> List[TrialRow]:
        """Run every task (concurrently when ``jobs > 1``) and return the sorted rows."""
        tasks = self._tasks()
        logger.info(f"Running {len(tasks)} {self.config.kind} tasks with {self.config.jobs} worker(s)")
        if self.config.jobs == 1:
            batches = [task() for task in tasks]
        else:
            with ThreadPoolExecutor(max_workers=self.config.jobs) as pool:
                batches = list(pool.map(lambda task: task(), tasks))
        rows = [row for batch in batches for row in batch]
        rows.sort(key=self.sort_key)
        return rows

    def aggregate(self, rows: List[TrialRow]) -> List[Dict[str, Any]]:
        """Mean and standard error per (cell, method), in sorted order."""
        groups: Dict[Tuple, List[TrialRow]] = {}
        for row in rows:
            key = self.sort_key(row)[:2]
            groups.setdefault(key, []).append(row)

        table = []
        for (_, method), members in groups.items():
            entry: Dict[str, Any] = dict(members[0].cell)
            entry["method"] = method
            entry["trials"] = len(members)
            for metric in self.config.metrics:
                values = [_as_float(r.metrics.get(metric)) for r in members]
                entry[f"{metric}_mean"], entry[f"{metric}_se"] = mean_and_stderr(values)
            if self.config.kind == "phase-transition":
                entry["success_count"] = int(sum(_as_float(r.metrics.get("success")) == 1.0
                                                 for r in members))
            table.append(entry)
        return table

    def table_columns(self) -> List[str]:
        columns = list(self.config.axes) + ["method", "trials"]
        for metric in self.config.metrics:
            columns += [f"{metric}_mean", f"{metric}_se"]
        if self.config.kind == "phase-transition":
            columns.append("success_count")
        return columns

    def write_outputs(self, rows: List[TrialRow], table: List[Dict[str, Any]],
                      run_id: Optional[int]) -> Dict[str, Path]:
        cfg = self.config
        columns = self.table_columns()
        results_path = write_table_csv(
            cfg.out_dir / f"{cfg.kind}_results.csv", columns,
            ([format_cell(entry.get(c)) for c in columns] for entry in table))

        trial_columns = list(cfg.axes) + ["method", "trial"] + list(cfg.metrics) + ["converged"]
        trials_path = write_table_csv(
            cfg.out_dir / f"{cfg.kind}_trials.csv", trial_columns,
            ([format_cell(row.cell.get(a)) for a in cfg.axes] + [row.method, str(row.trial)]
             + [format_cell(row.metrics.get(m)) for m in cfg.metrics]
             + [format_cell(row.extra.get("converged", ""))] for row in rows))

        summary = {
            "config": cfg.describe(),
            "run_id": run_id,
            "non_converged": sum(1 for row in rows if row.extra.get("converged") is False),
            "results": table,
        }
        summary_path = write_json(cfg.out_dir / f"{cfg.kind}_summary.json", json_clean(summary))
        return {"results": results_path, "trials": trials_path, "summary": summary_path}

    def run(self) -> ExperimentOutcome:
        """Execute, record in the result database and write the tables."""
        cfg = self.config
        storage = ResultStorage(str(cfg.database_path()))
        run_id = storage.create_run(cfg.kind, cfg.master_seed, cfg.trials, cfg.describe())
        start = time.perf_counter()
        try:
            rows = self.collect()
            storage.add_trials(run_id, rows)
        except Exception as e:
            storage.finish_run(run_id, error_message=str(e))
            raise
        storage.finish_run(run_id)

        table = self.aggregate(rows)
        paths = self.write_outputs(rows, table, run_id)
        outcome = ExperimentOutcome(config=cfg, rows=rows, table=table, paths=paths, run_id=run_id)
        logger.info(f"{cfg.kind} finished in {format_duration(time.perf_counter() - start)}: "
                    f"{len(rows)} rows, {outcome.non_converged} not converged (run {run_id})")
        if outcome.non_converged:
            logger.warning(f"{outcome.non_converged} fits did not converge")
        return outcome


def run_experiment(config: ExperimentConfig) -> ExperimentOutcome:
    return ExperimentRunner(config).run()


def _as_float(value: Any) -> float:
    if value is None:
        return float("nan")
    return float(value)
