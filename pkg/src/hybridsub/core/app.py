"""Command-line application for hybridsub."""

import argparse
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from .evaluation import cluster_quality, spectrum_profile
from .exceptions import (
    DataFormatError,
    DimensionMismatchError,
    HybridSubError,
    InvalidParameterError,
    NonFiniteError,
    SvdConvergenceError,
)
from .hsl import HslModel
from .synth import SynthSpec, generate_categorical, generate_hybrid
from ..experiments.harness import EXPERIMENT_KINDS, TUNINGS, ExperimentConfig, run_experiment
from ..experiments.methods import METHODS, SELECTIONS, MethodResult, build_report, run_method
from ..storage.matrix_files import (
    load_instance,
    save_instance,
    write_json,
    write_matrix_csv,
    write_table_csv,
)
from ..storage.models import TrialRow
from ..storage.result_storage import ResultStorage
from ..utils.config import Settings
from ..utils.helpers import format_cell, format_float, json_clean, parse_float_list, parse_theta, stream_id_for
from ..utils.logger import LoggerSetup, logger

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NOT_CONVERGED = 3


class UsageError(Exception):
    """Bad command-line usage."""


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    group = common.add_argument_group("model and data")
    group.add_argument("--n", type=int, help="number of samples")
    group.add_argument("--p", type=int, help="number of features")
    group.add_argument("--k", type=int, help="rank of the low-rank component")
    group.add_argument("--sigma2", type=float, help="noise variance")
    group.add_argument("--theta", help="membership probabilities a,b,c (low-r, high-d, both)")
    group.add_argument("--num-highd", type=int, help="exact number of high-d features")
    group.add_argument("--highd-scale", type=float, help="multiplier of the high-d component")
    group.add_argument("--seed", type=int, help="master seed")
    group.add_argument("--lambda", dest="lambda_", type=float, help="HSL sparsity weight")
    group.add_argument("--gamma", type=float, help="HSL exclusivity weight (fixed selection)")
    group.add_argument("--eta", type=float, help="gamma increment of the warm-start path")
    group.add_argument("--method", help=f"method, or comma list for sweeps ({', '.join(METHODS)})")
    group.add_argument("--trials", type=int, help="trials per grid cell")
    group.add_argument("--jobs", type=int, help="parallel workers")
    group.add_argument("--tuning", choices=TUNINGS, help="baseline tuning")

    run = common.add_argument_group("run control")
    run.add_argument("--out", help="output directory")
    run.add_argument("--config", help="JSON config file")
    run.add_argument("--set", dest="overrides", action="append", default=[],
                     metavar="CATEGORY.KEY=VALUE", help="override one setting (repeatable)")
    run.add_argument("--db", help="result database (default <out>/results.db)")
    run.add_argument("--strict", action="store_true", help="exit 3 when a fit does not converge")
    run.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                     help="console log level (default from HSL_LOG)")
    return common


class HybridSubApp:
    """Parse arguments, resolve settings and dispatch subcommands."""

    def __init__(self):
        self.parser = self._build_parser()
        self.settings = Settings()

    def _build_parser(self) -> argparse.ArgumentParser:
        common = _common_flags()
        parser = _Parser(prog="hybridsub",
                         description="Hybrid subspace learning: low-rank plus column-sparse decomposition")
        sub = parser.add_subparsers(dest="command", parser_class=_Parser)
        sub.required = True

        generate = sub.add_parser("generate", parents=[common], help="write a synthetic dataset")
        generate.add_argument("output", help="CSV path; ground truth goes to <name>.truth.json")
        generate.add_argument("--generator", choices=["hybrid", "categorical"], default="hybrid")
        generate.add_argument("--stream", type=int, default=0, help="generator stream id")

        fit = sub.add_parser("fit", parents=[common], help="fit one method to a CSV matrix")
        fit.add_argument("data", help="CSV matrix, one sample per row")
        fit.add_argument("--header", action="store_true", help="skip the first line")
        fit.add_argument("--select", choices=SELECTIONS, default="gamma-max",
                         help="HSL model selection")
        fit.add_argument("--lambdas", help="comma list of lambda values for --select aic")

        sweep = sub.add_parser("sweep", parents=[common], help="run a seeded experiment grid")
        sweep.add_argument("kind", choices=EXPERIMENT_KINDS)
        sweep.add_argument("--data", help="input CSV (fit experiment only)")
        sweep.add_argument("--header", action="store_true")

        spectrum = sub.add_parser("spectrum", parents=[common], help="singular value spectrum of a CSV matrix")
        spectrum.add_argument("data")
        spectrum.add_argument("--header", action="store_true")

        compare = sub.add_parser("compare", parents=[common], help="run every method on one dataset")
        compare.add_argument("data")
        compare.add_argument("--header", action="store_true")
        compare.add_argument("--clusters", type=int, default=2, help="k-means clusters for silhouette")
        compare.add_argument("--restarts", type=int, help="k-means initialisations")
        return parser

    def resolve_settings(self, args: argparse.Namespace) -> Settings:
        """defaults < --config < flags < --set."""
        settings = Settings()
        if args.config:
            settings.load_file(args.config)

        flags = {
            "n": ["synth.n"],
            "p": ["synth.p"],
            "k": ["synth.k", "hsl.k"],
            "sigma2": ["synth.sigma2"],
            "num_highd": ["synth.num_highd"],
            "highd_scale": ["synth.highd_scale"],
            "seed": ["synth.seed", "hsl.seed", "harness.master_seed"],
            "lambda_": ["hsl.lambda"],
            "gamma": ["hsl.gamma"],
            "eta": ["hsl.eta"],
            "trials": ["harness.trials"],
            "jobs": ["harness.jobs"],
            "tuning": ["harness.baseline_tuning"],
        }
        for attr, keys in flags.items():
            value = getattr(args, attr, None)
            if value is not None:
                for key in keys:
                    settings.set(key, value)
        if args.theta is not None:
            settings.set("synth.theta", list(parse_theta(args.theta)))
        if args.method is not None:
            methods = [m.strip() for m in args.method.split(",") if m.strip()]
            unknown = [m for m in methods if m not in METHODS]
            if unknown or not methods:
                raise UsageError(f"unknown method(s) {unknown or args.method}; choose from {', '.join(METHODS)}")
            settings.set("harness.methods", methods)
        if args.strict:
            settings.set("harness.strict", True)
        for assignment in args.overrides:
            settings.set_override(assignment)
        return settings

    def _out_dir(self, args: argparse.Namespace, default: str = "results") -> Path:
        path = Path(args.out or default)
        path.mkdir(parents=True, exist_ok=True)
        return path

    def cmd_generate(self, args: argparse.Namespace) -> int:
        spec = SynthSpec.from_settings(self.settings)
        generator = generate_categorical if args.generator == "categorical" else generate_hybrid
        instance = generator(spec, stream_id=args.stream)
        csv_path, truth_path = save_instance(instance, args.output)
        print(f"Wrote {csv_path} ({spec.n}x{spec.p}) and {truth_path}")
        return EXIT_OK

    def _fit_rank(self, args: argparse.Namespace, instance) -> int:
        if args.k is not None:
            return args.k
        if instance is not None:
            return instance.spec.k
        return int(self.settings.get("hsl.k"))

    def _write_model_files(self, result: MethodResult, out_dir: Path, stem: str) -> List[Path]:
        written = []
        prefix = f"{stem}.{result.method}"
        if isinstance(result.model, HslModel):
            model = result.model
            for name, array in (("Z", model.Z), ("A", model.A), ("W", model.W), ("b", model.b)):
                written.append(write_matrix_csv(out_dir / f"{prefix}.{name}.csv", array))
            trace_rows = ([str(i), format_float(v)] for i, v in enumerate(model.objective_trace))
            written.append(write_table_csv(out_dir / f"{stem}.trace.csv",
                                           ["outer_iteration", "objective"], trace_rows))
        written.append(write_matrix_csv(out_dir / f"{prefix}.L.csv", result.L_hat))
        written.append(write_matrix_csv(out_dir / f"{prefix}.S.csv", result.S_hat))
        return written

    def cmd_fit(self, args: argparse.Namespace) -> int:
        X, instance = load_instance(args.data, header=args.header)
        methods = self.settings.get("harness.methods")
        method = methods[0] if args.method else "hsl"
        if args.method and len(methods) > 1:
            raise UsageError("fit takes a single --method")
        k = self._fit_rank(args, instance)
        seed = int(self.settings.get("harness.master_seed"))
        lambdas = parse_float_list(args.lambdas) if args.lambdas else None
        if lambdas is not None and args.select != "aic":
            raise UsageError("--lambdas requires --select aic")

        result = run_method(method, X, self.settings, k, seed=seed, stream_id=stream_id_for(0, method),
                            instance=instance, tuning=str(self.settings.get("harness.baseline_tuning")),
                            selection=args.select, lambdas=lambdas)
        zero_tol = float(self.settings.get("harness.zero_tol"))
        report = build_report(result, X, instance, zero_tol, seed=seed)

        out_dir = self._out_dir(args)
        stem = Path(args.data).stem
        files = self._write_model_files(result, out_dir, stem)
        document = {
            "report": report.to_dict(),
            "data": str(args.data),
            "shape": list(X.shape),
            "k": k,
            "ground_truth": instance is not None,
            "spectrum": spectrum_profile(X, k if k < min(X.shape) else None).to_dict(),
            "details": result.details,
            "settings": self.settings.export_settings(),
        }
        report_path = write_json(out_dir / f"{stem}.{method}.report.json", json_clean(document))
        print(f"{method}: reconstruction error {format_float(report.reconstruction_error)}"
              + ("" if instance is None else
                 f", subspace error {format_float(report.subspace_error)}, F1 {format_float(report.f1)}"))
        print(f"Wrote {report_path} and {len(files)} model files to {out_dir}")
        if not result.converged:
            logger.warning(f"{method} did not converge")
            if self.settings.get("harness.strict"):
                return EXIT_NOT_CONVERGED
        return EXIT_OK

    def cmd_sweep(self, args: argparse.Namespace) -> int:
        out_dir = self._out_dir(args)
        config = ExperimentConfig.from_settings(args.kind, self.settings, out_dir,
                                                data_path=args.data, header=args.header, db_path=args.db)
        outcome = run_experiment(config)
        print(f"{args.kind}: {len(outcome.rows)} trial rows, run {outcome.run_id}")
        for path in outcome.paths.values():
            print(f"  {path}")
        return outcome.exit_code

    def cmd_spectrum(self, args: argparse.Namespace) -> int:
        X, _ = load_instance(args.data, header=args.header)
        k = args.k if args.k is not None and args.k < min(X.shape) else None
        profile = spectrum_profile(X, k)
        out_dir = self._out_dir(args)
        stem = Path(args.data).stem
        rows = ([str(i), format_float(float(s))] for i, s in enumerate(profile.singular_values, start=1))
        csv_path = write_table_csv(out_dir / f"{stem}.spectrum.csv", ["index", "singular_value"], rows)
        summary = dict(profile.to_dict(), data=str(args.data), shape=list(X.shape))
        json_path = write_json(out_dir / f"{stem}.spectrum.json", json_clean(summary))
        print(f"Wrote {csv_path} and {json_path}")
        return EXIT_OK

    def cmd_compare(self, args: argparse.Namespace) -> int:
        X, instance = load_instance(args.data, header=args.header)
        k = self._fit_rank(args, instance)
        seed = int(self.settings.get("harness.master_seed"))
        restarts = args.restarts if args.restarts is not None else int(self.settings.get("harness.restarts"))
        zero_tol = float(self.settings.get("harness.zero_tol"))
        tuning = str(self.settings.get("harness.baseline_tuning"))
        if not 1 <= args.clusters <= X.shape[0]:
            raise UsageError(f"--clusters must be in [1, {X.shape[0]}]")

        out_dir = self._out_dir(args)
        storage = ResultStorage(str(args.db or out_dir / "results.db"))
        run_id = storage.create_run("compare", seed, 1, {"data": str(args.data), "k": k,
                                                          "clusters": args.clusters,
                                                          "settings": self.settings.export_settings()})
        reports, rows = [], []
        try:
            for method in self.settings.get("harness.methods"):
                result = run_method(method, X, self.settings, k, seed=seed,
                                    stream_id=stream_id_for(0, method), instance=instance, tuning=tuning)
                report = build_report(result, X, instance, zero_tol, seed=seed)
                embedding = result.sample_embedding(k)
                if embedding.shape[1] == 0 or args.clusters < 2:
                    mean, std = 0.0, 0.0
                else:
                    mean, std = cluster_quality(embedding, args.clusters, restarts, seed)
                report.silhouette = mean
                entry = dict(report.to_dict(), silhouette_std=std, objective=result.objective)
                reports.append(entry)
                rows.append(TrialRow(cell={}, method=method, trial=0, metrics=dict(entry),
                                     extra={"converged": bool(result.converged)}))
            storage.add_trials(run_id, rows)
        except Exception as e:
            storage.finish_run(run_id, error_message=str(e))
            raise
        storage.finish_run(run_id)

        columns = ["method", "reconstruction_error", "silhouette", "silhouette_std",
                   "subspace_error", "s_error", "f1", "rank_of_L", "iterations", "wall_time_seconds"]
        table = ([format_cell(entry.get(c)) for c in columns] for entry in reports)
        csv_path = write_table_csv(out_dir / "compare_results.csv", columns, table)
        json_path = write_json(out_dir / "compare_report.json",
                               json_clean({"run_id": run_id, "data": str(args.data), "k": k,
                                            "clusters": args.clusters, "restarts": restarts,
                                            "methods": reports}))
        for entry in reports:
            print(f"{entry['method_name']:>5}: reconstruction {format_float(entry['reconstruction_error'])}, "
                  f"silhouette {format_float(entry['silhouette'])} +/- {format_float(entry['silhouette_std'])}")
        print(f"Wrote {csv_path} and {json_path} (run {run_id})")
        if self.settings.get("harness.strict") and any(r.extra["converged"] is False for r in rows):
            return EXIT_NOT_CONVERGED
        return EXIT_OK

    def run(self, argv: Optional[Sequence[str]] = None) -> int:
        """Run one command and return its exit code."""
        args = self.parser.parse_args(argv)
        if args.log_level:
            LoggerSetup.set_level(args.log_level)
        handlers = {
            "generate": self.cmd_generate,
            "fit": self.cmd_fit,
            "sweep": self.cmd_sweep,
            "spectrum": self.cmd_spectrum,
            "compare": self.cmd_compare,
        }
        try:
            self.settings = self.resolve_settings(args)
            return handlers[args.command](args)
        except (UsageError, InvalidParameterError) as e:
            print(f"hybridsub: error: {e}", file=sys.stderr)
            return EXIT_USAGE
        except (DataFormatError, NonFiniteError, DimensionMismatchError, SvdConvergenceError) as e:
            print(f"hybridsub: data error: {e}", file=sys.stderr)
            return EXIT_DATA
        except OSError as e:
            print(f"hybridsub: cannot access file: {e}", file=sys.stderr)
            return EXIT_DATA
        except HybridSubError as e:
            logger.error(f"{args.command} failed: {e}")
            print(f"hybridsub: error: {e}", file=sys.stderr)
            return EXIT_DATA


def main(argv: Optional[Sequence[str]] = None) -> None:
    """Main entry point for the application."""
    app = HybridSubApp()
    sys.exit(app.run(argv))


if __name__ == "__main__":
    main()
