"""
erpbench - Main Entry Point

Command-line access to ERP preprocessing, handcrafted feature extraction,
the subject-independent benchmark, average-rank aggregation, synthetic
datasets and the patch-embedding comparison.
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from typing import Dict, List, Optional

import numpy as np

from config import get_config
from core import (
    FeatureExtractor,
    PreprocessConfig,
    Preprocessor,
    SynthSpec,
    get_profile,
    load_fixture,
    load_patch_fixture,
    read_erpb,
    synth_dataset,
)
from core.benchmark import results_document, results_to_cells, run_benchmark
from core.classifier import predict_proba, train_linear
from core.datasets import datasets_for_task
from core.exceptions import ErpBenchError
from core.features import describe_layout, layout_for, normalize_set_name
from core.fixtures import METHOD_CATEGORIES
from core.metrics import compute_metrics
from core.ranking import aggregate_and_rank, filter_cells, format_rank_table, patch_strategy_wins, top_k_methods
from core.splits import audit_split, monte_carlo_split
from core.storage import (
    load_linear_model,
    read_features,
    read_json,
    read_results,
    read_split,
    save_linear_model,
    write_features,
    write_json,
    write_results,
    write_split,
)
from patchlab import STRATEGIES, grad_check, randomize_parameters, reference_config
from patchlab import create_patch_model, run_patch_benchmark, strategy_table
from patchlab.tokenizer import extract_patch_batch
from utils import attach_package_loggers, configure_third_party_loggers, setup_logger

logger = logging.getLogger(__name__)

# preprocess flag -> PreprocessConfig key
_PREPROCESS_FLAGS = {
    "notch": "notch_hz",
    "band": "band",
    "fs": "target_fs",
    "epoch": "window",
    "baseline": "baseline",
    "ptp_reject": "ptp_reject_uv",
    "filter": "filter_method",
}


class ErpBenchApp:
    """
    Command-line controller.

    Loads the configuration, sets up logging and dispatches subcommands.
    """

    def __init__(self, config_file: Optional[str] = None, log_level: Optional[str] = None,
                 log_dir: Optional[str] = None):
        """
        Initialize the controller.

        Args:
            config_file: Experiment configuration file (defaults if omitted)
            log_level: Overrides the configured log level
            log_dir: Overrides the configured log directory
        """
        self.config = get_config(config_file)

        level = (log_level or self.config['log_level']).upper()
        self.logger = setup_logger(
            name='erpbench',
            level=getattr(logging, level, logging.INFO),
            log_dir=log_dir or self.config['log_dir'],
        )
        attach_package_loggers(self.logger)

        # Suppress verbose third-party logs
        configure_third_party_loggers(logging.WARNING)

        self.logger.info("=" * 80)
        self.logger.info("ERPBENCH")
        self.logger.info("=" * 80)

    # ------------------------------------------------------------------
    # Signal processing and features
    # ------------------------------------------------------------------

    @staticmethod
    def preprocess_config(args: argparse.Namespace) -> PreprocessConfig:
        """Spec file, then dataset-profile defaults, then explicit flags."""
        cfg_data: Dict = read_json(args.spec) if args.spec else {}
        if args.dataset:
            profile = get_profile(args.dataset)
            cfg_data.setdefault("window", list(profile.window))
            cfg_data.setdefault("baseline", list(profile.baseline))
            cfg_data.setdefault("class_names", list(profile.class_names))
            cfg_data.setdefault("label_map", {name: i for i, name in enumerate(profile.class_names)})
        for flag, key in _PREPROCESS_FLAGS.items():
            value = getattr(args, flag)
            if value is not None:
                cfg_data[key] = list(value) if isinstance(value, list) else value
        if args.no_notch:
            cfg_data["notch_hz"] = None
        if args.events:
            cfg_data["label_map"] = {label: i for i, label in enumerate(args.events)}
            if len(cfg_data.get("class_names") or []) != len(args.events):
                cfg_data["class_names"] = None
        cfg = PreprocessConfig.from_dict(cfg_data)
        cfg.ensure_valid()
        return cfg

    def preprocess(self, args: argparse.Namespace) -> int:
        cfg = self.preprocess_config(args)
        stats = Preprocessor(cfg).process_directory(args.input, args.out, dataset_name=args.dataset)
        self.logger.info(f"Preprocessing complete: {stats}")
        print(json.dumps(stats, indent=2, default=str))
        return 0

    def extract(self, args: argparse.Namespace) -> int:
        experiment = self.config.experiment()
        if args.data is None:
            if not args.print_layout:
                print("extract: --in is required unless --print-layout is given", file=sys.stderr)
                return 1
            layout = layout_for(normalize_set_name(args.set))
            for column, channel, block, name in describe_layout(layout, ["ch"], experiment.pyramid):
                print(f"{column}\t{channel}\t{block}\t{name}")
            return 0

        extractor = FeatureExtractor(args.set, experiment.spectral, experiment.pyramid)
        ts = read_erpb(args.data)
        if args.print_layout:
            labels = ts.channel_labels or [f"ch{c}" for c in range(ts.n_channels)]
            for column, channel, block, name in describe_layout(extractor.layout, labels, experiment.pyramid):
                print(f"{column}\t{channel}\t{block}\t{name}")
            if not args.out:
                return 0
        if not args.out:
            print("extract: --out is required unless --print-layout is given", file=sys.stderr)
            return 1
        write_features(extractor.extract(ts), args.out)
        return 0

    def _load_features(self, args: argparse.Namespace):
        if args.features:
            return read_features(args.features)
        if args.data:
            experiment = self.config.experiment()
            return FeatureExtractor(args.set, experiment.spectral, experiment.pyramid).extract(read_erpb(args.data))
        return None

    def _split_parts(self, fm, args: argparse.Namespace):
        if args.split:
            plan = read_split(args.split)
        else:
            plan = monte_carlo_split(fm.subject_ids, args.seed, self.config.experiment().split_ratios)
        parts = [fm.for_subjects(subjects) for subjects in (plan.train_subjects, plan.valid_subjects,
                                                             plan.test_subjects)]
        audit_split(plan, *(part.subject_ids for part in parts))
        return plan, parts

    def train(self, args: argparse.Namespace) -> int:
        fm = self._load_features(args)
        if fm is None:
            print("train: --features or --in is required", file=sys.stderr)
            return 1
        plan, (train, valid, test) = self._split_parts(fm, args)
        if args.save_split:
            write_split(plan, args.save_split)

        experiment = self.config.experiment()
        model = train_linear(train, valid, replace(experiment.train, seed=args.seed))
        metrics = compute_metrics(predict_proba(model, test), test.labels)
        if args.out:
            save_linear_model(model, args.out)
        print(json.dumps({"split": plan.to_dict(), "metrics": metrics.to_dict()}, indent=2))
        return 0

    def evaluate(self, args: argparse.Namespace) -> int:
        model = load_linear_model(args.model)
        fm = self._load_features(args)
        if fm is None:
            print("evaluate: --features or --in is required", file=sys.stderr)
            return 1
        if args.split:
            _, (_, _, rows) = self._split_parts(fm, args)
        else:
            rows = fm
        metrics = compute_metrics(predict_proba(model, rows), rows.labels)
        print(json.dumps({"rows": rows.n_rows, "metrics": metrics.to_dict()}, indent=2))
        return 0

    # ------------------------------------------------------------------
    # Harness
    # ------------------------------------------------------------------

    def run(self, args: argparse.Namespace) -> int:
        experiment = self.config.experiment()
        if args.shuffle_labels:
            experiment = replace(experiment, shuffle_labels=True)
        if not experiment.datasets:
            print("run: the configuration lists no datasets", file=sys.stderr)
            return 1

        results = run_benchmark(experiment)
        document = results_document(results, experiment)
        write_results(document, args.out)
        for dataset, per_method in document["aggregate"].items():
            for method, per_metric in per_method.items():
                scores = ", ".join(
                    f"{metric} {100 * s['mean']:.2f}±{100 * s['std']:.2f}" for metric, s in per_metric.items()
                )
                print(f"{dataset:<16} {method:<14} {scores}")
        return 0

    def ranks(self, args: argparse.Namespace) -> int:
        if args.results:
            cells = results_to_cells(read_results(args.results))
            categories = None
        else:
            fixture = load_fixture(args.fixtures or None)
            cells = fixture.cells()
            categories = METHOD_CATEGORIES
        if args.task or args.metric:
            cells = filter_cells(
                cells,
                datasets=datasets_for_task(args.task) if args.task else None,
                metrics=args.metric,
            )
        table = aggregate_and_rank(cells)
        print(format_rank_table(table, categories))

        if args.top:
            print(f"\nTop {args.top} per evaluation")
            for (dataset, metric), scores in cells.items():
                leaders = ", ".join(f"{pos}. {method} {score:.2f}"
                                    for pos, method, score in top_k_methods(scores, args.top))
                print(f"{dataset:<16} {metric:<9} {leaders}")

        if args.patch_fixture is not None:
            patch = load_patch_fixture(args.patch_fixture or None)
            wins = patch_strategy_wins(patch.scores)
            print("\nPatch embedding wins (" + patch.metric + "): " +
                  ", ".join(f"{s} {n}" for s, n in wins.items()))
        if args.out:
            write_json(table.to_dict(), args.out)
        return 0

    def synth(self, args: argparse.Namespace) -> int:
        data = read_json(args.spec) if args.spec else {}
        if args.profile:
            data = {**SynthSpec.from_profile(get_profile(args.profile)).to_dict(), **data}
        spec = SynthSpec.from_dict(data)
        if args.effect:
            spec = replace(spec, effect=args.effect)
        ts = synth_dataset(spec, args.seed, out_dir=args.out)
        print(f"Wrote {ts.n_trials} trials ({ts.n_channels} channels x {ts.n_samples} samples) to {args.out}")
        return 0

    # ------------------------------------------------------------------
    # Patch embeddings
    # ------------------------------------------------------------------

    def gradcheck(self, args: argparse.Namespace) -> int:
        strategies = STRATEGIES if args.strategy == "all" else (args.strategy,)
        passed = True
        for strategy in strategies:
            cfg = reference_config(strategy, n_samples=args.samples, n_channels=args.channels)
            model = create_patch_model(cfg, seed=args.seed)
            rng = np.random.Generator(np.random.PCG64(args.seed))
            randomize_parameters(model, rng)
            x = rng.standard_normal((args.batch, cfg.n_samples, cfg.n_channels))
            labels = rng.integers(0, cfg.n_classes, size=args.batch)
            report = grad_check(model, extract_patch_batch(x, cfg), labels, tolerance=args.tolerance,
                                max_entries=args.entries, rng=rng)
            print(f"\n[{strategy}] {model.n_parameters} parameters")
            print(report.format())
            passed = passed and report.passed
        return 0 if passed else 1

    def patchbench(self, args: argparse.Namespace) -> int:
        experiment = self.config.experiment()
        ts = read_erpb(args.data)
        strategies = args.strategies or list(STRATEGIES)
        configs = {
            s: reference_config(s, n_samples=ts.n_samples, n_channels=ts.n_channels, n_classes=ts.n_classes)
            for s in strategies
        }
        tcfg = experiment.train if args.epochs is None else replace(experiment.train, max_epochs=args.epochs,
                                                                    patience=min(args.epochs, experiment.train.patience))
        seeds = args.seeds or list(experiment.seeds)
        results = run_patch_benchmark(ts, configs, tcfg, seeds, experiment.split_ratios)
        rows = strategy_table(results, configs)
        document = results_document(results)
        document["strategies"] = rows
        write_results(document, args.out)
        for row in rows:
            print(f"{row['strategy']:<6} params {row['parameters']:>8}  F1 "
                  f"{100 * row['f1_mean']:.2f}±{100 * row['f1_std']:.2f}")
        return 0


def build_parser() -> argparse.ArgumentParser:
    # accepted before or after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="Experiment configuration file (JSON)")
    common.add_argument("--log-level", default=argparse.SUPPRESS, help="Console log level (DEBUG, INFO, ...)")
    common.add_argument("--log-dir", default=argparse.SUPPRESS, help="Directory for rotating log files")

    parser = argparse.ArgumentParser(prog="erpbench", description="ERP feature and patch-embedding benchmark",
                                     parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", parents=[common], help="Raw recordings -> ERPB trial dataset")
    p.add_argument("--in", "--input", dest="input", required=True, help="Directory of recording folders")
    p.add_argument("--out", required=True, help="Output ERPB directory")
    notch = p.add_mutually_exclusive_group()
    notch.add_argument("--notch", type=float, metavar="HZ", help="Line-noise notch frequency")
    notch.add_argument("--no-notch", action="store_true", help="Skip the notch filter")
    p.add_argument("--band", type=float, nargs=2, metavar=("LO", "HI"), help="Band-pass edges in Hz")
    p.add_argument("--fs", type=float, help="Target sampling rate in Hz")
    p.add_argument("--epoch", type=float, nargs=2, metavar=("T0", "T1"), help="Epoch window in seconds")
    p.add_argument("--baseline", type=float, nargs=2, metavar=("B0", "B1"), help="Baseline window in seconds")
    p.add_argument("--ptp-reject", type=float, metavar="UV", help="Peak-to-peak rejection threshold")
    p.add_argument("--filter", choices=("fft", "filtfilt"), help="Zero-phase filter realization")
    p.add_argument("--events", nargs="+", metavar="LABEL",
                   help="Event labels to epoch, in class order (default: every label found)")
    p.add_argument("--dataset", help="Benchmark dataset profile supplying windows and classes")
    p.add_argument("--spec", help="PreprocessConfig JSON file")

    p = sub.add_parser("extract", parents=[common], help="ERPB dataset -> feature matrix")
    p.add_argument("--in", "--data", dest="data", help="ERPB directory")
    p.add_argument("--set", default="eeg31", help="eeg|erp (or eeg31|erp91)")
    p.add_argument("--out", help="Feature matrix file")
    p.add_argument("--print-layout", action="store_true", help="Print the column layout")

    for name, help_text in (("train", "Train and score the linear classifier on one split"),
                            ("evaluate", "Score a saved linear model")):
        p = sub.add_parser(name, parents=[common], help=help_text)
        src = p.add_mutually_exclusive_group()
        src.add_argument("--features", help="Feature matrix file written by extract")
        src.add_argument("--in", "--data", dest="data", help="ERPB directory (features extracted on the fly)")
        p.add_argument("--set", default="eeg31", help="Feature set used with --in")
        p.add_argument("--split", help="Subject split file (default: Monte Carlo split of --seed)")
        p.add_argument("--seed", type=int, default=41)
        if name == "train":
            p.add_argument("--save-split", help="Write the split used to this file")
            p.add_argument("--out", help="Model checkpoint file")
        else:
            p.add_argument("--model", required=True, help="Model checkpoint file")

    p = sub.add_parser("run", parents=[common], help="Run the benchmark described by --config")
    p.add_argument("--out", required=True, help="Results JSON file")
    p.add_argument("--shuffle-labels", action="store_true", help="Label-permutation control")

    p = sub.add_parser("ranks", parents=[common], help="Average ranks from results or the shipped tables")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--results", help="Results JSON file")
    src.add_argument("--fixtures", nargs="?", const="", help="Table fixture (default: shipped)")
    p.add_argument("--patch-fixture", nargs="?", const="", help="Also count patch-strategy wins")
    p.add_argument("--task", choices=("stimulus", "disease"), help="Only the datasets of one task")
    p.add_argument("--metric", action="append", choices=("Accuracy", "F1", "AUROC"), help="Only these metrics")
    p.add_argument("--top", type=int, metavar="K", help="Also list the top K methods of every evaluation")
    p.add_argument("--out", help="Write the rank table as JSON")

    p = sub.add_parser("synth", parents=[common], help="Write a synthetic ERPB dataset")
    p.add_argument("--spec", help="SynthSpec JSON file")
    p.add_argument("--profile", help="Shape the data like a benchmark dataset")
    p.add_argument("--effect", choices=("none", "alpha", "evoked"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("gradcheck", parents=[common], help="Finite-difference check of the patch encoder")
    p.add_argument("--strategy", default="all", choices=("all",) + STRATEGIES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch", type=int, default=2)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--channels", type=int, default=26)
    p.add_argument("--entries", type=int, default=25, help="Entries checked per tensor")
    p.add_argument("--tolerance", type=float, default=1e-4)

    p = sub.add_parser("patchbench", parents=[common], help="Compare patch strategies on an ERPB dataset")
    p.add_argument("--in", "--data", dest="data", required=True, help="ERPB directory")
    p.add_argument("--out", required=True)
    p.add_argument("--strategies", nargs="+", choices=STRATEGIES)
    p.add_argument("--seeds", nargs="+", type=int)
    p.add_argument("--epochs", type=int)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)
    try:
        app = ErpBenchApp(getattr(args, "config", None), getattr(args, "log_level", None),
                          getattr(args, "log_dir", None))
        return getattr(app, args.command)(args)
    except ErpBenchError as e:
        print(f"Error: {e}", file=sys.stderr)
        logging.getLogger('erpbench').exception("Command failed")
        return 1
    except Exception as e:
        print(f"Fatal error: {e}", file=sys.stderr)
        logging.getLogger('erpbench').exception("Fatal error")
        return 1


if __name__ == '__main__':
    sys.exit(main())
