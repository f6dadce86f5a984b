"""
Subject-independent Monte Carlo benchmark of the handcrafted-feature pipelines.

For every dataset, feature set and seed: split subjects, extract (or load
cached) features, train the linear classifier with early stopping on the
validation split and score it on the test split.
"""

import json
import logging
import time
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from tqdm import tqdm

from .classifier import TrainConfig, predict_proba, train_linear
from .configbase import ValidatedConfig
from .exceptions import ArgumentError, DegenerateLabelError, MetricError, SizeError
from .features import FeatureExtractor, FeatureMatrix, PyramidSpec, normalize_set_name
from .metrics import METRIC_NAMES, MetricSet, compute_metrics
from .recording import TrialSet
from .spectral import SpectralConfig
from .splits import (
    DEFAULT_RATIOS,
    audit_split,
    monte_carlo_split,
    run_generator,
    shuffle_labels_within_subjects,
)

logger = logging.getLogger(__name__)

DEFAULT_SEEDS = (41, 42, 43, 44, 45)
MISSING_METRICS = MetricSet(float("nan"), float("nan"), float("nan"))

METHOD_NAMES = {
    "eeg31": "EEG Features",
    "erp91": "ERP Features",
}


@dataclass
class RunResult:
    """Test-split metrics of one (dataset, method, seed) run."""
    dataset: str
    method: str
    seed: int
    metrics: MetricSet
    n_train: int = 0
    n_valid: int = 0
    n_test: int = 0
    best_epoch: int = -1
    shuffled: bool = False
    error: Optional[str] = None

    @property
    def missing(self) -> bool:
        """True when the run produced no scores (its metrics are NaN)."""
        return self.error is not None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dataset": self.dataset,
            "method": self.method,
            "seed": self.seed,
            "metrics": self.metrics.to_dict(),
            "n_train": self.n_train,
            "n_valid": self.n_valid,
            "n_test": self.n_test,
            "best_epoch": self.best_epoch,
            "shuffled": self.shuffled,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunResult":
        return cls(
            dataset=data["dataset"],
            method=data["method"],
            seed=int(data["seed"]),
            metrics=MetricSet.from_dict(data["metrics"]),
            n_train=int(data.get("n_train", 0)),
            n_valid=int(data.get("n_valid", 0)),
            n_test=int(data.get("n_test", 0)),
            best_epoch=int(data.get("best_epoch", -1)),
            shuffled=bool(data.get("shuffled", False)),
            error=data.get("error"),
        )


@dataclass
class ExperimentConfig(ValidatedConfig):
    """What to run: datasets, feature sets, component configs and seeds."""
    name: str = "experiment"
    datasets: List[str] = field(default_factory=list)
    feature_sets: Tuple[str, ...] = ("eeg31", "erp91")
    spectral: SpectralConfig = field(default_factory=SpectralConfig)
    pyramid: PyramidSpec = field(default_factory=PyramidSpec)
    train: TrainConfig = field(default_factory=TrainConfig)
    seeds: Tuple[int, ...] = DEFAULT_SEEDS
    split_ratios: Tuple[float, ...] = DEFAULT_RATIOS
    shuffle_labels: bool = False
    cache_dir: Optional[str] = None
    show_progress: bool = True

    def _collect_errors(self) -> List[str]:
        errors = []
        if not self.seeds:
            errors.append("seeds must not be empty")
        if len(set(self.seeds)) != len(self.seeds):
            errors.append("seeds must be unique")
        if not self.feature_sets:
            errors.append("feature_sets must not be empty")
        for name in self.feature_sets:
            try:
                normalize_set_name(name)
            except ArgumentError as e:
                errors.append(str(e))
        if len(self.split_ratios) != 3 or any(r < 0 for r in self.split_ratios) or sum(self.split_ratios) <= 0:
            errors.append("split_ratios must be three non-negative numbers")
        for part in (self.spectral, self.pyramid, self.train):
            errors.extend(part.validate()[1])
        return errors

    @property
    def methods(self) -> List[str]:
        return [METHOD_NAMES[normalize_set_name(s)] for s in self.feature_sets]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "datasets": list(self.datasets),
            "feature_set": list(self.feature_sets),
            "spectral": self.spectral.to_dict(),
            "pyramid": self.pyramid.to_dict(),
            "train": self.train.to_dict(),
            "seeds": list(self.seeds),
            "split_ratios": list(self.split_ratios),
            "shuffle_labels": self.shuffle_labels,
            "cache_dir": self.cache_dir,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        """
        Build from an experiment document (the ``Config`` layout).

        ``feature_set`` may be a single name or a list; unrelated keys such as
        ``log_level`` are ignored.
        """
        feature_sets = data.get("feature_set", data.get("feature_sets", ("eeg31", "erp91")))
        if isinstance(feature_sets, str):
            feature_sets = (feature_sets,)
        return cls(
            name=data.get("name", "experiment"),
            datasets=list(data.get("datasets", [])),
            feature_sets=tuple(normalize_set_name(s) for s in feature_sets),
            spectral=SpectralConfig.from_dict(data.get("spectral") or {}),
            pyramid=PyramidSpec.from_dict(data.get("pyramid") or {}),
            train=TrainConfig.from_dict(data.get("train") or {}),
            seeds=tuple(int(s) for s in data.get("seeds", DEFAULT_SEEDS)),
            split_ratios=tuple(float(r) for r in data.get("split_ratios", DEFAULT_RATIOS)),
            shuffle_labels=bool(data.get("shuffle_labels", False)),
            cache_dir=data.get("cache_dir") or None,
            show_progress=bool(data.get("show_progress", True)),
        )


def summarize_runs(results: Sequence[RunResult]) -> Dict[str, Dict[str, Dict[str, Dict[str, float]]]]:
    """
    Mean and population standard deviation over seeds.

    Missing runs are left out; a (dataset, method) pair without any scored
    run gets NaN statistics and ``n`` = 0.

    Returns:
        dataset -> method -> metric -> {"mean", "std", "n"}
    """
    grouped: Dict[Tuple[str, str], List[MetricSet]] = {}
    for r in results:
        runs = grouped.setdefault((r.dataset, r.method), [])
        if not r.missing:
            runs.append(r.metrics)

    summary: Dict[str, Dict[str, Dict[str, Dict[str, float]]]] = {}
    for (dataset, method), sets in grouped.items():
        per_metric = {}
        for metric in METRIC_NAMES:
            values = np.array([m.get(metric) for m in sets], dtype=np.float64)
            if values.size:
                per_metric[metric] = {"mean": float(values.mean()), "std": float(values.std()), "n": len(values)}
            else:
                per_metric[metric] = {"mean": float("nan"), "std": float("nan"), "n": 0}
        summary.setdefault(dataset, {})[method] = per_metric
    return summary


def results_document(results: Sequence[RunResult], config: Optional[ExperimentConfig] = None) -> Dict[str, Any]:
    """The results-file layout: every run plus the per-method aggregate."""
    document: Dict[str, Any] = {
        "runs": [r.to_dict() for r in results],
        "aggregate": summarize_runs(results),
    }
    if config is not None:
        document["name"] = config.name
        document["config"] = config.to_dict()
    return document


def results_to_cells(document: Mapping[str, Any]) -> Dict[Tuple[str, str], Dict[str, float]]:
    """(dataset, metric) -> method -> mean score, ready for rank aggregation."""
    aggregate = document.get("aggregate")
    if aggregate is None:
        aggregate = summarize_runs([RunResult.from_dict(r) for r in document["runs"]])
    cells: Dict[Tuple[str, str], Dict[str, float]] = {}
    for dataset, per_method in aggregate.items():
        for method, per_metric in per_method.items():
            for metric, stats in per_metric.items():
                cells.setdefault((dataset, metric), {})[method] = float(stats["mean"])
    return cells


class BenchmarkRunner:
    """
    Runs the feature-pipeline benchmark.

    Features of a (dataset, feature set) pair are extracted once and shared
    by every seed; each run draws its label permutation and training order
    from its own (seed, method, dataset) stream.
    """

    def __init__(self, config: ExperimentConfig):
        """
        Initialize the runner.

        Args:
            config: Experiment description (validated here)
        """
        config.ensure_valid()
        self.config = config
        self.stats = {"runs": 0, "missing": 0, "datasets": 0, "feature_sets": 0, "cache_hits": 0, "duration": 0.0}
        logger.info(
            f"BenchmarkRunner initialized ({len(config.feature_sets)} feature sets, seeds {list(config.seeds)})"
        )

    def load_datasets(self) -> Dict[str, TrialSet]:
        """Read every configured ERPB directory, keyed by dataset name."""
        from .storage import read_erpb

        sets = {}
        for path in self.config.datasets:
            ts = read_erpb(path)
            name = ts.meta.get("dataset_name") or Path(path).name
            sets[name] = ts
        return sets

    def _cache_path(self, dataset: str, set_name: str) -> Optional[Path]:
        if not self.config.cache_dir:
            return None
        key = json.dumps(
            {"spectral": self.config.spectral.to_dict(), "pyramid": self.config.pyramid.to_dict()},
            sort_keys=True,
        )
        digest = f"{zlib.crc32(key.encode('utf-8')):08x}"
        return Path(self.config.cache_dir) / f"{dataset}.{set_name}.{digest}.feat"

    def features_for(self, dataset: str, ts: TrialSet, set_name: str) -> FeatureMatrix:
        """Extract features, going through the cache directory when one is configured."""
        from .storage import read_features, write_features

        cache = self._cache_path(dataset, set_name)
        if cache is not None and cache.exists():
            logger.info(f"Using cached features {cache.name}")
            self.stats["cache_hits"] += 1
            return read_features(str(cache))

        extractor = FeatureExtractor(
            set_name, self.config.spectral, self.config.pyramid, show_progress=self.config.show_progress
        )
        fm = extractor.extract(ts)
        if cache is not None:
            cache.parent.mkdir(parents=True, exist_ok=True)
            write_features(fm, str(cache))
            # cached values are float32; reload so cached and fresh runs agree
            fm = read_features(str(cache))
        return fm

    def run_one(self, dataset: str, fm: FeatureMatrix, method: str, seed: int) -> RunResult:
        """
        Split, train and score a single run.

        A split whose training or test partition holds a single class yields
        a missing run (NaN metrics, ``error`` set) instead of an exception.
        """
        plan = monte_carlo_split(fm.subject_ids, seed, self.config.split_ratios)
        rng = run_generator(seed, method, dataset)
        if self.config.shuffle_labels:
            fm = fm.with_labels(shuffle_labels_within_subjects(fm.labels, fm.subject_ids, rng))

        train = fm.for_subjects(plan.train_subjects)
        valid = fm.for_subjects(plan.valid_subjects)
        test = fm.for_subjects(plan.test_subjects)
        audit_split(plan, train.subject_ids, valid.subject_ids, test.subject_ids)
        if test.n_rows == 0:
            raise SizeError(f"{dataset}: test split of seed {seed} has no trials")

        tcfg = replace(self.config.train, seed=int(rng.integers(0, 2**32)))
        sizes = dict(n_train=train.n_rows, n_valid=valid.n_rows, n_test=test.n_rows)
        try:
            model = train_linear(train, valid, tcfg)
            metrics = compute_metrics(predict_proba(model, test), test.labels)
        except (DegenerateLabelError, MetricError) as e:
            logger.error(f"{dataset} / {method} / seed {seed}: run recorded as missing: {e}")
            return RunResult(
                dataset=dataset,
                method=method,
                seed=int(seed),
                metrics=MISSING_METRICS,
                shuffled=self.config.shuffle_labels,
                error=f"{type(e).__name__}: {e}",
                **sizes,
            )
        logger.debug(
            f"{dataset} / {method} / seed {seed}: acc={metrics.accuracy:.4f} "
            f"f1={metrics.f1_macro:.4f} auroc={metrics.auroc:.4f}"
        )
        return RunResult(
            dataset=dataset,
            method=method,
            seed=int(seed),
            metrics=metrics,
            best_epoch=model.history.best_epoch,
            shuffled=self.config.shuffle_labels,
            **sizes,
        )

    def run(
        self,
        trial_sets: Optional[Mapping[str, TrialSet]] = None,
        progress_callback: Optional[Callable[[int, int, str], None]] = None,
    ) -> List[RunResult]:
        """
        Run every (dataset, feature set, seed) combination.

        Args:
            trial_sets: In-memory datasets by name (default: load ``config.datasets``)
            progress_callback: Callback function(current, total, label)

        Returns:
            One RunResult per (dataset, method, seed)
        """
        start_time = time.time()
        if trial_sets is None:
            trial_sets = self.load_datasets()
        if not trial_sets:
            raise ArgumentError("No datasets to benchmark")

        total = len(trial_sets) * len(self.config.feature_sets) * len(self.config.seeds)
        results: List[RunResult] = []
        bar = tqdm(total=total, desc="Benchmark", unit="run", disable=not self.config.show_progress)
        for dataset, ts in trial_sets.items():
            self.stats["datasets"] += 1
            for set_name in self.config.feature_sets:
                set_name = normalize_set_name(set_name)
                method = METHOD_NAMES[set_name]
                fm = self.features_for(dataset, ts, set_name)
                self.stats["feature_sets"] += 1
                for seed in self.config.seeds:
                    label = f"{dataset}/{method}/{seed}"
                    if progress_callback:
                        progress_callback(len(results) + 1, total, label)
                    result = self.run_one(dataset, fm, method, seed)
                    results.append(result)
                    self.stats["runs"] += 1
                    self.stats["missing"] += int(result.missing)
                    bar.update(1)
        bar.close()

        self.stats["duration"] = time.time() - start_time
        logger.info(f"Benchmark complete: {self.stats['runs']} runs in {self.stats['duration']:.2f}s")
        return results


def run_benchmark(
    config: Union[ExperimentConfig, Mapping[str, Any]],
    trial_sets: Optional[Mapping[str, TrialSet]] = None,
    progress_callback: Optional[Callable[[int, int, str], None]] = None,
) -> List[RunResult]:
    """
    Convenience wrapper around ``BenchmarkRunner``.

    Args:
        config: ExperimentConfig or its dictionary form
        trial_sets: In-memory datasets by name (default: read ``config.datasets``)
        progress_callback: Callback function(current, total, label)

    Returns:
        List of RunResult
    """
    if not isinstance(config, ExperimentConfig):
        config = ExperimentConfig.from_dict(config)
    return BenchmarkRunner(config).run(trial_sets, progress_callback)
