"""
Training and subject-independent comparison of the patch strategies.
"""

import logging
import time
from dataclasses import replace
from typing import Callable, Dict, List, Mapping, Optional, Sequence

import numpy as np
from scipy.special import softmax
from tqdm import tqdm

from core.benchmark import DEFAULT_SEEDS, MISSING_METRICS, RunResult
from core.classifier import TrainConfig
from core.exceptions import DegenerateLabelError, EmptySetError, MetricError, ShapeError
from core.metrics import compute_metrics, safe_f1
from core.optim import cosine_lr
from core.recording import TrialSet
from core.splits import DEFAULT_RATIOS, audit_split, monte_carlo_split, run_generator

from .base import PatchConfig
from .model import NO_DECAY, PatchModel, backward, cross_entropy, forward, param_count
from .tokenizer import trials_to_patches

logger = logging.getLogger(__name__)


def _check_trials(ts: TrialSet, cfg: PatchConfig, role: str) -> None:
    if ts.n_trials == 0:
        raise EmptySetError(f"The {role} set has no trials")
    if (ts.n_channels, ts.n_samples) != (cfg.n_channels, cfg.n_samples):
        raise ShapeError(
            f"{role} trials are {ts.n_channels} x {ts.n_samples}, "
            f"config expects {cfg.n_channels} x {cfg.n_samples}"
        )


def _batched_logits(model: PatchModel, patches: np.ndarray, batch_size: int) -> np.ndarray:
    return np.concatenate([
        forward(model, patches[start:start + batch_size])[0]
        for start in range(0, len(patches), batch_size)
    ])


def train_patch_model(
    data: TrialSet,
    cfg: PatchConfig,
    tcfg: TrainConfig,
    valid: Optional[TrialSet] = None,
) -> PatchModel:
    """
    Train a patch encoder with AdamW, a cosine schedule and early stopping.

    Args:
        data: Training trials
        cfg: Strategy and widths
        tcfg: Optimization protocol (same as the linear classifier)
        valid: Validation trials for early stopping (defaults to ``data``)

    Returns:
        The checkpoint with the best validation macro F1 (ties: lowest
        validation loss), history attached
    """
    tcfg.ensure_valid()
    cfg.ensure_valid()
    valid = valid if valid is not None else data
    _check_trials(data, cfg, "training")
    _check_trials(valid, cfg, "validation")
    if np.unique(data.labels).size < 2:
        raise DegenerateLabelError("Training split contains a single class")

    x_train = trials_to_patches(data.trials, cfg)
    x_valid = trials_to_patches(valid.trials, cfg)
    y_train = data.labels
    rng = np.random.Generator(np.random.PCG64(tcfg.seed))
    model = PatchModel.initialize(cfg, rng)
    optimizer = tcfg.make_optimizer(model.params, no_decay=NO_DECAY)
    history = model.history
    history.initial_loss = cross_entropy(_batched_logits(model, x_train, tcfg.batch_size), y_train)
    best = model.copy_params()
    wait = 0

    logger.info(
        f"Training {cfg.strategy} patch model: {data.n_trials} train / {valid.n_trials} valid trials, "
        f"{cfg.n_tokens} tokens, {model.n_parameters} parameters"
    )
    for epoch in range(tcfg.max_epochs):
        lr = cosine_lr(tcfg.lr, epoch, tcfg.max_epochs)
        order = rng.permutation(data.n_trials)
        for start in range(0, data.n_trials, tcfg.batch_size):
            idx = order[start:start + tcfg.batch_size]
            _, cache = forward(model, x_train[idx])
            _, grads = backward(model, cache, y_train[idx])
            optimizer.step(model.params, grads, lr)

        loss = cross_entropy(_batched_logits(model, x_train, tcfg.batch_size), y_train)
        valid_logits = _batched_logits(model, x_valid, tcfg.batch_size)
        f1 = safe_f1(softmax(valid_logits, axis=1), valid.labels, cfg.n_classes)
        valid_loss = cross_entropy(valid_logits, valid.labels)

        is_best, improved = history.record(epoch, loss, f1, valid_loss, lr)
        if is_best:
            best = model.copy_params()
        if improved:
            wait = 0
        else:
            wait += 1
            if wait >= tcfg.patience:
                history.stopped_early = True
                logger.info(f"Early stopping at epoch {epoch} (best epoch {history.best_epoch})")
                break

    model.load_params(best)
    return model


def run_patch_benchmark(
    ts: TrialSet,
    configs: Mapping[str, PatchConfig],
    tcfg: TrainConfig,
    seeds: Sequence[int] = DEFAULT_SEEDS,
    ratios: Sequence[float] = DEFAULT_RATIOS,
    dataset: Optional[str] = None,
    progress_callback: Optional[Callable[[int, int, str], None]] = None,
    show_progress: bool = True,
) -> List[RunResult]:
    """
    Compare strategies on the same subject-independent splits.

    Args:
        ts: Preprocessed trials
        configs: strategy -> PatchConfig
        tcfg: Optimization protocol; the seed is derived per run
        seeds: Split seeds
        ratios: Train/valid/test proportions
        dataset: Name used in the results (defaults to the TrialSet's)
        progress_callback: Callback function(current, total, label)
        show_progress: Whether to display a progress bar

    Returns:
        One RunResult per (strategy, seed), method named "patch-<strategy>"
    """
    dataset = dataset or ts.meta.get("dataset_name", "dataset")
    start_time = time.time()
    total = len(configs) * len(seeds)
    results: List[RunResult] = []
    bar = tqdm(total=total, desc="Patch benchmark", unit="run", disable=not show_progress)
    for seed in seeds:
        plan = monte_carlo_split(ts.subject_ids, seed, ratios)
        train = ts.for_subjects(plan.train_subjects)
        valid = ts.for_subjects(plan.valid_subjects)
        test = ts.for_subjects(plan.test_subjects)
        audit_split(plan, train.subject_ids, valid.subject_ids, test.subject_ids)

        for strategy, cfg in configs.items():
            method = f"patch-{strategy}"
            if progress_callback:
                progress_callback(len(results) + 1, total, f"{method}/{seed}")
            rng = run_generator(seed, method, dataset)
            sizes = dict(n_train=train.n_trials, n_valid=valid.n_trials, n_test=test.n_trials)
            _check_trials(test, cfg, "test")
            try:
                model = train_patch_model(train, cfg, replace(tcfg, seed=int(rng.integers(0, 2**32))), valid)
                test_logits = _batched_logits(model, trials_to_patches(test.trials, cfg), tcfg.batch_size)
                metrics = compute_metrics(softmax(test_logits, axis=1), test.labels)
            except (DegenerateLabelError, MetricError) as e:
                logger.error(f"{method} seed {seed}: run recorded as missing: {e}")
                results.append(RunResult(dataset=dataset, method=method, seed=int(seed), metrics=MISSING_METRICS,
                                         error=f"{type(e).__name__}: {e}", **sizes))
                bar.update(1)
                continue
            results.append(RunResult(
                dataset=dataset,
                method=method,
                seed=int(seed),
                metrics=metrics,
                best_epoch=model.history.best_epoch,
                **sizes,
            ))
            logger.info(f"{method} seed {seed}: test F1 {metrics.f1_macro:.4f}")
            bar.update(1)
    bar.close()
    logger.info(f"Patch benchmark: {len(results)} runs in {time.time() - start_time:.2f}s")
    return results


def strategy_table(results: Sequence[RunResult], configs: Mapping[str, PatchConfig]) -> List[Dict]:
    """Rows of strategy, parameter count and F1 mean/std (population) over seeds."""
    rows = []
    for strategy, cfg in configs.items():
        scores = np.array([r.metrics.f1_macro for r in results if r.method == f"patch-{strategy}" and not r.missing])
        rows.append({
            "strategy": strategy,
            "parameters": param_count(cfg),
            "f1_mean": float(scores.mean()) if len(scores) else float("nan"),
            "f1_std": float(scores.std()) if len(scores) else float("nan"),
            "n_runs": int(len(scores)),
        })
    return rows
