"""
Linear projection classifier over handcrafted features.

Softmax regression on train-split standardized features, trained with
minibatch AdamW, a cosine-annealed learning rate and early stopping on
validation macro F1.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.special import log_softmax, softmax
from sklearn.preprocessing import StandardScaler

from .configbase import ValidatedConfig
from .exceptions import DegenerateLabelError, EmptySetError, ShapeError
from .features import FeatureMatrix
from .metrics import safe_f1
from .optim import AdamW, cosine_lr

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig(ValidatedConfig):
    """Optimization protocol shared by the linear and patch models."""
    batch_size: int = 128
    max_epochs: int = 200
    patience: int = 15
    lr: float = 1e-4
    weight_decay: float = 0.01
    seed: int = 41
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def _collect_errors(self) -> List[str]:
        errors = []
        for name in ("batch_size", "max_epochs", "patience"):
            if getattr(self, name) < 1:
                errors.append(f"{name} must be positive")
        if self.patience > self.max_epochs:
            errors.append("patience must not exceed max_epochs")
        if not self.lr > 0:
            errors.append("lr must be positive")
        if self.weight_decay < 0:
            errors.append("weight_decay must be non-negative")
        if not 0 <= self.beta1 < 1 or not 0 <= self.beta2 < 1:
            errors.append("betas must lie in [0, 1)")
        return errors

    def make_optimizer(self, params: Dict[str, np.ndarray], no_decay=()) -> AdamW:
        return AdamW(params, self.weight_decay, self.beta1, self.beta2, self.adam_eps, no_decay)


@dataclass
class TrainingHistory:
    """Per-epoch record of a training run."""
    initial_loss: float = float("nan")
    train_loss: List[float] = field(default_factory=list)
    valid_f1: List[float] = field(default_factory=list)
    valid_loss: List[float] = field(default_factory=list)
    lr: List[float] = field(default_factory=list)
    best_epoch: int = -1
    best_valid_f1: float = -1.0
    best_valid_loss: float = float("inf")
    best_train_loss: float = float("nan")
    stopped_early: bool = False

    def record(self, epoch: int, train_loss: float, valid_f1: float, valid_loss: float, lr: float) -> Tuple[bool, bool]:
        """
        Append one epoch and update the best checkpoint.

        An epoch becomes the best checkpoint when its validation F1 beats
        the best so far, or ties it with a lower validation loss. Only a
        strict F1 improvement restarts patience.

        Returns:
            Tuple of (new best checkpoint, strict F1 improvement)
        """
        self.train_loss.append(train_loss)
        self.valid_f1.append(valid_f1)
        self.valid_loss.append(valid_loss)
        self.lr.append(lr)

        improved = valid_f1 > self.best_valid_f1
        is_best = improved or (valid_f1 == self.best_valid_f1 and valid_loss < self.best_valid_loss)
        if is_best:
            self.best_epoch = epoch
            self.best_valid_f1 = valid_f1
            self.best_valid_loss = valid_loss
            self.best_train_loss = train_loss
        return is_best, improved

    def to_dict(self) -> Dict:
        return {
            "initial_loss": self.initial_loss,
            "train_loss": list(self.train_loss),
            "valid_f1": list(self.valid_f1),
            "valid_loss": list(self.valid_loss),
            "lr": list(self.lr),
            "best_epoch": self.best_epoch,
            "best_valid_f1": self.best_valid_f1,
            "best_valid_loss": self.best_valid_loss,
            "best_train_loss": self.best_train_loss,
            "stopped_early": self.stopped_early,
        }


@dataclass
class LinearModel:
    """Softmax-regression weights with the train-split standardization statistics."""
    weights: np.ndarray
    bias: np.ndarray
    feature_mean: np.ndarray
    feature_std: np.ndarray
    class_names: List[str] = field(default_factory=list)
    history: TrainingHistory = field(default_factory=TrainingHistory)

    @property
    def n_features(self) -> int:
        return self.weights.shape[0]

    @property
    def n_classes(self) -> int:
        return self.weights.shape[1]

    def logits(self, x: np.ndarray) -> np.ndarray:
        z = (x - self.feature_mean) / self.feature_std
        return z @ self.weights + self.bias


def _values(feats: Union[FeatureMatrix, np.ndarray]) -> np.ndarray:
    return feats.values if isinstance(feats, FeatureMatrix) else np.asarray(feats, dtype=np.float64)


def predict_proba(model: LinearModel, feats: Union[FeatureMatrix, np.ndarray]) -> np.ndarray:
    """
    Class probabilities of each row.

    Args:
        model: Trained model
        feats: FeatureMatrix or raw [n x n_features] array

    Returns:
        [n x n_classes] row-stochastic matrix
    """
    x = _values(feats)
    if x.ndim != 2 or x.shape[1] != model.n_features:
        raise ShapeError(f"Features of shape {x.shape} for a model with {model.n_features} inputs")
    return softmax(model.logits(x), axis=1)


def _cross_entropy(z: np.ndarray, w: np.ndarray, b: np.ndarray, y: np.ndarray) -> float:
    logp = log_softmax(z @ w + b, axis=1)
    return float(-logp[np.arange(len(y)), y].mean())


def train_linear(train: FeatureMatrix, valid: FeatureMatrix, cfg: TrainConfig) -> LinearModel:
    """
    Fit a softmax-regression model with early stopping on validation macro F1.

    Args:
        train: Training features
        valid: Validation features (early stopping only)
        cfg: Optimization protocol

    Returns:
        The checkpoint with the best validation macro F1 (ties: lowest validation loss)
    """
    cfg.ensure_valid()
    if train.n_features != valid.n_features:
        raise ShapeError(f"Train has {train.n_features} features, valid has {valid.n_features}")
    if train.n_rows == 0 or valid.n_rows == 0:
        raise EmptySetError("Training and validation splits must be non-empty")
    if np.unique(train.labels).size < 2:
        raise DegenerateLabelError("Training split contains a single class")

    n_classes = max(len(train.class_names), int(train.labels.max()) + 1, int(valid.labels.max()) + 1)
    scaler = StandardScaler().fit(train.values)
    x_train = scaler.transform(train.values)
    x_valid = scaler.transform(valid.values)
    y_train = train.labels
    y_onehot = np.eye(n_classes)[y_train]

    params = {
        "weights": np.zeros((train.n_features, n_classes)),
        "bias": np.zeros(n_classes),
    }
    optimizer = cfg.make_optimizer(params, no_decay=("bias",))
    rng = np.random.Generator(np.random.PCG64(cfg.seed))

    history = TrainingHistory(initial_loss=_cross_entropy(x_train, params["weights"], params["bias"], y_train))
    best = {k: v.copy() for k, v in params.items()}
    wait = 0
    n = train.n_rows

    logger.info(
        f"Training linear model: {n} train / {valid.n_rows} valid rows, "
        f"{train.n_features} features, {n_classes} classes"
    )
    for epoch in range(cfg.max_epochs):
        lr = cosine_lr(cfg.lr, epoch, cfg.max_epochs)
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            xb = x_train[idx]
            probs = softmax(xb @ params["weights"] + params["bias"], axis=1)
            delta = (probs - y_onehot[idx]) / len(idx)
            grads = {"weights": xb.T @ delta, "bias": delta.sum(axis=0)}
            optimizer.step(params, grads, lr)

        loss = _cross_entropy(x_train, params["weights"], params["bias"], y_train)
        valid_logits = x_valid @ params["weights"] + params["bias"]
        f1 = safe_f1(softmax(valid_logits, axis=1), valid.labels, n_classes)
        valid_loss = _cross_entropy(x_valid, params["weights"], params["bias"], valid.labels)

        is_best, improved = history.record(epoch, loss, f1, valid_loss, lr)
        if is_best:
            best = {k: v.copy() for k, v in params.items()}
        if improved:
            wait = 0
        else:
            wait += 1
            if wait >= cfg.patience:
                history.stopped_early = True
                logger.info(f"Early stopping at epoch {epoch} (best epoch {history.best_epoch})")
                break

    logger.debug(f"Best validation F1 {history.best_valid_f1:.4f} at epoch {history.best_epoch}")
    return LinearModel(
        weights=best["weights"],
        bias=best["bias"],
        feature_mean=scaler.mean_.copy(),
        feature_std=scaler.scale_.copy(),
        class_names=list(train.class_names),
        history=history,
    )
