"""
Classification metrics: accuracy, macro F1 and rank-based AUROC.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Dict, Optional

import numpy as np
from scipy.stats import rankdata
from sklearn.metrics import f1_score

from .exceptions import MetricError, ShapeError

logger = logging.getLogger(__name__)

METRIC_NAMES = ("Accuracy", "F1", "AUROC")


@dataclass(frozen=True)
class MetricSet:
    """Test-split scores, each in [0, 1]."""
    accuracy: float
    f1_macro: float
    auroc: float

    def get(self, metric: str) -> float:
        """Score by display name ("Accuracy", "F1", "AUROC")."""
        key = {"Accuracy": "accuracy", "F1": "f1_macro", "AUROC": "auroc"}.get(metric, metric)
        return getattr(self, key)

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, float]) -> "MetricSet":
        return cls(float(data["accuracy"]), float(data["f1_macro"]), float(data["auroc"]))


def binary_auroc(scores: np.ndarray, positive: np.ndarray) -> float:
    """
    Mann-Whitney AUROC with average ranks for ties.

    Args:
        scores: Score per sample, higher means more likely positive
        positive: Boolean positive-class indicator per sample

    Returns:
        Probability that a random positive outscores a random negative,
        ties counting one half
    """
    positive = np.asarray(positive, dtype=bool)
    n_pos = int(positive.sum())
    n_neg = positive.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("AUROC needs at least one positive and one negative sample")
    ranks = rankdata(scores, method="average")
    u = ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def macro_auroc(probs: np.ndarray, labels: np.ndarray) -> float:
    """
    One-vs-rest AUROC averaged over classes with both positives and negatives.

    With two columns, the class-1 score against class-1 membership.
    """
    n_classes = probs.shape[1]
    if n_classes == 2:
        return binary_auroc(probs[:, 1], labels == 1)
    values = []
    for k in range(n_classes):
        positive = labels == k
        if positive.any() and not positive.all():
            values.append(binary_auroc(probs[:, k], positive))
    return float(np.mean(values))


def f1_macro(labels: np.ndarray, preds: np.ndarray, n_classes: int) -> float:
    """Unweighted mean of per-class F1 over ``range(n_classes)``."""
    return float(f1_score(labels, preds, labels=list(range(n_classes)), average="macro", zero_division=0))


def compute_metrics(probs: np.ndarray, labels: np.ndarray) -> MetricSet:
    """
    Accuracy, macro F1 and AUROC of predicted class probabilities.

    Args:
        probs: [n_samples x n_classes] probabilities (or any scores)
        labels: True class index per sample

    Returns:
        MetricSet
    """
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if probs.ndim != 2 or probs.shape[0] != labels.size:
        raise ShapeError(f"Probabilities of shape {probs.shape} for {labels.size} labels")
    if probs.shape[1] < 2:
        raise ShapeError("Need at least two class columns")
    if labels.size and (labels.min() < 0 or labels.max() >= probs.shape[1]):
        raise ShapeError(f"Labels outside [0, {probs.shape[1]})")
    if np.unique(labels).size < 2:
        raise MetricError("Metrics need at least two classes present in the labels")

    preds = np.argmax(probs, axis=1)
    return MetricSet(
        accuracy=float(np.mean(preds == labels)),
        f1_macro=f1_macro(labels, preds, probs.shape[1]),
        auroc=macro_auroc(probs, labels),
    )


def safe_f1(probs: np.ndarray, labels: np.ndarray, n_classes: Optional[int] = None) -> float:
    """Macro F1 of argmax predictions without the two-class requirement (used for early stopping)."""
    n_classes = n_classes or probs.shape[1]
    return f1_macro(labels, np.argmax(probs, axis=1), n_classes)
