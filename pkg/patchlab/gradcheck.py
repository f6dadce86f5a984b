"""
Finite-difference verification of the hand-written backward pass.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .model import PatchModel, backward, cross_entropy, forward

logger = logging.getLogger(__name__)

REL_ERROR_FLOOR = 1e-6


@dataclass
class GradCheckReport:
    """Maximum relative error per parameter tensor."""
    max_rel_error: Dict[str, float]
    tolerance: float
    checked_entries: Dict[str, int] = field(default_factory=dict)

    @property
    def flagged(self) -> List[str]:
        """Tensors whose error is not below the tolerance."""
        return [name for name, err in self.max_rel_error.items() if not err < self.tolerance]

    @property
    def passed(self) -> bool:
        return not self.flagged

    @property
    def worst(self) -> float:
        return max(self.max_rel_error.values()) if self.max_rel_error else 0.0

    def to_dict(self) -> Dict:
        return {
            "tolerance": self.tolerance,
            "passed": self.passed,
            "max_rel_error": dict(self.max_rel_error),
            "checked_entries": dict(self.checked_entries),
            "flagged": self.flagged,
        }

    def format(self) -> str:
        width = max(len(name) for name in self.max_rel_error)
        lines = [f"{'tensor':<{width}}  {'entries':>7}  max rel. error"]
        for name, err in self.max_rel_error.items():
            mark = "  FAIL" if name in self.flagged else ""
            lines.append(f"{name:<{width}}  {self.checked_entries.get(name, 0):>7}  {err:.3e}{mark}")
        lines.append(f"{'passed' if self.passed else 'FAILED'} at tolerance {self.tolerance:g}")
        return "\n".join(lines)


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = REL_ERROR_FLOOR) -> np.ndarray:
    """|a - n| / max(|a|, |n|, floor), elementwise."""
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / denom


def randomize_parameters(model: PatchModel, rng: np.random.Generator, scale: float = 0.1) -> None:
    """Add N(0, scale^2) noise to every parameter, so zero-initialized tensors carry signal."""
    for name, value in model.params.items():
        value += scale * rng.standard_normal(value.shape)


def grad_check(
    model: PatchModel,
    patches: np.ndarray,
    labels: np.ndarray,
    tolerance: float = 1e-4,
    step: float = 1e-5,
    max_entries: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> GradCheckReport:
    """
    Compare analytic gradients with central finite differences of the loss.

    Args:
        model: Model to check (parameters are restored afterwards)
        patches: [B x n_tokens x patch_dim] batch
        labels: [B] labels
        tolerance: Relative-error threshold for flagging a tensor
        step: Finite-difference step
        max_entries: Check at most this many random entries per tensor
        rng: Generator for entry sampling (required with ``max_entries``)

    Returns:
        GradCheckReport
    """
    _, cache = forward(model, patches)
    _, analytic = backward(model, cache, labels)
    if max_entries is not None and rng is None:
        rng = np.random.Generator(np.random.PCG64(0))

    def loss() -> float:
        logits, _ = forward(model, patches)
        return cross_entropy(logits, labels)

    errors: Dict[str, float] = {}
    counts: Dict[str, int] = {}
    for name, value in model.params.items():
        flat = value.reshape(-1)
        grad = analytic[name].reshape(-1)
        if max_entries is not None and flat.size > max_entries:
            entries = np.sort(rng.choice(flat.size, size=max_entries, replace=False))
        else:
            entries = np.arange(flat.size)

        numeric = np.empty(len(entries))
        for j, idx in enumerate(entries):
            original = flat[idx]
            flat[idx] = original + step
            plus = loss()
            flat[idx] = original - step
            minus = loss()
            flat[idx] = original
            numeric[j] = (plus - minus) / (2.0 * step)

        errors[name] = float(relative_error(grad[entries], numeric).max()) if len(entries) else 0.0
        counts[name] = int(len(entries))

    report = GradCheckReport(max_rel_error=errors, tolerance=tolerance, checked_entries=counts)
    if report.passed:
        logger.info(f"Gradient check passed (worst relative error {report.worst:.2e})")
    else:
        logger.warning(f"Gradient check flagged {report.flagged}")
    return report
