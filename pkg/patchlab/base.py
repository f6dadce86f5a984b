"""
Configuration and token containers for the patch-embedding encoder.
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from core.configbase import ValidatedConfig
from core.exceptions import ArgumentError, DataError, ShapeError

logger = logging.getLogger(__name__)

STRATEGIES = ("multi", "uni", "whole")

# strategy -> (patch_len, ff_dim) of the reference configurations; with
# d_model=64, T=200, C=26 and two classes their parameter counts stay
# within 2% of each other
REFERENCE_SETTINGS: Dict[str, Tuple[int, int]] = {
    "multi": (25, 128),
    "uni": (100, 384),
    "whole": (1, 336),
}


def n_tokens_for(strategy: str, n_samples: int, n_channels: int, patch_len: int) -> int:
    """Token count: multi ceil(T/L), uni C*ceil(T/L), whole T."""
    if strategy == "whole":
        return n_samples
    n_patches = math.ceil(n_samples / patch_len)
    return n_patches if strategy == "multi" else n_channels * n_patches


def patch_dim_for(strategy: str, n_channels: int, patch_len: int) -> int:
    """Input width of one patch: multi L*C, uni L, whole C."""
    if strategy == "multi":
        return patch_len * n_channels
    if strategy == "uni":
        return patch_len
    return n_channels


@dataclass
class PatchConfig(ValidatedConfig):
    """Embedding strategy and encoder widths of one PatchModel."""
    strategy: str = "multi"
    patch_len: int = 25
    d_model: int = 64
    n_heads: int = 1
    ff_dim: int = 128
    n_samples: int = 200
    n_channels: int = 26
    n_classes: int = 2
    ln_eps: float = 1e-5

    def _collect_errors(self) -> List[str]:
        errors = []
        if self.strategy not in STRATEGIES:
            errors.append(f"strategy must be one of {STRATEGIES}, got '{self.strategy}'")
        if self.strategy != "whole" and self.patch_len < 1:
            errors.append("patch_len must be positive")
        if self.d_model < 4:
            errors.append("d_model must be at least 4")
        if self.n_heads != 1:
            errors.append("only single-head attention is supported")
        if self.ff_dim < 1:
            errors.append("ff_dim must be positive")
        if self.n_samples < 1 or self.n_channels < 1:
            errors.append("n_samples and n_channels must be positive")
        if self.n_classes < 2:
            errors.append("n_classes must be at least 2")
        if not self.ln_eps > 0:
            errors.append("ln_eps must be positive")
        return errors

    @property
    def n_tokens(self) -> int:
        return n_tokens_for(self.strategy, self.n_samples, self.n_channels, self.patch_len)

    @property
    def patch_dim(self) -> int:
        return patch_dim_for(self.strategy, self.n_channels, self.patch_len)

    @property
    def n_patches(self) -> int:
        """Patches along time (whole: one per sample)."""
        return self.n_samples if self.strategy == "whole" else math.ceil(self.n_samples / self.patch_len)


def reference_config(
    strategy: str,
    n_samples: int = 200,
    n_channels: int = 26,
    n_classes: int = 2,
    d_model: int = 64,
) -> PatchConfig:
    """
    Reference configuration of one strategy.

    Patch lengths are 25 (multi) and 100 (uni); feed-forward widths are
    chosen so the three parameter counts are comparable.
    """
    if strategy not in REFERENCE_SETTINGS:
        raise ArgumentError(f"Unknown strategy '{strategy}', expected one of {STRATEGIES}")
    patch_len, ff_dim = REFERENCE_SETTINGS[strategy]
    cfg = PatchConfig(
        strategy=strategy,
        patch_len=patch_len,
        d_model=d_model,
        ff_dim=ff_dim,
        n_samples=n_samples,
        n_channels=n_channels,
        n_classes=n_classes,
    )
    cfg.ensure_valid()
    return cfg


@dataclass
class TokenTensor:
    """Projected tokens (positional embedding included) of one trial."""
    tokens: np.ndarray
    strategy: str

    def __post_init__(self):
        self.tokens = np.asarray(self.tokens, dtype=np.float64)
        if self.tokens.ndim != 2:
            raise ShapeError(f"Tokens must be [n_tokens x d_model], got {self.tokens.shape}")
        if not np.all(np.isfinite(self.tokens)):
            raise DataError("Tokens contain non-finite values")

    @property
    def n_tokens(self) -> int:
        return self.tokens.shape[0]

    @property
    def d_model(self) -> int:
        return self.tokens.shape[1]
