"""
Patch-embedding comparison for EEG Transformers.

This package provides:
- Tokenization of trials under the multi-, uni- and whole-variate strategies
- A single-block attention encoder with an explicit backward pass
- Finite-difference gradient checks
- Training and subject-independent comparison of the strategies
"""

import numpy as np

from core.exceptions import ArgumentError

from .base import STRATEGIES, PatchConfig, TokenTensor, n_tokens_for, reference_config
from .gradcheck import GradCheckReport, grad_check, randomize_parameters
from .model import (
    PatchModel,
    backward,
    encoder_forward,
    forward,
    load_patch_model,
    param_count,
    save_patch_model,
)
from .tokenizer import extract_patch_batch, extract_patches, tokenize, trials_to_patches
from .trainer import run_patch_benchmark, strategy_table, train_patch_model

__all__ = [
    'STRATEGIES',
    'PatchConfig',
    'TokenTensor',
    'PatchModel',
    'GradCheckReport',
    'n_tokens_for',
    'reference_config',
    'extract_patches',
    'extract_patch_batch',
    'trials_to_patches',
    'tokenize',
    'encoder_forward',
    'forward',
    'backward',
    'param_count',
    'grad_check',
    'randomize_parameters',
    'save_patch_model',
    'load_patch_model',
    'train_patch_model',
    'run_patch_benchmark',
    'strategy_table',
    'create_patch_model',
]

__version__ = '0.1.0'


def create_patch_model(config: PatchConfig, seed: int = 0) -> PatchModel:
    """
    Factory function to create a freshly initialized PatchModel.

    Args:
        config: Patch configuration
        seed: Initialization seed

    Returns:
        PatchModel

    Raises:
        ArgumentError: If the strategy is unknown or the configuration is invalid
    """
    if config.strategy not in STRATEGIES:
        raise ArgumentError(f"Invalid patch strategy: {config.strategy}")
    return PatchModel.initialize(config, np.random.Generator(np.random.PCG64(seed)))
