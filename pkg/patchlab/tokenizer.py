"""
Cutting trials into patches for the three embedding strategies.

A trial is [T x C] (time by channel). Patches:

- multi: L x C blocks, flattened time-major, one token per block
- uni: L-sample windows of one channel, tokens ordered channel by channel
- whole: the C-vector of one time point

A trailing partial block is zero-padded to a full patch.
"""

import logging
from typing import Mapping

import numpy as np

from core.exceptions import LengthError, ShapeError

from .base import PatchConfig, TokenTensor

logger = logging.getLogger(__name__)


def _pad_time(x: np.ndarray, n_patches: int, patch_len: int) -> np.ndarray:
    """Zero-pad axis -2 (time) of [..., T, C] to n_patches * patch_len."""
    pad = n_patches * patch_len - x.shape[-2]
    if pad == 0:
        return x
    widths = [(0, 0)] * x.ndim
    widths[-2] = (0, pad)
    return np.pad(x, widths)


def extract_patch_batch(x: np.ndarray, cfg: PatchConfig) -> np.ndarray:
    """
    Patch matrices of a batch of trials.

    Args:
        x: [B x T x C] trials
        cfg: Strategy and patch length

    Returns:
        [B x n_tokens x patch_dim]

    Raises:
        ShapeError: channel count differs from the config
        LengthError: T < L for the multi and uni strategies
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ShapeError(f"Expected [batch x samples x channels], got shape {x.shape}")
    b, t, c = x.shape
    if c != cfg.n_channels:
        raise ShapeError(f"Trials have {c} channels, config expects {cfg.n_channels}")
    if cfg.strategy == "whole":
        return x.copy()

    L = cfg.patch_len
    if t < L:
        raise LengthError(f"Trial of {t} samples is shorter than the patch length {L}")
    n_patches = -(-t // L)
    blocks = _pad_time(x, n_patches, L).reshape(b, n_patches, L, c)
    if cfg.strategy == "multi":
        return blocks.reshape(b, n_patches, L * c)
    # uni: [B, C, n_patches, L], channel-major token order
    return blocks.transpose(0, 3, 1, 2).reshape(b, c * n_patches, L)


def extract_patches(x: np.ndarray, cfg: PatchConfig) -> np.ndarray:
    """
    Patch matrix of one trial.

    Args:
        x: [T x C] trial
        cfg: Strategy and patch length

    Returns:
        [n_tokens x patch_dim]
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ShapeError(f"Expected a [samples x channels] trial, got shape {x.shape}")
    return extract_patch_batch(x[None], cfg)[0]


def trials_to_patches(trials: np.ndarray, cfg: PatchConfig) -> np.ndarray:
    """Patches of TrialSet-layout trials ([N x C x T])."""
    trials = np.asarray(trials, dtype=np.float64)
    if trials.ndim != 3:
        raise ShapeError(f"Expected [trials x channels x samples], got shape {trials.shape}")
    return extract_patch_batch(trials.transpose(0, 2, 1), cfg)


def project_patches(cfg: PatchConfig, params: Mapping[str, np.ndarray], patches: np.ndarray) -> np.ndarray:
    """Linear projection plus learned positional embedding ([..., n, P] -> [..., n, d])."""
    if patches.shape[-2:] != (cfg.n_tokens, cfg.patch_dim):
        raise ShapeError(
            f"Patches of shape {patches.shape[-2:]} for a model expecting {(cfg.n_tokens, cfg.patch_dim)}"
        )
    return patches @ params["proj_w"] + params["proj_b"] + params["pos"]


def tokenize(x: np.ndarray, cfg: PatchConfig, params: Mapping[str, np.ndarray]) -> TokenTensor:
    """
    Token embeddings of one [T x C] trial.

    Args:
        x: Trial, time by channel
        cfg: Strategy, patch length and widths
        params: Projection weights ``proj_w``/``proj_b`` and positional
            embedding ``pos``, e.g. ``PatchModel.params``

    Returns:
        TokenTensor of shape [n_tokens x d_model]
    """
    patches = extract_patches(x, cfg)
    return TokenTensor(tokens=project_patches(cfg, params, patches), strategy=cfg.strategy)
