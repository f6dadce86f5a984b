"""
Single-block, single-head Transformer encoder over patch tokens.

Pipeline: projection + positional embedding -> LayerNorm -> scaled
dot-product self-attention (+ residual) -> LayerNorm -> GELU feed-forward
(+ residual) -> mean over tokens -> linear head. Everything is float64 and
the backward pass is written out layer by layer.
"""

import logging
import math
from collections import OrderedDict
from typing import Dict, Optional, Tuple, Union

import numpy as np
from scipy.special import erf, log_softmax, softmax

from core.classifier import TrainingHistory
from core.exceptions import ArgumentError, DataError, ShapeError

from .base import PatchConfig, TokenTensor
from .tokenizer import project_patches, trials_to_patches

logger = logging.getLogger(__name__)

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

NO_DECAY = (
    "proj_b", "pos", "ln1_g", "ln1_b", "q_b", "k_b", "v_b", "o_b",
    "ln2_g", "ln2_b", "ff1_b", "ff2_b", "head_b",
)


def param_shapes(cfg: PatchConfig) -> "OrderedDict[str, Tuple[int, ...]]":
    """Name and shape of every parameter tensor, in checkpoint order."""
    d, f, n, p, k = cfg.d_model, cfg.ff_dim, cfg.n_tokens, cfg.patch_dim, cfg.n_classes
    return OrderedDict([
        ("proj_w", (p, d)), ("proj_b", (d,)),
        ("pos", (n, d)),
        ("ln1_g", (d,)), ("ln1_b", (d,)),
        ("q_w", (d, d)), ("q_b", (d,)),
        ("k_w", (d, d)), ("k_b", (d,)),
        ("v_w", (d, d)), ("v_b", (d,)),
        ("o_w", (d, d)), ("o_b", (d,)),
        ("ln2_g", (d,)), ("ln2_b", (d,)),
        ("ff1_w", (d, f)), ("ff1_b", (f,)),
        ("ff2_w", (f, d)), ("ff2_b", (d,)),
        ("head_w", (d, k)), ("head_b", (k,)),
    ])


def param_count(cfg: PatchConfig, d_model: Optional[int] = None, ff_dim: Optional[int] = None) -> int:
    """
    Exact parameter count.

    projection P*d + d, positional n*d, attention 4*(d^2 + d), two layer
    norms 4*d, feed-forward 2*d*f + f + d, head d*K + K.
    """
    d = cfg.d_model if d_model is None else d_model
    f = cfg.ff_dim if ff_dim is None else ff_dim
    p, n, k = cfg.patch_dim, cfg.n_tokens, cfg.n_classes
    return (p * d + d) + n * d + 4 * (d * d + d) + 4 * d + (2 * d * f + f + d) + (d * k + k)


class PatchModel:
    """Parameters of the patch encoder plus the training history of the last fit."""

    def __init__(self, config: PatchConfig, params: Dict[str, np.ndarray]):
        """
        Initialize the model from existing parameters.

        Args:
            config: Strategy and widths (validated here)
            params: Tensor per name of ``param_shapes(config)``

        Raises:
            ShapeError: missing tensors or wrong shapes
            DataError: non-finite parameters
        """
        config.ensure_valid()
        shapes = param_shapes(config)
        missing = [name for name in shapes if name not in params]
        if missing:
            raise ShapeError(f"Missing parameter tensors: {missing}")
        self.config = config
        self.params: Dict[str, np.ndarray] = OrderedDict()
        for name, shape in shapes.items():
            value = np.array(params[name], dtype=np.float64)
            if value.shape != shape:
                raise ShapeError(f"Parameter {name} has shape {value.shape}, expected {shape}")
            if not np.all(np.isfinite(value)):
                raise DataError(f"Parameter {name} contains non-finite values")
            self.params[name] = value
        self.history = TrainingHistory()
        logger.debug(f"PatchModel ready ({config.strategy}, {self.n_parameters} parameters)")

    @classmethod
    def initialize(cls, config: PatchConfig, rng: np.random.Generator) -> "PatchModel":
        """Random weights scaled by 1/sqrt(fan_in), zero biases, unit LayerNorm gains."""
        config.ensure_valid()
        params = {}
        for name, shape in param_shapes(config).items():
            if name.endswith("_g"):
                params[name] = np.ones(shape)
            elif name == "pos":
                params[name] = 0.02 * rng.standard_normal(shape)
            elif name.endswith("_w"):
                params[name] = rng.standard_normal(shape) / math.sqrt(shape[0])
            else:
                params[name] = np.zeros(shape)
        return cls(config, params)

    @property
    def n_parameters(self) -> int:
        return int(sum(v.size for v in self.params.values()))

    def copy_params(self) -> Dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params.items()}

    def load_params(self, params: Dict[str, np.ndarray]) -> None:
        for name in self.params:
            self.params[name] = np.array(params[name], dtype=np.float64)

    def predict_proba(self, trials: np.ndarray) -> np.ndarray:
        """Class probabilities of TrialSet-layout trials [N x C x T]."""
        logits, _ = forward(self, trials_to_patches(trials, self.config))
        return softmax(logits, axis=1)


# ---------------------------------------------------------------------------
# Layers
# ---------------------------------------------------------------------------

def _layer_norm(x: np.ndarray, g: np.ndarray, b: np.ndarray, eps: float):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    rstd = 1.0 / np.sqrt((xc * xc).mean(axis=-1, keepdims=True) + eps)
    xhat = xc * rstd
    return xhat * g + b, xhat, rstd


def _layer_norm_backward(dy: np.ndarray, xhat: np.ndarray, rstd: np.ndarray, g: np.ndarray):
    dg = (dy * xhat).sum(axis=(0, 1))
    db = dy.sum(axis=(0, 1))
    dxhat = dy * g
    dx = rstd * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    )
    return dx, dg, db


def _gelu(u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    cdf = 0.5 * (1.0 + erf(u / _SQRT2))
    return u * cdf, cdf


def _gelu_grad(u: np.ndarray, cdf: np.ndarray) -> np.ndarray:
    return cdf + u * _INV_SQRT_2PI * np.exp(-0.5 * u * u)


def _outer_sum(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Sum over batch and token axes of a^T b ([B,n,i], [B,n,j] -> [i,j])."""
    return np.tensordot(a, b, axes=([0, 1], [0, 1]))


# ---------------------------------------------------------------------------
# Forward / backward
# ---------------------------------------------------------------------------

def encoder_forward(model: PatchModel, tokens: Union[TokenTensor, np.ndarray]) -> Tuple[np.ndarray, Dict]:
    """
    Run the encoder block and the head on token embeddings.

    Args:
        model: Parameters
        tokens: [B x n_tokens x d_model] array or a single TokenTensor

    Returns:
        Tuple of (logits [B x n_classes], cache of intermediates)
    """
    h0 = tokens.tokens[None] if isinstance(tokens, TokenTensor) else np.asarray(tokens, dtype=np.float64)
    cfg = model.config
    if h0.ndim != 3 or h0.shape[1:] != (cfg.n_tokens, cfg.d_model):
        raise ShapeError(f"Tokens of shape {h0.shape} for a model expecting [B x {cfg.n_tokens} x {cfg.d_model}]")
    p = model.params
    scale = 1.0 / math.sqrt(cfg.d_model)

    a, xhat1, rstd1 = _layer_norm(h0, p["ln1_g"], p["ln1_b"], cfg.ln_eps)
    q = a @ p["q_w"] + p["q_b"]
    k = a @ p["k_w"] + p["k_b"]
    v = a @ p["v_w"] + p["v_b"]
    attn = softmax(q @ k.transpose(0, 2, 1) * scale, axis=-1)
    context = attn @ v
    h1 = h0 + context @ p["o_w"] + p["o_b"]

    c, xhat2, rstd2 = _layer_norm(h1, p["ln2_g"], p["ln2_b"], cfg.ln_eps)
    u = c @ p["ff1_w"] + p["ff1_b"]
    hidden, cdf = _gelu(u)
    h2 = h1 + hidden @ p["ff2_w"] + p["ff2_b"]

    pooled = h2.mean(axis=1)
    logits = pooled @ p["head_w"] + p["head_b"]

    cache = {
        "h0": h0, "a": a, "xhat1": xhat1, "rstd1": rstd1,
        "q": q, "k": k, "v": v, "attn": attn, "context": context,
        "h1": h1, "c": c, "xhat2": xhat2, "rstd2": rstd2,
        "u": u, "cdf": cdf, "hidden": hidden, "h2": h2,
        "pooled": pooled, "logits": logits,
    }
    return logits, cache


def forward(model: PatchModel, patches: np.ndarray) -> Tuple[np.ndarray, Dict]:
    """
    Project patches and run the encoder.

    Args:
        model: Parameters
        patches: [B x n_tokens x patch_dim]

    Returns:
        Tuple of (logits, cache); the cache also holds the patches
    """
    patches = np.asarray(patches, dtype=np.float64)
    if patches.ndim != 3:
        raise ShapeError(f"Expected [batch x tokens x patch_dim], got shape {patches.shape}")
    logits, cache = encoder_forward(model, project_patches(model.config, model.params, patches))
    cache["patches"] = patches
    return logits, cache


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log-likelihood of integer labels."""
    labels = np.asarray(labels, dtype=np.int64)
    logp = log_softmax(logits, axis=1)
    return float(-logp[np.arange(len(labels)), labels].mean())


def backward(model: PatchModel, cache: Dict, labels: np.ndarray) -> Tuple[float, Dict[str, np.ndarray]]:
    """
    Gradients of the mean cross-entropy with respect to every parameter.

    Args:
        model: Parameters used for the forward pass
        cache: Cache returned by ``forward``
        labels: [B] integer labels

    Returns:
        Tuple of (loss, gradient per parameter name)
    """
    if "patches" not in cache:
        raise ArgumentError("backward needs the cache of forward(), which records the patches")
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    logits = cache["logits"]
    batch, n_tokens = cache["h0"].shape[:2]
    if len(labels) != batch:
        raise ShapeError(f"{len(labels)} labels for a batch of {batch}")
    p = model.params
    scale = 1.0 / math.sqrt(model.config.d_model)
    g: Dict[str, np.ndarray] = {}

    probs = softmax(logits, axis=1)
    loss = cross_entropy(logits, labels)
    dlogits = probs.copy()
    dlogits[np.arange(batch), labels] -= 1.0
    dlogits /= batch

    # head and mean pooling
    g["head_w"] = cache["pooled"].T @ dlogits
    g["head_b"] = dlogits.sum(axis=0)
    dh2 = np.broadcast_to((dlogits @ p["head_w"].T)[:, None, :] / n_tokens, cache["h2"].shape)

    # feed-forward branch
    g["ff2_w"] = _outer_sum(cache["hidden"], dh2)
    g["ff2_b"] = dh2.sum(axis=(0, 1))
    du = (dh2 @ p["ff2_w"].T) * _gelu_grad(cache["u"], cache["cdf"])
    g["ff1_w"] = _outer_sum(cache["c"], du)
    g["ff1_b"] = du.sum(axis=(0, 1))
    dc = du @ p["ff1_w"].T
    dh1_ln, g["ln2_g"], g["ln2_b"] = _layer_norm_backward(dc, cache["xhat2"], cache["rstd2"], p["ln2_g"])
    dh1 = dh2 + dh1_ln

    # attention branch
    g["o_w"] = _outer_sum(cache["context"], dh1)
    g["o_b"] = dh1.sum(axis=(0, 1))
    dcontext = dh1 @ p["o_w"].T
    attn = cache["attn"]
    dattn = dcontext @ cache["v"].transpose(0, 2, 1)
    dv = attn.transpose(0, 2, 1) @ dcontext
    dscores = attn * (dattn - (dattn * attn).sum(axis=-1, keepdims=True)) * scale
    dq = dscores @ cache["k"]
    dk = dscores.transpose(0, 2, 1) @ cache["q"]

    a = cache["a"]
    da = np.zeros_like(a)
    for name, dproj in (("q", dq), ("k", dk), ("v", dv)):
        g[f"{name}_w"] = _outer_sum(a, dproj)
        g[f"{name}_b"] = dproj.sum(axis=(0, 1))
        da += dproj @ p[f"{name}_w"].T
    dh0_ln, g["ln1_g"], g["ln1_b"] = _layer_norm_backward(da, cache["xhat1"], cache["rstd1"], p["ln1_g"])
    dh0 = dh1 + dh0_ln

    # projection and positional embedding
    g["proj_w"] = _outer_sum(cache["patches"], dh0)
    g["proj_b"] = dh0.sum(axis=(0, 1))
    g["pos"] = dh0.sum(axis=0)

    return loss, {name: np.ascontiguousarray(g[name]) for name in p}


def loss_and_grads(model: PatchModel, patches: np.ndarray, labels: np.ndarray) -> Tuple[float, Dict[str, np.ndarray]]:
    _, cache = forward(model, patches)
    return backward(model, cache, labels)


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

def save_patch_model(model: PatchModel, path: str) -> None:
    """Checkpoint: config and history in the header, tensors as float32."""
    from core.storage import write_blob

    header = {
        "kind": "patch_model",
        "config": model.config.to_dict(),
        "n_parameters": model.n_parameters,
        "history": model.history.to_dict(),
    }
    write_blob(path, header, model.params)
    logger.info(f"Saved {model.config.strategy} patch model ({model.n_parameters} parameters) to {path}")


def load_patch_model(path: str) -> PatchModel:
    from core.exceptions import StorageError
    from core.storage import read_blob

    header, arrays = read_blob(path)
    if header.get("kind") != "patch_model":
        raise StorageError(f"{path} does not hold a patch model")
    model = PatchModel(PatchConfig.from_dict(header["config"]), arrays)
    model.history = TrainingHistory(**header.get("history", {}))
    return model
