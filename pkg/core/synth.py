"""
Synthetic ERP datasets with a planted, controllable class effect.

Background activity is seeded 1/f noise; each subject gets its own
background and effect gain. Class effects:

- ``none``: labels carry no signal
- ``alpha``: a 10 Hz oscillation with random phase, scaled by class index
- ``evoked``: a Gaussian deflection at a fixed latency, scaled by class index
"""

import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np

from .configbase import ValidatedConfig
from .datasets import DatasetProfile
from .exceptions import ArgumentError
from .preprocessing import round_half_up, zscore_trials
from .recording import TrialSet
from .splits import seeded_generator

logger = logging.getLogger(__name__)

EFFECTS = ("none", "alpha", "evoked")


@dataclass
class SynthSpec(ValidatedConfig):
    """Shape of a synthetic dataset and its planted effect."""
    n_subjects: int = 30
    trials_per_subject: int = 60
    n_channels: int = 8
    fs: float = 200.0
    window: Tuple[float, float] = (-0.2, 0.8)
    baseline: Tuple[float, float] = (-0.2, 0.0)
    n_classes: int = 2
    effect: str = "alpha"
    effect_size: float = 8.0
    alpha_hz: float = 10.0
    latency: float = 0.3
    width: float = 0.05
    noise_std: float = 10.0
    subject_jitter: float = 0.2
    zscore: bool = True
    dataset_name: str = "synthetic"

    def _collect_errors(self) -> List[str]:
        errors = []
        if self.n_subjects < 5:
            errors.append("n_subjects must be at least 5")
        if self.trials_per_subject < 10:
            errors.append("trials_per_subject must be at least 10")
        if self.n_channels < 1:
            errors.append("n_channels must be at least 1")
        if not self.fs > 0:
            errors.append("fs must be positive")
        if self.n_classes < 2:
            errors.append("n_classes must be at least 2")
        if self.effect not in EFFECTS:
            errors.append(f"effect must be one of {EFFECTS}")
        if self.effect_size < 0 or self.noise_std <= 0 or self.subject_jitter < 0:
            errors.append("effect_size and subject_jitter must be non-negative, noise_std positive")
        if not self.window[0] < self.window[1]:
            errors.append("window start must precede end")
        if not (self.window[0] <= self.baseline[0] < self.baseline[1] <= self.window[1]):
            errors.append("baseline must lie inside the window")
        if self.effect == "alpha" and not 0 < self.alpha_hz < self.fs / 2:
            errors.append("alpha_hz must lie below Nyquist")
        if self.effect == "evoked" and self.width <= 0:
            errors.append("width must be positive")
        return errors

    @property
    def n_samples(self) -> int:
        return round_half_up((self.window[1] - self.window[0]) * self.fs)

    @classmethod
    def from_profile(cls, profile: DatasetProfile, **overrides) -> "SynthSpec":
        """Spec with the channel count, windows and classes of a benchmark dataset."""
        spec = cls(
            n_channels=profile.n_channels,
            window=profile.window,
            baseline=profile.baseline,
            n_classes=profile.n_classes,
            dataset_name=f"synthetic-{profile.name}",
        )
        return replace(spec, **overrides)


def pink_noise(rng: np.random.Generator, shape: Tuple[int, ...], fs: float) -> np.ndarray:
    """Zero-mean noise with 1/f power along the last axis, unit overall std."""
    n = shape[-1]
    white = rng.standard_normal(shape)
    freqs = np.fft.rfftfreq(n, d=1.0 / fs)
    shaping = np.zeros_like(freqs)
    shaping[1:] = 1.0 / np.sqrt(freqs[1:])
    colored = np.fft.irfft(np.fft.rfft(white, axis=-1) * shaping, n=n, axis=-1)
    std = colored.std()
    return colored / std if std > 0 else colored


def synth_dataset(spec: SynthSpec, seed: int, out_dir: Optional[str] = None) -> TrialSet:
    """
    Generate a synthetic dataset.

    Args:
        spec: Dataset shape and effect
        seed: Generator seed; identical (spec, seed) gives identical data
        out_dir: If given, the dataset is also written there in ERPB format

    Returns:
        TrialSet (baseline-corrected, z-scored if ``spec.zscore``)
    """
    spec.ensure_valid(ArgumentError)
    rng = seeded_generator(seed)
    n = spec.n_samples
    t = spec.window[0] + np.arange(n) / spec.fs

    if spec.effect == "alpha":
        template = None
    elif spec.effect == "evoked":
        template = np.exp(-0.5 * ((t - spec.latency) / spec.width) ** 2)
    else:
        template = np.zeros(n)

    trials = []
    labels = []
    subject_ids = []
    for s in range(spec.n_subjects):
        subject = f"S{s:03d}"
        bg_gain = np.exp(spec.subject_jitter * rng.standard_normal())
        fx_gain = np.exp(spec.subject_jitter * rng.standard_normal())
        y = rng.permutation(np.arange(spec.trials_per_subject) % spec.n_classes)
        data = spec.noise_std * bg_gain * pink_noise(rng, (spec.trials_per_subject, spec.n_channels, n), spec.fs)
        scale = spec.effect_size * fx_gain * y / (spec.n_classes - 1)

        if spec.effect == "alpha":
            phase = rng.uniform(0.0, 2 * np.pi, size=spec.trials_per_subject)
            waves = np.sin(2 * np.pi * spec.alpha_hz * t[None, :] + phase[:, None])
            data += (scale[:, None] * waves)[:, None, :]
        else:
            data += scale[:, None, None] * template[None, None, :]

        trials.append(data)
        labels.append(y)
        subject_ids.extend([subject] * spec.trials_per_subject)

    x = np.concatenate(trials, axis=0)
    b0 = round_half_up((spec.baseline[0] - spec.window[0]) * spec.fs)
    b1 = min(max(round_half_up((spec.baseline[1] - spec.window[0]) * spec.fs), b0 + 1), n)
    x = x - x[:, :, b0:b1].mean(axis=2, keepdims=True)

    ts = TrialSet(
        trials=x,
        labels=np.concatenate(labels),
        subject_ids=subject_ids,
        fs=spec.fs,
        class_names=[f"class_{k}" for k in range(spec.n_classes)],
        channel_labels=[f"EEG{c:02d}" for c in range(spec.n_channels)],
        meta={"dataset_name": spec.dataset_name},
    )
    if spec.zscore:
        ts = zscore_trials(ts)

    logger.info(
        f"Synthesized '{spec.dataset_name}': {ts.n_trials} trials, {spec.n_subjects} subjects, "
        f"effect={spec.effect} (size {spec.effect_size}), seed={seed}"
    )
    if out_dir is not None:
        from .storage import write_erpb

        write_erpb(ts, out_dir, dataset_name=spec.dataset_name)
    return ts
