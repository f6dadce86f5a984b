"""
Signal containers shared by the preprocessing, feature and storage layers.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import ArgumentError, DataError, ShapeError

logger = logging.getLogger(__name__)

CHANNEL_TYPES = ("eeg", "eog", "ecg", "emg", "stim", "misc", "pos")


@dataclass(frozen=True)
class EventMarker:
    """Stimulus event at a sample offset of a continuous recording."""
    sample_index: int
    label: str


@dataclass
class Recording:
    """
    Continuous multichannel EEG recording.

    ``data`` is [channels x samples] in microvolts. Optional metadata
    (channel types, subject, marked bad channels) travels with the signal
    through the preprocessing steps.
    """
    data: np.ndarray
    fs: float
    channel_labels: List[str]
    events: List[EventMarker] = field(default_factory=list)
    subject_id: str = "unknown"
    channel_types: Optional[List[str]] = None
    bad_channels: List[int] = field(default_factory=list)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ShapeError(f"Recording data must be 2-D [channels x samples], got shape {self.data.shape}")
        if not self.fs > 0:
            raise ArgumentError(f"Sampling rate must be positive, got {self.fs}")
        if self.data.shape[0] < 1:
            raise ShapeError("Recording must have at least one channel")
        if len(self.channel_labels) != self.data.shape[0]:
            raise ShapeError(
                f"{len(self.channel_labels)} channel labels for {self.data.shape[0]} channels"
            )
        if self.channel_types is not None:
            if len(self.channel_types) != self.data.shape[0]:
                raise ShapeError(
                    f"{len(self.channel_types)} channel types for {self.data.shape[0]} channels"
                )
            unknown = sorted(set(self.channel_types) - set(CHANNEL_TYPES))
            if unknown:
                raise ArgumentError(f"Unknown channel types: {unknown}")
        for event in self.events:
            if not 0 <= event.sample_index < self.data.shape[1]:
                raise ArgumentError(
                    f"Event '{event.label}' at sample {event.sample_index} outside recording "
                    f"of {self.data.shape[1]} samples"
                )
        for idx in self.bad_channels:
            if not 0 <= idx < self.data.shape[0]:
                raise ArgumentError(f"Bad channel index {idx} out of range")

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    @property
    def duration(self) -> float:
        """Length in seconds."""
        return self.n_samples / self.fs

    def check_finite(self) -> None:
        """Raise DataError if any sample is NaN or infinite."""
        if not np.all(np.isfinite(self.data)):
            bad = int(np.count_nonzero(~np.isfinite(self.data)))
            raise DataError(f"Recording '{self.subject_id}' contains {bad} non-finite samples")

    def with_data(self, data: np.ndarray, **changes: Any) -> "Recording":
        """Copy of this recording with new signal data (and optional field changes)."""
        return replace(self, data=data, **changes)


@dataclass(frozen=True)
class EpochSpec:
    """
    Epoch window and baseline sub-window, both in seconds relative to the event.
    """
    window: Tuple[float, float] = (-0.2, 0.8)
    baseline: Tuple[float, float] = (-0.2, 0.0)

    def __post_init__(self):
        t_start, t_end = self.window
        b_start, b_end = self.baseline
        if not t_start < t_end:
            raise ArgumentError(f"Epoch window start must precede end: {self.window}")
        if not b_start < b_end:
            raise ArgumentError(f"Baseline start must precede end: {self.baseline}")
        if b_start < t_start or b_end > t_end:
            raise ArgumentError(f"Baseline {self.baseline} not inside epoch window {self.window}")


@dataclass
class TrialSet:
    """
    Epoched trials [n_trials x channels x samples] with per-trial labels and subjects.
    """
    trials: np.ndarray
    labels: np.ndarray
    subject_ids: List[str]
    fs: float
    class_names: List[str]
    channel_labels: Optional[List[str]] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.trials = np.asarray(self.trials, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        self.subject_ids = [str(s) for s in self.subject_ids]

        if self.trials.ndim != 3:
            raise ShapeError(f"Trials must be 3-D [trials x channels x samples], got shape {self.trials.shape}")
        n = self.trials.shape[0]
        if len(self.labels) != n or len(self.subject_ids) != n:
            raise ShapeError(
                f"{n} trials, {len(self.labels)} labels and {len(self.subject_ids)} subject ids"
            )
        if n and (self.labels.min() < 0 or self.labels.max() >= len(self.class_names)):
            raise ArgumentError(
                f"Class indices must lie in [0, {len(self.class_names)}), "
                f"got range [{self.labels.min()}, {self.labels.max()}]"
            )
        if self.channel_labels is not None and len(self.channel_labels) != self.trials.shape[1]:
            raise ShapeError(
                f"{len(self.channel_labels)} channel labels for {self.trials.shape[1]} channels"
            )

    @property
    def n_trials(self) -> int:
        return self.trials.shape[0]

    @property
    def n_channels(self) -> int:
        return self.trials.shape[1]

    @property
    def n_samples(self) -> int:
        return self.trials.shape[2]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def subjects(self) -> List[str]:
        """Sorted unique subject ids."""
        return sorted(set(self.subject_ids))

    def check_finite(self) -> None:
        if not np.all(np.isfinite(self.trials)):
            raise DataError("TrialSet contains non-finite values")

    def subset(self, index: Any) -> "TrialSet":
        """
        Select trials by boolean mask or integer indices.

        Args:
            index: Boolean mask of length n_trials or sequence of trial indices

        Returns:
            New TrialSet sharing class names and channel labels
        """
        idx = np.asarray(index)
        if idx.dtype == bool:
            if idx.shape != (self.n_trials,):
                raise ShapeError(f"Mask of length {idx.shape} for {self.n_trials} trials")
            idx = np.flatnonzero(idx)
        idx = idx.astype(np.int64).reshape(-1)
        return TrialSet(
            trials=self.trials[idx],
            labels=self.labels[idx],
            subject_ids=[self.subject_ids[i] for i in idx],
            fs=self.fs,
            class_names=list(self.class_names),
            channel_labels=None if self.channel_labels is None else list(self.channel_labels),
            meta=dict(self.meta),
        )

    def for_subjects(self, subjects: Sequence[str]) -> "TrialSet":
        """Trials belonging to any of the given subjects, in original order."""
        wanted = set(subjects)
        return self.subset(np.array([s in wanted for s in self.subject_ids], dtype=bool))

    def with_trials(self, trials: np.ndarray, **changes: Any) -> "TrialSet":
        return replace(self, trials=trials, **changes)

    @classmethod
    def concatenate(cls, sets: Sequence["TrialSet"]) -> "TrialSet":
        """
        Stack several trial sets that share sampling rate, shape and classes.

        Processing counters in ``meta`` are summed.
        """
        if not sets:
            raise ArgumentError("Nothing to concatenate")
        first = sets[0]
        for other in sets[1:]:
            if other.fs != first.fs or other.trials.shape[1:] != first.trials.shape[1:]:
                raise ShapeError(
                    f"Cannot concatenate trial sets with shapes {first.trials.shape[1:]} @ {first.fs} Hz "
                    f"and {other.trials.shape[1:]} @ {other.fs} Hz"
                )
            if list(other.class_names) != list(first.class_names):
                raise ArgumentError("Cannot concatenate trial sets with different class names")

        meta: Dict[str, Any] = {}
        for ts in sets:
            for key, value in ts.meta.items():
                if isinstance(value, (int, np.integer)):
                    meta[key] = meta.get(key, 0) + int(value)

        return cls(
            trials=np.concatenate([ts.trials for ts in sets], axis=0),
            labels=np.concatenate([ts.labels for ts in sets]),
            subject_ids=[s for ts in sets for s in ts.subject_ids],
            fs=first.fs,
            class_names=list(first.class_names),
            channel_labels=first.channel_labels,
            meta=meta,
        )
