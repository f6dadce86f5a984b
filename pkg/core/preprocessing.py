"""
Unified ERP preprocessing pipeline.

Channel selection, notch and band-pass filtering, bad-channel
interpolation, average re-referencing, resampling, epoching with baseline
correction, optional amplitude rejection and per-channel z-scoring.
"""

import logging
import math
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import signal
from tqdm import tqdm

from .configbase import ValidatedConfig
from .exceptions import (
    ArgumentError,
    BandSpecificationError,
    DataError,
    DegenerateInputError,
    EmptySetError,
    LengthError,
    StorageError,
)
from .recording import EpochSpec, EventMarker, Recording, TrialSet

logger = logging.getLogger(__name__)

BANDPASS_ORDER = 4
NOTCH_QUALITY = 30.0
ZSCORE_EPS = 1e-12
FILTER_METHODS = ("fft", "filtfilt")
TRANSIENT_TOL = 1e-9


def round_half_up(x: float) -> int:
    """Round to nearest integer, halves towards +inf."""
    return int(math.floor(x + 0.5))


# ---------------------------------------------------------------------------
# Channel selection
# ---------------------------------------------------------------------------

_NON_EEG_PREFIXES = (
    ("eog", ("EOG", "HEOG", "VEOG")),
    ("ecg", ("ECG", "EKG")),
    ("emg", ("EMG",)),
    ("stim", ("STI", "STATUS", "TRIG")),
)
_POSITION_LABELS = {"X", "Y", "Z"}


def infer_channel_type(label: str) -> str:
    """
    Guess a channel type from its label.

    Args:
        label: Channel label, e.g. "Fz", "VEOG", "Status"

    Returns:
        One of "eeg", "eog", "ecg", "emg", "stim", "pos"
    """
    upper = label.strip().upper()
    for ch_type, prefixes in _NON_EEG_PREFIXES:
        if any(upper.startswith(p) for p in prefixes):
            return ch_type
    if "EOG" in upper:
        return "eog"
    if upper in _POSITION_LABELS or upper.startswith("POS_"):
        return "pos"
    return "eeg"


def drop_non_eeg_channels(rec: Recording) -> Recording:
    """
    Keep only EEG channels.

    Uses ``rec.channel_types`` when present, otherwise infers the type from
    each label. Bad-channel indices are remapped onto the kept channels.
    """
    types = rec.channel_types or [infer_channel_type(lbl) for lbl in rec.channel_labels]
    keep = [i for i, t in enumerate(types) if t == "eeg"]
    if not keep:
        raise DataError(f"Recording '{rec.subject_id}' has no EEG channels")
    if len(keep) == rec.n_channels:
        return rec

    dropped = [rec.channel_labels[i] for i in range(rec.n_channels) if i not in keep]
    logger.debug(f"Dropping non-EEG channels from '{rec.subject_id}': {dropped}")

    new_index = {old: new for new, old in enumerate(keep)}
    return rec.with_data(
        rec.data[keep],
        channel_labels=[rec.channel_labels[i] for i in keep],
        channel_types=["eeg"] * len(keep),
        bad_channels=[new_index[b] for b in rec.bad_channels if b in new_index],
    )


# ---------------------------------------------------------------------------
# Filtering
# ---------------------------------------------------------------------------

def _odd_extend(x: np.ndarray, pad: int) -> np.ndarray:
    if pad < 1:
        return x
    left = 2 * x[:, :1] - x[:, pad:0:-1]
    right = 2 * x[:, -1:] - x[:, -2:-pad - 2:-1]
    return np.concatenate([left, x, right], axis=-1)


def transient_length(sos: np.ndarray, max_len: int, rel_tol: float = TRANSIENT_TOL) -> int:
    """
    Samples until the impulse response of ``sos`` falls below ``rel_tol`` of its peak.

    Capped at ``max_len``.
    """
    if max_len < 1:
        return 0
    impulse = np.zeros(max_len)
    impulse[0] = 1.0
    h = np.abs(signal.sosfilt(sos, impulse))
    above = np.flatnonzero(h > rel_tol * h.max())
    return int(above[-1]) + 1 if above.size else 0


def zero_phase_filter(rec: Recording, sections: Sequence[np.ndarray], method: str = "fft") -> Recording:
    """
    Apply a cascade of filters forward and backward.

    With ``method="fft"`` the signal is odd-extended at both ends by the
    summed transient length of the filters (at most ``n_samples - 1``),
    multiplied by the product of the |H(f)|^2 responses and cropped back.
    The order of ``sections`` does not change the result beyond rounding.
    ``method="filtfilt"`` runs ``sosfiltfilt`` with odd padding on the
    stacked sections.

    Args:
        rec: Input recording
        sections: SOS arrays, e.g. from ``design_bandpass``/``design_notch``
        method: "fft" or "filtfilt"

    Returns:
        Filtered recording with the same shape, sampling rate and events
    """
    if method not in FILTER_METHODS:
        raise ArgumentError(f"Unknown filter method '{method}', expected one of {FILTER_METHODS}")
    if not sections:
        return rec.with_data(rec.data.copy())
    rec.check_finite()

    if method == "filtfilt":
        try:
            out = signal.sosfiltfilt(np.vstack(sections), rec.data, axis=-1, padtype="odd")
        except ValueError as e:
            raise LengthError(f"Recording too short for forward-backward filtering: {e}") from e
        return rec.with_data(out)

    n = rec.n_samples
    pad = min(sum(transient_length(sos, n - 1) for sos in sections), n - 1)
    x = _odd_extend(rec.data, pad)
    n_ext = x.shape[-1]
    freqs = np.fft.rfftfreq(n_ext, d=1.0 / rec.fs)
    gain = np.ones_like(freqs)
    for sos in sections:
        _, h = signal.sosfreqz(sos, worN=freqs, fs=rec.fs)
        gain = gain * np.abs(h) ** 2
    out = np.fft.irfft(np.fft.rfft(x, axis=-1) * gain, n=n_ext, axis=-1)
    return rec.with_data(out[:, pad:pad + n])


def design_bandpass(low_hz: float, high_hz: float, fs: float) -> np.ndarray:
    """Butterworth band-pass in second-order sections."""
    if not 0 < low_hz < high_hz < fs / 2:
        raise BandSpecificationError(
            f"Band [{low_hz}, {high_hz}] Hz must satisfy 0 < low < high < fs/2 = {fs / 2}"
        )
    return signal.butter(BANDPASS_ORDER, [low_hz, high_hz], btype="bandpass", fs=fs, output="sos")


def design_notch(notch_hz: float, fs: float, quality: float = NOTCH_QUALITY) -> np.ndarray:
    """Second-order notch section as a single SOS row."""
    if not 0 < notch_hz < fs / 2:
        raise BandSpecificationError(f"Notch {notch_hz} Hz must satisfy 0 < notch < fs/2 = {fs / 2}")
    b, a = signal.iirnotch(notch_hz, quality, fs=fs)
    return signal.tf2sos(b, a)


def bandpass_filter(rec: Recording, low_hz: float, high_hz: float, method: str = "fft") -> Recording:
    """
    Zero-phase band-pass filter.

    Args:
        rec: Input recording
        low_hz: Lower cut-off in Hz
        high_hz: Upper cut-off in Hz
        method: "fft" (odd-padded frequency-domain forward-backward response) or
            "filtfilt" (time-domain sosfiltfilt with odd padding)

    Returns:
        Filtered recording with the same shape, sampling rate and events
    """
    sos = design_bandpass(low_hz, high_hz, rec.fs)
    return zero_phase_filter(rec, [sos], method)


def notch_filter(rec: Recording, notch_hz: float, method: str = "fft") -> Recording:
    """Zero-phase notch at ``notch_hz`` with quality factor 30."""
    sos = design_notch(notch_hz, rec.fs)
    return zero_phase_filter(rec, [sos], method)


# ---------------------------------------------------------------------------
# Spatial operations
# ---------------------------------------------------------------------------

def average_reref(rec: Recording, allow_single: bool = False) -> Recording:
    """
    Subtract the cross-channel mean from every channel at every sample.

    A single-channel recording would become identically zero, so it is
    rejected unless ``allow_single`` is set.
    """
    if rec.n_channels < 2 and not allow_single:
        raise DegenerateInputError(
            "Average re-reference of a single channel yields all zeros; pass allow_single=True to proceed"
        )
    return rec.with_data(rec.data - rec.data.mean(axis=0, keepdims=True))


def interpolate_channels(rec: Recording, bad: Sequence[int]) -> Recording:
    """
    Replace each bad channel with the unweighted mean of the good channels.

    Args:
        rec: Input recording
        bad: Indices of bad channels

    Returns:
        Recording with bad channels replaced and ``bad_channels`` cleared
    """
    bad_set = set()
    for idx in bad:
        if not 0 <= int(idx) < rec.n_channels:
            raise ArgumentError(f"Bad channel index {idx} out of range for {rec.n_channels} channels")
        bad_set.add(int(idx))

    if not bad_set:
        return rec.with_data(rec.data.copy(), bad_channels=[])
    if len(bad_set) == rec.n_channels:
        raise DataError("Cannot interpolate: every channel is marked bad")

    good = [i for i in range(rec.n_channels) if i not in bad_set]
    out = rec.data.copy()
    out[sorted(bad_set)] = rec.data[good].mean(axis=0)
    logger.debug(f"Interpolated {len(bad_set)} bad channels of '{rec.subject_id}'")
    return rec.with_data(out, bad_channels=[])


# ---------------------------------------------------------------------------
# Resampling
# ---------------------------------------------------------------------------

def resampled_length(n_samples: int, fs: float, target_fs: float) -> int:
    """Output length round_half_up(n * target_fs / fs), computed exactly."""
    exact = Fraction(n_samples) * Fraction(target_fs) / Fraction(fs)
    return int(math.floor(exact + Fraction(1, 2)))


def resample(rec: Recording, target_fs: float) -> Recording:
    """
    Polyphase resampling with anti-aliasing FIR.

    Event sample indices are rescaled by the rate ratio with round-half-up
    and clamped to the new length.
    """
    if not target_fs > 0:
        raise ArgumentError(f"Target sampling rate must be positive, got {target_fs}")
    if target_fs == rec.fs:
        return rec.with_data(rec.data.copy())

    ratio = Fraction(target_fs) / Fraction(rec.fs)
    n_out = resampled_length(rec.n_samples, rec.fs, target_fs)
    if n_out < 1:
        raise LengthError(f"Resampling {rec.n_samples} samples to {target_fs} Hz leaves no samples")

    approx = ratio.limit_denominator(1000)
    up, down = approx.numerator, approx.denominator
    out = signal.resample_poly(rec.data, up, down, axis=-1)
    if out.shape[1] >= n_out:
        out = out[:, :n_out]
    else:
        out = np.pad(out, ((0, 0), (0, n_out - out.shape[1])))

    events = [
        EventMarker(
            sample_index=min(int(math.floor(ev.sample_index * ratio + Fraction(1, 2))), n_out - 1),
            label=ev.label,
        )
        for ev in rec.events
    ]
    logger.debug(f"Resampled '{rec.subject_id}' {rec.fs} -> {target_fs} Hz (up={up}, down={down})")
    return rec.with_data(out, fs=float(target_fs), events=events)


# ---------------------------------------------------------------------------
# Epoching and normalization
# ---------------------------------------------------------------------------

def _class_names_from_map(label_map: Dict[str, int]) -> List[str]:
    n_classes = max(label_map.values()) + 1
    names: List[Optional[str]] = [None] * n_classes
    for label in sorted(label_map):
        idx = label_map[label]
        if names[idx] is None:
            names[idx] = label
    return [name if name is not None else f"class_{i}" for i, name in enumerate(names)]


def epoch_and_baseline(
    rec: Recording,
    spec: EpochSpec,
    label_map: Dict[str, int],
    class_names: Optional[List[str]] = None,
) -> TrialSet:
    """
    Cut one trial per mapped event and subtract the per-channel baseline mean.

    Events with labels absent from ``label_map`` are counted as unmapped;
    events whose window leaves the recording are counted as boundary skips.
    Both counters are stored in ``TrialSet.meta``.

    Args:
        rec: Recording at its final sampling rate
        spec: Epoch and baseline windows (seconds relative to the event)
        label_map: Event label -> class index
        class_names: Optional class names; derived from ``label_map`` if omitted

    Returns:
        TrialSet with one trial per kept event
    """
    if not label_map:
        raise ArgumentError("label_map must map at least one event label")
    if min(label_map.values()) < 0:
        raise ArgumentError("Class indices in label_map must be non-negative")
    if class_names is None:
        class_names = _class_names_from_map(label_map)
    rec.check_finite()

    fs = rec.fs
    t_start, t_end = spec.window
    b_start, b_end = spec.baseline
    offset = round_half_up(t_start * fs)
    length = round_half_up((t_end - t_start) * fs)
    b0 = round_half_up((b_start - t_start) * fs)
    b1 = min(max(round_half_up((b_end - t_start) * fs), b0 + 1), length)

    trials = []
    labels = []
    n_unmapped = 0
    n_skipped = 0
    for ev in rec.events:
        if ev.label not in label_map:
            n_unmapped += 1
            continue
        start = ev.sample_index + offset
        if start < 0 or start + length > rec.n_samples:
            n_skipped += 1
            continue
        epoch = rec.data[:, start:start + length]
        trials.append(epoch - epoch[:, b0:b1].mean(axis=1, keepdims=True))
        labels.append(label_map[ev.label])

    if n_skipped:
        logger.warning(f"'{rec.subject_id}': {n_skipped} events skipped at recording boundaries")
    if not trials:
        raise EmptySetError(
            f"No mapped events fully inside recording '{rec.subject_id}' "
            f"({len(rec.events)} events, {n_unmapped} unmapped, {n_skipped} at boundaries)"
        )

    return TrialSet(
        trials=np.stack(trials),
        labels=np.asarray(labels),
        subject_ids=[rec.subject_id] * len(trials),
        fs=fs,
        class_names=list(class_names),
        channel_labels=list(rec.channel_labels),
        meta={
            "n_events": len(rec.events),
            "n_unmapped": n_unmapped,
            "n_boundary_skipped": n_skipped,
        },
    )


def zscore_trials(ts: TrialSet, eps: float = ZSCORE_EPS) -> TrialSet:
    """
    Normalize every (trial, channel) row to zero mean and unit population std.

    Rows whose std is below ``eps`` become all zeros.
    """
    ts.check_finite()
    mean = ts.trials.mean(axis=2, keepdims=True)
    std = ts.trials.std(axis=2, keepdims=True)
    centered = ts.trials - mean
    safe = np.where(std > eps, std, 1.0)
    out = np.where(std > eps, centered / safe, 0.0)
    return ts.with_trials(out)


def amplitude_reject(ts: TrialSet, ptp_threshold_uv: float) -> TrialSet:
    """
    Drop trials whose peak-to-peak amplitude exceeds the threshold on any channel.

    Must run on microvolt data, before z-scoring. The rejection count is
    added to ``meta['n_rejected']``.
    """
    if not ptp_threshold_uv > 0:
        raise ArgumentError(f"Peak-to-peak threshold must be positive, got {ptp_threshold_uv}")
    if ts.n_trials == 0:
        return ts

    ptp = np.ptp(ts.trials, axis=2)
    keep = ~np.any(ptp > ptp_threshold_uv, axis=1)
    n_rejected = int(np.count_nonzero(~keep))
    if n_rejected:
        logger.info(f"Rejected {n_rejected}/{ts.n_trials} trials above {ptp_threshold_uv} uV peak-to-peak")

    out = ts.subset(keep)
    out.meta["n_rejected"] = int(ts.meta.get("n_rejected", 0)) + n_rejected
    return out


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------

@dataclass
class PreprocessConfig(ValidatedConfig):
    """Parameters of the full preprocessing pipeline."""
    notch_hz: Optional[float] = 50.0
    band: Tuple[float, float] = (0.5, 45.0)
    target_fs: float = 200.0
    window: Tuple[float, float] = (-0.2, 0.8)
    baseline: Tuple[float, float] = (-0.2, 0.0)
    ptp_reject_uv: Optional[float] = None
    filter_method: str = "fft"
    label_map: Dict[str, int] = field(default_factory=dict)
    class_names: Optional[List[str]] = None
    drop_non_eeg: bool = True
    zscore: bool = True
    allow_single_channel: bool = False

    def _collect_errors(self) -> List[str]:
        errors = []
        low, high = self.band
        if not 0 < low < high:
            errors.append(f"Band must satisfy 0 < low < high, got {self.band}")
        if not self.target_fs > 0:
            errors.append("Target sampling rate must be positive")
        elif high >= self.target_fs / 2:
            errors.append(f"Band upper edge {high} Hz must be below the target Nyquist {self.target_fs / 2} Hz")
        if self.notch_hz is not None and self.notch_hz <= 0:
            errors.append("Notch frequency must be positive")
        if self.ptp_reject_uv is not None and self.ptp_reject_uv <= 0:
            errors.append("Peak-to-peak rejection threshold must be positive")
        if self.filter_method not in FILTER_METHODS:
            errors.append(f"Filter method must be one of {FILTER_METHODS}")
        if any(idx < 0 for idx in self.label_map.values()):
            errors.append("Class indices in label_map must be non-negative")
        try:
            EpochSpec(window=tuple(self.window), baseline=tuple(self.baseline))
        except ArgumentError as e:
            errors.append(str(e))
        return errors

    def epoch_spec(self) -> EpochSpec:
        return EpochSpec(window=tuple(self.window), baseline=tuple(self.baseline))

    def with_label_map(self, recordings: Sequence[Recording]) -> "PreprocessConfig":
        """This config, with ``label_map`` inferred from the recordings when it is empty."""
        if self.label_map:
            return self
        label_map = infer_label_map(recordings)
        logger.info(f"Inferred label map from event labels: {label_map}")
        return replace(self, label_map=label_map, class_names=self.class_names or list(label_map))


def infer_label_map(recordings: Sequence[Recording]) -> Dict[str, int]:
    """Every distinct event label of the recordings, sorted, as its own class."""
    labels = sorted({ev.label for rec in recordings for ev in rec.events})
    if not labels:
        raise EmptySetError("No events to infer a label map from")
    return {label: i for i, label in enumerate(labels)}


def preprocess_recording(rec: Recording, cfg: PreprocessConfig) -> TrialSet:
    """
    Run the whole pipeline on one recording.

    Order: drop non-EEG channels, notch and band-pass (one zero-phase pass),
    interpolate marked bad channels, average re-reference, resample, epoch
    with baseline correction, optional peak-to-peak rejection, z-score.
    An empty ``label_map`` is inferred from the recording's event labels.
    """
    cfg.ensure_valid()
    cfg = cfg.with_label_map([rec])
    rec.check_finite()

    if cfg.drop_non_eeg:
        rec = drop_non_eeg_channels(rec)
    sections = []
    if cfg.notch_hz is not None:
        if cfg.notch_hz < rec.fs / 2:
            sections.append(design_notch(cfg.notch_hz, rec.fs))
        else:
            logger.warning(f"Notch {cfg.notch_hz} Hz at or above Nyquist of {rec.fs} Hz, skipped")
    sections.append(design_bandpass(cfg.band[0], cfg.band[1], rec.fs))
    rec = zero_phase_filter(rec, sections, method=cfg.filter_method)
    if rec.bad_channels:
        rec = interpolate_channels(rec, rec.bad_channels)
    rec = average_reref(rec, allow_single=cfg.allow_single_channel)
    rec = resample(rec, cfg.target_fs)

    ts = epoch_and_baseline(rec, cfg.epoch_spec(), cfg.label_map, cfg.class_names)
    ts.meta["n_rejected"] = 0
    if cfg.ptp_reject_uv is not None:
        ts = amplitude_reject(ts, cfg.ptp_reject_uv)
    if cfg.zscore and ts.n_trials:
        ts = zscore_trials(ts)
    return ts


class Preprocessor:
    """
    Batch preprocessing of raw recordings into one ERPB dataset.

    Load -> preprocess -> concatenate -> write.

    Features:
    - Per-recording error handling (failures are counted, not fatal)
    - Progress tracking with tqdm and an optional callback
    - Processing statistics
    """

    def __init__(self, config: PreprocessConfig):
        """
        Initialize the preprocessor.

        Args:
            config: Pipeline parameters
        """
        config.ensure_valid()
        self.config = config
        logger.info(
            f"Preprocessor initialized (band={config.band}, notch={config.notch_hz}, "
            f"fs={config.target_fs}, window={config.window})"
        )

    def process_recordings(
        self,
        recordings: Sequence[Recording],
        progress_callback: Optional[Callable[[int, int, str], None]] = None,
    ) -> Tuple[Optional[TrialSet], Dict[str, Any]]:
        """
        Preprocess several recordings.

        Args:
            recordings: Raw recordings
            progress_callback: Callback function(current, total, subject_id)

        Returns:
            Tuple of (concatenated TrialSet or None, statistics dictionary)
        """
        start_time = time.time()
        stats = {
            "total_recordings": len(recordings),
            "processed": 0,
            "failed": 0,
            "trials": 0,
            "unmapped_events": 0,
            "skipped_events": 0,
            "rejected": 0,
        }
        cfg = self.config.with_label_map(recordings) if recordings else self.config
        results = []
        for i, rec in enumerate(tqdm(recordings, desc="Preprocessing", unit="rec", disable=len(recordings) < 2)):
            if progress_callback:
                progress_callback(i + 1, len(recordings), rec.subject_id)
            try:
                ts = preprocess_recording(rec, cfg)
            except Exception as e:
                logger.error(f"Error preprocessing recording '{rec.subject_id}': {e}")
                stats["failed"] += 1
                continue
            results.append(ts)
            stats["processed"] += 1
            stats["trials"] += ts.n_trials
            stats["unmapped_events"] += ts.meta.get("n_unmapped", 0)
            stats["skipped_events"] += ts.meta.get("n_boundary_skipped", 0)
            stats["rejected"] += ts.meta.get("n_rejected", 0)

        stats["duration"] = time.time() - start_time
        logger.info(f"Preprocessing complete: {stats}")
        if not results:
            return None, stats
        return TrialSet.concatenate(results), stats

    def process_directory(
        self,
        in_dir: str,
        out_dir: str,
        dataset_name: Optional[str] = None,
        progress_callback: Optional[Callable[[int, int, str], None]] = None,
    ) -> Dict[str, Any]:
        """
        Preprocess every raw recording under ``in_dir`` and write an ERPB dataset.

        Args:
            in_dir: Directory searched recursively for recording folders
            out_dir: Output ERPB directory
            dataset_name: Name stored in the manifest (default: output folder name)
            progress_callback: Callback function(current, total, subject_id)

        Returns:
            Dictionary with preprocessing statistics
        """
        from .storage import find_recordings, read_recording, write_erpb

        in_path = Path(in_dir)
        if not in_path.exists():
            raise StorageError(f"Directory not found: {in_dir}")

        rec_dirs = find_recordings(in_path)
        logger.info(f"Found {len(rec_dirs)} recordings in {in_dir}")

        recordings = []
        load_failures = 0
        for rec_dir in rec_dirs:
            try:
                recordings.append(read_recording(rec_dir))
            except Exception as e:
                logger.error(f"Error loading recording {rec_dir}: {e}")
                load_failures += 1

        ts, stats = self.process_recordings(recordings, progress_callback)
        stats["failed"] += load_failures
        stats["total_recordings"] += load_failures
        if ts is None:
            raise EmptySetError(f"No recording in {in_dir} produced any trials")

        write_erpb(ts, out_dir, dataset_name=dataset_name or Path(out_dir).name)
        return stats
