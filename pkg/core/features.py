"""
Handcrafted per-channel feature catalogs.

Two layouts are supported:

- ``eeg31``: 10 time-domain statistics, 11 band powers, 7 spectral
  descriptors and 3 entropies per channel.
- ``erp91``: 75 temporal-pyramid statistics, 4 peak features, 9
  frequency/complexity features and 3 Hjorth parameters per channel.

Per-channel vectors are concatenated channel-major into one row per trial.

Shape features (skewness, kurtosis, band ratios, relative powers, centroid,
median frequency, flatness, entropies) are unchanged when a signal is
scaled by c > 0, to within 1e-9 for amplitudes in the usual microvolt
range. The guards against division by zero are absolute (``EPS = 1e-12``
on variances and powers), so the property fails once scaled powers
approach that floor: c around 1e-7 on microvolt-scale data already
changes the outputs.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import iqr, kurtosis, skew
from tqdm import tqdm

from .configbase import ValidatedConfig
from .exceptions import ArgumentError, DataError, LengthError, ShapeError
from .recording import TrialSet
from .spectral import (
    BAND_POWER_NAMES,
    DESCRIPTOR_NAMES,
    ENTROPY_NAMES,
    Psd,
    SpectralConfig,
    band_powers,
    spectral_descriptors,
    spectral_entropies,
    welch_psd,
)

logger = logging.getLogger(__name__)

EPS = 1e-12

TIME_STAT_NAMES = ("mean", "median", "min", "max", "skewness", "kurtosis", "rms", "iqr", "std", "variance")
PYRAMID_STAT_NAMES = ("mean", "std", "rms", "line_length", "ptp")
PEAK_NAMES = ("pos_peak_amp", "pos_peak_latency", "neg_peak_amp", "neg_peak_latency")
FREQ_COMPLEXITY_NAMES = (
    "rel_delta", "rel_theta", "rel_alpha", "rel_beta", "total_power",
    "spectral_centroid", "spectral_flatness", "median_frequency", "shannon_entropy_norm",
)
HJORTH_NAMES = ("activity", "mobility", "complexity")


@dataclass(frozen=True)
class FeatureLayout:
    """Ordered blocks of one channel's feature vector."""
    set_name: str
    block_names: Tuple[str, ...]
    block_sizes: Tuple[int, ...]

    @property
    def per_channel_dim(self) -> int:
        return sum(self.block_sizes)

    def block_slices(self) -> Dict[str, slice]:
        """Per-channel column slice of each block."""
        out = {}
        start = 0
        for name, size in zip(self.block_names, self.block_sizes):
            out[name] = slice(start, start + size)
            start += size
        return out

    def to_dict(self) -> Dict:
        return {
            "set_name": self.set_name,
            "block_names": list(self.block_names),
            "block_sizes": list(self.block_sizes),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "FeatureLayout":
        return cls(data["set_name"], tuple(data["block_names"]), tuple(data["block_sizes"]))


EEG31_LAYOUT = FeatureLayout("eeg31", ("time_stats", "band_power", "spectral", "complexity"), (10, 11, 7, 3))
ERP91_LAYOUT = FeatureLayout("erp91", ("pyramid", "peaks", "freq_complexity", "hjorth"), (75, 4, 9, 3))

_SET_ALIASES = {"eeg": "eeg31", "eeg31": "eeg31", "erp": "erp91", "erp91": "erp91"}


def normalize_set_name(set_name: str) -> str:
    """Map "eeg"/"erp" (or the full names) to "eeg31"/"erp91"."""
    try:
        return _SET_ALIASES[set_name.lower()]
    except KeyError:
        raise ArgumentError(f"Unknown feature set '{set_name}', expected one of {sorted(_SET_ALIASES)}")


@dataclass(frozen=True)
class PyramidSpec(ValidatedConfig):
    """Segment count of each temporal pyramid level."""
    level_segments: Tuple[int, ...] = (1, 2, 4, 8)

    def _collect_errors(self) -> List[str]:
        errors = []
        if any(k < 1 for k in self.level_segments):
            errors.append(f"every level needs at least one segment, got {self.level_segments}")
        if sum(self.level_segments) != 15:
            errors.append(f"level segments must sum to 15, got {sum(self.level_segments)}")
        return errors


def layout_for(set_name: str) -> FeatureLayout:
    return EEG31_LAYOUT if normalize_set_name(set_name) == "eeg31" else ERP91_LAYOUT


# ---------------------------------------------------------------------------
# Per-channel features
# ---------------------------------------------------------------------------

def time_domain_stats(x: np.ndarray) -> np.ndarray:
    """
    Ten amplitude statistics of a signal.

    Args:
        x: Signal vector (at least 2 samples)

    Returns:
        [mean, median, min, max, skewness, excess kurtosis, RMS, IQR,
        population std, variance]
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size < 2:
        raise LengthError(f"time_domain_stats needs at least 2 samples, got {x.size}")
    std = float(x.std())
    if std < EPS:
        sk = ku = 0.0
    else:
        sk = float(skew(x, bias=True))
        ku = float(kurtosis(x, fisher=True, bias=True))
    return np.array([
        x.mean(), np.median(x), x.min(), x.max(), sk, ku,
        np.sqrt(np.mean(x ** 2)), iqr(x), std, std ** 2,
    ])


def eeg_feature_vector(x: np.ndarray, fs: float, cfg: SpectralConfig, psd: Optional[Psd] = None) -> np.ndarray:
    """
    The 31 EEG features of one channel.

    Args:
        x: Channel signal
        fs: Sampling rate in Hz
        cfg: Spectral configuration
        psd: Precomputed PSD of ``x`` (computed with ``cfg`` if omitted)

    Returns:
        [time stats (10), band powers (11), spectral descriptors (7), entropies (3)]
    """
    if psd is None:
        psd = welch_psd(x, fs, cfg)
    return np.concatenate([
        time_domain_stats(x),
        band_powers(psd, cfg),
        spectral_descriptors(psd, cfg),
        spectral_entropies(psd, cfg),
    ])


def pyramid_pool(x: np.ndarray, spec: PyramidSpec = PyramidSpec()) -> np.ndarray:
    """
    Mean, std, RMS, line length and peak-to-peak over every pyramid segment.

    Each level splits ``x`` into near-equal contiguous segments, the first
    ``len(x) % k`` segments one sample longer. Output is ordered level by
    level, segment by segment, statistic by statistic.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size < max(spec.level_segments):
        raise LengthError(f"Signal of {x.size} samples shorter than {max(spec.level_segments)} pyramid segments")
    out = []
    for k in spec.level_segments:
        for seg in np.array_split(x, k):
            out.extend([
                seg.mean(),
                seg.std(),
                np.sqrt(np.mean(seg ** 2)),
                np.abs(np.diff(seg)).sum(),
                np.ptp(seg),
            ])
    return np.asarray(out)


def peak_features(x: np.ndarray) -> np.ndarray:
    """Global max and min amplitudes with latencies normalized by window length."""
    x = np.asarray(x, dtype=np.float64)
    if x.size < 1:
        raise LengthError("peak_features needs at least one sample")
    i_max = int(np.argmax(x))
    i_min = int(np.argmin(x))
    return np.array([x[i_max], i_max / x.size, x[i_min], i_min / x.size])


def hjorth_params(x: np.ndarray) -> np.ndarray:
    """
    Hjorth activity, mobility and complexity.

    Mobility and complexity are 0 when the relevant variance is below 1e-12.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size < 3:
        raise LengthError(f"hjorth_params needs at least 3 samples, got {x.size}")
    dx = np.diff(x)
    ddx = np.diff(dx)
    var_x = x.var()
    var_dx = dx.var()
    var_ddx = ddx.var()

    mobility = np.sqrt(var_dx / var_x) if var_x > EPS else 0.0
    mobility_dx = np.sqrt(var_ddx / var_dx) if var_dx > EPS else 0.0
    complexity = mobility_dx / mobility if mobility > EPS else 0.0
    return np.array([var_x, mobility, complexity])


def freq_complexity(psd: Psd, cfg: SpectralConfig) -> np.ndarray:
    """Relative band powers, total power, centroid, flatness, median frequency, normalized entropy."""
    bp = band_powers(psd, cfg)
    desc = spectral_descriptors(psd, cfg)
    ent = spectral_entropies(psd, cfg)
    return np.array([bp[7], bp[8], bp[9], bp[10], bp[4], desc[0], desc[6], desc[5], ent[1]])


def erp_feature_vector(
    x: np.ndarray,
    fs: float,
    cfg: SpectralConfig,
    spec: PyramidSpec = PyramidSpec(),
    psd: Optional[Psd] = None,
) -> np.ndarray:
    """
    The 91 ERP features of one channel.

    Returns:
        [pyramid (75), peaks (4), freq/complexity (9), Hjorth (3)]
    """
    if psd is None:
        psd = welch_psd(x, fs, cfg)
    return np.concatenate([
        pyramid_pool(x, spec),
        peak_features(x),
        freq_complexity(psd, cfg),
        hjorth_params(x),
    ])


# ---------------------------------------------------------------------------
# Layout documentation
# ---------------------------------------------------------------------------

def feature_names(set_name: str, spec: PyramidSpec = PyramidSpec()) -> List[str]:
    """Per-channel feature names in column order."""
    if normalize_set_name(set_name) == "eeg31":
        return list(TIME_STAT_NAMES + BAND_POWER_NAMES + DESCRIPTOR_NAMES + ENTROPY_NAMES)
    names = []
    for level, k in enumerate(spec.level_segments):
        for seg in range(k):
            names.extend(f"pyr_l{level}_s{seg}_{stat}" for stat in PYRAMID_STAT_NAMES)
    return names + list(PEAK_NAMES + FREQ_COMPLEXITY_NAMES + HJORTH_NAMES)


def describe_layout(
    layout: FeatureLayout,
    channel_labels: Sequence[str],
    spec: PyramidSpec = PyramidSpec(),
) -> List[Tuple[int, str, str, str]]:
    """
    Column reference table of a feature matrix.

    Returns:
        One (column, channel, block, feature) row per column
    """
    names = feature_names(layout.set_name, spec)
    blocks = [name for name, size in zip(layout.block_names, layout.block_sizes) for _ in range(size)]
    rows = []
    col = 0
    for channel in channel_labels:
        for block, name in zip(blocks, names):
            rows.append((col, channel, block, name))
            col += 1
    return rows


# ---------------------------------------------------------------------------
# Feature matrices
# ---------------------------------------------------------------------------

@dataclass
class FeatureMatrix:
    """Per-trial feature rows with the labels and subjects of the source trials."""
    values: np.ndarray
    layout: FeatureLayout
    labels: np.ndarray
    subject_ids: List[str]
    class_names: List[str] = field(default_factory=list)
    channel_labels: Optional[List[str]] = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        self.subject_ids = [str(s) for s in self.subject_ids]
        if self.values.ndim != 2:
            raise ShapeError(f"Feature values must be 2-D, got shape {self.values.shape}")
        if len(self.labels) != self.values.shape[0] or len(self.subject_ids) != self.values.shape[0]:
            raise ShapeError(
                f"{self.values.shape[0]} rows, {len(self.labels)} labels, {len(self.subject_ids)} subject ids"
            )
        if self.values.shape[1] % self.layout.per_channel_dim:
            raise ShapeError(
                f"{self.values.shape[1]} columns is not a multiple of {self.layout.per_channel_dim}"
            )
        if not np.all(np.isfinite(self.values)):
            raise DataError("Feature matrix contains non-finite values")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    @property
    def n_channels(self) -> int:
        return self.values.shape[1] // self.layout.per_channel_dim

    def subset(self, index) -> "FeatureMatrix":
        idx = np.asarray(index)
        if idx.dtype == bool:
            idx = np.flatnonzero(idx)
        idx = idx.astype(np.int64).reshape(-1)
        return FeatureMatrix(
            values=self.values[idx],
            layout=self.layout,
            labels=self.labels[idx],
            subject_ids=[self.subject_ids[i] for i in idx],
            class_names=list(self.class_names),
            channel_labels=self.channel_labels,
        )

    def for_subjects(self, subjects: Sequence[str]) -> "FeatureMatrix":
        wanted = set(subjects)
        return self.subset(np.array([s in wanted for s in self.subject_ids], dtype=bool))

    def with_labels(self, labels: np.ndarray) -> "FeatureMatrix":
        return FeatureMatrix(self.values, self.layout, labels, self.subject_ids, self.class_names, self.channel_labels)


class FeatureExtractor:
    """
    Computes a FeatureMatrix from a TrialSet.

    The Welch segment length is capped at the trial length, and each
    trial's channel PSDs are computed in one call.
    """

    def __init__(
        self,
        set_name: str = "eeg31",
        spectral_config: Optional[SpectralConfig] = None,
        pyramid_spec: Optional[PyramidSpec] = None,
        show_progress: bool = True,
    ):
        """
        Initialize the extractor.

        Args:
            set_name: "eeg31"/"eeg" or "erp91"/"erp"
            spectral_config: Spectral parameters (defaults if omitted)
            pyramid_spec: Pyramid levels for erp91 (defaults if omitted)
            show_progress: Whether to display a progress bar
        """
        self.set_name = normalize_set_name(set_name)
        self.layout = layout_for(self.set_name)
        self.spectral_config = spectral_config or SpectralConfig()
        self.pyramid_spec = pyramid_spec or PyramidSpec()
        self.spectral_config.ensure_valid()
        self.pyramid_spec.ensure_valid()
        self.show_progress = show_progress
        logger.info(f"FeatureExtractor initialized (set={self.set_name}, dim/channel={self.layout.per_channel_dim})")

    def trial_vector(self, trial: np.ndarray, fs: float, cfg: Optional[SpectralConfig] = None) -> np.ndarray:
        """Channel-major feature vector of one [channels x samples] trial."""
        cfg = cfg or self.spectral_config.fitted_to(trial.shape[-1])
        psd = welch_psd(trial, fs, cfg)
        parts = []
        for c in range(trial.shape[0]):
            if self.set_name == "eeg31":
                parts.append(eeg_feature_vector(trial[c], fs, cfg, psd=psd.channel(c)))
            else:
                parts.append(erp_feature_vector(trial[c], fs, cfg, self.pyramid_spec, psd=psd.channel(c)))
        return np.concatenate(parts)

    def extract(self, ts: TrialSet) -> FeatureMatrix:
        """
        Extract features for every trial.

        Args:
            ts: Preprocessed trials

        Returns:
            FeatureMatrix of shape [n_trials x per_channel_dim * channels]
        """
        ts.check_finite()
        cfg = self.spectral_config.fitted_to(ts.n_samples)
        dim = self.layout.per_channel_dim * ts.n_channels
        values = np.zeros((ts.n_trials, dim))

        logger.info(f"Extracting {self.set_name} features from {ts.n_trials} trials ({dim} columns)")
        iterator = tqdm(range(ts.n_trials), desc=f"Features ({self.set_name})", unit="trial",
                        disable=not self.show_progress)
        for i in iterator:
            values[i] = self.trial_vector(ts.trials[i], ts.fs, cfg)

        return FeatureMatrix(
            values=values,
            layout=self.layout,
            labels=ts.labels.copy(),
            subject_ids=list(ts.subject_ids),
            class_names=list(ts.class_names),
            channel_labels=list(ts.channel_labels) if ts.channel_labels else None,
        )
