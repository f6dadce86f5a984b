"""
Welch power spectral density and derived frequency-domain quantities.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Tuple

import numpy as np
from scipy import signal
from scipy.integrate import trapezoid
from scipy.special import entr
from scipy.stats import gmean

from .configbase import ValidatedConfig
from .exceptions import ArgumentError, BandError, DataError, LengthError

logger = logging.getLogger(__name__)

EPS = 1e-12

BAND_ORDER = ("delta", "theta", "alpha", "beta")

BAND_POWER_NAMES = (
    "delta_power", "theta_power", "alpha_power", "beta_power", "total_power",
    "theta_alpha_ratio", "alpha_beta_ratio",
    "rel_delta", "rel_theta", "rel_alpha", "rel_beta",
)
DESCRIPTOR_NAMES = (
    "spectral_centroid", "spectral_rolloff", "peak_frequency", "peak_power",
    "mean_frequency", "median_frequency", "spectral_flatness",
)
ENTROPY_NAMES = ("shannon_entropy", "shannon_entropy_norm", "tsallis_entropy")


@dataclass(frozen=True)
class BandDefinition:
    """Named frequency band in Hz."""
    name: str
    f_lo: float
    f_hi: float

    def __post_init__(self):
        if not 0 < self.f_lo < self.f_hi:
            raise ArgumentError(f"Band '{self.name}' must satisfy 0 < f_lo < f_hi, got [{self.f_lo}, {self.f_hi}]")


DEFAULT_BANDS = (
    BandDefinition("delta", 0.5, 4.0),
    BandDefinition("theta", 4.0, 8.0),
    BandDefinition("alpha", 8.0, 13.0),
    BandDefinition("beta", 13.0, 30.0),
)


@dataclass(frozen=True)
class SpectralConfig(ValidatedConfig):
    """Welch parameters, band edges and descriptor constants."""
    segment_len: int = 128
    overlap: float = 0.5
    window: str = "hann"
    bands: Tuple[BandDefinition, ...] = DEFAULT_BANDS
    rolloff_fraction: float = 0.85
    tsallis_q: float = 2.0
    total_band: Tuple[float, float] = (0.5, 45.0)

    def _collect_errors(self) -> List[str]:
        errors = []
        if self.segment_len < 8:
            errors.append(f"segment_len must be >= 8, got {self.segment_len}")
        if not 0 <= self.overlap < 1:
            errors.append(f"overlap must lie in [0, 1), got {self.overlap}")
        if not 0 < self.rolloff_fraction < 1:
            errors.append(f"rolloff_fraction must lie in (0, 1), got {self.rolloff_fraction}")
        if self.tsallis_q == 1:
            errors.append("tsallis_q must differ from 1")
        lo, hi = self.total_band
        if not 0 <= lo < hi:
            errors.append(f"total_band must satisfy 0 <= lo < hi, got {self.total_band}")

        names = [b.name for b in self.bands]
        missing = [n for n in BAND_ORDER if n not in names]
        if missing or len(names) != len(BAND_ORDER):
            errors.append(f"bands must be exactly {BAND_ORDER}, got {names}")
        ordered = sorted(self.bands, key=lambda b: b.f_lo)
        for a, b in zip(ordered, ordered[1:]):
            if b.f_lo < a.f_hi:
                errors.append(f"bands '{a.name}' and '{b.name}' overlap")
        for b in self.bands:
            if b.f_lo < lo or b.f_hi > hi:
                errors.append(f"band '{b.name}' [{b.f_lo}, {b.f_hi}] outside total_band {self.total_band}")
        return errors

    def band(self, name: str) -> BandDefinition:
        for b in self.bands:
            if b.name == name:
                return b
        raise ArgumentError(f"No band named '{name}'")

    def fitted_to(self, n_samples: int) -> "SpectralConfig":
        """Copy whose segment length does not exceed ``n_samples``."""
        if n_samples >= self.segment_len:
            return self
        return replace(self, segment_len=int(n_samples))

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data["bands"] = [{"name": b.name, "f_lo": b.f_lo, "f_hi": b.f_hi} for b in self.bands]
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SpectralConfig":
        data = dict(data)
        if "bands" in data:
            data["bands"] = tuple(
                b if isinstance(b, BandDefinition) else BandDefinition(**b) for b in data["bands"]
            )
        return super().from_dict(data)


@dataclass
class Psd:
    """
    One-sided power spectral density.

    ``power`` is [n_freqs] for a single signal or [n_signals x n_freqs]
    when computed for a channel matrix at once.
    """
    freqs: np.ndarray
    power: np.ndarray
    df: float = field(default=0.0)

    def __post_init__(self):
        self.freqs = np.asarray(self.freqs, dtype=np.float64)
        self.power = np.asarray(self.power, dtype=np.float64)
        if self.power.shape[-1] != len(self.freqs):
            raise LengthError(f"{len(self.freqs)} frequencies for {self.power.shape[-1]} power bins")
        if len(self.freqs) > 1 and np.any(np.diff(self.freqs) <= 0):
            raise ArgumentError("PSD frequencies must be strictly increasing")
        if np.any(self.power < 0):
            raise DataError("PSD power must be non-negative")
        if not self.df and len(self.freqs) > 1:
            self.df = float(self.freqs[1] - self.freqs[0])

    def channel(self, idx: int) -> "Psd":
        """Single-signal PSD from a multi-signal one."""
        return Psd(self.freqs, self.power[idx], self.df)


def welch_psd(x: np.ndarray, fs: float, cfg: SpectralConfig) -> Psd:
    """
    Welch averaged periodogram.

    Args:
        x: Signal vector, or [n_signals x n_samples] matrix
        fs: Sampling rate in Hz
        cfg: Spectral configuration (segment length, overlap, taper)

    Returns:
        One-sided density-scaled PSD; sum(power) * df approximates the
        variance of the detrended signal
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] < cfg.segment_len:
        raise LengthError(f"Signal of {x.shape[-1]} samples shorter than segment_len {cfg.segment_len}")
    if not np.all(np.isfinite(x)):
        raise DataError("Signal contains non-finite values")

    freqs, power = signal.welch(
        x,
        fs=fs,
        window=cfg.window,
        nperseg=cfg.segment_len,
        noverlap=int(cfg.overlap * cfg.segment_len),
        detrend="constant",
        return_onesided=True,
        scaling="density",
        axis=-1,
    )
    return Psd(freqs=freqs, power=np.maximum(power, 0.0), df=float(fs) / cfg.segment_len)


def band_integral(psd: Psd, f_lo: float, f_hi: float) -> float:
    """
    Trapezoidal integral of the PSD over [f_lo, f_hi].

    Band edges are linearly interpolated, so adjacent bands add up to the
    integral over their union.
    """
    freqs = psd.freqs
    if f_lo < freqs[0] or f_hi > freqs[-1]:
        raise BandError(f"Band [{f_lo}, {f_hi}] Hz outside PSD range [{freqs[0]}, {freqs[-1]}] Hz")
    inner = (freqs > f_lo) & (freqs < f_hi)
    grid = np.concatenate(([f_lo], freqs[inner], [f_hi]))
    values = np.interp(grid, freqs, psd.power)
    return float(trapezoid(values, grid))


def band_powers(psd: Psd, cfg: SpectralConfig) -> np.ndarray:
    """
    Absolute, ratio and relative band powers.

    Returns:
        11 values ordered as BAND_POWER_NAMES
    """
    delta, theta, alpha, beta = (
        band_integral(psd, cfg.band(name).f_lo, cfg.band(name).f_hi) for name in BAND_ORDER
    )
    total = band_integral(psd, *cfg.total_band)
    total_safe = max(total, EPS)
    return np.array([
        delta, theta, alpha, beta, total,
        theta / max(alpha, EPS),
        alpha / max(beta, EPS),
        delta / total_safe, theta / total_safe, alpha / total_safe, beta / total_safe,
    ])


def _total_band_bins(psd: Psd, cfg: SpectralConfig) -> Tuple[np.ndarray, np.ndarray]:
    lo, hi = cfg.total_band
    mask = (psd.freqs >= lo) & (psd.freqs <= hi)
    return psd.freqs[mask], psd.power[mask]


def spectral_descriptors(psd: Psd, cfg: SpectralConfig) -> np.ndarray:
    """
    Centroid, roll-off, peak frequency, peak power, mean frequency, median
    frequency and flatness over the bins of ``total_band``.

    Mean frequency is the power-weighted mean, identical to the centroid.
    Returns all zeros when fewer than two bins or no power remain.
    """
    freqs, power = _total_band_bins(psd, cfg)
    total = power.sum()
    if len(power) < 2 or total <= 0:
        return np.zeros(len(DESCRIPTOR_NAMES))

    centroid = float(np.dot(freqs, power) / total)
    cumulative = np.cumsum(power)
    rolloff = float(freqs[np.searchsorted(cumulative, cfg.rolloff_fraction * total)])
    median = float(freqs[np.searchsorted(cumulative, 0.5 * total)])
    peak = int(np.argmax(power))
    flatness = float(gmean(np.maximum(power, EPS)) / power.mean())

    return np.array([
        centroid, rolloff, float(freqs[peak]), float(power[peak]),
        centroid, median, min(flatness, 1.0),
    ])


def spectral_entropies(psd: Psd, cfg: SpectralConfig) -> np.ndarray:
    """
    Shannon entropy (nats), Shannon entropy normalized by ln(n_bins) and
    Tsallis entropy of the PSD bins in ``total_band`` treated as a distribution.
    """
    _, power = _total_band_bins(psd, cfg)
    total = power.sum()
    if len(power) == 0 or total <= 0:
        return np.zeros(len(ENTROPY_NAMES))

    p = power / total
    shannon = float(entr(p).sum())
    normalized = shannon / np.log(len(p)) if len(p) > 1 else 0.0
    q = cfg.tsallis_q
    tsallis = float((1.0 - np.sum(p ** q)) / (q - 1.0))
    return np.array([shannon, normalized, tsallis])
