"""
Tests for the Welch PSD, band powers, spectral descriptors and entropies.
"""

import numpy as np
import pytest

from core.exceptions import ArgumentError, BandError, DataError, LengthError
from core.spectral import (
    BAND_POWER_NAMES,
    DESCRIPTOR_NAMES,
    BandDefinition,
    Psd,
    SpectralConfig,
    band_integral,
    band_powers,
    spectral_descriptors,
    spectral_entropies,
    welch_psd,
)


@pytest.fixture
def flat_psd():
    """Unit power on 1 Hz bins from 0 to 50 Hz."""
    freqs = np.arange(51, dtype=float)
    return Psd(freqs=freqs, power=np.ones(51))


class TestWelch:

    def test_integral_matches_variance(self, rng):
        x = 2.0 * rng.standard_normal(20000)
        psd = welch_psd(x, 200.0, SpectralConfig())
        assert psd.power.sum() * psd.df == pytest.approx(x.var(), rel=0.05)
        assert psd.freqs[-1] == pytest.approx(100.0)

    def test_integral_matches_variance_over_many_signals(self):
        rng = np.random.Generator(np.random.PCG64(11))
        fs = 200.0
        for _ in range(100):
            n = int(rng.integers(10000, 40001))
            sigma = rng.uniform(0.5, 50.0)
            t = np.arange(n) / fs
            tone = rng.uniform(0.0, sigma) * np.sin(2 * np.pi * rng.uniform(20.0, 80.0) * t + rng.uniform(0, 2 * np.pi))
            x = rng.normal(loc=rng.uniform(-100, 100), scale=sigma, size=n) + tone
            psd = welch_psd(x, fs, SpectralConfig())
            assert psd.power.sum() * psd.df == pytest.approx(x.var(), rel=0.02)

    def test_tone_peak(self):
        fs = 200.0
        t = np.arange(2000) / fs
        psd = welch_psd(np.sin(2 * np.pi * 10.0 * t), fs, SpectralConfig(segment_len=200))
        assert psd.freqs[np.argmax(psd.power)] == pytest.approx(10.0)

    def test_matrix_input(self, rng):
        x = rng.standard_normal((3, 512))
        psd = welch_psd(x, 200.0, SpectralConfig())
        assert psd.power.shape == (3, 65)
        single = welch_psd(x[1], 200.0, SpectralConfig())
        np.testing.assert_allclose(psd.channel(1).power, single.power)

    def test_too_short(self):
        with pytest.raises(LengthError):
            welch_psd(np.zeros(100), 200.0, SpectralConfig())

    def test_non_finite(self):
        x = np.zeros(256)
        x[3] = np.nan
        with pytest.raises(DataError):
            welch_psd(x, 200.0, SpectralConfig())


class TestPsd:

    def test_rejects_negative_power(self):
        with pytest.raises(DataError):
            Psd(np.arange(3.0), np.array([1.0, -1.0, 1.0]))

    def test_rejects_length_mismatch(self):
        with pytest.raises(LengthError):
            Psd(np.arange(3.0), np.ones(4))

    def test_df_inferred(self, flat_psd):
        assert flat_psd.df == 1.0


class TestBandPowers:

    def test_band_integral_edges(self, flat_psd):
        assert band_integral(flat_psd, 0.5, 4.0) == pytest.approx(3.5)
        assert band_integral(flat_psd, 8.0, 13.0) == pytest.approx(5.0)

    def test_adjacent_bands_add_up(self, rng):
        psd = welch_psd(rng.standard_normal(4000), 200.0, SpectralConfig())
        parts = sum(band_integral(psd, lo, hi) for lo, hi in [(0.5, 4), (4, 8), (8, 13), (13, 30)])
        assert parts == pytest.approx(band_integral(psd, 0.5, 30.0))

    def test_band_outside_range(self, flat_psd):
        with pytest.raises(BandError):
            band_integral(flat_psd, 10.0, 80.0)

    def test_band_powers_on_flat_spectrum(self, flat_psd):
        bp = band_powers(flat_psd, SpectralConfig())
        assert len(bp) == len(BAND_POWER_NAMES)
        values = dict(zip(BAND_POWER_NAMES, bp))
        assert values["delta_power"] == pytest.approx(3.5)
        assert values["theta_power"] == pytest.approx(4.0)
        assert values["alpha_power"] == pytest.approx(5.0)
        assert values["beta_power"] == pytest.approx(17.0)
        assert values["total_power"] == pytest.approx(44.5)
        assert values["theta_alpha_ratio"] == pytest.approx(0.8)
        assert values["alpha_beta_ratio"] == pytest.approx(5.0 / 17.0)
        assert values["rel_alpha"] == pytest.approx(5.0 / 44.5)

    def test_zero_spectrum_ratios_finite(self):
        psd = Psd(np.arange(51.0), np.zeros(51))
        assert np.all(np.isfinite(band_powers(psd, SpectralConfig())))


class TestDescriptors:

    def test_flat_spectrum(self, flat_psd):
        values = dict(zip(DESCRIPTOR_NAMES, spectral_descriptors(flat_psd, SpectralConfig())))
        assert values["spectral_centroid"] == pytest.approx(23.0)
        assert values["mean_frequency"] == values["spectral_centroid"]
        assert values["median_frequency"] == 23.0
        assert values["spectral_rolloff"] == 39.0
        assert values["peak_frequency"] == 1.0
        assert values["peak_power"] == 1.0
        assert values["spectral_flatness"] == pytest.approx(1.0)

    def test_tone(self):
        fs = 200.0
        t = np.arange(4000) / fs
        psd = welch_psd(np.sin(2 * np.pi * 10.0 * t), fs, SpectralConfig(segment_len=200))
        values = dict(zip(DESCRIPTOR_NAMES, spectral_descriptors(psd, SpectralConfig())))
        assert values["peak_frequency"] == 10.0
        assert values["spectral_centroid"] == pytest.approx(10.0, abs=0.05)
        assert values["median_frequency"] == 10.0
        assert values["spectral_rolloff"] >= values["median_frequency"]
        assert values["spectral_flatness"] < 0.01

    def test_two_tone_centroid(self):
        fs = 200.0
        t = np.arange(4000) / fs
        x = np.sin(2 * np.pi * 8.0 * t) + np.sin(2 * np.pi * 12.0 * t)
        psd = welch_psd(x, fs, SpectralConfig(segment_len=200))
        values = dict(zip(DESCRIPTOR_NAMES, spectral_descriptors(psd, SpectralConfig())))
        assert values["spectral_centroid"] == pytest.approx(10.0, abs=psd.df)
        assert values["peak_frequency"] in (8.0, 12.0)

    def test_zero_spectrum(self):
        psd = Psd(np.arange(51.0), np.zeros(51))
        np.testing.assert_array_equal(spectral_descriptors(psd, SpectralConfig()), 0.0)


class TestEntropies:

    def test_uniform(self, flat_psd):
        shannon, normalized, tsallis = spectral_entropies(flat_psd, SpectralConfig())
        assert shannon == pytest.approx(np.log(45))
        assert normalized == pytest.approx(1.0)
        assert tsallis == pytest.approx(1.0 - 1.0 / 45)

    def test_tone_has_low_entropy(self):
        fs = 200.0
        t = np.arange(4000) / fs
        psd = welch_psd(np.sin(2 * np.pi * 10.0 * t), fs, SpectralConfig(segment_len=1000))
        _, normalized, _ = spectral_entropies(psd, SpectralConfig())
        assert normalized < 0.3

    def test_tsallis_order(self, flat_psd):
        cfg = SpectralConfig(tsallis_q=3.0)
        _, _, tsallis = spectral_entropies(flat_psd, cfg)
        assert tsallis == pytest.approx((1.0 - 45 * (1.0 / 45) ** 3) / 2.0)


class TestSpectralConfig:

    def test_default_valid(self):
        assert SpectralConfig().validate() == (True, [])

    def test_invalid_settings(self):
        ok, errors = SpectralConfig(tsallis_q=1.0, overlap=1.0).validate()
        assert not ok
        assert len(errors) == 2

    def test_overlapping_bands(self):
        bands = (
            BandDefinition("delta", 0.5, 4.0),
            BandDefinition("theta", 3.0, 8.0),
            BandDefinition("alpha", 8.0, 13.0),
            BandDefinition("beta", 13.0, 30.0),
        )
        ok, errors = SpectralConfig(bands=bands).validate()
        assert not ok
        assert any("overlap" in e for e in errors)

    def test_band_definition(self):
        with pytest.raises(ArgumentError):
            BandDefinition("bad", 5.0, 4.0)

    def test_fitted_to(self):
        cfg = SpectralConfig()
        assert cfg.fitted_to(200) is cfg
        assert cfg.fitted_to(100).segment_len == 100

    def test_dict_round_trip(self):
        cfg = SpectralConfig(segment_len=64, total_band=(0.5, 40.0))
        assert SpectralConfig.from_dict(cfg.to_dict()) == cfg


class TestToneOracle:

    def test_alpha_tone(self):
        fs = 200.0
        t = np.arange(4000) / fs
        cfg = SpectralConfig(segment_len=1000)
        psd = welch_psd(np.sin(2 * np.pi * 10.0 * t), fs, cfg)
        values = dict(zip(BAND_POWER_NAMES, band_powers(psd, cfg)))
        assert values["rel_alpha"] >= 0.95
        assert spectral_entropies(psd, cfg)[1] < 0.2
