"""
Tests for the EEG (31) and ERP (91) per-channel feature sets.
"""

import numpy as np
import pytest

from core.exceptions import ArgumentError, DataError, LengthError, ShapeError
from core.features import (
    EEG31_LAYOUT,
    ERP91_LAYOUT,
    FeatureExtractor,
    FeatureMatrix,
    PyramidSpec,
    TIME_STAT_NAMES,
    describe_layout,
    eeg_feature_vector,
    erp_feature_vector,
    feature_names,
    hjorth_params,
    normalize_set_name,
    peak_features,
    pyramid_pool,
    time_domain_stats,
)
from core.spectral import SpectralConfig


class TestLayouts:

    def test_dimensions(self):
        assert EEG31_LAYOUT.per_channel_dim == 31
        assert ERP91_LAYOUT.per_channel_dim == 91
        assert ERP91_LAYOUT.block_slices()["peaks"] == slice(75, 79)

    @pytest.mark.parametrize("name,expected", [("eeg", "eeg31"), ("ERP", "erp91"), ("erp91", "erp91")])
    def test_normalize_set_name(self, name, expected):
        assert normalize_set_name(name) == expected

    def test_unknown_set(self):
        with pytest.raises(ArgumentError):
            normalize_set_name("wavelet")

    @pytest.mark.parametrize("set_name,dim", [("eeg31", 31), ("erp91", 91)])
    def test_feature_names(self, set_name, dim):
        names = feature_names(set_name)
        assert len(names) == dim
        assert len(set(names)) == dim

    def test_describe_layout(self):
        rows = describe_layout(EEG31_LAYOUT, ["Fz", "Cz"])
        assert len(rows) == 62
        assert rows[0] == (0, "Fz", "time_stats", "mean")
        assert rows[31] == (31, "Cz", "time_stats", "mean")
        assert rows[-1] == (61, "Cz", "complexity", "tsallis_entropy")

    def test_pyramid_spec_sum(self):
        assert PyramidSpec().validate()[0]
        assert not PyramidSpec(level_segments=(1, 2, 4)).validate()[0]
        assert PyramidSpec(level_segments=(3, 4, 8)).validate()[0]


class TestTimeDomain:

    def test_known_values(self):
        values = time_domain_stats(np.array([1.0, 2.0, 3.0, 4.0]))
        expected = [2.5, 2.5, 1.0, 4.0, 0.0, -1.36, np.sqrt(7.5), 1.5, np.sqrt(1.25), 1.25]
        np.testing.assert_allclose(values, expected, atol=1e-12)

    def test_constant_signal(self):
        values = time_domain_stats(np.full(50, 3.0))
        assert values[4] == 0.0
        assert values[5] == 0.0
        assert values[8] == 0.0

    def test_too_short(self):
        with pytest.raises(LengthError):
            time_domain_stats(np.array([1.0]))

    def test_peak_features(self):
        np.testing.assert_allclose(peak_features(np.array([0.0, 3.0, -2.0, 1.0])), [3.0, 0.25, -2.0, 0.5])

    def test_hjorth_sine(self):
        fs, f = 200.0, 5.0
        x = np.sin(2 * np.pi * f * np.arange(2000) / fs)
        activity, mobility, complexity = hjorth_params(x)
        assert activity == pytest.approx(0.5, rel=1e-3)
        assert mobility == pytest.approx(2 * np.sin(np.pi * f / fs), rel=1e-2)
        assert complexity == pytest.approx(1.0, rel=1e-2)

    def test_hjorth_alpha_oracle(self):
        x = np.sin(2 * np.pi * 10.0 * np.arange(2000) / 200.0)
        assert hjorth_params(x)[1] == pytest.approx(2 * np.sin(np.pi / 20), rel=0.01)

    def test_hjorth_constant(self):
        np.testing.assert_array_equal(hjorth_params(np.ones(20)), [0.0, 0.0, 0.0])


class TestPyramid:

    def test_length_and_first_level(self):
        x = np.arange(16, dtype=float)
        out = pyramid_pool(x)
        assert out.shape == (75,)
        # level 0: whole signal
        np.testing.assert_allclose(out[:5], [7.5, x.std(), np.sqrt(np.mean(x ** 2)), 15.0, 15.0])
        # last level: eight two-sample segments, line length 1 and ptp 1 each
        last = out[-40:].reshape(8, 5)
        np.testing.assert_allclose(last[:, 3], 1.0)
        np.testing.assert_allclose(last[:, 4], 1.0)

    def test_uneven_segments(self):
        x = np.arange(10, dtype=float)
        out = pyramid_pool(x).reshape(15, 5)
        # level 3 starts at segment 7; first two segments hold two samples
        np.testing.assert_allclose(out[7, 0], 0.5)
        np.testing.assert_allclose(out[9, 0], 4.0)

    def test_too_short(self):
        with pytest.raises(LengthError):
            pyramid_pool(np.arange(5.0))


class TestVectors:

    def test_eeg_vector(self, rng):
        x = rng.standard_normal(200)
        v = eeg_feature_vector(x, 200.0, SpectralConfig())
        assert v.shape == (31,)
        assert np.all(np.isfinite(v))

    def test_erp_vector(self, rng):
        x = rng.standard_normal(200)
        v = erp_feature_vector(x, 200.0, SpectralConfig())
        assert v.shape == (91,)
        np.testing.assert_allclose(v[75:79], peak_features(x))
        np.testing.assert_allclose(v[-3:], hjorth_params(x))


class TestFeatureExtractor:

    @pytest.mark.parametrize("set_name,dim", [("eeg31", 31), ("erp91", 91)])
    def test_extract_shape(self, trial_factory, set_name, dim):
        ts = trial_factory(n_subjects=5, per_subject=4, n_channels=3, n_samples=200)
        fm = FeatureExtractor(set_name, show_progress=False).extract(ts)
        assert fm.values.shape == (20, 3 * dim)
        assert fm.n_channels == 3
        assert fm.subject_ids == ts.subject_ids
        np.testing.assert_array_equal(fm.labels, ts.labels)

    def test_channel_major_order(self, trial_factory):
        ts = trial_factory(n_subjects=5, per_subject=2, n_channels=2, n_samples=200)
        fm = FeatureExtractor("eeg31", show_progress=False).extract(ts)
        expected = eeg_feature_vector(ts.trials[3, 1], ts.fs, SpectralConfig())
        np.testing.assert_allclose(fm.values[3, 31:62], expected)

    def test_short_trials_cap_segment(self, trial_factory):
        ts = trial_factory(n_subjects=5, per_subject=2, n_channels=1, n_samples=100)
        fm = FeatureExtractor("eeg", show_progress=False).extract(ts)
        assert np.all(np.isfinite(fm.values))

    def test_non_finite_trials(self, trial_factory):
        ts = trial_factory(n_subjects=5, per_subject=2, n_channels=1)
        trials = ts.trials.copy()
        trials[0, 0, 0] = np.nan
        with pytest.raises(DataError):
            FeatureExtractor("eeg31", show_progress=False).extract(ts.with_trials(trials))


class TestFeatureMatrix:

    def _matrix(self, values=None):
        values = np.arange(8 * 31, dtype=float).reshape(8, 31) if values is None else values
        return FeatureMatrix(values, EEG31_LAYOUT, [0, 1] * 4, ["a", "a", "b", "b", "c", "c", "d", "d"], ["x", "y"])

    def test_for_subjects(self):
        part = self._matrix().for_subjects(["b", "d"])
        assert part.n_rows == 4
        assert part.subject_ids == ["b", "b", "d", "d"]

    def test_column_multiple(self):
        with pytest.raises(ShapeError):
            FeatureMatrix(np.zeros((2, 30)), EEG31_LAYOUT, [0, 1], ["a", "b"])

    def test_non_finite(self):
        values = np.zeros((8, 31))
        values[1, 1] = np.inf
        with pytest.raises(DataError):
            self._matrix(values)

    def test_with_labels(self):
        fm = self._matrix().with_labels(np.ones(8, dtype=int))
        np.testing.assert_array_equal(fm.labels, 1)


SCALE_FREE_EEG = (
    "skewness", "kurtosis", "theta_alpha_ratio", "alpha_beta_ratio",
    "rel_delta", "rel_theta", "rel_alpha", "rel_beta",
    "spectral_centroid", "mean_frequency", "median_frequency", "spectral_flatness",
    "shannon_entropy", "shannon_entropy_norm", "tsallis_entropy",
)


def _erp_like(rng, n=200, fs=200.0):
    t = np.arange(n) / fs
    return 5.0 * rng.standard_normal(n) + 8.0 * np.exp(-((t - 0.3) ** 2) / 0.002)


class TestScaleAndTranslation:

    @pytest.mark.parametrize("c", [7.5, 1e-4, 1e3])
    def test_scale_free_entries(self, rng, c):
        names = feature_names("eeg31")
        idx = [names.index(n) for n in SCALE_FREE_EEG]
        x = _erp_like(rng)
        base = eeg_feature_vector(x, 200.0, SpectralConfig())
        scaled = eeg_feature_vector(c * x, 200.0, SpectralConfig())
        np.testing.assert_allclose(scaled[idx], base[idx], rtol=1e-9, atol=1e-9)
        assert scaled[names.index("total_power")] == pytest.approx(c ** 2 * base[names.index("total_power")], rel=1e-9)
        assert scaled[names.index("std")] == pytest.approx(c * base[names.index("std")], rel=1e-9)

    @pytest.mark.parametrize("shift", [-40.0, 3.25, 250.0])
    def test_time_stats_under_offset(self, rng, shift):
        x = _erp_like(rng)
        base = dict(zip(TIME_STAT_NAMES, time_domain_stats(x)))
        moved = dict(zip(TIME_STAT_NAMES, time_domain_stats(x + shift)))
        for name in ("skewness", "kurtosis", "std", "variance", "iqr"):
            assert moved[name] == pytest.approx(base[name], abs=1e-9)
        for name in ("mean", "median", "min", "max"):
            assert moved[name] - base[name] == pytest.approx(shift, abs=1e-9)

    @pytest.mark.parametrize("shift", [-40.0, 3.25, 250.0])
    def test_erp_vector_under_offset(self, rng, shift):
        names = feature_names("erp91")
        x = _erp_like(rng)
        base = dict(zip(names, erp_feature_vector(x, 200.0, SpectralConfig())))
        moved = dict(zip(names, erp_feature_vector(x + shift, 200.0, SpectralConfig())))
        for name in names:
            if name.endswith(("_std", "_line_length", "_ptp")) or name in (
                "pos_peak_latency", "neg_peak_latency", "activity", "mobility", "complexity",
            ):
                assert moved[name] == pytest.approx(base[name], abs=1e-9), name
            elif name.endswith("_mean") or name in ("pos_peak_amp", "neg_peak_amp"):
                assert moved[name] - base[name] == pytest.approx(shift, abs=1e-9), name

    def test_shape_stats_vanish_below_the_variance_floor(self, rng):
        x = _erp_like(rng)
        tiny = dict(zip(TIME_STAT_NAMES, time_domain_stats(1e-13 * x)))
        assert tiny["skewness"] == 0.0
        assert tiny["kurtosis"] == 0.0
        assert time_domain_stats(x)[TIME_STAT_NAMES.index("skewness")] != 0.0
