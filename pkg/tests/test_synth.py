"""
Tests for synthetic dataset generation.
"""

import numpy as np
import pytest

from core.datasets import DATASET_PROFILES, datasets_for_task, get_profile
from core.exceptions import ArgumentError
from core.spectral import SpectralConfig, welch_psd
from core.storage import read_erpb
from core.synth import SynthSpec, pink_noise, synth_dataset


def _small(**overrides):
    base = dict(n_subjects=6, trials_per_subject=12, n_channels=3)
    base.update(overrides)
    return SynthSpec(**base)


class TestProfiles:

    def test_registry(self):
        assert len(DATASET_PROFILES) == 12
        assert len(datasets_for_task("stimulus")) == 6
        assert len(datasets_for_task("disease")) == 6

    def test_profile_fields(self):
        profile = get_profile("NSERP-MSIT")
        assert profile.n_classes == 4
        assert profile.n_samples() == 300
        assert profile.epoch_spec().baseline == (-0.5, 0.0)

    def test_unknown(self):
        with pytest.raises(ArgumentError):
            get_profile("EEGMMIDB")


class TestPinkNoise:

    def test_unit_std_and_slope(self, rng):
        x = pink_noise(rng, (20, 2000), 200.0)
        assert x.std() == pytest.approx(1.0)
        psd = welch_psd(x, 200.0, SpectralConfig(segment_len=400))
        mean_power = psd.power.mean(axis=0)
        low = mean_power[(psd.freqs >= 2) & (psd.freqs <= 4)].mean()
        high = mean_power[(psd.freqs >= 40) & (psd.freqs <= 80)].mean()
        assert low > 5 * high


class TestSynthDataset:

    def test_shape_and_labels(self):
        ts = synth_dataset(_small(), seed=0)
        assert ts.trials.shape == (72, 3, 200)
        assert ts.subjects() == [f"S{i:03d}" for i in range(6)]
        assert ts.class_names == ["class_0", "class_1"]
        assert ts.channel_labels == ["EEG00", "EEG01", "EEG02"]
        for subject in ts.subjects():
            labels = ts.for_subjects([subject]).labels
            assert np.bincount(labels).tolist() == [6, 6]

    def test_reproducible(self):
        a = synth_dataset(_small(), seed=5)
        b = synth_dataset(_small(), seed=5)
        c = synth_dataset(_small(), seed=6)
        np.testing.assert_array_equal(a.trials, b.trials)
        np.testing.assert_array_equal(a.labels, b.labels)
        assert not np.allclose(a.trials, c.trials)

    def test_zscored_rows(self):
        ts = synth_dataset(_small(), seed=1)
        np.testing.assert_allclose(ts.trials.mean(axis=2), 0.0, atol=1e-9)
        np.testing.assert_allclose(ts.trials.std(axis=2), 1.0, atol=1e-9)

    def test_baseline_corrected_without_zscore(self):
        ts = synth_dataset(_small(zscore=False), seed=1)
        np.testing.assert_allclose(ts.trials[:, :, :40].mean(axis=2), 0.0, atol=1e-9)

    def test_evoked_effect_in_class_mean(self):
        ts = synth_dataset(_small(effect="evoked", effect_size=10.0, zscore=False, n_subjects=10), seed=2)
        peak = round((0.3 + 0.2) * 200)
        diff = ts.trials[ts.labels == 1].mean(axis=(0, 1)) - ts.trials[ts.labels == 0].mean(axis=(0, 1))
        assert diff[peak] > 5.0
        assert abs(diff[10]) < 4.0

    def test_multiclass(self):
        ts = synth_dataset(_small(n_classes=3, trials_per_subject=15), seed=0)
        assert ts.n_classes == 3
        assert np.bincount(ts.labels).tolist() == [30, 30, 30]

    def test_from_profile(self):
        spec = SynthSpec.from_profile(get_profile("RLPD"), n_subjects=5, trials_per_subject=10)
        assert spec.n_channels == 56
        assert spec.n_samples == 600
        assert spec.dataset_name == "synthetic-RLPD"
        assert spec.validate()[0]

    @pytest.mark.parametrize("overrides", [
        {"n_subjects": 3}, {"trials_per_subject": 5}, {"effect": "gamma"}, {"alpha_hz": 150.0},
        {"baseline": (-0.5, 0.0)},
    ])
    def test_invalid(self, overrides):
        with pytest.raises(ArgumentError):
            synth_dataset(_small(**overrides), seed=0)

    def test_write_erpb(self, tmp_path):
        ts = synth_dataset(_small(dataset_name="tiny"), seed=3, out_dir=str(tmp_path / "tiny"))
        back = read_erpb(str(tmp_path / "tiny"))
        assert back.meta["dataset_name"] == "tiny"
        np.testing.assert_allclose(back.trials, ts.trials, atol=1e-5)
