"""
Shared fixtures for the erpbench test suite.
"""

import os
import sys

import numpy as np
import pytest

# Add project root to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

from core.recording import EventMarker, Recording, TrialSet


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(1234))


@pytest.fixture
def raw_recording(rng):
    """Four EEG channels plus one EOG channel, 20 s at 500 Hz, alternating events."""
    fs = 500.0
    n = 10000
    data = 5.0 * rng.standard_normal((5, n))
    events = [EventMarker(500 + i * 400, "std" if i % 2 == 0 else "tgt") for i in range(22)]
    events.append(EventMarker(1200, "button"))
    return Recording(
        data=data,
        fs=fs,
        channel_labels=["Fz", "Cz", "Pz", "Oz", "VEOG"],
        events=sorted(events, key=lambda e: e.sample_index),
        subject_id="sub-01",
    )


def make_trial_set(rng, n_subjects=6, per_subject=10, n_channels=3, n_samples=200, fs=200.0):
    """Random trials with balanced binary labels per subject."""
    n = n_subjects * per_subject
    labels = np.tile(np.arange(per_subject) % 2, n_subjects)
    subjects = [f"S{s:02d}" for s in range(n_subjects) for _ in range(per_subject)]
    return TrialSet(
        trials=rng.standard_normal((n, n_channels, n_samples)),
        labels=labels,
        subject_ids=subjects,
        fs=fs,
        class_names=["a", "b"],
        channel_labels=[f"C{c}" for c in range(n_channels)],
        meta={"dataset_name": "toy"},
    )


@pytest.fixture
def trial_set(rng):
    return make_trial_set(rng)


@pytest.fixture
def trial_factory(rng):
    """Builder for random TrialSets of a chosen shape."""
    def build(**kwargs):
        return make_trial_set(rng, **kwargs)
    return build
