"""
Profiles of the twelve processed benchmark datasets.

Used to fill epoch/baseline defaults when preprocessing a dataset by name
and to shape synthetic stand-ins.
"""

from dataclasses import dataclass
from typing import Dict, List, Tuple

from .exceptions import ArgumentError
from .recording import EpochSpec


@dataclass(frozen=True)
class DatasetProfile:
    name: str
    paradigm: str
    task: str  # "stimulus" or "disease"
    n_subjects: int
    baseline: Tuple[float, float]
    window: Tuple[float, float]
    n_trials: int
    n_channels: int
    class_names: Tuple[str, ...]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def epoch_spec(self) -> EpochSpec:
        return EpochSpec(window=self.window, baseline=self.baseline)

    def n_samples(self, fs: float = 200.0) -> int:
        """Trial length at ``fs``."""
        return int(round((self.window[1] - self.window[0]) * fs))


DATASET_PROFILES: Dict[str, DatasetProfile] = {p.name: p for p in (
    DatasetProfile("CESCA-AODD", "Auditory oddball", "stimulus", 127, (-0.2, 0.0), (-0.2, 0.8), 38151, 26,
                   ("Standard", "Target")),
    DatasetProfile("CESCA-VODD", "Visual oddball", "stimulus", 127, (-0.2, 0.0), (-0.2, 0.8), 20419, 26,
                   ("Standard", "Target")),
    DatasetProfile("CESCA-FLANKER", "Flanker", "stimulus", 73, (-0.2, 0.0), (-0.2, 0.8), 29774, 26,
                   ("Congruent", "Incongruent")),
    DatasetProfile("mTBI-ODD", "Auditory oddball", "stimulus", 96, (-0.2, 0.0), (-0.2, 0.8), 24885, 61,
                   ("Standard", "Target", "Novel")),
    DatasetProfile("NSERP-MSIT", "Extended multi-source interference", "stimulus", 42, (-0.5, 0.0), (-0.5, 1.0),
                   16729, 123, ("Non-Conflict", "Simon Effect", "Flanker Effect", "Double-Conflict")),
    DatasetProfile("NSERP-ODD", "Visual oddball", "stimulus", 42, (-0.5, 0.0), (-0.5, 1.0), 27865, 123,
                   ("Standard", "Target", "Novel")),
    DatasetProfile("PD-SIM", "Simon conflict", "disease", 147, (-0.3, -0.2), (-0.5, 1.0), 55921, 60,
                   ("HC", "PD")),
    DatasetProfile("PD-ODD", "Visual oddball", "disease", 145, (-0.3, -0.2), (-0.5, 1.0), 34464, 60,
                   ("HC", "PD")),
    DatasetProfile("ADHD-WMRI", "N-Back, GoNogo", "disease", 59, (-0.2, 0.0), (-0.2, 0.65), 21832, 21,
                   ("HC", "ADHD")),
    DatasetProfile("SCPD", "Simon conflict", "disease", 56, (-0.3, -0.2), (-0.5, 1.0), 10224, 59,
                   ("HC", "PD")),
    DatasetProfile("RLPD", "Reinforcement learning", "disease", 56, (-0.2, 0.0), (-2.0, 1.0), 14325, 56,
                   ("HC", "PD")),
    DatasetProfile("AOPD", "Auditory oddball", "disease", 50, (-0.2, 0.0), (-0.2, 0.8), 9830, 59,
                   ("HC", "PD")),
)}


def get_profile(name: str) -> DatasetProfile:
    try:
        return DATASET_PROFILES[name]
    except KeyError:
        raise ArgumentError(f"Unknown dataset '{name}', known: {sorted(DATASET_PROFILES)}")


def datasets_for_task(task: str) -> List[str]:
    """Dataset names of one task ("stimulus" or "disease") in registry order."""
    return [p.name for p in DATASET_PROFILES.values() if p.task == task]
