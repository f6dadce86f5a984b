"""
Subject-independent Monte Carlo splits and seeded random streams.

All randomness goes through ``numpy.random.Generator(PCG64(...))``. A run
for (seed, method, dataset) draws from
``SeedSequence([seed, crc32(method), crc32(dataset)])`` so concurrent runs
never share a stream.
"""

import logging
import math
import zlib
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .exceptions import ArgumentError, DataError, SizeError

logger = logging.getLogger(__name__)

DEFAULT_RATIOS = (0.6, 0.2, 0.2)
MIN_SUBJECTS = 5


def seeded_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def run_generator(seed: int, method: str, dataset: str) -> np.random.Generator:
    """Independent stream for one (seed, method, dataset) run."""
    ss = np.random.SeedSequence([int(seed), zlib.crc32(method.encode("utf-8")), zlib.crc32(dataset.encode("utf-8"))])
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class SplitPlan:
    """Disjoint train/valid/test subject sets."""
    train_subjects: Tuple[str, ...]
    valid_subjects: Tuple[str, ...]
    test_subjects: Tuple[str, ...]
    seed: int

    def __post_init__(self):
        train, valid, test = set(self.train_subjects), set(self.valid_subjects), set(self.test_subjects)
        if train & valid or train & test or valid & test:
            raise ArgumentError("Split subject sets must be pairwise disjoint")

    @property
    def sizes(self) -> Tuple[int, int, int]:
        return len(self.train_subjects), len(self.valid_subjects), len(self.test_subjects)

    def all_subjects(self) -> List[str]:
        return sorted(self.train_subjects + self.valid_subjects + self.test_subjects)

    def to_dict(self) -> Dict:
        return {
            "seed": self.seed,
            "train_subjects": list(self.train_subjects),
            "valid_subjects": list(self.valid_subjects),
            "test_subjects": list(self.test_subjects),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "SplitPlan":
        return cls(
            tuple(data["train_subjects"]),
            tuple(data["valid_subjects"]),
            tuple(data["test_subjects"]),
            int(data["seed"]),
        )


def split_sizes(n: int, ratios: Sequence[float] = DEFAULT_RATIOS) -> Tuple[int, int, int]:
    """Floor for train, floor for valid, remainder for test."""
    if len(ratios) != 3 or any(r < 0 for r in ratios) or sum(ratios) <= 0:
        raise ArgumentError(f"Split ratios must be three non-negative numbers, got {ratios}")
    exact = [Fraction(str(r)) for r in ratios]
    total = sum(exact)
    n_train = math.floor(n * exact[0] / total)
    n_valid = math.floor(n * exact[1] / total)
    return n_train, n_valid, n - n_train - n_valid


def monte_carlo_split(subjects: Iterable[str], seed: int, ratios: Sequence[float] = DEFAULT_RATIOS) -> SplitPlan:
    """
    Random subject partition for one seed.

    Args:
        subjects: Subject ids (duplicates ignored)
        seed: Generator seed
        ratios: Train/valid/test proportions

    Returns:
        SplitPlan with ⌊0.6n⌋ train, ⌊0.2n⌋ valid and the remaining test subjects
    """
    pool = sorted(set(str(s) for s in subjects))
    n = len(pool)
    if n < MIN_SUBJECTS:
        raise SizeError(f"Need at least {MIN_SUBJECTS} subjects for a split, got {n}")
    n_train, n_valid, n_test = split_sizes(n, ratios)
    if min(n_train, n_valid, n_test) < 1:
        raise SizeError(f"Split of {n} subjects leaves an empty partition ({n_train}/{n_valid}/{n_test})")

    order = seeded_generator(seed).permutation(n)
    shuffled = [pool[i] for i in order]
    return SplitPlan(
        train_subjects=tuple(shuffled[:n_train]),
        valid_subjects=tuple(shuffled[n_train:n_train + n_valid]),
        test_subjects=tuple(shuffled[n_train + n_valid:]),
        seed=int(seed),
    )


def audit_split(
    plan: SplitPlan,
    train_ids: Sequence[str],
    valid_ids: Sequence[str],
    test_ids: Sequence[str],
) -> None:
    """
    Check that the rows used for each split belong to that split's subjects only.

    Raises:
        DataError: if any row's subject belongs to another split
    """
    for name, ids, allowed in (
        ("train", train_ids, plan.train_subjects),
        ("valid", valid_ids, plan.valid_subjects),
        ("test", test_ids, plan.test_subjects),
    ):
        leaked = set(ids) - set(allowed)
        if leaked:
            raise DataError(f"Subjects {sorted(leaked)} leaked into the {name} split")


def shuffle_labels_within_subjects(
    labels: np.ndarray,
    subject_ids: Sequence[str],
    rng: np.random.Generator,
) -> np.ndarray:
    """Permute labels among each subject's own trials (chance-level control)."""
    labels = np.asarray(labels).copy()
    subject_ids = np.asarray(subject_ids)
    for subject in sorted(set(subject_ids.tolist())):
        idx = np.flatnonzero(subject_ids == subject)
        labels[idx] = labels[idx][rng.permutation(len(idx))]
    return labels
