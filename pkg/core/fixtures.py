"""
Published benchmark tables shipped with the repository.

``data/paper_tables.json`` holds the mean score of every (dataset, metric,
method) cell of the manual-feature / deep-learning / foundation-model
comparison; ``data/patch_tables.json`` holds the F1 comparison of the three
patch-embedding strategies.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .exceptions import CoverageError, StorageError
from .storage import read_json

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).resolve().parent.parent / "data"
DEFAULT_FIXTURE_PATH = DATA_DIR / "paper_tables.json"
DEFAULT_PATCH_FIXTURE_PATH = DATA_DIR / "patch_tables.json"

EXPECTED_SHAPE = (12, 3, 15)

METHOD_CATEGORIES: Dict[str, Tuple[str, ...]] = {
    "manual_features": ("EEG Features", "ERP Features"),
    "supervised": (
        "TCN", "ModernTCN", "TimesNet", "PatchTST", "iTransformer",
        "Medformer", "MedGNN", "EEGNet", "EEGInception", "EEGConformer",
    ),
    "foundation": ("BIOT", "LaBraM", "CBraMod"),
}


@dataclass
class ScoreTableFixture:
    """Mean score per (dataset, metric, method), in file order."""
    values: Dict[str, Dict[str, Dict[str, float]]]

    @property
    def datasets(self) -> List[str]:
        return list(self.values)

    @property
    def metrics(self) -> List[str]:
        seen: List[str] = []
        for per_metric in self.values.values():
            for metric in per_metric:
                if metric not in seen:
                    seen.append(metric)
        return seen

    @property
    def methods(self) -> List[str]:
        seen: List[str] = []
        for per_metric in self.values.values():
            for cell in per_metric.values():
                for method in cell:
                    if method not in seen:
                        seen.append(method)
        return seen

    @property
    def n_cells(self) -> int:
        return sum(len(cell) for per_metric in self.values.values() for cell in per_metric.values())

    def get(self, dataset: str, metric: str, method: str) -> float:
        return self.values[dataset][metric][method]

    def __getitem__(self, key: Tuple[str, str, str]) -> float:
        return self.get(*key)

    def cells(self) -> Dict[Tuple[str, str], Dict[str, float]]:
        """(dataset, metric) -> method -> score, the input of rank aggregation."""
        return {
            (dataset, metric): dict(cell)
            for dataset, per_metric in self.values.items()
            for metric, cell in per_metric.items()
        }

    def validate(self, expected_shape: Optional[Tuple[int, int, int]] = None) -> None:
        """
        Check that every dataset has every metric and every cell every method.

        Raises:
            CoverageError: naming the first missing cells
        """
        metrics = self.metrics
        methods = self.methods
        missing = []
        for dataset, per_metric in self.values.items():
            for metric in metrics:
                cell = per_metric.get(metric)
                if cell is None:
                    missing.append(f"{dataset}/{metric}")
                    continue
                for method in methods:
                    value = cell.get(method)
                    if not isinstance(value, (int, float)) or isinstance(value, bool):
                        missing.append(f"{dataset}/{metric}/{method}")
        if missing:
            raise CoverageError(f"Fixture is missing {len(missing)} cells, e.g. {missing[:5]}")

        if expected_shape is not None:
            shape = (len(self.datasets), len(metrics), len(methods))
            if shape != tuple(expected_shape):
                raise CoverageError(f"Fixture covers {shape} datasets x metrics x methods, expected {expected_shape}")


def resolve_data_file(path: Optional[str], default: Path) -> Path:
    """
    Locate a fixture file.

    A path that does not exist relative to the working directory but names
    a file shipped in ``data/`` resolves to the shipped file.
    """
    if not path:
        return default
    candidate = Path(path)
    if not candidate.exists() and (DATA_DIR / candidate.name).is_file():
        logger.debug(f"Resolved {path} to shipped {DATA_DIR / candidate.name}")
        return DATA_DIR / candidate.name
    return candidate


def load_fixture(path: Optional[str] = None, expected_shape: Optional[Tuple[int, int, int]] = None) -> ScoreTableFixture:
    """
    Load and validate a {dataset -> metric -> method -> value} table.

    Args:
        path: JSON file, or the name of a shipped file (default: the shipped fixture)
        expected_shape: Optional (datasets, metrics, methods) counts to enforce

    Returns:
        ScoreTableFixture
    """
    path = resolve_data_file(path, DEFAULT_FIXTURE_PATH)
    data = read_json(str(path))
    if not isinstance(data, dict):
        raise StorageError(f"{path} must hold a JSON object")
    fixture = ScoreTableFixture(values=data)
    fixture.validate(expected_shape)
    logger.info(f"Loaded fixture {path.name}: {fixture.n_cells} cells")
    return fixture


@dataclass
class PatchFixture:
    """Per-dataset score of each patch-embedding strategy."""
    metric: str
    parameters_millions: Dict[str, float]
    scores: Dict[str, Dict[str, float]]

    @property
    def strategies(self) -> List[str]:
        return list(self.parameters_millions)


def load_patch_fixture(path: Optional[str] = None) -> PatchFixture:
    path = resolve_data_file(path, DEFAULT_PATCH_FIXTURE_PATH)
    data = read_json(str(path))
    fixture = PatchFixture(
        metric=data["metric"],
        parameters_millions=dict(data["parameters_millions"]),
        scores={k: dict(v) for k, v in data["scores"].items()},
    )
    for dataset, row in fixture.scores.items():
        missing = [s for s in fixture.strategies if s not in row]
        if missing:
            raise CoverageError(f"Patch fixture row {dataset} lacks strategies {missing}")
    return fixture
