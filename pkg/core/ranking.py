"""
Average-rank aggregation over (dataset, metric) evaluation cells.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import rankdata

from .exceptions import CoverageError

logger = logging.getLogger(__name__)

Cell = Tuple[str, str]


@dataclass
class RankTable:
    """Tie-averaged ranks per cell and their mean per method (1 is best)."""
    entries: Dict[Tuple[str, str, str], float]
    avg_rank: Dict[str, float]
    methods: List[str] = field(default_factory=list)
    cells: List[Cell] = field(default_factory=list)

    def rank(self, dataset: str, metric: str, method: str) -> float:
        return self.entries[(dataset, metric, method)]

    def ordered(self) -> List[Tuple[str, float]]:
        """(method, average rank) from best to worst; ties keep method order."""
        return sorted(self.avg_rank.items(), key=lambda kv: (kv[1], self.methods.index(kv[0])))

    def best(self) -> str:
        return self.ordered()[0][0]

    def matrix(self) -> np.ndarray:
        """[cells x methods] rank matrix, rows in ``cells`` order."""
        return np.array([[self.entries[(d, m, method)] for method in self.methods] for d, m in self.cells])

    def to_dict(self) -> Dict:
        return {
            "avg_rank": dict(self.avg_rank),
            "cells": [
                {"dataset": d, "metric": m, "ranks": {method: self.entries[(d, m, method)] for method in self.methods}}
                for d, m in self.cells
            ],
        }


def aggregate_and_rank(results: Mapping[Cell, Mapping[str, float]]) -> RankTable:
    """
    Rank methods within every (dataset, metric) cell and average the ranks.

    Higher scores rank better; tied scores share the mean of their positions.
    Cells holding a missing (NaN) score are skipped.

    Args:
        results: (dataset, metric) -> method -> mean score

    Returns:
        RankTable

    Raises:
        CoverageError: if cells do not all cover the same method set, or no
            complete cell is left
    """
    if not results:
        raise CoverageError("No cells to rank")
    cells = list(results)
    incomplete = [cell for cell in cells if not np.all(np.isfinite(list(results[cell].values())))]
    if incomplete:
        logger.warning(f"Skipping {len(incomplete)} cells with missing scores, e.g. {incomplete[0]}")
        cells = [cell for cell in cells if cell not in incomplete]
    if not cells:
        raise CoverageError("Every cell has a missing score")
    methods = list(results[cells[0]])
    reference = set(methods)
    for cell in cells[1:]:
        if set(results[cell]) != reference:
            diff = sorted(set(results[cell]) ^ reference)
            raise CoverageError(f"Cell {cell} covers a different method set (differs in {diff})")

    entries: Dict[Tuple[str, str, str], float] = {}
    totals = np.zeros(len(methods))
    for dataset, metric in cells:
        scores = np.array([results[(dataset, metric)][m] for m in methods], dtype=np.float64)
        ranks = rankdata(-scores, method="average")
        totals += ranks
        for method, rank in zip(methods, ranks):
            entries[(dataset, metric, method)] = float(rank)

    avg_rank = {method: float(total / len(cells)) for method, total in zip(methods, totals)}
    logger.debug(f"Ranked {len(methods)} methods over {len(cells)} cells")
    return RankTable(entries=entries, avg_rank=avg_rank, methods=methods, cells=cells)


def filter_cells(
    results: Mapping[Cell, Mapping[str, float]],
    datasets: Optional[Iterable[str]] = None,
    metrics: Optional[Iterable[str]] = None,
) -> Dict[Cell, Dict[str, float]]:
    """Subset of cells, e.g. one task's datasets or a single metric."""
    ds = set(datasets) if datasets is not None else None
    ms = set(metrics) if metrics is not None else None
    return {
        cell: dict(scores) for cell, scores in results.items()
        if (ds is None or cell[0] in ds) and (ms is None or cell[1] in ms)
    }


def top_k_methods(cell_scores: Mapping[str, float], k: int = 3) -> List[Tuple[int, str, float]]:
    """
    Methods holding the top ``k`` positions of one cell.

    Returns:
        (position, method, score) sorted by position; tied scores share a position
    """
    ordered = sorted(cell_scores.items(), key=lambda kv: -kv[1])
    out = []
    position = 0
    previous = None
    for i, (method, score) in enumerate(ordered):
        if score != previous:
            position = i + 1
            previous = score
        if position > k:
            break
        out.append((position, method, float(score)))
    return out


def category_average_ranks(table: RankTable, categories: Mapping[str, Sequence[str]]) -> Dict[str, float]:
    """Mean average rank of the methods of each category (categories without ranked methods are omitted)."""
    out = {}
    for category, members in categories.items():
        ranks = [table.avg_rank[m] for m in members if m in table.avg_rank]
        if ranks:
            out[category] = float(np.mean(ranks))
    return out


def patch_strategy_wins(scores: Mapping[str, Mapping[str, float]]) -> Dict[str, int]:
    """
    Number of datasets on which each strategy has the best score.

    Args:
        scores: dataset -> strategy -> score

    Returns:
        strategy -> win count (tied winners each get the win)
    """
    wins: Dict[str, int] = {}
    for row in scores.values():
        for strategy in row:
            wins.setdefault(strategy, 0)
        best = max(row.values())
        for strategy, value in row.items():
            if value == best:
                wins[strategy] += 1
    return wins


def format_rank_table(table: RankTable, categories: Optional[Mapping[str, Sequence[str]]] = None) -> str:
    """Plain-text average-rank listing, optionally followed by category means."""
    width = max(len(m) for m in table.methods)
    lines = [f"Average rank over {len(table.cells)} evaluations", "-" * (width + 16)]
    for position, (method, rank) in enumerate(table.ordered(), start=1):
        lines.append(f"{position:>3}. {method:<{width}}  {rank:6.2f}")
    if categories:
        lines.append("")
        for category, rank in category_average_ranks(table, categories).items():
            lines.append(f"     {category:<{width}}  {rank:6.2f}")
    return "\n".join(lines)
