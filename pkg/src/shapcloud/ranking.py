"""Within-model variable ranking from pairwise significance tests.

Two variables differ significantly when the z-statistic of their reliance
difference (independent-variance assumption) exceeds the two-sided critical
value. Ranks use competition ranking on the count of significant wins.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import DataError
from .reliance import ModelReliance

GREATER = 1
TIE = 0
LESS = -1


@dataclass(frozen=True)
class ModelRanking:
    model_id: int
    variable_names: tuple[str, ...]
    wins: np.ndarray
    ranks: np.ndarray

    def __post_init__(self):
        wins = np.asarray(self.wins, dtype=np.int64)
        ranks = np.asarray(self.ranks, dtype=np.int64)
        wins.flags.writeable = False
        ranks.flags.writeable = False
        object.__setattr__(self, "wins", wins)
        object.__setattr__(self, "ranks", ranks)
        object.__setattr__(self, "variable_names", tuple(self.variable_names))


@dataclass(frozen=True)
class RankFrequency:
    """matrix[j, r-1] counts the models in which variable j holds rank r."""

    variable_names: tuple[str, ...]
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=np.int64)
        matrix.flags.writeable = False
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "variable_names", tuple(self.variable_names))


def pairwise_significance(reliance: ModelReliance, alpha: float = 0.05) -> np.ndarray:
    """d x d comparison matrix with entries GREATER / TIE / LESS."""
    if not (0.0 < alpha < 1.0):
        raise DataError("alpha must lie strictly between 0 and 1")
    se = reliance.se
    if np.any(se <= 0):
        raise DataError("pairwise comparison requires positive standard errors")
    values = reliance.values
    z_crit = float(norm.ppf(1.0 - alpha / 2.0))
    diff = values[:, None] - values[None, :]
    denom = np.sqrt(se[:, None] ** 2 + se[None, :] ** 2)
    z = diff / denom
    matrix = np.zeros(z.shape, dtype=np.int64)
    matrix[z > z_crit] = GREATER
    matrix[z < -z_crit] = LESS
    np.fill_diagonal(matrix, TIE)
    return matrix


def rank_variables(reliance: ModelReliance, alpha: float = 0.05) -> ModelRanking:
    """Competition ranking by count of significant pairwise wins."""
    comparison = pairwise_significance(reliance, alpha)
    wins = np.sum(comparison == GREATER, axis=1)
    # "1224"-style: rank = 1 + number of variables with strictly more wins.
    ranks = 1 + np.sum(wins[None, :] > wins[:, None], axis=1)
    return ModelRanking(
        model_id=reliance.model_id,
        variable_names=reliance.variable_names,
        wins=wins,
        ranks=ranks,
    )


def rank_frequency(
    rankings: list[ModelRanking], variable_order: list[str] | None = None
) -> RankFrequency:
    """Histogram of per-model ranks; rows follow variable_order when given."""
    if not rankings:
        raise DataError("no rankings supplied")
    names = rankings[0].variable_names
    d = len(names)
    for r in rankings:
        if r.variable_names != names:
            raise DataError("rankings disagree on the variable set")
    if variable_order is None:
        order = list(names)
    else:
        if set(variable_order) != set(names):
            raise DataError("variable_order must be a permutation of the variable names")
        order = list(variable_order)
    index = {name: j for j, name in enumerate(names)}
    matrix = np.zeros((d, d), dtype=np.int64)
    for ranking in rankings:
        for row, name in enumerate(order):
            matrix[row, ranking.ranks[index[name]] - 1] += 1
    return RankFrequency(variable_names=tuple(order), matrix=matrix)


def filter_models_by_rank(
    rankings: list[ModelRanking], variable: str, rank_at_most: int
) -> list[int]:
    """Model ids where the variable achieved rank <= rank_at_most."""
    if not rankings:
        return []
    names = rankings[0].variable_names
    if variable not in names:
        raise DataError(f"unknown variable {variable!r}; known: {', '.join(names)}")
    j = names.index(variable)
    return [r.model_id for r in rankings if r.ranks[j] <= rank_at_most]


def write_rank_frequency_csv(freq: RankFrequency, path) -> None:
    d = freq.matrix.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variable"] + [f"rank_{r}" for r in range(1, d + 1)])
        for j, name in enumerate(freq.variable_names):
            writer.writerow([name] + [str(v) for v in freq.matrix[j]])
