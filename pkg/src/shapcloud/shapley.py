"""Shapley attribution for logistic models under two set functions.

GlobalSage scores a variable subset by the drop in mean log-loss relative to
the mean-prediction baseline; LocalShap scores it by the expected prediction
for one instance. Absent coordinates are filled by marginal imputation:
model outputs are averaged over background rows supplying the missing values.

Subset values are memoized per estimate, so permutation sampling only pays
for distinct prefixes (at most 2^d of them).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import comb

import numpy as np
from scipy.special import expit

from .data import Dataset
from .errors import ConfigError, DataError
from .logistic import PROB_CLIP
from .util import derive_seed, fmt_float

MAX_EXACT_DIM = 15


@dataclass(frozen=True)
class GlobalSage:
    """Loss-based global set function."""


@dataclass(frozen=True)
class LocalShap:
    """Prediction-based set function for one evaluation instance."""

    instance_index: int


@dataclass(frozen=True)
class ShapleyConfig:
    n_permutations: int = 256
    background_rows: int = 512
    seed: int = 0

    def __post_init__(self):
        if self.n_permutations < 2:
            raise ConfigError("n_permutations must be at least 2 (SE needs >= 2 samples)")
        if self.background_rows < 1:
            raise ConfigError("background_rows must be positive")


@dataclass(frozen=True)
class ShapleyEstimate:
    values: np.ndarray
    se: np.ndarray
    n_permutations: int
    value_empty: float
    value_full: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        se = np.asarray(self.se, dtype=np.float64)
        if np.any(se < 0):
            raise DataError("standard errors must be nonnegative")
        values.flags.writeable = False
        se.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "se", se)


class _Game:
    """Memoized subset-value evaluator; subsets are bitmask integers."""

    def __init__(self, beta, eval_data: Dataset, kind, background: np.ndarray):
        if eval_data.n == 0:
            raise DataError("evaluation data is empty")
        beta = np.asarray(beta, dtype=np.float64)
        if beta.shape != (eval_data.d + 1,):
            raise DataError(
                f"beta has length {beta.size}, expected d+1={eval_data.d + 1}"
            )
        self.d = eval_data.d
        self.kind = kind
        self.intercept = float(beta[0])
        self.bg_contrib = background * beta[1:]
        self.bg_total = self.bg_contrib.sum(axis=1)
        self._memo: dict[int, float] = {}
        self._cols: dict[int, np.ndarray] = {}

        if isinstance(kind, GlobalSage):
            self.eval_contrib = eval_data.features * beta[1:]
            self.y = eval_data.outcome
            self.eval_n = eval_data.n
            baseline_pred = float(np.mean(expit(self.intercept + self.bg_total)))
            self.row_base_loss = self._row_loss(
                np.full(eval_data.n, baseline_pred), self.y
            )
            self.base_loss = float(np.mean(self.row_base_loss))
        elif isinstance(kind, LocalShap):
            i = kind.instance_index
            if not (0 <= i < eval_data.n):
                raise DataError(f"instance index {i} out of range for n={eval_data.n}")
            self.x_contrib = eval_data.features[i] * beta[1:]
        else:
            raise ConfigError(f"unknown value-function kind: {kind!r}")

    @staticmethod
    def _row_loss(p: np.ndarray, y: np.ndarray) -> np.ndarray:
        p = np.clip(p, PROB_CLIP, 1.0 - PROB_CLIP)
        return -(y * np.log(p) + (1.0 - y) * np.log1p(-p))

    def _loss(self, p: np.ndarray) -> float:
        return float(np.mean(self._row_loss(p, self.y)))

    def _columns(self, mask: int) -> np.ndarray:
        cols = self._cols.get(mask)
        if cols is None:
            cols = np.array([j for j in range(self.d) if mask >> j & 1], dtype=np.intp)
            self._cols[mask] = cols
        return cols

    def value(self, mask: int) -> float:
        v = self._memo.get(mask)
        if v is not None:
            return v
        cols = self._columns(mask)
        r = self.intercept + self.bg_total - self.bg_contrib[:, cols].sum(axis=1)
        if isinstance(self.kind, GlobalSage):
            c = self.eval_contrib[:, cols].sum(axis=1)
            p = np.mean(expit(c[:, None] + r[None, :]), axis=1)
            v = self.base_loss - self._loss(p)
        else:
            c = float(self.x_contrib[cols].sum())
            v = float(np.mean(expit(c + r)))
        self._memo[mask] = v
        return v

    def row_value(self, mask: int, row: int) -> float:
        """GlobalSage value contribution of one evaluation row.

        Averaging row_value over eval rows recovers value(mask); sampling a
        fresh row per permutation makes the standard error reflect the
        evaluation-data uncertainty, not just permutation order.
        """
        cols = self._columns(mask)
        r = self.intercept + self.bg_total - self.bg_contrib[:, cols].sum(axis=1)
        c = self.eval_contrib[row, cols].sum()
        p = np.mean(expit(c + r))
        loss = self._row_loss(np.array([p]), self.y[row : row + 1])[0]
        return float(self.row_base_loss[row] - loss)


def _background(eval_data: Dataset, cap: int | None, seed: int | None) -> np.ndarray:
    if cap is None or eval_data.n <= cap:
        return eval_data.features
    rng = np.random.default_rng([seed, 1])
    rows = np.sort(rng.choice(eval_data.n, size=cap, replace=False))
    return eval_data.features[rows]


def value_of_subset(beta, eval_data: Dataset, subset, kind) -> float:
    """Set-function value of one variable subset (full background, no cap)."""
    subset = set(int(j) for j in subset)
    if any(j < 0 or j >= eval_data.d for j in subset):
        raise DataError(f"subset {sorted(subset)} not within 0..{eval_data.d - 1}")
    game = _Game(beta, eval_data, kind, eval_data.features)
    mask = 0
    for j in subset:
        mask |= 1 << j
    return game.value(mask)


def exact_shapley_from_game(value_fn, d: int) -> np.ndarray:
    """Exact Shapley attribution of an arbitrary set function over d players.

    value_fn maps a subset bitmask to its value; weights are the standard
    1/(d * C(d-1, |S|)) subset weights.
    """
    values = np.array([value_fn(mask) for mask in range(1 << d)])
    weights = np.array([1.0 / (d * comb(d - 1, s)) for s in range(d)])
    phi = np.zeros(d)
    for mask in range(1 << d):
        size = mask.bit_count()
        for j in range(d):
            if not mask >> j & 1:
                phi[j] += weights[size] * (values[mask | (1 << j)] - values[mask])
    return phi


def shapley_exact(beta, eval_data: Dataset, kind) -> ShapleyEstimate:
    """Exact Shapley values by full subset enumeration (oracle, d <= 15)."""
    d = eval_data.d
    if d > MAX_EXACT_DIM:
        raise ConfigError(
            f"exact enumeration needs 2^d subsets; d={d} > {MAX_EXACT_DIM}. "
            "Use shapley_sample instead."
        )
    game = _Game(beta, eval_data, kind, eval_data.features)
    phi = exact_shapley_from_game(game.value, d)
    return ShapleyEstimate(
        values=phi,
        se=np.zeros(d),
        n_permutations=0,
        value_empty=game.value(0),
        value_full=game.value((1 << d) - 1),
    )


def shapley_sample(
    beta, eval_data: Dataset, kind, config: ShapleyConfig
) -> ShapleyEstimate:
    """Permutation-sampling Shapley estimate with CLT standard errors.

    Each sampled permutation contributes one marginal contribution per
    variable; values are means over permutations and se is the sample
    standard deviation divided by sqrt(n_permutations).

    For the global loss game each permutation is scored on one sampled
    evaluation row, so the standard error covers evaluation-data uncertainty
    as well as permutation order. The local game has a fixed instance, so its
    permutations reuse the memoized full-background subset values.
    """
    d = eval_data.d
    background = _background(eval_data, config.background_rows, config.seed)
    game = _Game(beta, eval_data, kind, background)
    rng = np.random.default_rng([config.seed, 2])
    n_perm = config.n_permutations
    is_global = isinstance(kind, GlobalSage)
    contribs = np.empty((n_perm, d))
    for p in range(n_perm):
        perm = rng.permutation(d)
        if is_global:
            row = int(rng.integers(eval_data.n))
            value_at = lambda mask: game.row_value(mask, row)  # noqa: E731
        else:
            value_at = game.value
        mask = 0
        prev = value_at(0)
        for j in perm:
            mask |= 1 << int(j)
            cur = value_at(mask)
            contribs[p, j] = cur - prev
            prev = cur
    values = contribs.mean(axis=0)
    se = contribs.std(axis=0, ddof=1) / np.sqrt(n_perm)
    return ShapleyEstimate(
        values=values,
        se=se,
        n_permutations=n_perm,
        value_empty=game.value(0),
        value_full=game.value((1 << d) - 1),
    )


@dataclass(frozen=True)
class ShapSummary:
    """Per-instance SHAP values plus the mean-absolute global heuristic."""

    mean_abs: np.ndarray
    matrix: np.ndarray
    instance_indices: np.ndarray


def mean_abs_shap(
    beta, eval_data: Dataset, config: ShapleyConfig, instance_cap: int = 1000
) -> ShapSummary:
    """LocalShap per instance (seeded subsample beyond instance_cap)."""
    if eval_data.n == 0:
        raise DataError("evaluation data is empty")
    if eval_data.n > instance_cap:
        rng = np.random.default_rng([config.seed, 3])
        instances = np.sort(rng.choice(eval_data.n, size=instance_cap, replace=False))
    else:
        instances = np.arange(eval_data.n)
    matrix = np.empty((instances.size, eval_data.d))
    for row, i in enumerate(instances):
        per_instance = ShapleyConfig(
            n_permutations=config.n_permutations,
            background_rows=config.background_rows,
            seed=derive_seed(config.seed, "shap-instance", int(i)),
        )
        est = shapley_sample(beta, eval_data, LocalShap(int(i)), per_instance)
        matrix[row] = est.values
    return ShapSummary(
        mean_abs=np.mean(np.abs(matrix), axis=0),
        matrix=matrix,
        instance_indices=instances,
    )


def write_estimates_csv(estimates, variable_names, path) -> None:
    """Importance file: model_id, variable, value, se, n_permutations."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model_id", "variable", "value", "se", "n_permutations"])
        for mid, est in enumerate(estimates):
            for j, name in enumerate(variable_names):
                writer.writerow(
                    [
                        str(mid),
                        name,
                        fmt_float(est.values[j]),
                        fmt_float(est.se[j]),
                        str(est.n_permutations),
                    ]
                )
