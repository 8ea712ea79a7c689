"""Rejection sampler for nearly-optimal logistic models (the Rashomon set).

Candidates are drawn as beta_i ~ N(beta*, k_i * Sigma*) with k_i ~ U(u1, u2)
and rejected when their training loss exceeds (1 + epsilon) * L*. Rounds adapt
the draw count and u2 until every loss bin is populated, then a stratified
uniform selection trims the pool to the target size.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .data import Dataset
from .errors import ConfigError, DataError, NumericError
from .logistic import FittedModel, PROB_CLIP
from .util import fmt_float

LOSS_SLACK = 1e-9  # allowed amount by which a sample may beat the optimum


@dataclass(frozen=True)
class SamplerConfig:
    epsilon: float = 0.05
    m0: int = 5000
    u1: float = 0.5
    u2: float = 40.0
    target_min: int = 300
    target_max: int = 400
    coverage_bins: int = 10
    max_rounds: int = 5
    seed: int = 0
    # Final sample size; defaults to the midpoint of [target_min, target_max].
    target_count: int | None = None

    def __post_init__(self):
        if not (0.0 < self.epsilon <= 1.0):
            raise ConfigError("epsilon must lie in (0, 1]")
        if not (0.0 < self.u1 <= self.u2):
            raise ConfigError("require 0 < u1 <= u2")
        if self.m0 < 1 or self.coverage_bins < 1 or self.max_rounds < 1:
            raise ConfigError("m0, coverage_bins, max_rounds must be positive")
        if not (1 <= self.target_min <= self.target_max):
            raise ConfigError("require 1 <= target_min <= target_max")
        if self.target_count is not None and not (
            self.target_min <= self.target_count <= self.target_max
        ):
            raise ConfigError("target_count must lie in [target_min, target_max]")

    @property
    def final_count(self) -> int:
        if self.target_count is not None:
            return self.target_count
        return (self.target_min + self.target_max) // 2


@dataclass(frozen=True)
class ModelSample:
    """One nearly-optimal coefficient vector with its training loss."""

    beta: np.ndarray
    empirical_loss: float
    k_multiplier: float

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=np.float64)
        beta.flags.writeable = False
        object.__setattr__(self, "beta", beta)


@dataclass(frozen=True)
class RashomonSample:
    reference: FittedModel
    models: tuple[ModelSample, ...]
    config: SamplerConfig

    def __post_init__(self):
        object.__setattr__(self, "models", tuple(self.models))
        bound = loss_bound(self.reference, self.config.epsilon)
        floor = self.reference.train_loss - LOSS_SLACK
        for m in self.models:
            if not (floor <= m.empirical_loss <= bound):
                raise NumericError(
                    f"model loss {m.empirical_loss} violates the Rashomon bound "
                    f"[{floor}, {bound}]"
                )

    @property
    def losses(self) -> np.ndarray:
        return np.array([m.empirical_loss for m in self.models])

    @property
    def betas(self) -> np.ndarray:
        return np.array([m.beta for m in self.models])


def loss_bound(fitted: FittedModel, epsilon: float) -> float:
    """Rejection threshold (1 + epsilon) * L* on the training loss."""
    if epsilon < 0:
        raise ConfigError("epsilon must be nonnegative")
    return (1.0 + epsilon) * fitted.train_loss


def _batch_losses(betas: np.ndarray, X1: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Mean logistic log-loss of each candidate row of `betas`."""
    p = np.clip(expit(X1 @ betas.T), PROB_CLIP, 1.0 - PROB_CLIP)
    return -np.mean(y[:, None] * np.log(p) + (1.0 - y[:, None]) * np.log1p(-p), axis=0)


def _draw_candidates(
    fitted: FittedModel, count: int, u1: float, u2: float, seed: int, round_idx: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per-candidate RNG streams keyed by (seed, round, index)."""
    chol = np.linalg.cholesky(fitted.covariance)
    dim = fitted.beta.size
    ks = np.empty(count)
    betas = np.empty((count, dim))
    for i in range(count):
        rng = np.random.default_rng([seed, round_idx, i])
        ks[i] = rng.uniform(u1, u2)
        betas[i] = fitted.beta + np.sqrt(ks[i]) * (chol @ rng.standard_normal(dim))
    return ks, betas


def _largest_remainder_quotas(counts: np.ndarray, total: int) -> np.ndarray:
    """Proportional integer quotas summing to `total`, capped at bin counts.

    Every nonempty bin keeps at least one model when total allows, so the
    selection preserves loss-range coverage.
    """
    counts = counts.astype(np.int64)
    pool = int(counts.sum())
    ideal = counts * total / pool
    quotas = np.floor(ideal).astype(np.int64)
    remainder = total - int(quotas.sum())
    order = np.argsort(-(ideal - quotas), kind="stable")
    for idx in order:
        if remainder == 0:
            break
        if quotas[idx] < counts[idx]:
            quotas[idx] += 1
            remainder -= 1
    while remainder > 0:  # all fractional caps hit; fill wherever room remains
        for idx in np.argsort(-counts, kind="stable"):
            if remainder and quotas[idx] < counts[idx]:
                quotas[idx] += 1
                remainder -= 1
    nonempty = counts > 0
    if total >= int(nonempty.sum()):
        for idx in np.flatnonzero(nonempty & (quotas == 0)):
            donor = int(np.argmax(quotas))
            if quotas[donor] >= 2:
                quotas[donor] -= 1
                quotas[idx] += 1
    return quotas


def sample_rashomon(
    fitted: FittedModel, train: Dataset, config: SamplerConfig
) -> RashomonSample:
    """Draw a stratified sample of nearly-optimal models; deterministic per seed."""
    if train.d != len(fitted.variable_names):
        raise DataError("training data and fitted model disagree on d")
    if config.epsilon <= 0.0:
        raise NumericError("Rashomon set degenerate: epsilon must be positive")

    X1 = np.column_stack([np.ones(train.n), train.features])
    y = train.outcome
    bound = loss_bound(fitted, config.epsilon)
    floor = fitted.train_loss - LOSS_SLACK
    edges = np.linspace(fitted.train_loss, bound, config.coverage_bins + 1)
    need_per_bin = config.target_min / config.coverage_bins

    pool_betas: list[np.ndarray] = []
    pool_losses: list[float] = []
    pool_ks: list[float] = []
    total_drawn = 0
    m = config.m0
    u2 = config.u2
    bin_counts = np.zeros(config.coverage_bins, dtype=np.int64)

    for round_idx in range(config.max_rounds):
        ks, betas = _draw_candidates(fitted, m, config.u1, u2, config.seed, round_idx)
        total_drawn += m
        losses = _batch_losses(betas, X1, y)
        accept = (losses <= bound) & (losses >= floor)
        for i in np.flatnonzero(accept):
            pool_betas.append(betas[i])
            pool_losses.append(float(losses[i]))
            pool_ks.append(float(ks[i]))
        bin_counts, _ = np.histogram(pool_losses, bins=edges)
        if np.all(bin_counts >= need_per_bin):
            break
        m *= 2
        u2 *= 1.5

    if len(pool_losses) < config.target_min:
        rate = len(pool_losses) / total_drawn if total_drawn else 0.0
        raise NumericError(
            f"accepted only {len(pool_losses)} of {total_drawn} candidates "
            f"(rate {rate:.3f}) after {config.max_rounds} rounds; per-bin counts: "
            f"{bin_counts.tolist()}. Consider widening u2 or raising m0."
        )

    losses_arr = np.asarray(pool_losses)
    # np.histogram's rightmost-closed convention, reproduced per element.
    bin_idx = np.minimum(
        np.searchsorted(edges, losses_arr, side="right") - 1, config.coverage_bins - 1
    )
    final_n = min(len(pool_losses), config.final_count)
    counts = np.bincount(bin_idx, minlength=config.coverage_bins)
    quotas = _largest_remainder_quotas(counts, final_n)

    rng_sel = np.random.default_rng([config.seed, 2**31, 0])
    chosen: list[int] = []
    for b in range(config.coverage_bins):
        members = np.flatnonzero(bin_idx == b)
        if quotas[b] == 0 or members.size == 0:
            continue
        picked = rng_sel.choice(members, size=int(quotas[b]), replace=False)
        chosen.extend(int(i) for i in picked)
    chosen.sort()

    models = tuple(
        ModelSample(pool_betas[i], pool_losses[i], pool_ks[i]) for i in chosen
    )
    return RashomonSample(reference=fitted, models=models, config=config)


def write_models_csv(sample: RashomonSample, path) -> None:
    """Persist the sampled models: model_id, k_multiplier, loss, beta_0..beta_d."""
    d = len(sample.reference.variable_names)
    header = ["model_id", "k_multiplier", "empirical_loss"] + [
        f"beta_{j}" for j in range(d + 1)
    ]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for mid, model in enumerate(sample.models):
            row = [str(mid), fmt_float(model.k_multiplier), fmt_float(model.empirical_loss)]
            row.extend(fmt_float(b) for b in model.beta)
            writer.writerow(row)


def read_models_csv(path) -> list[ModelSample]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty models file")
        expected_prefix = ["model_id", "k_multiplier", "empirical_loss"]
        if header[:3] != expected_prefix or not all(
            h.startswith("beta_") for h in header[3:]
        ):
            raise DataError(
                f"{path}: unexpected columns {header}; expected "
                f"{expected_prefix + ['beta_0..beta_d']}"
            )
        models = []
        for row in reader:
            beta = np.array([float(v) for v in row[3:]])
            models.append(ModelSample(beta, float(row[2]), float(row[1])))
    return models
