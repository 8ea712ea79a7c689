"""Random-effects pooling of per-model reliance values (DerSimonian-Laird).

Each model is treated as an independent study. Between-model variance tau^2
is the moment estimate (Q - (M-1))/C truncated at zero; the 95% prediction
interval for a new model uses a t-distribution with M-2 degrees of freedom.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.stats import t as t_dist

from .errors import DataError, NumericError
from .reliance import ModelReliance
from .util import fmt_float


@dataclass(frozen=True)
class PooledImportance:
    variable: str
    pooled_mean: float
    pooled_var: float
    tau2: float
    q_stat: float
    pi_low: float
    pi_high: float
    significant: bool
    m_models: int

    def __post_init__(self):
        if not (self.pi_low <= self.pooled_mean <= self.pi_high):
            raise NumericError("prediction interval must contain the pooled mean")
        if self.tau2 < 0 or self.q_stat < 0:
            raise NumericError("tau2 and Q must be nonnegative")
        if self.significant != (self.pi_low > 0):
            raise NumericError("significant flag must equal (pi_low > 0)")


def pool_random_effects(values, ses, variable: str = "") -> PooledImportance:
    """Pool one variable's (value, se) pairs across M models.

    Q is the inverse-variance weighted squared deviation from the weighted
    mean; C = sum(w) - sum(w^2)/sum(w); tau^2 = max(0, (Q - (M-1))/C). Final
    weights are 1/(se^2 + tau^2); the 95% PI is
    mean +/- t_{M-2,0.975} * sqrt(pooled_var + tau^2).
    """
    x = np.asarray(values, dtype=np.float64)
    s = np.asarray(ses, dtype=np.float64)
    if x.shape != s.shape or x.ndim != 1:
        raise DataError("values and ses must be 1-D arrays of equal length")
    m = x.size
    if m < 3:
        raise NumericError(f"need at least 3 models to pool, got {m}")
    if np.any(s <= 0):
        raise NumericError("all standard errors must be positive")

    w = 1.0 / s**2
    w_sum = float(np.sum(w))
    x_bar = float(np.sum(w * x)) / w_sum
    q = float(np.sum(w * (x - x_bar) ** 2))
    c = w_sum - float(np.sum(w**2)) / w_sum
    tau2 = (q - (m - 1)) / c if q > m - 1 else 0.0

    w_star = 1.0 / (s**2 + tau2)
    pooled_mean = float(np.sum(w_star * x)) / float(np.sum(w_star))
    pooled_var = 1.0 / float(np.sum(w_star))
    t_crit = float(t_dist.ppf(0.975, m - 2))
    half_width = t_crit * np.sqrt(pooled_var + tau2)
    pi_low = pooled_mean - half_width
    pi_high = pooled_mean + half_width
    return PooledImportance(
        variable=variable,
        pooled_mean=pooled_mean,
        pooled_var=pooled_var,
        tau2=tau2,
        q_stat=q,
        pi_low=pi_low,
        pi_high=pi_high,
        significant=pi_low > 0,
        m_models=m,
    )


def pool_all(reliances: list[ModelReliance]) -> list[PooledImportance]:
    """Per-variable pooling across models, sorted by pooled mean descending."""
    if not reliances:
        raise DataError("no model reliances to pool")
    names = reliances[0].variable_names
    for rel in reliances:
        if rel.variable_names != names:
            raise DataError(
                f"ragged variable sets: {rel.variable_names} vs {names}"
            )
    values = np.array([rel.values for rel in reliances])
    ses = np.array([rel.se for rel in reliances])
    pooled = [
        pool_random_effects(values[:, j], ses[:, j], variable=name)
        for j, name in enumerate(names)
    ]
    pooled.sort(key=lambda p: (-p.pooled_mean, p.variable))
    return pooled


def write_pooled_csv(pooled, path) -> None:
    header = [
        "variable",
        "pooled_mean",
        "pooled_var",
        "tau2",
        "q_stat",
        "pi_low",
        "pi_high",
        "significant",
        "m_models",
    ]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for p in pooled:
            writer.writerow(
                [
                    p.variable,
                    fmt_float(p.pooled_mean),
                    fmt_float(p.pooled_var),
                    fmt_float(p.tau2),
                    fmt_float(p.q_stat),
                    fmt_float(p.pi_low),
                    fmt_float(p.pi_high),
                    str(p.significant).lower(),
                    str(p.m_models),
                ]
            )


def read_pooled_csv(path) -> list[PooledImportance]:
    expected = [
        "variable",
        "pooled_mean",
        "pooled_var",
        "tau2",
        "q_stat",
        "pi_low",
        "pi_high",
        "significant",
        "m_models",
    ]
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != expected:
            raise DataError(f"{path}: expected columns {expected}, found {header}")
        pooled = []
        for row in reader:
            pooled.append(
                PooledImportance(
                    variable=row[0],
                    pooled_mean=float(row[1]),
                    pooled_var=float(row[2]),
                    tau2=float(row[3]),
                    q_stat=float(row[4]),
                    pi_low=float(row[5]),
                    pi_high=float(row[6]),
                    significant=row[7] == "true",
                    m_models=int(row[8]),
                )
            )
    return pooled
