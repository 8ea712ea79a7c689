"""Synthetic logistic benchmark data used by the demos and the test suite."""

from __future__ import annotations

import numpy as np

from .data import Dataset

# Benchmark coefficients: one dominant predictor, a correlated pair (so the
# VIF gate fires), a weak predictor, and one pure-noise variable.
BENCHMARK_NAMES = ("dominant", "moderate", "corr_a", "corr_b", "weak", "noise")
BENCHMARK_INTERCEPT = -0.3
BENCHMARK_BETA = (1.2, 0.8, 0.5, -0.4, 0.25, 0.0)
BENCHMARK_CORRELATION = 0.85


def make_logistic_dataset(
    n: int, intercept: float, beta, seed: int, names=None, correlated_pairs=()
) -> Dataset:
    """Standard-normal features with outcomes drawn from a logistic model.

    correlated_pairs is a list of (j, k, rho): column k is regenerated as
    rho * X_j + sqrt(1 - rho^2) * noise.
    """
    beta = np.asarray(beta, dtype=np.float64)
    d = beta.size
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    for j, k, rho in correlated_pairs:
        X[:, k] = rho * X[:, j] + np.sqrt(1.0 - rho**2) * rng.standard_normal(n)
    eta = intercept + X @ beta
    p = 1.0 / (1.0 + np.exp(-eta))
    y = (rng.uniform(size=n) < p).astype(float)
    if names is None:
        names = tuple(f"x{j + 1}" for j in range(d))
    return Dataset(tuple(names), X, y)


def make_benchmark(n: int = 6000, seed: int = 7) -> Dataset:
    """The d=6 benchmark referenced throughout the test suite."""
    return make_logistic_dataset(
        n=n,
        intercept=BENCHMARK_INTERCEPT,
        beta=BENCHMARK_BETA,
        seed=seed,
        names=BENCHMARK_NAMES,
        correlated_pairs=[(2, 3, BENCHMARK_CORRELATION)],
    )
