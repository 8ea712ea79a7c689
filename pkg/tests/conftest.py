import numpy as np
import pytest

from shapcloud.data import SplitSpec, split
from shapcloud.logistic import fit_logistic
from shapcloud.synthetic import make_benchmark


@pytest.fixture(scope="session")
def benchmark_data():
    return make_benchmark(n=3000, seed=7)


@pytest.fixture(scope="session")
def benchmark_split(benchmark_data):
    return split(benchmark_data, SplitSpec(0.9, 1))


@pytest.fixture(scope="session")
def benchmark_model(benchmark_split):
    train, _ = benchmark_split
    return fit_logistic(train)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)
