import numpy as np
import pytest

from shapcloud.errors import DataError
from shapcloud.ranking import (
    GREATER,
    LESS,
    TIE,
    filter_models_by_rank,
    pairwise_significance,
    rank_frequency,
    rank_variables,
    write_rank_frequency_csv,
)
from shapcloud.reliance import ModelReliance


def _rel(values, ses, mid=0, names=None):
    d = len(values)
    if names is None:
        names = tuple(f"v{j}" for j in range(d))
    return ModelReliance(
        model_id=mid,
        variable_names=names,
        values=np.asarray(values, dtype=float),
        se=np.asarray(ses, dtype=float),
        vif_gated=np.zeros(d, dtype=bool),
        empirical_loss=0.5,
    )


def test_pairwise_hand_cases():
    # Difference 0.3, pooled se sqrt(0.1^2 + 0.1^2): z = 2.121 > 1.960 -> win.
    rel = _rel([0.5, 0.2], [0.1, 0.1])
    m = pairwise_significance(rel, alpha=0.05)
    assert m[0, 1] == GREATER and m[1, 0] == LESS
    # Difference 0.03 gives z = 0.212 -> tie.
    rel = _rel([0.23, 0.2], [0.1, 0.1])
    m = pairwise_significance(rel, alpha=0.05)
    assert m[0, 1] == TIE and m[1, 0] == TIE


def test_pairwise_antisymmetry_and_diagonal():
    rng = np.random.default_rng(3)
    rel = _rel(rng.normal(size=5), rng.uniform(0.05, 0.3, 5))
    m = pairwise_significance(rel)
    assert np.array_equal(m, -m.T)
    assert np.all(np.diag(m) == TIE)


def test_competition_ranks_1224():
    # Wins (2, 0, 0): ranks 1, 2, 2 — the tie eats rank 2 for both.
    rel = _rel([1.0, 0.0, 0.0], [0.01, 0.01, 0.01])
    ranking = rank_variables(rel)
    assert ranking.wins.tolist() == [2, 0, 0]
    assert ranking.ranks.tolist() == [1, 2, 2]


def test_competition_ranks_distinct():
    rel = _rel([1.0, 0.5, 0.0], [0.01, 0.01, 0.01])
    ranking = rank_variables(rel)
    assert ranking.wins.tolist() == [2, 1, 0]
    assert ranking.ranks.tolist() == [1, 2, 3]


def test_huge_se_makes_everything_rank_one():
    rel = _rel([1.0, 0.5, 0.0], [100.0, 100.0, 100.0])
    ranking = rank_variables(rel)
    assert ranking.wins.tolist() == [0, 0, 0]
    assert ranking.ranks.tolist() == [1, 1, 1]


def test_alpha_monotonicity():
    # Raising alpha can only turn ties into wins, never the reverse.
    rng = np.random.default_rng(11)
    rel = _rel(rng.normal(size=6), rng.uniform(0.05, 0.5, 6))
    strict = pairwise_significance(rel, alpha=0.01)
    loose = pairwise_significance(rel, alpha=0.2)
    assert np.all(np.abs(loose) >= np.abs(strict))


def test_alpha_validation():
    rel = _rel([0.1, 0.2], [0.1, 0.1])
    for alpha in (0.0, 1.0, -0.1):
        with pytest.raises(DataError, match="alpha"):
            pairwise_significance(rel, alpha=alpha)
    with pytest.raises(DataError, match="positive standard errors"):
        pairwise_significance(_rel([0.1, 0.2], [0.1, 0.0]))


def test_rank_frequency_rows_sum_to_model_count():
    rng = np.random.default_rng(5)
    rankings = [
        rank_variables(_rel(rng.normal(size=4), rng.uniform(0.05, 0.3, 4), mid=i))
        for i in range(25)
    ]
    freq = rank_frequency(rankings)
    assert freq.matrix.shape == (4, 4)
    assert np.all(freq.matrix.sum(axis=1) == 25)


def test_rank_frequency_respects_variable_order():
    rankings = [rank_variables(_rel([1.0, 0.0], [0.01, 0.01], mid=i)) for i in range(3)]
    freq = rank_frequency(rankings, variable_order=["v1", "v0"])
    assert freq.variable_names == ("v1", "v0")
    assert freq.matrix[0].tolist() == [0, 3]  # v1 always rank 2
    assert freq.matrix[1].tolist() == [3, 0]  # v0 always rank 1
    with pytest.raises(DataError, match="permutation"):
        rank_frequency(rankings, variable_order=["v1", "bogus"])
    with pytest.raises(DataError, match="no rankings"):
        rank_frequency([])


def test_filter_models_by_rank():
    rankings = [
        rank_variables(_rel([1.0, 0.0], [0.01, 0.01], mid=0)),  # v1 rank 2
        rank_variables(_rel([0.0, 1.0], [0.01, 0.01], mid=1)),  # v1 rank 1
        rank_variables(_rel([0.5, 0.5], [10.0, 10.0], mid=2)),  # both rank 1
    ]
    assert filter_models_by_rank(rankings, "v1", 1) == [1, 2]
    assert filter_models_by_rank(rankings, "v1", 2) == [0, 1, 2]
    assert filter_models_by_rank(rankings, "v0", 1) == [0, 2]
    assert filter_models_by_rank([], "v0", 1) == []
    with pytest.raises(DataError, match="unknown variable"):
        filter_models_by_rank(rankings, "zzz", 1)


def test_rank_frequency_csv(tmp_path):
    rankings = [rank_variables(_rel([1.0, 0.0], [0.01, 0.01], mid=i)) for i in range(2)]
    freq = rank_frequency(rankings)
    path = tmp_path / "freq.csv"
    write_rank_frequency_csv(freq, path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "variable,rank_1,rank_2"
    assert lines[1] == "v0,2,0"
    assert lines[2] == "v1,0,2"
