"""Per-model variable reliance: VIF-gated Shapley values and permutation VIC.

The gate takes the absolute value of a variable's Shapley importance whenever
its VIF is at least 2, treating large negative values on collinear variables
as sign artifacts rather than evidence of unimportance. Standard errors pass
through unchanged.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .data import Dataset
from .errors import DataError, NumericError
from .logistic import PROB_CLIP
from .sampling import ModelSample
from .shapley import GlobalSage, ShapleyConfig, shapley_sample
from .util import fmt_float

VIF_GATE_THRESHOLD = 2.0


@dataclass(frozen=True)
class ModelReliance:
    model_id: int
    variable_names: tuple[str, ...]
    values: np.ndarray
    se: np.ndarray
    vif_gated: np.ndarray
    empirical_loss: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        se = np.asarray(self.se, dtype=np.float64)
        gated = np.asarray(self.vif_gated, dtype=bool)
        d = len(self.variable_names)
        if not (values.shape == se.shape == gated.shape == (d,)):
            raise DataError("values, se, vif_gated must all have length d")
        if np.any(values[gated] < 0):
            raise DataError("gated reliance values must be nonnegative")
        for arr in (values, se, gated):
            arr.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "se", se)
        object.__setattr__(self, "vif_gated", gated)
        object.__setattr__(self, "variable_names", tuple(self.variable_names))


@dataclass(frozen=True)
class PermutationReliance:
    model_id: int
    variable_names: tuple[str, ...]
    values_minus_one: np.ndarray
    n_permutations: int

    def __post_init__(self):
        vals = np.asarray(self.values_minus_one, dtype=np.float64)
        if np.any(vals < -1.0):
            raise DataError("loss ratios are nonnegative, so values cannot fall below -1")
        vals.flags.writeable = False
        object.__setattr__(self, "values_minus_one", vals)
        object.__setattr__(self, "variable_names", tuple(self.variable_names))


def apply_vif_gate(values: np.ndarray, vif: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Absolute value where VIF >= 2 (boundary included); identity elsewhere."""
    vif = np.asarray(vif, dtype=np.float64)
    gated = vif >= VIF_GATE_THRESHOLD
    return np.where(gated, np.abs(values), values), gated


def compute_shapley_vic(
    model: ModelSample,
    vif: np.ndarray,
    eval_data: Dataset,
    config: ShapleyConfig,
    model_id: int = 0,
) -> ModelReliance:
    """Sampled global Shapley importance for one model, passed through the gate."""
    if len(vif) != eval_data.d:
        raise DataError("vif length must equal the number of variables")
    est = shapley_sample(model.beta, eval_data, GlobalSage(), config)
    values, gated = apply_vif_gate(est.values, vif)
    return ModelReliance(
        model_id=model_id,
        variable_names=eval_data.variable_names,
        values=values,
        se=est.se,
        vif_gated=gated,
        empirical_loss=model.empirical_loss,
    )


def compute_vic_permutation(
    model: ModelSample,
    eval_data: Dataset,
    n_permutations: int,
    seed: int,
    model_id: int = 0,
) -> PermutationReliance:
    """Permutation model reliance: loss ratio after shuffling each column, minus 1."""
    if n_permutations < 1:
        raise DataError("n_permutations must be at least 1")
    beta = np.asarray(model.beta, dtype=np.float64)
    if beta.shape != (eval_data.d + 1,):
        raise DataError("beta length must be d+1")
    X = eval_data.features
    y = eval_data.outcome

    def loss_of(features: np.ndarray) -> float:
        p = np.clip(expit(beta[0] + features @ beta[1:]), PROB_CLIP, 1.0 - PROB_CLIP)
        return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p)))

    base = loss_of(X)
    if base == 0.0:
        raise NumericError("unpermuted loss is zero; permutation ratio undefined")
    values = np.empty(eval_data.d)
    for j in range(eval_data.d):
        total = 0.0
        for rep in range(n_permutations):
            rng = np.random.default_rng([seed, j, rep])
            permuted = X.copy()
            permuted[:, j] = X[rng.permutation(eval_data.n), j]
            total += loss_of(permuted)
        values[j] = (total / n_permutations) / base - 1.0
    return PermutationReliance(
        model_id=model_id,
        variable_names=eval_data.variable_names,
        values_minus_one=values,
        n_permutations=n_permutations,
    )


def write_reliance_csv(reliances, path) -> None:
    """Reliance file: model_id, variable, mr_value, se, vif_gated, empirical_loss."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["model_id", "variable", "mr_value", "se", "vif_gated", "empirical_loss"]
        )
        for rel in reliances:
            for j, name in enumerate(rel.variable_names):
                writer.writerow(
                    [
                        str(rel.model_id),
                        name,
                        fmt_float(rel.values[j]),
                        fmt_float(rel.se[j]),
                        str(bool(rel.vif_gated[j])).lower(),
                        fmt_float(rel.empirical_loss),
                    ]
                )


def read_reliance_csv(path) -> list[ModelReliance]:
    expected = ["model_id", "variable", "mr_value", "se", "vif_gated", "empirical_loss"]
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != expected:
            raise DataError(f"{path}: expected columns {expected}, found {header}")
        by_model: dict[int, dict] = {}
        for row in reader:
            mid = int(row[0])
            rec = by_model.setdefault(
                mid, {"names": [], "values": [], "se": [], "gated": [], "loss": None}
            )
            rec["names"].append(row[1])
            rec["values"].append(float(row[2]))
            rec["se"].append(float(row[3]))
            rec["gated"].append(row[4] == "true")
            rec["loss"] = float(row[5])
    reliances = []
    for mid in sorted(by_model):
        rec = by_model[mid]
        reliances.append(
            ModelReliance(
                model_id=mid,
                variable_names=tuple(rec["names"]),
                values=np.array(rec["values"]),
                se=np.array(rec["se"]),
                vif_gated=np.array(rec["gated"]),
                empirical_loss=rec["loss"],
            )
        )
    return reliances


def write_vic_csv(reliances, path) -> None:
    """Permutation-VIC file: model_id, variable, vic_minus_one, n_permutations."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model_id", "variable", "vic_minus_one", "n_permutations"])
        for rel in reliances:
            for j, name in enumerate(rel.variable_names):
                writer.writerow(
                    [
                        str(rel.model_id),
                        name,
                        fmt_float(rel.values_minus_one[j]),
                        str(rel.n_permutations),
                    ]
                )
