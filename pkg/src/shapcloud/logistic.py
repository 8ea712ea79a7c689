"""Maximum-likelihood logistic regression with covariance and VIF diagnostics.

The loss convention throughout the package is the MEAN negative log-likelihood,
so loss bounds are sample-size independent.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .data import Dataset
from .errors import DataError, NumericError
from .util import fmt_float

PROB_CLIP = 1e-12


@dataclass(frozen=True)
class FittedModel:
    """Optimal logistic fit: coefficients, covariance, training loss, VIF.

    beta has the intercept first, so len(beta) == d+1. covariance is the
    inverse observed Fisher information of the total log-likelihood at beta.
    """

    variable_names: tuple[str, ...]
    beta: np.ndarray
    covariance: np.ndarray
    train_loss: float
    vif: np.ndarray
    tol: float
    iterations: int
    family: str = "logistic"

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=np.float64)
        cov = np.asarray(self.covariance, dtype=np.float64)
        vif = np.asarray(self.vif, dtype=np.float64)
        d = len(self.variable_names)
        if beta.shape != (d + 1,):
            raise DataError("beta must have length d+1 (intercept first)")
        if cov.shape != (d + 1, d + 1):
            raise DataError("covariance must be (d+1)x(d+1)")
        if np.max(np.abs(cov - cov.T)) > 1e-10:
            raise NumericError("covariance is not symmetric within 1e-10")
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise NumericError("covariance is not positive definite") from None
        if vif.shape != (d,) or np.any(vif < 1.0):
            raise NumericError("vif must be a length-d vector with entries >= 1")
        for arr in (beta, cov, vif):
            arr.flags.writeable = False
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "vif", vif)
        object.__setattr__(self, "variable_names", tuple(self.variable_names))


def _design(data: Dataset) -> np.ndarray:
    return np.column_stack([np.ones(data.n), data.features])


def _clip(p: np.ndarray) -> np.ndarray:
    return np.clip(p, PROB_CLIP, 1.0 - PROB_CLIP)


def _mean_nll(p: np.ndarray, y: np.ndarray) -> float:
    p = _clip(p)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p)))


def log_loss(beta, data: Dataset) -> float:
    """Mean negative log-likelihood of the logistic model on the dataset."""
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape != (data.d + 1,):
        raise DataError(f"beta has length {beta.size}, expected d+1={data.d + 1}")
    p = expit(_design(data) @ beta)
    return _mean_nll(p, data.outcome)


def predict_proba(beta, features_row) -> float:
    """Predicted probability for one feature row (sigmoid of linear predictor)."""
    beta = np.asarray(beta, dtype=np.float64)
    x = np.asarray(features_row, dtype=np.float64)
    if x.shape != (beta.size - 1,):
        raise DataError(f"feature row has length {x.size}, expected {beta.size - 1}")
    return float(expit(beta[0] + x @ beta[1:]))


def _column_r2(X: np.ndarray, j: int) -> float:
    """R^2 from OLS of column j on all other columns plus an intercept."""
    y = X[:, j]
    others = np.delete(X, j, axis=1)
    A = np.column_stack([np.ones(X.shape[0]), others])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst == 0.0:
        raise DataError(f"feature column {j} has zero variance")
    return 1.0 - float(np.sum(resid**2)) / sst


def compute_vif(train: Dataset) -> np.ndarray:
    """Per-variable variance inflation factor, 1/(1 - R^2_j).

    Near-perfect collinearity (R^2 >= 1 - 1e-10) yields +inf with a warning.
    """
    vif = np.empty(train.d)
    for j in range(train.d):
        r2 = _column_r2(train.features, j)
        if r2 >= 1.0 - 1e-10:
            warnings.warn(
                f"variable {train.variable_names[j]!r} is (near-)perfectly "
                "collinear; reporting VIF as +inf",
                stacklevel=2,
            )
            vif[j] = np.inf
        else:
            vif[j] = max(1.0, 1.0 / (1.0 - r2))
    return vif


def _check_full_rank(train: Dataset) -> None:
    X1 = _design(train)
    if np.linalg.matrix_rank(X1) == X1.shape[1]:
        return
    offenders = []
    for j in range(train.d):
        if np.ptp(train.features[:, j]) == 0.0:
            offenders.append(train.variable_names[j])
            continue
        if _column_r2(train.features, j) >= 1.0 - 1e-10:
            offenders.append(train.variable_names[j])
    listed = ", ".join(offenders) if offenders else "<unidentified>"
    raise DataError(f"design matrix is singular; offending columns: {listed}")


def fit_logistic(train: Dataset, tol: float = 1e-8, max_iter: int = 100) -> FittedModel:
    """Newton/IRLS fit with step-halving until max|gradient| <= tol.

    Raises DataError on a rank-deficient design and NumericError when the
    fit does not converge within max_iter (e.g. complete separation).
    """
    _check_full_rank(train)
    X1 = _design(train)
    y = train.outcome
    n = train.n
    beta = np.zeros(X1.shape[1])
    loss = _mean_nll(expit(X1 @ beta), y)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        p = _clip(expit(X1 @ beta))
        grad = X1.T @ (p - y) / n
        if np.max(np.abs(grad)) <= tol:
            converged = True
            iterations -= 1
            break
        w = p * (1.0 - p)
        hess = X1.T @ (X1 * w[:, None]) / n
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            raise NumericError(
                "Hessian is singular during the fit; check the data for "
                "separation or collinearity"
            ) from None
        # Step-halving keeps the loss sequence non-increasing.
        t = 1.0
        for _ in range(60):
            candidate = beta - t * step
            new_loss = _mean_nll(expit(X1 @ candidate), y)
            if new_loss <= loss:
                break
            t *= 0.5
        else:
            raise NumericError("line search failed; check the data for separation")
        assert new_loss <= loss
        beta, loss = candidate, new_loss
    else:
        converged = np.max(np.abs(X1.T @ (_clip(expit(X1 @ beta)) - y) / n)) <= tol

    if not converged:
        raise NumericError(
            f"logistic fit did not converge in {max_iter} iterations; "
            "check the data for complete separation or extreme scaling"
        )

    p = _clip(expit(X1 @ beta))
    w = p * (1.0 - p)
    fisher = X1.T @ (X1 * w[:, None])
    try:
        cov = np.linalg.inv(fisher)
    except np.linalg.LinAlgError:
        raise NumericError("observed Fisher information is singular") from None
    cov = 0.5 * (cov + cov.T)
    return FittedModel(
        variable_names=train.variable_names,
        beta=beta,
        covariance=cov,
        train_loss=loss,
        vif=compute_vif(train),
        tol=tol,
        iterations=iterations,
    )


def save_model(model: FittedModel, path) -> None:
    """Serialize a FittedModel to the documented JSON format."""
    doc = {
        "family": model.family,
        "variable_names": list(model.variable_names),
        "beta": [float(b) for b in model.beta],
        "covariance": [[float(v) for v in row] for row in model.covariance],
        "train_loss": float(model.train_loss),
        "vif": [float(v) for v in model.vif],
        "fit": {"tol": float(model.tol), "iterations": int(model.iterations)},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> FittedModel:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    missing = {"family", "variable_names", "beta", "covariance", "train_loss", "vif"} - set(doc)
    if missing:
        raise DataError(f"{path}: model file is missing fields: {sorted(missing)}")
    if doc["family"] != "logistic":
        raise DataError(f"{path}: unsupported model family {doc['family']!r}")
    fit_meta = doc.get("fit", {})
    return FittedModel(
        variable_names=tuple(doc["variable_names"]),
        beta=np.asarray(doc["beta"], dtype=np.float64),
        covariance=np.asarray(doc["covariance"], dtype=np.float64),
        train_loss=float(doc["train_loss"]),
        vif=np.asarray(doc["vif"], dtype=np.float64),
        tol=float(fit_meta.get("tol", np.nan)),
        iterations=int(fit_meta.get("iterations", -1)),
    )


def format_model_summary(model: FittedModel) -> str:
    """Human-readable coefficient/SE/VIF table for the fitted model."""
    se = np.sqrt(np.diag(model.covariance))
    lines = [f"{'variable':<24}{'coef':>12}{'se':>12}{'vif':>10}"]
    lines.append(f"{'(intercept)':<24}{model.beta[0]:>12.4f}{se[0]:>12.4f}{'--':>10}")
    for j, name in enumerate(model.variable_names):
        vif = model.vif[j]
        vif_s = "inf" if np.isinf(vif) else f"{vif:.2f}"
        lines.append(f"{name:<24}{model.beta[j + 1]:>12.4f}{se[j + 1]:>12.4f}{vif_s:>10}")
    lines.append(f"train loss (mean nll): {fmt_float(model.train_loss)}")
    return "\n".join(lines)
