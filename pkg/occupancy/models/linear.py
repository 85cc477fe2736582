# ruff: noqa: FA100 (missing __future__.annotations import)
"""Ordinary and ridge least squares with an unpenalized intercept."""

import logging
import math
from dataclasses import dataclass
from typing import Dict
from typing import List
from typing import Optional
from typing import Tuple

import marshmallow
import numpy as np
import numpy.typing as npt
import scipy.linalg
from marshmallow_dataclass import class_schema

from ..features import FeatureMatrix
from ._design import add_intercept
from ._design import check_observations
from ._design import CollinearColumns
from ._design import column_indices
from ._design import DegenerateTarget
from ._design import dependent_columns
from ._design import FitError
from ._design import pivot_rank

log = logging.getLogger()


class RidgeDomainError(FitError):
    """Raised for a negative ridge penalty."""


@dataclass(frozen=True)
class FittedLinearModel:
    feature_names: List[str]
    intercept: float
    coefficients: List[float]
    n: int
    rss: float
    r_squared: Optional[float]
    aic: Optional[float]
    bic: Optional[float]
    ridge_lambda: float = 0.0
    target: str = "occupancy_rate"
    family: str = "linear"

    class Meta:
        unknown = marshmallow.EXCLUDE

    @property
    def p(self) -> int:
        return len(self.feature_names)

    def coefficient_map(self) -> Dict[str, float]:
        return dict(zip(self.feature_names, self.coefficients))

    def formula(self) -> str:
        """The model in ``target ~ a + b`` notation."""
        return f"{self.target} ~ {' + '.join(self.feature_names) or '1'}"


FittedLinearModelSchema = class_schema(FittedLinearModel)


def _aic(n: int, rss: float, k: int) -> float:
    if rss <= 0:
        log.warning("residual sum of squares is zero; AIC is -inf")
        return -math.inf
    return n * math.log(rss / n) + 2 * k


def _bic(n: int, rss: float, k: int) -> float:
    if rss <= 0:
        return -math.inf
    return n * math.log(rss / n) + math.log(n) * k


def aic_linear(model: FittedLinearModel) -> float:
    """``n·ln(RSS/n) + 2·(p+1)``: the form whose differences drive selection."""
    if model.ridge_lambda != 0:
        raise FitError("AIC is only defined for ordinary least-squares fits")
    return _aic(model.n, model.rss, model.p + 1)


def bic_linear(model: FittedLinearModel) -> float:
    if model.ridge_lambda != 0:
        raise FitError("BIC is only defined for ordinary least-squares fits")
    return _bic(model.n, model.rss, model.p + 1)


def _sums_of_squares(
    y: npt.NDArray[np.float64], fitted: npt.NDArray[np.float64]
) -> Tuple[float, float]:
    resid = y - fitted
    centered = y - y.mean()
    return float(resid @ resid), float(centered @ centered)


def fit_ols(matrix: FeatureMatrix) -> FittedLinearModel:
    """Least squares via column-pivoted QR of ``[1, X]``."""
    check_observations(matrix)
    y = matrix.y
    if np.all(y == y[0]):
        raise DegenerateTarget(f"target {matrix.target!r} is constant")

    design = add_intercept(matrix.X)
    q, r, pivots = scipy.linalg.qr(design, mode="economic", pivoting=True)
    rank = pivot_rank(r, design)
    if rank < design.shape[1]:
        raise CollinearColumns(dependent_columns(matrix, pivots, rank))
    solution = scipy.linalg.solve_triangular(r, q.T @ y)
    beta = np.empty_like(solution)
    beta[pivots] = solution

    rss, tss = _sums_of_squares(y, design @ beta)
    n, k = matrix.n, matrix.p + 1
    return FittedLinearModel(
        feature_names=list(matrix.columns),
        intercept=float(beta[0]),
        coefficients=[float(b) for b in beta[1:]],
        n=n,
        rss=rss,
        r_squared=min(max(1.0 - rss / tss, 0.0), 1.0),
        aic=_aic(n, rss, k),
        bic=_bic(n, rss, k),
        target=matrix.target,
    )


def fit_ridge(matrix: FeatureMatrix, ridge_lambda: float) -> FittedLinearModel:
    """Minimize ``‖y − ŷ‖² + λ‖β‖²``, leaving the intercept unpenalized.

    Solved as least squares on the centered design stacked over ``√λ·I``.
    With λ = 0 this is :func:`fit_ols`.
    """
    if not ridge_lambda >= 0:
        raise RidgeDomainError(
            f"ridge penalty must be non-negative, not {ridge_lambda}"
        )
    if matrix.n < 1:
        raise FitError("ridge fit needs at least one observation")
    if ridge_lambda == 0:
        return fit_ols(matrix)

    X, y = matrix.X, matrix.y
    x_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    p = matrix.p
    if p:
        augmented = np.vstack([X - x_mean, math.sqrt(ridge_lambda) * np.eye(p)])
        response = np.concatenate([y - y_mean, np.zeros(p)])
        beta, *_ = scipy.linalg.lstsq(augmented, response)
    else:
        beta = np.zeros(0)
    intercept = y_mean - float(x_mean @ beta)

    rss, tss = _sums_of_squares(y, intercept + X @ beta)
    return FittedLinearModel(
        feature_names=list(matrix.columns),
        intercept=intercept,
        coefficients=[float(b) for b in beta],
        n=matrix.n,
        rss=rss,
        r_squared=1.0 - rss / tss if tss > 0 else None,
        aic=None,
        bic=None,
        ridge_lambda=float(ridge_lambda),
        target=matrix.target,
    )


def predict_linear(
    model: FittedLinearModel, matrix: FeatureMatrix
) -> npt.NDArray[np.float64]:
    """``intercept + Xβ`` with columns matched to the model by name."""
    X = matrix.X[:, column_indices(matrix, model.feature_names)]
    predicted: npt.NDArray[np.float64] = model.intercept + X @ np.asarray(
        model.coefficients, dtype=np.float64
    )
    return predicted
