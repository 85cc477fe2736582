# ruff: noqa: FA100 (missing __future__.annotations import)
"""Multinomial logistic regression with a reference category.

Class ``k`` (``k ≥ 1``) has linear predictor ``a_k0 + a_kᵀx``; the first
(smallest) label is the reference with predictor zero. Fitting maximizes
the log-likelihood by Newton–Raphson with step halving, working on an
internally standardized design and reporting coefficients on the original
scale.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from typing import List
from typing import Tuple

import marshmallow
import numpy as np
import numpy.typing as npt
import scipy.linalg
from marshmallow_dataclass import class_schema
from scipy.special import logsumexp
from scipy.special import softmax

from ..features import FeatureMatrix
from ._design import add_intercept
from ._design import check_design
from ._design import column_indices
from ._design import FitError

log = logging.getLogger()

DEFAULT_MAX_ITER = 500
DEFAULT_TOL = 1e-8
MIN_STEP = 2.0**-30
# largest Newton step (standardized scale) still counted as converged
STEP_TOL = 1e-6
# log-probability above -SATURATED counts as certain
SATURATED = 1e-10
# relative log-likelihood loss tolerated as rounding when accepting a step
LOGLIK_SLACK = 1e-12

Array = npt.NDArray[np.float64]


class SingleClass(FitError):
    """Raised if the response has fewer than two distinct labels."""


@dataclass(frozen=True)
class FittedMultinomialModel:
    feature_names: List[str]
    categories: List[int]
    coefficients: List[List[float]]
    """(K−1) rows of ``[intercept, *slopes]``, one per non-reference category."""
    n: int
    log_likelihood: float
    aic: float
    bic: float
    converged: bool
    iterations: int
    gradient_norm: float
    target: str = "occupancy_category"
    family: str = "multinomial"

    class Meta:
        unknown = marshmallow.EXCLUDE

    @property
    def p(self) -> int:
        return len(self.feature_names)

    @property
    def reference(self) -> int:
        return self.categories[0]

    def coefficient_array(self) -> Array:
        return np.asarray(self.coefficients, dtype=np.float64).reshape(
            len(self.categories) - 1, self.p + 1
        )

    def formula(self) -> str:
        return f"{self.target} ~ {' + '.join(self.feature_names) or '1'}"


FittedMultinomialModelSchema = class_schema(FittedMultinomialModel)


def _predictors(coef: Array, design: Array) -> Array:
    """n × K linear predictors, reference column first."""
    eta = design @ coef.T
    return np.column_stack([np.zeros(design.shape[0]), eta])


def multinomial_loglik(
    coef: Array, design: Array, y_index: npt.NDArray[np.intp]
) -> float:
    """Log-likelihood of ``(K−1) × q`` coefficients on a design with intercept."""
    eta = _predictors(coef, design)
    chosen = eta[np.arange(len(y_index)), y_index]
    return float(np.sum(chosen - logsumexp(eta, axis=1)))


def _residuals(probs: Array, y_index: npt.NDArray[np.intp]) -> Array:
    """Indicator minus probability for the non-reference categories.

    Where the indicator is one the residual is the summed probability of the
    other categories, which keeps its precision when the row is near certain.
    """
    residuals: Array = -probs[:, 1:]
    observed = y_index[:, np.newaxis] == np.arange(probs.shape[1])
    others = np.where(observed, 0.0, probs).sum(axis=1)
    rows = np.flatnonzero(y_index > 0)
    residuals[rows, y_index[rows] - 1] = others[rows]
    return residuals


def multinomial_gradient(
    coef: Array, design: Array, y_index: npt.NDArray[np.intp]
) -> Array:
    """Gradient of :func:`multinomial_loglik`, shaped like ``coef``."""
    probs = softmax(_predictors(coef, design), axis=1)
    gradient: Array = _residuals(probs, y_index).T @ design
    return gradient


def _information(coef: Array, design: Array) -> Array:
    """Negative Hessian of the log-likelihood, in ``coef.ravel()`` order."""
    probs = softmax(_predictors(coef, design), axis=1)
    q = design.shape[1]
    m = probs.shape[1] - 1
    information = np.empty((m * q, m * q))
    for k in range(m):
        for j in range(k, m):
            if j == k:
                # p·(1 − p) with 1 − p summed from the other categories
                weight = probs[:, k + 1] * np.delete(probs, k + 1, axis=1).sum(axis=1)
            else:
                weight = -probs[:, k + 1] * probs[:, j + 1]
            block = design.T @ (weight[:, np.newaxis] * design)
            information[k * q : (k + 1) * q, j * q : (j + 1) * q] = block
            information[j * q : (j + 1) * q, k * q : (k + 1) * q] = block.T
    return information


def _newton_direction(information: Array, gradient: Array) -> Array:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
            direction: Array = scipy.linalg.solve(
                information, gradient.ravel(), assume_a="pos"
            )
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning, ValueError):
        direction, *_ = scipy.linalg.lstsq(information, gradient.ravel())
    return direction.reshape(gradient.shape)


def _labels(y: Array) -> Tuple[npt.NDArray[np.int64], npt.NDArray[np.intp]]:
    if not np.all(y == np.round(y)):
        raise FitError("multinomial labels must be integers")
    labels = np.unique(y).astype(np.int64)
    if len(labels) < 2:
        raise SingleClass("need at least two distinct labels")
    return labels, np.searchsorted(labels, y.astype(np.int64))


def _original_scale(coef: Array, center: Array, scale: Array) -> Array:
    """Map coefficients of the standardized design back to the raw columns."""
    slopes = coef[:, 1:] / scale
    return np.column_stack([coef[:, 0] - slopes @ center, slopes])


def _saturated(coef: Array, design: Array, y_index: npt.NDArray[np.intp]) -> bool:
    """True if every row's observed category has probability 1 to rounding."""
    eta = _predictors(coef, design)
    chosen = eta[np.arange(len(y_index)), y_index]
    return bool(np.all(chosen - logsumexp(eta, axis=1) > -SATURATED))


def fit_multinomial(
    matrix: FeatureMatrix,
    *,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> FittedMultinomialModel:
    """Maximum-likelihood fit; ``matrix.y`` holds integer category labels.

    Newton steps are taken on the standardized design. The fit has
    converged when the max-norm of the log-likelihood gradient at the
    returned (original-scale) coefficients is below ``tol`` and the next
    Newton step no longer moves the coefficients. Separated classes have
    no maximum: the gradient vanishes while the steps stay large. Such
    fits stop there, or after ``max_iter`` iterations, with
    ``converged=False`` and a warning.
    """
    labels, y_index = _labels(matrix.y)
    check_design(matrix)
    n = matrix.n
    center = matrix.X.mean(axis=0)
    scale = matrix.X.std(axis=0)
    standardized = add_intercept((matrix.X - center) / scale)
    design = add_intercept(matrix.X)

    counts = np.bincount(y_index, minlength=len(labels))
    coef = np.zeros((len(labels) - 1, matrix.p + 1))
    coef[:, 0] = np.log(counts[1:] / counts[0])
    loglik = multinomial_loglik(coef, standardized, y_index)

    converged = False
    iterations = 0
    previous_norm = math.inf
    while True:
        original = _original_scale(coef, center, scale)
        gradient_norm = float(
            np.max(np.abs(multinomial_gradient(original, design, y_index)))
        )
        gradient = multinomial_gradient(coef, standardized, y_index)
        direction = _newton_direction(_information(coef, standardized), gradient)
        movement = float(np.max(np.abs(direction)))
        if gradient_norm < tol:
            # a vanishing gradient with large steps means divergence
            converged = movement < STEP_TOL and not _saturated(
                coef, standardized, y_index
            )
            break
        if iterations >= max_iter:
            break
        if movement < STEP_TOL and gradient_norm >= previous_norm:
            # stuck at the rounding floor above tol
            break
        previous_norm = gradient_norm
        floor = loglik - LOGLIK_SLACK * abs(loglik)
        step = 1.0
        while step >= MIN_STEP:
            trial = coef + step * direction
            trial_loglik = multinomial_loglik(trial, standardized, y_index)
            if np.all(np.isfinite(trial)) and trial_loglik >= floor:
                break
            step /= 2
        else:
            break
        coef, loglik = trial, trial_loglik
        iterations += 1

    if not converged:
        if gradient_norm < tol or _saturated(coef, standardized, y_index):
            log.warning(
                "multinomial fit did not converge after %d iterations: "
                "the categories are separated and the coefficients diverge",
                iterations,
            )
        else:
            log.warning(
                "multinomial fit did not converge after %d iterations "
                "(gradient %.3g)",
                iterations,
                gradient_norm,
            )

    original = _original_scale(coef, center, scale)
    loglik = multinomial_loglik(original, design, y_index)
    n_params = original.size
    return FittedMultinomialModel(
        feature_names=list(matrix.columns),
        categories=[int(label) for label in labels],
        coefficients=original.tolist(),
        n=n,
        log_likelihood=loglik,
        aic=2 * n_params - 2 * loglik,
        bic=math.log(n) * n_params - 2 * loglik,
        converged=converged,
        iterations=iterations,
        gradient_norm=gradient_norm,
        target=matrix.target,
    )


def aic_multinomial(model: FittedMultinomialModel) -> float:
    """``2·(K−1)·(p+1) − 2·logL``."""
    return 2 * (len(model.categories) - 1) * (model.p + 1) - 2 * model.log_likelihood


def bic_multinomial(model: FittedMultinomialModel) -> float:
    k = (len(model.categories) - 1) * (model.p + 1)
    return math.log(model.n) * k - 2 * model.log_likelihood


def predict_proba(model: FittedMultinomialModel, matrix: FeatureMatrix) -> Array:
    """n × K class probabilities, columns in category order."""
    X = matrix.X[:, column_indices(matrix, model.feature_names)]
    eta = _predictors(model.coefficient_array(), add_intercept(X))
    probs: Array = softmax(eta, axis=1)
    return probs


def predict_class(
    model: FittedMultinomialModel, matrix: FeatureMatrix
) -> npt.NDArray[np.int64]:
    """Most probable category per row; ties go to the earlier category."""
    probs = predict_proba(model, matrix)
    labels = np.asarray(model.categories, dtype=np.int64)
    predicted: npt.NDArray[np.int64] = labels[np.argmax(probs, axis=1)]
    return predicted
