"""Design-matrix helpers shared by the model families."""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np
import numpy.typing as npt
import scipy.linalg

from ..errors import AnalysisError
from ..features import FeatureMatrix

log = logging.getLogger()

RANK_TOLERANCE = 1e-10
"""Relative pivot size, against the Frobenius norm of the design, below
which a column counts as linearly dependent."""

INTERCEPT = "(intercept)"


class FitError(AnalysisError):
    """Raised if a model can not be fit to the given design."""


class Underdetermined(FitError):
    """Fewer observations than parameters."""


class CollinearColumns(FitError):
    """The design is rank deficient."""

    def __init__(self, columns: Sequence[str]):
        super().__init__(
            f"rank-deficient design; dependent column(s): {', '.join(columns)}"
        )
        self.columns = tuple(columns)


class DegenerateTarget(FitError):
    """The response does not vary."""


def add_intercept(X: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    return np.column_stack([np.ones(X.shape[0]), X])


def pivot_rank(r: npt.NDArray[np.float64], design: npt.NDArray[np.float64]) -> int:
    """Numerical rank from the diagonal of a column-pivoted R factor."""
    tolerance = RANK_TOLERANCE * float(np.linalg.norm(design))
    return int(np.count_nonzero(np.abs(np.diag(r)) > tolerance))


def dependent_columns(
    matrix: FeatureMatrix, pivots: npt.NDArray[np.intp], rank: int
) -> list[str]:
    names = [INTERCEPT, *matrix.columns]
    return [names[i] for i in pivots[rank:]]


def rank_deficient_columns(matrix: FeatureMatrix) -> list[str]:
    """Columns (intercept included) that depend linearly on earlier pivots.

    Empty for a full-rank design.
    """
    design = add_intercept(matrix.X)
    if design.shape[0] == 0:
        return [INTERCEPT, *matrix.columns]
    r, pivots = scipy.linalg.qr(design, mode="r", pivoting=True)
    return dependent_columns(matrix, pivots, pivot_rank(r, design))


def check_observations(matrix: FeatureMatrix) -> None:
    if matrix.n < matrix.p + 1:
        raise Underdetermined(
            f"{matrix.n} observations can not determine {matrix.p + 1} parameters"
        )


def check_design(matrix: FeatureMatrix) -> None:
    """Raise unless ``matrix`` with an intercept has full column rank."""
    check_observations(matrix)
    dependent = rank_deficient_columns(matrix)
    if dependent:
        raise CollinearColumns(dependent)


def column_indices(matrix: FeatureMatrix, names: Sequence[str]) -> list[int]:
    """Positions of ``names`` in ``matrix``, for prediction on a new design."""
    try:
        return [matrix.columns.index(name) for name in names]
    except ValueError as exc:
        raise FitError(f"design lacks a model feature: {exc}") from None
