"""Per-listing feature derivation and model design matrices."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from typing import Any
from typing import Final
from typing import Iterable
from typing import Sequence
from typing import TYPE_CHECKING

import numpy as np
import numpy.typing as npt
import pandas as pd

from .errors import AnalysisError
from .lexicon import tokenize

if TYPE_CHECKING:
    from .ingest import CleanListing

log = logging.getLogger()

NUMERIC_FEATURES: Final = tuple(
    sorted(
        [
            "accommodates",
            "bathrooms",
            "bedrooms",
            "beds",
            "num_amenities",
            "number_of_reviews",
            "price",
            "price_per_occupant",
            "rating",
            "sentiment_space",
            "sentiment_summary",
            "space_length",
            "summary_length",
        ]
    )
)
"""Numeric listing features; the default stepwise candidate set."""

DEFAULT_CANDIDATES: Final = NUMERIC_FEATURES

CATEGORICAL_FEATURES: Final = ("bed_type", "property_type", "zipcode")

TARGETS: Final = ("occupancy_rate", "price", "price_per_occupant")

MODEL_VARIABLES: Final = (*NUMERIC_FEATURES, "occupancy_rate")
"""Every numeric column a design matrix may be built from."""


class FeatureError(AnalysisError):
    """Raised for a design matrix that can not be built."""


class UnknownFeature(FeatureError, KeyError):
    """Raised for a feature or target name that is not a listing variable."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class FeatureDomainError(FeatureError):
    """Raised for a derived feature whose inputs are out of range."""


def default_candidates(target: str = "occupancy_rate") -> tuple[str, ...]:
    """Stepwise candidates for ``target``.

    Price models leave out both price columns and may use the occupancy
    rate instead.
    """
    if target not in TARGETS:
        raise UnknownFeature(f"unknown target {target!r}")
    if target == "occupancy_rate":
        return DEFAULT_CANDIDATES
    excluded = {"price", "price_per_occupant"}
    names = [name for name in MODEL_VARIABLES if name not in excluded]
    return tuple(sorted(names))


def word_count(text: str | None) -> int:
    """Number of tokens in ``text``; zero for missing text."""
    return len(tokenize(text))


def amenity_items(raw: str | None) -> list[str] | None:
    """Split a brace-delimited amenity list like ``{TV,"Air conditioning"}``.

    Returns an empty list for a missing field and ``None`` if the field is
    not a brace-delimited list.
    """
    if raw is None:
        return []
    text = raw.strip()
    if not text:
        return []
    if not (text.startswith("{") and text.endswith("}")):
        return None
    inner = text[1:-1]
    if not inner.strip():
        return []
    try:
        fields = next(csv.reader([inner], skipinitialspace=True))
    except csv.Error:
        return None
    return [item.strip() for item in fields if item.strip()]


def count_amenities(raw: str | None) -> int:
    items = amenity_items(raw)
    if items is None:
        log.warning("unparseable amenities field %r counted as zero", raw)
        return 0
    return len(items)


def price_per_occupant(price: float, accommodates: int) -> float:
    if accommodates < 1:
        raise FeatureDomainError(f"accommodates must be at least 1, not {accommodates}")
    if price < 0:
        raise FeatureDomainError(f"price must be non-negative, not {price}")
    return price / accommodates


@dataclass(frozen=True)
class FeatureMatrix:
    """A numeric design (without intercept column) plus its target vector.

    ``X`` has shape ``(n, len(columns))``; all values are finite. Both
    arrays are read-only.
    """

    columns: tuple[str, ...]
    X: npt.NDArray[np.float64]
    y: npt.NDArray[np.float64]
    target: str = "occupancy_rate"

    def __post_init__(self) -> None:
        X = np.array(self.X, dtype=np.float64, copy=True)
        y = np.array(self.y, dtype=np.float64, copy=True)
        if X.ndim != 2 or y.ndim != 1:
            raise FeatureError("design must be 2-d and target 1-d")
        if X.shape != (len(y), len(self.columns)):
            raise FeatureError(
                f"design shape {X.shape} does not match "
                f"{len(y)} rows × {len(self.columns)} columns"
            )
        if len(set(self.columns)) != len(self.columns):
            raise FeatureError(f"duplicate column names in {self.columns!r}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise FeatureError("design and target must be finite")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def p(self) -> int:
        return len(self.columns)

    def column(self, name: str) -> npt.NDArray[np.float64]:
        try:
            index = self.columns.index(name)
        except ValueError:
            raise UnknownFeature(f"no column {name!r} in design") from None
        return self.X[:, index]

    def to_frame(self) -> pd.DataFrame:
        """The design and target as a data frame, target last."""
        frame = pd.DataFrame(self.X, columns=list(self.columns))
        frame[self.target] = self.y
        return frame


def _check_names(names: Iterable[str], allowed: Sequence[str], what: str) -> None:
    for name in names:
        if name not in allowed:
            raise UnknownFeature(f"unknown {what} {name!r}")


def _values(listings: Sequence[CleanListing], name: str) -> npt.NDArray[np.float64]:
    return np.fromiter(
        (getattr(listing, name) for listing in listings),
        dtype=np.float64,
        count=len(listings),
    )


def one_hot(
    listings: Sequence[CleanListing], field: str
) -> tuple[list[str], npt.NDArray[np.float64]]:
    """Indicator columns for a categorical field, dropping the first level.

    Levels are sorted; the alphabetically first one is the reference. Column
    names read ``field=level``.
    """
    _check_names([field], CATEGORICAL_FEATURES, "categorical feature")
    values = np.array([getattr(listing, field) for listing in listings], dtype=object)
    levels = sorted(set(values))
    names = [f"{field}={level}" for level in levels[1:]]
    if not names:
        return names, np.zeros((len(listings), 0))
    columns = np.column_stack([(values == level) for level in levels[1:]])
    return names, columns.astype(np.float64)


def build_matrix(
    listings: Sequence[CleanListing],
    features: Sequence[str],
    target: str = "occupancy_rate",
    *,
    categorical: Sequence[str] = (),
) -> FeatureMatrix:
    """Collect ``features`` (in the given order) and ``target`` into a matrix."""
    _check_names(features, MODEL_VARIABLES, "feature")
    _check_names([target], TARGETS, "target")
    if target in features:
        raise FeatureError(f"target {target!r} can not also be a feature")
    if not listings:
        raise FeatureError("no rows to build a design from")

    names = list(features)
    blocks = [_values(listings, name)[:, np.newaxis] for name in features]
    for field in categorical:
        level_names, indicators = one_hot(listings, field)
        names.extend(level_names)
        blocks.append(indicators)
    if blocks:
        X = np.hstack(blocks)
    else:
        X = np.zeros((len(listings), 0))
    return FeatureMatrix(tuple(names), X, _values(listings, target), target)


def select_columns(matrix: FeatureMatrix, names: Sequence[str]) -> FeatureMatrix:
    """Sub-design with ``names`` in the given order; the target is kept."""
    indices = []
    for name in names:
        try:
            indices.append(matrix.columns.index(name))
        except ValueError:
            raise UnknownFeature(f"no column {name!r} in design") from None
    return FeatureMatrix(tuple(names), matrix.X[:, indices], matrix.y, matrix.target)


def take_rows(
    matrix: FeatureMatrix, rows: Sequence[int] | npt.NDArray[Any]
) -> FeatureMatrix:
    index = np.asarray(rows, dtype=np.intp)
    return FeatureMatrix(
        matrix.columns, matrix.X[index], matrix.y[index], matrix.target
    )


def with_target(matrix: FeatureMatrix, y: npt.ArrayLike, target: str) -> FeatureMatrix:
    """Same design, different response."""
    response = np.asarray(y, dtype=np.float64)
    return FeatureMatrix(matrix.columns, matrix.X, response, target)


def augment_quadratic(matrix: FeatureMatrix, names: Sequence[str]) -> FeatureMatrix:
    """Append a ``name^2`` column for each of ``names``."""
    squares = []
    new_names = []
    for name in names:
        squares.append(np.square(matrix.column(name)))
        new_names.append(f"{name}^2")
    if not squares:
        return matrix
    return FeatureMatrix(
        (*matrix.columns, *new_names),
        np.column_stack([matrix.X, *squares]),
        matrix.y,
        matrix.target,
    )
