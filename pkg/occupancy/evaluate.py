# ruff: noqa: FA100 (missing __future__.annotations import)
"""Train/validation splits, prediction metrics and grouped summaries.

Splits are a Fisher–Yates shuffle driven by the raw 64-bit output of
``numpy.random.PCG64(seed)``: the i-th swap (for ``i = n−1`` down to 1)
consumes the next raw value ``r`` and exchanges position ``i`` with
``j = (r·(i+1)) >> 64``. The first ``round(frac·n)`` shuffled indices
(halves rounded up) form the training set. This algorithm is fixed so that
reported validation errors stay comparable between releases.
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass
from dataclasses import field
from typing import Any
from typing import Dict
from typing import Iterable
from typing import List
from typing import NamedTuple
from typing import Sequence
from typing import Tuple

import marshmallow
import numpy as np
import numpy.typing as npt
import scipy.stats
from marshmallow_dataclass import class_schema

from .errors import AnalysisError
from .features import build_matrix
from .features import DEFAULT_CANDIDATES
from .features import take_rows
from .features import UnknownFeature
from .features import with_target
from .ingest import CleanListing
from .models import predict_class
from .models import predict_linear
from .stepwise import forward_stepwise
from .stepwise import MapFunction
from .stepwise import StepwiseTrace

log = logging.getLogger()

DEFAULT_SEED = 1729
DEFAULT_TRAIN_FRAC = 0.8
DEFAULT_BINS = 10

DEFAULT_CORRELATIONS: Sequence[Tuple[str, str]] = (
    ("sentiment_summary", "occupancy_rate"),
    ("summary_length", "occupancy_rate"),
    ("num_amenities", "occupancy_rate"),
    ("number_of_reviews", "occupancy_rate"),
    ("number_of_reviews", "sentiment_summary"),
    ("price", "occupancy_rate"),
    ("price_per_occupant", "occupancy_rate"),
)


class DegenerateInput(AnalysisError):
    """Raised for inputs too small or too constant to summarize."""


class SplitIndices(NamedTuple):
    seed: int
    train: npt.NDArray[np.intp]
    validation: npt.NDArray[np.intp]


def permutation(n: int, seed: int) -> npt.NDArray[np.intp]:
    """The seeded Fisher–Yates permutation of ``range(n)``."""
    if seed < 0:
        raise DegenerateInput(f"seed must be non-negative, not {seed}")
    raw = np.random.PCG64(seed).random_raw(max(n - 1, 0))
    order = list(range(n))
    for draw, i in zip(raw, range(n - 1, 0, -1)):
        j = (int(draw) * (i + 1)) >> 64
        order[i], order[j] = order[j], order[i]
    return np.array(order, dtype=np.intp)


def split(
    n: int, frac: float = DEFAULT_TRAIN_FRAC, seed: int = DEFAULT_SEED
) -> SplitIndices:
    if not 0 < frac < 1:
        raise DegenerateInput(f"training fraction must lie in (0, 1), not {frac}")
    if n < 2:
        raise DegenerateInput(f"can not split {n} rows")
    n_train = math.floor(frac * n + 0.5)
    if not 0 < n_train < n:
        raise DegenerateInput(f"splitting {n} rows at {frac} leaves an empty part")
    order = permutation(n, seed)
    return SplitIndices(seed, np.sort(order[:n_train]), np.sort(order[n_train:]))


################################################################
#
# Metrics
#
def _paired(a: npt.ArrayLike, b: npt.ArrayLike, minimum: int = 1) -> Tuple[Any, Any]:
    first, second = np.asarray(a), np.asarray(b)
    if first.shape != second.shape or first.ndim != 1:
        raise DegenerateInput(f"length mismatch: {first.shape} vs {second.shape}")
    if len(first) < minimum:
        raise DegenerateInput(f"need at least {minimum} pairs, got {len(first)}")
    return first, second


def mse(predicted: npt.ArrayLike, actual: npt.ArrayLike) -> float:
    p, a = _paired(predicted, actual)
    diff = p.astype(np.float64) - a.astype(np.float64)
    return float(np.mean(diff * diff))


def accuracy(predicted: npt.ArrayLike, actual: npt.ArrayLike) -> float:
    p, a = _paired(predicted, actual)
    return float(np.mean(p == a))


def majority_label(labels: Iterable[Any]) -> Any:
    """Most frequent label; ties go to the smallest label."""
    counts = Counter(labels)
    if not counts:
        raise DegenerateInput("no training labels")
    top = max(counts.values())
    return min(label for label, count in counts.items() if count == top)


def majority_baseline(train: Iterable[Any], test: Sequence[Any]) -> float:
    """Accuracy on ``test`` of always predicting the commonest ``train`` label."""
    label = majority_label(train)
    if not len(test):
        raise DegenerateInput("no test labels")
    return sum(1 for actual in test if actual == label) / len(test)


def pearson(x: npt.ArrayLike, y: npt.ArrayLike) -> float:
    """Sample Pearson correlation, clipped to [−1, 1]."""
    a, b = _paired(x, y, minimum=2)
    a = a.astype(np.float64) - np.mean(a)
    b = b.astype(np.float64) - np.mean(b)
    denominator = math.sqrt(float(a @ a) * float(b @ b))
    if denominator == 0:
        raise DegenerateInput("correlation of a constant sequence")
    return min(max(float(a @ b) / denominator, -1.0), 1.0)


def pearson_test(x: npt.ArrayLike, y: npt.ArrayLike) -> Tuple[float, float]:
    """Correlation and its two-sided p-value."""
    r = pearson(x, y)
    result = scipy.stats.pearsonr(np.asarray(x, float), np.asarray(y, float))
    return r, float(result[1])


################################################################
#
# Binning and grouped summaries
#
def bin_occupancy(rate: float, nbins: int) -> int:
    """Bin of ``rate`` among ``nbins`` equal intervals of [0, 1].

    Intervals are left-closed; the last one also contains 1.0.
    """
    if nbins < 1:
        raise DegenerateInput(f"need at least one bin, not {nbins}")
    if not 0 <= rate <= 1:
        raise DegenerateInput(f"rate {rate} outside [0, 1]")
    return min(math.floor(rate * nbins), nbins - 1)


def bin_rates(rates: Iterable[float], nbins: int) -> npt.NDArray[np.int64]:
    return np.array([bin_occupancy(rate, nbins) for rate in rates], dtype=np.int64)


def _field_values(rows: Sequence[CleanListing], name: str) -> List[float]:
    if name not in CleanListing._fields:
        raise UnknownFeature(f"unknown field {name!r}")
    return [float(getattr(row, name)) for row in rows]


def group_means(
    rows: Sequence[CleanListing], bins: Sequence[int], name: str
) -> Dict[int, float]:
    """Mean of field ``name`` per bin; empty bins are absent."""
    if not rows:
        raise DegenerateInput("no rows to group")
    if len(bins) != len(rows):
        raise DegenerateInput("one bin per row required")
    groups: Dict[int, List[float]] = {}
    for bin_, value in zip(bins, _field_values(rows, name)):
        groups.setdefault(int(bin_), []).append(value)
    return {
        bin_: math.fsum(values) / len(values)
        for bin_, values in sorted(groups.items())
    }


class BinnedMean(NamedTuple):
    bin_low: float
    bin_high: float
    mean_value: float
    count: int


def binned_means(
    rows: Sequence[CleanListing], name: str, nbins: int = DEFAULT_BINS
) -> List[BinnedMean]:
    """Mean of ``name`` per occupancy bin, as plot rows."""
    bins = bin_rates((row.occupancy_rate for row in rows), nbins)
    means = group_means(rows, list(bins), name)
    counts = Counter(int(b) for b in bins)
    return [
        BinnedMean(bin_ / nbins, (bin_ + 1) / nbins, mean, counts[bin_])
        for bin_, mean in means.items()
    ]


class HistogramBin(NamedTuple):
    bin_low: float
    bin_high: float
    count: int


class DistributionStats(NamedTuple):
    mean: float
    sd: float
    histogram: List[HistogramBin]


def mean_sd(values: Sequence[float]) -> Tuple[float, float]:
    """Two-pass sample mean and standard deviation (n−1 denominator)."""
    if not len(values):
        raise DegenerateInput("no values to summarize")
    n = len(values)
    mean = math.fsum(values) / n
    if n == 1:
        return mean, 0.0
    return mean, math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (n - 1))


def distribution_stats(
    values: Sequence[float], bin_width: float = 1.0
) -> DistributionStats:
    """Mean, sample standard deviation and a fixed-width histogram.

    Bin edges are multiples of ``bin_width`` starting at or below the
    minimum; bins are left-closed.
    """
    if bin_width <= 0:
        raise DegenerateInput(f"bin width must be positive, not {bin_width}")
    mean, sd = mean_sd(values)
    data = np.asarray(values, dtype=np.float64)
    start = math.floor(data.min() / bin_width) * bin_width
    nbins = math.floor((data.max() - start) / bin_width) + 1
    edges = start + bin_width * np.arange(nbins + 1)
    counts = np.bincount(
        np.minimum(((data - start) // bin_width).astype(np.int64), nbins - 1),
        minlength=nbins,
    )
    histogram = [
        HistogramBin(float(edges[i]), float(edges[i + 1]), int(counts[i]))
        for i in range(nbins)
    ]
    return DistributionStats(mean, sd, histogram)


class ScatterPoint(NamedTuple):
    x: float
    y: float


def scatter(rows: Sequence[CleanListing], x: str, y: str) -> List[ScatterPoint]:
    return [
        ScatterPoint(a, b)
        for a, b in zip(_field_values(rows, x), _field_values(rows, y))
    ]


def correlation_key(a: str, b: str) -> str:
    return f"{a}|{b}"


def correlations(
    rows: Sequence[CleanListing],
    pairs: Iterable[Tuple[str, str]] = DEFAULT_CORRELATIONS,
) -> Tuple[Dict[str, float], Dict[str, float]]:
    """Correlations and p-values keyed ``"a|b"``; constant pairs are left out."""
    values: Dict[str, float] = {}
    pvalues: Dict[str, float] = {}
    for a, b in pairs:
        try:
            r, pvalue = pearson_test(_field_values(rows, a), _field_values(rows, b))
        except DegenerateInput as exc:
            log.warning("no correlation for %s and %s: %s", a, b, exc)
            continue
        values[correlation_key(a, b)] = r
        pvalues[correlation_key(a, b)] = pvalue
    return values, pvalues


################################################################
#
# Evaluation pipeline
#
@dataclass
class EvalReport:
    mse: float
    accuracy: float
    baseline_accuracy: float
    n_train: int
    n_validation: int
    seed: int
    correlations: Dict[str, float] = field(default_factory=dict)
    correlation_pvalues: Dict[str, float] = field(default_factory=dict)
    linear_selected: List[str] = field(default_factory=list)
    logistic_selected: List[str] = field(default_factory=list)

    class Meta:
        unknown = marshmallow.EXCLUDE


EvalReportSchema = class_schema(EvalReport)


class Evaluation(NamedTuple):
    report: EvalReport
    linear: StepwiseTrace
    logistic: StepwiseTrace
    split: SplitIndices


def evaluate(
    listings: Sequence[CleanListing],
    *,
    seed: int = DEFAULT_SEED,
    train_frac: float = DEFAULT_TRAIN_FRAC,
    candidates: Sequence[str] = DEFAULT_CANDIDATES,
    nbins: int = DEFAULT_BINS,
    criterion: str = "aic",
    map_: MapFunction = map,
    correlation_pairs: Iterable[Tuple[str, str]] = DEFAULT_CORRELATIONS,
) -> Evaluation:
    """Select linear and logistic models on a training split; score them.

    The linear model predicts the occupancy rate (MSE); the logistic model
    predicts the occupancy bin (accuracy, compared with always guessing the
    commonest training bin). Correlations use every listing.
    """
    matrix = build_matrix(listings, candidates, "occupancy_rate")
    indices = split(matrix.n, train_frac, seed)
    train = take_rows(matrix, indices.train)
    validation = take_rows(matrix, indices.validation)

    linear = forward_stepwise(
        train, "linear", candidates, criterion=criterion, map_=map_
    )
    assert linear.linear_model is not None
    error = mse(predict_linear(linear.linear_model, validation), validation.y)

    train_bins = bin_rates(train.y, nbins)
    validation_bins = bin_rates(validation.y, nbins)
    logistic = forward_stepwise(
        with_target(train, train_bins, "occupancy_category"),
        "multinomial",
        candidates,
        criterion=criterion,
        map_=map_,
    )
    assert logistic.multinomial_model is not None
    predicted = predict_class(logistic.multinomial_model, validation)

    values, pvalues = correlations(listings, correlation_pairs)
    report = EvalReport(
        mse=error,
        accuracy=accuracy(predicted, validation_bins),
        baseline_accuracy=majority_baseline(
            train_bins.tolist(), validation_bins.tolist()
        ),
        n_train=train.n,
        n_validation=validation.n,
        seed=seed,
        correlations=values,
        correlation_pvalues=pvalues,
        linear_selected=list(linear.selected),
        logistic_selected=list(logistic.selected),
    )
    log.info(
        "validation MSE %.6g; accuracy %.4f (baseline %.4f)",
        report.mse,
        report.accuracy,
        report.baseline_accuracy,
    )
    return Evaluation(report, linear, logistic, indices)
