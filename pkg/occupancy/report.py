# ruff: noqa: FA100 (missing __future__.annotations import)
"""The consolidated ``report`` pipeline and its plain-text summary."""

import logging
import os
from dataclasses import dataclass
from dataclasses import field
from functools import partial
from typing import Any
from typing import Dict
from typing import List
from typing import NamedTuple
from typing import Optional
from typing import Sequence
from typing import Tuple

import jinja2
import marshmallow
import pandas as pd
from marshmallow_dataclass import class_schema

from .artifacts import write_frame
from .artifacts import write_json
from .artifacts import write_text
from .errors import AnalysisError
from .evaluate import binned_means
from .evaluate import BinnedMean
from .evaluate import DEFAULT_BINS
from .evaluate import DEFAULT_SEED
from .evaluate import DEFAULT_TRAIN_FRAC
from .evaluate import distribution_stats
from .evaluate import EvalReport
from .evaluate import evaluate
from .evaluate import Evaluation
from .evaluate import HistogramBin
from .evaluate import mean_sd
from .evaluate import mse
from .evaluate import scatter
from .evaluate import ScatterPoint
from .features import augment_quadratic
from .features import build_matrix
from .features import DEFAULT_CANDIDATES
from .features import default_candidates
from .features import FeatureMatrix
from .features import take_rows
from .ingest import CleanListing
from .ingest import DropReport
from .models import CollinearColumns
from .models import fit_ols
from .models import fit_ridge
from .models import FittedLinearModel
from .models import predict_linear
from .stepwise import forward_stepwise
from .stepwise import MapFunction
from .stepwise import StepwiseTrace
from .strata import filter_by_reviews
from .strata import filter_by_zip
from .strata import price_tiers
from .strata import representatives
from .strata import StrataError
from .strata import tier_rows
from .strata import ZipTierTable

log = logging.getLogger()

DEFAULT_PLOT_BINS = 20
DEFAULT_RIDGE_LAMBDA = 1.0
DEFAULT_REVIEW_RANGES: Sequence[Tuple[int, int]] = ((30, 50),)

SENTIMENT_BIN_WIDTH = 1.0
SUMMARY_LENGTH_BIN_WIDTH = 5.0

DISTRIBUTION_FIELDS = (
    "occupancy_rate",
    "price",
    "price_per_occupant",
    "sentiment_summary",
    "summary_length",
)

REPORT_FILENAME = "report.json"
SUMMARY_FILENAME = "summary.txt"


@dataclass
class Moments:
    mean: float
    sd: float


@dataclass
class TierEntry:
    zipcode: str
    mean_price: float
    tier: str
    n_listings: int


@dataclass
class PriceTiers:
    global_mean_price: float
    global_sd_price: float
    zips: List[TierEntry]
    representatives: Dict[str, str]
    """Tier name to the zip code with the most listings in that tier."""


@dataclass
class StratumModel:
    stratum: str
    n_listings: int
    trace: Optional[StepwiseTrace] = None
    error: Optional[str] = None


@dataclass
class QuadraticComparison:
    plain_mse: float
    quadratic_mse: float
    model: FittedLinearModel


@dataclass
class RidgeComparison:
    plain_mse: float
    ridge_mse: float
    model: FittedLinearModel


@dataclass
class Report:
    n_listings: int
    seed: int
    train_frac: float
    nbins: int
    criterion: str
    evaluation: EvalReport
    occupancy_model: StepwiseTrace
    category_model: StepwiseTrace
    price_model: StepwiseTrace
    price_per_occupant_model: StepwiseTrace
    ridge: RidgeComparison
    distributions: Dict[str, Moments]
    strata: List[StratumModel] = field(default_factory=list)
    quadratic: Optional[QuadraticComparison] = None
    tiers: Optional[PriceTiers] = None
    drops: Optional[DropReport] = None

    class Meta:
        unknown = marshmallow.EXCLUDE


ReportSchema = class_schema(Report)


class ReportSettings(NamedTuple):
    seed: int = DEFAULT_SEED
    train_frac: float = DEFAULT_TRAIN_FRAC
    nbins: int = DEFAULT_BINS
    criterion: str = "aic"
    ridge_lambda: float = DEFAULT_RIDGE_LAMBDA
    zipcodes: Sequence[str] = ()
    """Zip codes to model separately; by default each tier's representative."""
    review_ranges: Sequence[Tuple[int, int]] = DEFAULT_REVIEW_RANGES


class Stratum(NamedTuple):
    name: str
    listings: List[CleanListing]


################################################################
#
# Model comparisons
#
def selected_split(
    listings: Sequence[CleanListing], evaluation: Evaluation
) -> Tuple[FeatureMatrix, FeatureMatrix]:
    """Training and validation designs over the selected occupancy features."""
    matrix = build_matrix(listings, evaluation.linear.selected)
    return (
        take_rows(matrix, evaluation.split.train),
        take_rows(matrix, evaluation.split.validation),
    )


def quadratic_comparison(
    train: FeatureMatrix, validation: FeatureMatrix, plain_mse: float
) -> Optional[QuadraticComparison]:
    """Refit with a squared term per feature; compare validation errors."""
    names = list(train.columns)
    if not names:
        return None
    try:
        model = fit_ols(augment_quadratic(train, names))
    except CollinearColumns as exc:
        log.warning("no quadratic model: %s", exc)
        return None
    predicted = predict_linear(model, augment_quadratic(validation, names))
    return QuadraticComparison(plain_mse, mse(predicted, validation.y), model)


def ridge_comparison(
    train: FeatureMatrix,
    validation: FeatureMatrix,
    plain_mse: float,
    ridge_lambda: float,
) -> RidgeComparison:
    model = fit_ridge(train, ridge_lambda)
    predicted = predict_linear(model, validation)
    return RidgeComparison(plain_mse, mse(predicted, validation.y), model)


def target_model(
    listings: Sequence[CleanListing],
    target: str,
    *,
    criterion: str = "aic",
    map_: MapFunction = map,
) -> StepwiseTrace:
    """Stepwise linear model of ``target`` over all listings."""
    candidates = default_candidates(target)
    matrix = build_matrix(listings, candidates, target)
    return forward_stepwise(
        matrix, "linear", candidates, criterion=criterion, map_=map_
    )


################################################################
#
# Strata
#
def tier_summary(table: ZipTierTable) -> PriceTiers:
    return PriceTiers(
        global_mean_price=table.global_mean_price,
        global_sd_price=table.global_sd_price,
        zips=[TierEntry(*row) for row in tier_rows(table)],
        representatives={
            str(tier): zipcode for tier, zipcode in representatives(table).items()
        },
    )


def select_strata(
    listings: Sequence[CleanListing],
    zipcodes: Sequence[str],
    review_ranges: Sequence[Tuple[int, int]],
) -> List[Stratum]:
    chosen = [
        Stratum(f"zip={zipcode}", filter_by_zip(listings, zipcode))
        for zipcode in zipcodes
    ]
    chosen.extend(
        Stratum(f"reviews={lo}-{hi}", filter_by_reviews(listings, lo, hi))
        for lo, hi in review_ranges
    )
    return chosen


def fit_stratum(stratum: Stratum, *, criterion: str = "aic") -> StratumModel:
    """Stepwise occupancy model within one stratum.

    A stratum too small or too uniform to model is reported with the error
    rather than failing the whole report.
    """
    n = len(stratum.listings)
    try:
        matrix = build_matrix(stratum.listings, DEFAULT_CANDIDATES)
        trace = forward_stepwise(
            matrix, "linear", DEFAULT_CANDIDATES, criterion=criterion
        )
    except AnalysisError as exc:
        log.warning("no model for stratum %s: %s", stratum.name, exc)
        return StratumModel(stratum.name, n, error=str(exc))
    log.info("stratum %s: %s", stratum.name, ", ".join(trace.selected) or "-")
    return StratumModel(stratum.name, n, trace=trace)


################################################################
#
# Pipeline
#
def build_report(
    listings: Sequence[CleanListing],
    settings: Optional[ReportSettings] = None,
    *,
    drops: Optional[DropReport] = None,
    map_: MapFunction = map,
) -> Report:
    """Run every analysis over the cleaned listings.

    ``map_`` runs stepwise candidate fits and, separately, the per-stratum
    pipelines; stratum fits themselves run serially.
    """
    if settings is None:
        settings = ReportSettings()
    evaluation = evaluate(
        listings,
        seed=settings.seed,
        train_frac=settings.train_frac,
        nbins=settings.nbins,
        criterion=settings.criterion,
        map_=map_,
    )
    train, validation = selected_split(listings, evaluation)
    plain_mse = evaluation.report.mse

    tiers = None
    zipcodes = list(settings.zipcodes)
    try:
        table = price_tiers(listings)
    except StrataError as exc:
        log.warning("no price tiers: %s", exc)
    else:
        tiers = tier_summary(table)
        if not zipcodes:
            zipcodes = list(tiers.representatives.values())

    stratum_models = list(
        map_(
            partial(fit_stratum, criterion=settings.criterion),
            select_strata(listings, zipcodes, settings.review_ranges),
        )
    )

    return Report(
        n_listings=len(listings),
        seed=settings.seed,
        train_frac=settings.train_frac,
        nbins=settings.nbins,
        criterion=settings.criterion,
        evaluation=evaluation.report,
        occupancy_model=evaluation.linear,
        category_model=evaluation.logistic,
        price_model=target_model(
            listings, "price", criterion=settings.criterion, map_=map_
        ),
        price_per_occupant_model=target_model(
            listings, "price_per_occupant", criterion=settings.criterion, map_=map_
        ),
        ridge=ridge_comparison(train, validation, plain_mse, settings.ridge_lambda),
        quadratic=quadratic_comparison(train, validation, plain_mse),
        distributions={
            name: Moments(*mean_sd([float(getattr(row, name)) for row in listings]))
            for name in DISTRIBUTION_FIELDS
        },
        tiers=tiers,
        strata=stratum_models,
        drops=drops,
    )


################################################################
#
# Plot data
#
def _frame(rows: Sequence[Tuple[Any, ...]], columns: Sequence[str]) -> pd.DataFrame:
    return pd.DataFrame.from_records(list(rows), columns=list(columns))


def plot_frames(
    listings: Sequence[CleanListing], plot_bins: int = DEFAULT_PLOT_BINS
) -> Dict[str, pd.DataFrame]:
    """Data behind each figure, keyed by output file name."""

    def histogram(name: str, width: float) -> pd.DataFrame:
        values = [float(getattr(row, name)) for row in listings]
        return _frame(distribution_stats(values, width).histogram, HistogramBin._fields)

    def binned(name: str) -> pd.DataFrame:
        return _frame(binned_means(listings, name, plot_bins), BinnedMean._fields)

    def points(x: str, y: str) -> pd.DataFrame:
        return _frame(scatter(listings, x, y), ScatterPoint._fields)

    return {
        "sentiment_hist.csv": histogram("sentiment_summary", SENTIMENT_BIN_WIDTH),
        "summary_length_hist.csv": histogram(
            "summary_length", SUMMARY_LENGTH_BIN_WIDTH
        ),
        "occupancy_vs_sentiment.csv": points("sentiment_summary", "occupancy_rate"),
        "bin_mean_sentiment.csv": binned("sentiment_summary"),
        "bin_mean_price.csv": binned("price"),
        "bin_mean_price_per_occupant.csv": binned("price_per_occupant"),
        "reviews_vs_occupancy.csv": points("number_of_reviews", "occupancy_rate"),
        "amenities_vs_occupancy.csv": points("num_amenities", "occupancy_rate"),
    }


################################################################
#
# Summary text
#
SUMMARY_TEMPLATE = """\
Listings analysed: {{ report.n_listings }}
{% if report.drops %}
Rows read: {{ report.drops.parsed_rows }} \
({{ report.drops.skipped_rows }} unparseable, \
{{ report.drops.unmatched }} without an occupancy rate)
{% for reason, count in report.drops.dropped|dictsort %}
Dropped, {{ reason }}: {{ count }}
{% endfor %}
{% endif %}
Split: {{ report.evaluation.n_train }} training, \
{{ report.evaluation.n_validation }} validation (seed {{ report.seed }})
Selection criterion: {{ report.criterion|upper }}

Occupancy rate
  model: {{ report.occupancy_model.model.formula() }}
  R²: {{ report.occupancy_model.model.r_squared|num }}
  validation MSE: {{ report.evaluation.mse|num }}
{% if report.quadratic %}
  with squares: {{ report.quadratic.model.formula() }}
  validation MSE with squares: {{ report.quadratic.quadratic_mse|num }}
{% endif %}
  ridge (lambda {{ report.ridge.model.ridge_lambda|num }}) \
validation MSE: {{ report.ridge.ridge_mse|num }}

Occupancy category ({{ report.nbins }} bins)
  model: {{ report.category_model.model.formula() }}
  accuracy: {{ report.evaluation.accuracy|num }} \
(baseline {{ report.evaluation.baseline_accuracy|num }})

Price
  model: {{ report.price_model.model.formula() }}
  R²: {{ report.price_model.model.r_squared|num }}

Price per occupant
  model: {{ report.price_per_occupant_model.model.formula() }}
  R²: {{ report.price_per_occupant_model.model.r_squared|num }}

Correlations
{% for key, r in report.evaluation.correlations|dictsort %}
  {{ key }}: {{ r|num }} (p {{ report.evaluation.correlation_pvalues[key]|num }})
{% endfor %}
{% if report.tiers %}

Zip-code price tiers (mean {{ report.tiers.global_mean_price|num }}, \
sd {{ report.tiers.global_sd_price|num }})
{% for tier, zipcode in report.tiers.representatives|dictsort %}
  {{ tier }}: {{ zipcode }}
{% endfor %}
{% endif %}
{% if report.strata %}

Strata
{% for stratum in report.strata %}
  {{ stratum.stratum }} ({{ stratum.n_listings }} listings): \
{{ stratum.trace.model.formula() if stratum.trace else "no model, " ~ stratum.error }}
{% endfor %}
{% endif %}
"""


def number(value: Optional[float], spec: str = ".4g") -> str:
    """A jinja filter formatting a number, or ``n/a`` for none."""
    return "n/a" if value is None else format(value, spec)


FILTERS = {
    "num": number,
}


def make_jinja2_environment() -> jinja2.Environment:
    env = jinja2.Environment(
        autoescape=False,
        undefined=jinja2.StrictUndefined,
        keep_trailing_newline=True,
        trim_blocks=True,
        lstrip_blocks=True,
    )
    env.filters.update(FILTERS)
    return env


summary_env = make_jinja2_environment()


def render_summary(report: Report) -> str:
    return summary_env.from_string(SUMMARY_TEMPLATE).render(report=report)


def write_report(
    directory: "os.PathLike[str] | str",
    report: Report,
    plots: Dict[str, pd.DataFrame],
) -> List[str]:
    """Write the JSON report, its summary and the plot data into ``directory``."""
    paths = [
        os.path.join(directory, REPORT_FILENAME),
        os.path.join(directory, SUMMARY_FILENAME),
    ]
    write_json(paths[0], ReportSchema().dump(report))
    write_text(paths[1], render_summary(report))
    for filename, frame in plots.items():
        path = os.path.join(directory, filename)
        write_frame(path, frame)
        paths.append(path)
    return paths
