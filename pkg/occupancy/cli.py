from __future__ import annotations

import json
import logging
import os
import sys
from contextlib import contextmanager
from multiprocessing.pool import ThreadPool
from typing import Any
from typing import BinaryIO
from typing import Callable
from typing import Final
from typing import IO
from typing import Iterator
from typing import NoReturn
from typing import Sequence
from typing import TextIO
from typing import TypeVar

import click
import pandas as pd

import occupancy
from .artifacts import frame_to_csv
from .artifacts import write_frame
from .artifacts import write_json
from .artifacts import write_text
from .errors import AnalysisError
from .evaluate import bin_rates
from .evaluate import DEFAULT_BINS
from .evaluate import DEFAULT_SEED
from .evaluate import DEFAULT_TRAIN_FRAC
from .evaluate import EvalReportSchema
from .evaluate import evaluate as run_evaluation
from .features import augment_quadratic
from .features import build_matrix
from .features import CATEGORICAL_FEATURES
from .features import default_candidates
from .features import FeatureMatrix
from .features import MODEL_VARIABLES
from .features import TARGETS
from .features import with_target
from .ingest import clean as clean_rows
from .ingest import clean_frame
from .ingest import CleanListing
from .ingest import drop_report
from .ingest import DropReport
from .ingest import DropReportSchema
from .ingest import join_occupancy
from .ingest import parse_listings
from .ingest import parse_occupancy
from .lexicon import load_lexicon
from .lexicon import score_text
from .lexicon import SentimentLexicon
from .models import fit_multinomial
from .models import fit_ols
from .models import fit_ridge
from .models import FittedLinearModelSchema
from .models import FittedMultinomialModelSchema
from .report import build_report
from .report import DEFAULT_PLOT_BINS
from .report import DEFAULT_RIDGE_LAMBDA
from .report import plot_frames
from .report import ReportSettings
from .report import write_report
from .stepwise import CRITERIA
from .stepwise import forward_stepwise
from .stepwise import MapFunction
from .stepwise import StepwiseTraceSchema
from .strata import filter_by_reviews
from .strata import filter_by_zip
from .strata import price_tiers
from .strata import tier_rows
from .strata import TierRow
from .synthgen import load_spec
from .synthgen import SynthSpec
from .synthgen import SynthSpecError
from .synthgen import write_dataset

_T = TypeVar("_T")

log = logging.getLogger("")

POSITIVE_INT = click.IntRange(1, None)
NON_NEGATIVE_INT = click.IntRange(0, None)
NON_NEGATIVE_FLOAT = click.FloatRange(0.0, None)
TRAIN_FRACTION = click.FloatRange(0.0, 1.0, min_open=True, max_open=True)

DEFAULT_PROCESSES: Final = os.cpu_count() or 1
DEFAULT_OUTPUT: Final = "out"

FAMILY_CHOICES = ("linear", "logistic")


class ContextObj:
    processes: int = DEFAULT_PROCESSES
    seed: int | None = None
    output: str = DEFAULT_OUTPUT

    @property
    def effective_seed(self) -> int:
        return DEFAULT_SEED if self.seed is None else self.seed

    def path(self, filename: str) -> str:
        return os.path.join(self.output, filename)


class AnalysisFailure(click.ClickException):
    """An analysis error, reported as a JSON object on standard error."""

    exit_code = 1

    def __init__(self, error: AnalysisError):
        super().__init__(str(error))
        self.error = error

    def show(self, file: IO[Any] | None = None) -> None:
        if file is None:
            file = click.get_text_stream("stderr")
        payload = {"error": type(self.error).__name__, "message": self.message}
        click.echo(json.dumps(payload, sort_keys=True), file=file)


class OccupancyGroup(click.Group):
    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except AnalysisError as exc:
            raise AnalysisFailure(exc) from exc


@contextmanager
def mapper(processes: int) -> Iterator[MapFunction]:
    """An order-preserving map running on ``processes`` threads."""
    if processes == 1:
        yield map
    else:
        with ThreadPool(processes) as pool:
            yield pool.map


class NameListType(click.ParamType):
    """A comma-separated list of names drawn from ``choices``."""

    name = "names"

    def __init__(self, choices: Sequence[str]):
        self.choices = tuple(choices)

    def convert(
        self,
        value: str | Sequence[str],
        param: click.Parameter | None,
        ctx: click.Context | None,
    ) -> tuple[str, ...]:
        if not isinstance(value, str):
            return tuple(value)
        names = tuple(name.strip() for name in value.split(",") if name.strip())
        for name in names:
            if name not in self.choices:
                self.fail(
                    f"{name!r} is not one of {', '.join(self.choices)}", param, ctx
                )
        return names


@click.group("occupancy", cls=OccupancyGroup)
@click.option("-v", "--verbose", count=True)
@click.version_option(version=occupancy.__version__)
@click.option(
    "--processes",
    "-p",
    metavar="N",
    type=POSITIVE_INT,
    default=DEFAULT_PROCESSES,
    help=f"""
    Number of threads used for independent model fits.
    Set to one to disable parallel processing.
    The default is {DEFAULT_PROCESSES} (the number of CPUs detected on this platform).
    Results do not depend on this setting.
    """,
)
@click.option(
    "--seed",
    type=NON_NEGATIVE_INT,
    default=None,
    help=f"""
    Seed for the train/validation split and for synthetic data.
    The default is {DEFAULT_SEED}.
    """,
)
@click.option(
    "--output",
    "-o",
    type=click.Path(file_okay=False),
    default=DEFAULT_OUTPUT,
    help="""
    Directory into which to write output files.
    The default is './out'.
    """,
)
@click.pass_context
def occupancy_cli(
    ctx: click.Context,
    verbose: int,
    processes: int,
    seed: int | None,
    output: str,
) -> None:
    """Sentiment, feature and occupancy-model analyses of rental listings."""
    ctx.ensure_object(ContextObj)
    ctx.obj.processes = processes
    ctx.obj.seed = seed
    ctx.obj.output = output

    log_level = logging.WARNING
    if verbose:  # pragma: NO COVER
        log_level = logging.DEBUG if verbose > 1 else logging.INFO
    logging.basicConfig(
        level=log_level, format="(%(levelname)1.1s) [%(threadName)s] %(message)s"
    )


afinn_option = click.option(
    "--afinn",
    type=click.File("rb"),
    required=True,
    help="Tab-separated sentiment lexicon, e.g. AFINN-111.txt.",
)
listings_option = click.option(
    "--listings",
    type=click.Path(exists=True, dir_okay=False),
    required=True,
    help="Listing table (CSV with a header row).",
)
occupancy_option = click.option(
    "--occupancy",
    type=click.Path(exists=True, dir_okay=False),
    required=True,
    help="Table of host_id, occupancy_rate.",
)
delimiter_option = click.option(
    "--delimiter",
    default=",",
    show_default=True,
    help="Field separator of the listing and occupancy tables.",
)


def input_options(func: Callable[..., _T]) -> Callable[..., _T]:
    return afinn_option(listings_option(occupancy_option(delimiter_option(func))))


target_option = click.option(
    "--target",
    type=click.Choice(TARGETS),
    default="occupancy_rate",
    show_default=True,
    help="Response variable of linear models.",
)
family_option = click.option(
    "--family",
    type=click.Choice(FAMILY_CHOICES),
    default="linear",
    show_default=True,
    help="Linear regression, or multinomial logistic regression on binned occupancy.",
)
bins_option = click.option(
    "--bins",
    type=POSITIVE_INT,
    default=DEFAULT_BINS,
    show_default=True,
    help="Number of occupancy categories for the logistic family.",
)
one_hot_option = click.option(
    "--one-hot",
    type=click.Choice(CATEGORICAL_FEATURES),
    multiple=True,
    help="Add indicator columns for a categorical field.  May be repeated.",
)
criterion_option = click.option(
    "--criterion",
    type=click.Choice(CRITERIA),
    default="aic",
    show_default=True,
    help="Information criterion minimized by stepwise selection.",
)


def load_clean(
    afinn: BinaryIO, listings: str, occupancy: str, delimiter: str = ","
) -> tuple[SentimentLexicon, list[CleanListing], DropReport]:
    lexicon = load_lexicon(afinn)
    parsed = parse_listings(listings, delimiter=delimiter)
    rates = parse_occupancy(occupancy, delimiter=delimiter)
    joined = join_occupancy(parsed.listings, rates)
    cleaned = clean_rows(joined.rows, lexicon)
    return lexicon, cleaned.listings, drop_report(parsed, joined, cleaned)


def design(
    listings: Sequence[CleanListing],
    features: Sequence[str],
    target: str,
    family: str,
    one_hot: Sequence[str],
    bins: int,
) -> FeatureMatrix:
    if family == "logistic" and target != "occupancy_rate":
        raise click.UsageError("the logistic family models binned occupancy_rate")
    matrix = build_matrix(listings, features, target, categorical=one_hot)
    if family == "logistic":
        matrix = with_target(matrix, bin_rates(matrix.y, bins), "occupancy_category")
    return matrix


@occupancy_cli.command()
@afinn_option
@click.option(
    "--text",
    "texts",
    multiple=True,
    help="Text to score.  May be repeated.  Without it, each line of stdin is scored.",
)
def score(afinn: BinaryIO, texts: Sequence[str]) -> None:
    """Print the lexicon sentiment score of each text."""
    lexicon = load_lexicon(afinn)
    stdin: TextIO = click.get_text_stream("stdin")
    for text in texts or (line.rstrip("\n") for line in stdin):
        click.echo(score_text(lexicon, text))


@occupancy_cli.command()
@input_options
@click.pass_obj
def clean(
    obj: ContextObj, afinn: BinaryIO, listings: str, occupancy: str, delimiter: str
) -> None:
    """Join, clean and derive features; write clean.csv and drops.json."""
    _, cleaned, drops = load_clean(afinn, listings, occupancy, delimiter)
    write_text(obj.path("clean.csv"), frame_to_csv(clean_frame(cleaned), None))
    write_json(obj.path("drops.json"), DropReportSchema().dump(drops))
    log.warning("kept %d of %d listings", drops.kept, drops.parsed_rows)


@occupancy_cli.command()
@input_options
@family_option
@click.option(
    "--features",
    type=NameListType(MODEL_VARIABLES),
    help="Comma-separated features.  The default is every candidate for the target.",
)
@target_option
@click.option(
    "--ridge",
    "ridge_lambda",
    type=NON_NEGATIVE_FLOAT,
    is_flag=False,
    flag_value=DEFAULT_RIDGE_LAMBDA,
    default=None,
    metavar="[LAMBDA]",
    help=f"Fit ridge regression (default penalty {DEFAULT_RIDGE_LAMBDA}).",
)
@click.option("--quadratic", is_flag=True, help="Add the square of every feature.")
@one_hot_option
@bins_option
@click.option(
    "--dump-matrix",
    type=click.Path(dir_okay=False),
    metavar="PATH",
    help="Also write the design matrix and target, as CSV, to PATH.",
)
@click.pass_obj
def fit(
    obj: ContextObj,
    afinn: BinaryIO,
    listings: str,
    occupancy: str,
    delimiter: str,
    family: str,
    features: Sequence[str] | None,
    target: str,
    ridge_lambda: float | None,
    quadratic: bool,
    one_hot: Sequence[str],
    bins: int,
    dump_matrix: str | None,
) -> None:
    """Fit one model; write model.json."""
    if features is None:
        features = default_candidates(target)
    if ridge_lambda is not None and family != "linear":
        raise click.UsageError("--ridge applies to the linear family only")
    _, cleaned, _ = load_clean(afinn, listings, occupancy, delimiter)
    matrix = design(cleaned, features, target, family, one_hot, bins)
    if quadratic:
        matrix = augment_quadratic(matrix, features)
    if dump_matrix is not None:
        write_frame(dump_matrix, matrix.to_frame(), None)

    if family == "logistic":
        model = fit_multinomial(matrix)
        write_json(obj.path("model.json"), FittedMultinomialModelSchema().dump(model))
    else:
        if ridge_lambda is None:
            linear = fit_ols(matrix)
        else:
            linear = fit_ridge(matrix, ridge_lambda)
        write_json(obj.path("model.json"), FittedLinearModelSchema().dump(linear))
        log.info("%s (R² %s)", linear.formula(), linear.r_squared)


@occupancy_cli.command()
@input_options
@family_option
@click.option(
    "--candidates",
    type=NameListType(MODEL_VARIABLES),
    help="""
    Comma-separated candidate features.
    The default is every numeric feature usable with the target,
    plus any --one-hot columns.
    """,
)
@target_option
@criterion_option
@one_hot_option
@bins_option
@click.pass_obj
def stepwise(
    obj: ContextObj,
    afinn: BinaryIO,
    listings: str,
    occupancy: str,
    delimiter: str,
    family: str,
    candidates: Sequence[str] | None,
    target: str,
    criterion: str,
    one_hot: Sequence[str],
    bins: int,
) -> None:
    """Forward stepwise selection; write trace.json.

    Candidates are tried in alphabetical order, which settles ties.
    """
    if candidates is None:
        candidates = default_candidates(target)
    _, cleaned, _ = load_clean(afinn, listings, occupancy, delimiter)
    matrix = design(cleaned, candidates, target, family, one_hot, bins)
    with mapper(obj.processes) as map_:
        trace = forward_stepwise(
            matrix,
            "multinomial" if family == "logistic" else "linear",
            sorted(matrix.columns),
            criterion=criterion,
            map_=map_,
        )
    write_json(obj.path("trace.json"), StepwiseTraceSchema().dump(trace))
    log.warning("selected: %s", ", ".join(trace.selected) or "(none)")


@occupancy_cli.command()
@input_options
@click.option(
    "--train-frac",
    type=TRAIN_FRACTION,
    default=DEFAULT_TRAIN_FRAC,
    show_default=True,
    help="Fraction of listings used for model selection.",
)
@criterion_option
@bins_option
@click.pass_obj
def evaluate(
    obj: ContextObj,
    afinn: BinaryIO,
    listings: str,
    occupancy: str,
    delimiter: str,
    train_frac: float,
    criterion: str,
    bins: int,
) -> None:
    """Select models on a training split and score them; write evaluation.json."""
    _, cleaned, _ = load_clean(afinn, listings, occupancy, delimiter)
    with mapper(obj.processes) as map_:
        evaluation = run_evaluation(
            cleaned,
            seed=obj.effective_seed,
            train_frac=train_frac,
            nbins=bins,
            criterion=criterion,
            map_=map_,
        )
    write_json(obj.path("evaluation.json"), EvalReportSchema().dump(evaluation.report))


@occupancy_cli.command()
@input_options
@click.option(
    "--by",
    type=click.Choice(["zip-tier", "reviews"]),
    default="zip-tier",
    show_default=True,
    help="Tier zip codes by price, or model a review-count range.",
)
@click.option("--lo", type=NON_NEGATIVE_INT, default=30, show_default=True)
@click.option("--hi", type=NON_NEGATIVE_INT, default=50, show_default=True)
@click.option("--zip", "zipcode", help="Model the listings of one zip code.")
@criterion_option
@click.pass_obj
def strata(
    obj: ContextObj,
    afinn: BinaryIO,
    listings: str,
    occupancy: str,
    delimiter: str,
    by: str,
    lo: int,
    hi: int,
    zipcode: str | None,
    criterion: str,
) -> None:
    """Stratify listings.

    By default, writes the zip-code price tier table to tiers.csv.  With
    --by reviews or --zip, runs stepwise selection of an occupancy model
    within the stratum and writes stratum-trace.json.
    """
    _, cleaned, _ = load_clean(afinn, listings, occupancy, delimiter)
    if zipcode is None and by == "zip-tier":
        rows = tier_rows(price_tiers(cleaned))
        frame = pd.DataFrame.from_records(rows, columns=TierRow._fields)
        write_frame(obj.path("tiers.csv"), frame)
        return

    if zipcode is not None:
        subset = filter_by_zip(cleaned, zipcode)
    else:
        subset = filter_by_reviews(cleaned, lo, hi)
    log.info("stratum holds %d listings", len(subset))
    candidates = default_candidates()
    with mapper(obj.processes) as map_:
        trace = forward_stepwise(
            build_matrix(subset, candidates),
            "linear",
            candidates,
            criterion=criterion,
            map_=map_,
        )
    write_json(obj.path("stratum-trace.json"), StepwiseTraceSchema().dump(trace))


@occupancy_cli.command()
@afinn_option
@click.option(
    "--n", "n_rows", type=POSITIVE_INT, help="Number of listings to generate."
)
@click.option(
    "--spec",
    "spec_file",
    type=click.File("r"),
    help="JSON synthetic-data specification.  Omitted keys take their defaults.",
)
@click.pass_obj
def synth(
    obj: ContextObj,
    afinn: BinaryIO,
    n_rows: int | None,
    spec_file: TextIO | None,
) -> None:
    """Generate a synthetic listings.csv and occupancy.csv.

    The global --seed, when given, overrides any seed in the specification.
    """
    lexicon = load_lexicon(afinn)
    data: dict[str, Any] = {}
    if spec_file is not None:
        try:
            data = json.load(spec_file)
        except json.JSONDecodeError as exc:
            raise SynthSpecError(f"{spec_file.name}: {exc}") from exc
        if not isinstance(data, dict):
            raise SynthSpecError(f"{spec_file.name}: expected a JSON object")
    if n_rows is not None:
        data["n"] = n_rows
    if obj.seed is not None:
        data["seed"] = obj.seed
    spec: SynthSpec = load_spec(data)
    write_dataset(obj.output, spec, lexicon)
    log.warning("wrote %d synthetic listings to %r", spec.n, obj.output)


def parse_range(
    ctx: click.Context, param: click.Parameter, value: Sequence[tuple[int, int]]
) -> Sequence[tuple[int, int]]:
    for lo, hi in value:
        if lo > hi:
            raise click.BadParameter(f"empty range {lo} {hi}", ctx, param)
    return value


@occupancy_cli.command()
@input_options
@click.option(
    "--train-frac",
    type=TRAIN_FRACTION,
    default=DEFAULT_TRAIN_FRAC,
    show_default=True,
    help="Fraction of listings used for model selection.",
)
@criterion_option
@bins_option
@click.option(
    "--plot-bins",
    type=POSITIVE_INT,
    default=DEFAULT_PLOT_BINS,
    show_default=True,
    help="Number of occupancy bins in the per-bin plot data.",
)
@click.option(
    "--ridge",
    "ridge_lambda",
    type=NON_NEGATIVE_FLOAT,
    default=DEFAULT_RIDGE_LAMBDA,
    show_default=True,
    help="Penalty of the ridge comparison fit.",
)
@click.option(
    "--zip",
    "zipcodes",
    multiple=True,
    help="""
    Zip code to model separately.  May be repeated.
    The default is the zip with the most listings in each price tier.
    """,
)
@click.option(
    "--reviews",
    "review_ranges",
    type=(NON_NEGATIVE_INT, NON_NEGATIVE_INT),
    multiple=True,
    default=[(30, 50)],
    show_default=True,
    callback=parse_range,
    metavar="LO HI",
    help="Review-count range to model separately.  May be repeated.",
)
@click.pass_obj
def report(
    obj: ContextObj,
    afinn: BinaryIO,
    listings: str,
    occupancy: str,
    delimiter: str,
    train_frac: float,
    criterion: str,
    bins: int,
    plot_bins: int,
    ridge_lambda: float,
    zipcodes: Sequence[str],
    review_ranges: Sequence[tuple[int, int]],
) -> None:
    """Run the whole analysis; write report.json, summary.txt and plot data."""
    _, cleaned, drops = load_clean(afinn, listings, occupancy, delimiter)
    settings = ReportSettings(
        seed=obj.effective_seed,
        train_frac=train_frac,
        nbins=bins,
        criterion=criterion,
        ridge_lambda=ridge_lambda,
        zipcodes=zipcodes,
        review_ranges=review_ranges,
    )
    with mapper(obj.processes) as map_:
        result = build_report(cleaned, settings, drops=drops, map_=map_)
    paths = write_report(obj.output, result, plot_frames(cleaned, plot_bins))
    log.warning("wrote %d files to %r", len(paths), obj.output)


def main(args: Sequence[str] | None = None, prog_name: str | None = None) -> NoReturn:
    occupancy_cli.main(args=args, prog_name=prog_name)
    sys.exit(0)  # pragma: NO COVER
