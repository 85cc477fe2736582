# ruff: noqa: FA100 (missing __future__.annotations import)
"""Reading listing and occupancy tables, joining and cleaning them."""

import logging
import math
from collections import Counter
from dataclasses import dataclass
from dataclasses import field
from typing import Any
from typing import BinaryIO
from typing import Dict
from typing import Iterable
from typing import List
from typing import Mapping
from typing import NamedTuple
from typing import Optional
from typing import Sequence
from typing import TextIO
from typing import Tuple
from typing import Union

import marshmallow
import pandas as pd
from marshmallow_dataclass import class_schema

from .errors import AnalysisError
from .features import amenity_items
from .features import price_per_occupant
from .features import word_count
from .lexicon import score_text
from .lexicon import SentimentLexicon

log = logging.getLogger()

MISSING_SENTINELS = frozenset({"", "NA", "N/A"})
UNKNOWN_CATEGORY = "unknown"

COLUMN_ALIASES: Mapping[str, str] = {
    "price_in_dollars": "price",
    "amenities": "amenities_raw",
    "overall_rating": "rating",
}

Source = Union[str, BinaryIO, TextIO]


class SchemaError(AnalysisError):
    """Raised for a table that lacks a required column or can not be read."""


class RowError(AnalysisError):
    """A single row that could not be parsed."""

    def __init__(
        self,
        message: str,
        row: Optional[int] = None,
        column: Optional[str] = None,
    ):
        super().__init__(message)
        self.row = row
        self.column = column

    def __str__(self) -> str:
        where = []
        if self.row is not None:
            where.append(f"row {self.row}")
        if self.column is not None:
            where.append(f"column {self.column!r}")
        message = super().__str__()
        return f"{', '.join(where)}: {message}" if where else message


class DuplicateKeyError(AnalysisError):
    """Raised if the occupancy table lists a host id twice."""


class NoUsableRows(AnalysisError):
    """Raised if cleaning leaves nothing to analyse."""


class RawListing(NamedTuple):
    """A listing as read, before any feature derivation or imputation."""

    host_id: int
    name: Optional[str] = None
    summary: Optional[str] = None
    space: Optional[str] = None
    property_type: str = UNKNOWN_CATEGORY
    accommodates: int = 0
    bathrooms: Optional[float] = None
    bedrooms: Optional[int] = None
    beds: Optional[int] = None
    bed_type: str = UNKNOWN_CATEGORY
    price: Optional[float] = None
    number_of_reviews: int = 0
    zipcode: Optional[str] = None
    amenities_raw: Optional[str] = None
    rating: Optional[float] = None


class CleanListing(NamedTuple):
    """A joined, cleaned listing with all derived features filled in.

    Only the free-text fields (``name``, ``summary``, ``space``,
    ``amenities_raw``) may be ``None``; ``zipcode`` is ``""`` when unknown.
    """

    host_id: int
    name: Optional[str]
    summary: Optional[str]
    space: Optional[str]
    property_type: str
    accommodates: int
    bathrooms: float
    bedrooms: int
    beds: int
    bed_type: str
    price: float
    number_of_reviews: int
    zipcode: str
    amenities_raw: Optional[str]
    rating: float
    summary_length: int
    space_length: int
    num_amenities: int
    price_per_occupant: float
    sentiment_summary: int
    sentiment_space: int
    occupancy_rate: float

    def as_raw(self) -> Tuple[RawListing, float]:
        """The joined row this listing would be read back as from a cleaned table."""
        raw = RawListing(
            host_id=self.host_id,
            name=self.name,
            summary=self.summary,
            space=self.space,
            property_type=self.property_type,
            accommodates=self.accommodates,
            bathrooms=self.bathrooms,
            bedrooms=self.bedrooms,
            beds=self.beds,
            bed_type=self.bed_type,
            price=self.price,
            number_of_reviews=self.number_of_reviews,
            zipcode=self.zipcode or None,
            amenities_raw=self.amenities_raw,
            rating=self.rating,
        )
        return raw, self.occupancy_rate


class ParsedListings(NamedTuple):
    listings: List[RawListing]
    errors: List[RowError]

    @property
    def skipped(self) -> int:
        return len(self.errors)


class JoinResult(NamedTuple):
    rows: List[Tuple[RawListing, float]]
    unmatched: int


class CleanResult(NamedTuple):
    listings: List[CleanListing]
    dropped: List[Tuple[int, str]]
    """(host id, reason) for every row removed by cleaning."""
    imputed_rating: float
    n_imputed: int
    unparseable_amenities: int

    def drop_counts(self) -> Dict[str, int]:
        return dict(sorted(Counter(reason for _, reason in self.dropped).items()))


@dataclass
class DropReport:
    """What happened to the input rows between reading and modelling."""

    parsed_rows: int
    skipped_rows: int
    unmatched: int
    kept: int
    dropped: Dict[str, int] = field(default_factory=dict)
    imputed_rating: Optional[float] = None
    imputed_rows: int = 0
    unparseable_amenities: int = 0
    errors: List[str] = field(default_factory=list)

    class Meta:
        unknown = marshmallow.EXCLUDE


DropReportSchema = class_schema(DropReport)


################################################################
#
# Cell conversion
#
def _is_missing(cell: str) -> bool:
    return cell.strip() in MISSING_SENTINELS


def _text(cell: str) -> Optional[str]:
    return None if _is_missing(cell) else cell


def _category(cell: str) -> str:
    return UNKNOWN_CATEGORY if _is_missing(cell) else cell.strip()


def _number(cell: str, column: str, *, money: bool = False) -> Optional[float]:
    if _is_missing(cell):
        return None
    text = cell.strip()
    if money:
        text = text.replace("$", "").replace(",", "")
    try:
        value = float(text)
    except ValueError:
        raise RowError(f"can not parse {cell!r} as a number", column=column) from None
    if not math.isfinite(value) or value < 0:
        raise RowError(f"{cell!r} is not a finite non-negative number", column=column)
    return value


def _integer(cell: str, column: str) -> Optional[int]:
    value = _number(cell, column)
    if value is None:
        return None
    if not value.is_integer():
        raise RowError(f"{cell!r} is not an integer", column=column)
    return int(value)


def _required_integer(cell: str, column: str) -> int:
    value = _integer(cell, column)
    if value is None:
        raise RowError("missing value", column=column)
    return value


def _listing_from_record(record: Mapping[str, str]) -> RawListing:
    def cell(column: str) -> str:
        return record.get(column, "")

    rating = _number(cell("rating"), "rating")
    if rating is not None and rating > 5:
        raise RowError(f"rating {rating} outside [0, 5]", column="rating")
    return RawListing(
        host_id=_required_integer(cell("host_id"), "host_id"),
        name=_text(cell("name")),
        summary=_text(cell("summary")),
        space=_text(cell("space")),
        property_type=_category(cell("property_type")),
        accommodates=_integer(cell("accommodates"), "accommodates") or 0,
        bathrooms=_number(cell("bathrooms"), "bathrooms"),
        bedrooms=_integer(cell("bedrooms"), "bedrooms"),
        beds=_integer(cell("beds"), "beds"),
        bed_type=_category(cell("bed_type")),
        price=_number(cell("price"), "price", money=True),
        number_of_reviews=_integer(cell("number_of_reviews"), "number_of_reviews") or 0,
        zipcode=_text(cell("zipcode").strip()),
        amenities_raw=_text(cell("amenities_raw")),
        rating=rating,
    )


################################################################
#
# Tables
#
def _read_table(source: Source, delimiter: str) -> pd.DataFrame:
    try:
        frame = pd.read_csv(
            source,
            sep=delimiter,
            dtype=str,
            keep_default_na=False,
            na_filter=False,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError:
        raise SchemaError("table is empty") from None
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise SchemaError(f"can not read table: {exc}") from exc
    columns = [str(name).strip() for name in frame.columns]
    frame.columns = [COLUMN_ALIASES.get(name, name) for name in columns]
    if frame.columns.duplicated().any():
        raise SchemaError(f"duplicate columns in header {list(frame.columns)!r}")
    return frame


def _require_columns(frame: pd.DataFrame, required: Iterable[str]) -> None:
    missing = [name for name in required if name not in frame.columns]
    if missing:
        raise SchemaError(f"missing required column(s): {', '.join(missing)}")


def parse_listings(source: Source, *, delimiter: str = ",") -> ParsedListings:
    """Read a listing table with a header row.

    Only ``host_id`` is required; unknown columns are ignored and absent
    optional columns read as missing. Rows whose cells can not be parsed
    are skipped and returned as errors carrying their row index.
    """
    frame = _read_table(source, delimiter)
    _require_columns(frame, ["host_id"])
    listings = []
    errors = []
    for index, record in enumerate(frame.to_dict("records")):
        try:
            listings.append(_listing_from_record(record))
        except RowError as exc:
            exc.row = index
            log.info("skipping %s", exc)
            errors.append(exc)
    if errors:
        log.warning("skipped %d unparseable listing rows", len(errors))
    return ParsedListings(listings, errors)


def parse_occupancy(source: Source, *, delimiter: str = ",") -> Dict[int, float]:
    """Read a ``host_id, occupancy_rate`` table into a map.

    Unlike listing rows, a bad occupancy row is fatal.
    """
    frame = _read_table(source, delimiter)
    _require_columns(frame, ["host_id", "occupancy_rate"])
    occupancy: Dict[int, float] = {}
    for index, (host_cell, rate_cell) in enumerate(
        zip(frame["host_id"], frame["occupancy_rate"])
    ):
        try:
            host_id = _required_integer(host_cell, "host_id")
            rate = _number(rate_cell, "occupancy_rate")
            if rate is None:
                raise RowError("missing value", column="occupancy_rate")
            if rate > 1:
                raise RowError(f"rate {rate} outside [0, 1]", column="occupancy_rate")
        except RowError as exc:
            exc.row = index
            raise
        if host_id in occupancy:
            raise DuplicateKeyError(f"host id {host_id} listed twice (row {index})")
        occupancy[host_id] = rate
    return occupancy


def join_occupancy(
    listings: Iterable[RawListing], occupancy: Mapping[int, float]
) -> JoinResult:
    """Inner join on host id, in listing order."""
    rows = []
    unmatched = 0
    for listing in listings:
        rate = occupancy.get(listing.host_id)
        if rate is None:
            unmatched += 1
        else:
            rows.append((listing, rate))
    if unmatched:
        log.info("%d listings have no occupancy rate", unmatched)
    return JoinResult(rows, unmatched)


################################################################
#
# Cleaning
#
def _drop_reason(listing: RawListing) -> Optional[str]:
    if listing.bathrooms is None:
        return "missing bathrooms"
    if listing.bedrooms is None:
        return "missing bedrooms"
    if listing.beds is None:
        return "missing beds"
    if listing.price is None:
        return "missing price"
    if listing.accommodates < 1:
        return "accommodates is zero"
    return None


def clean(
    rows: Sequence[Tuple[RawListing, float]], lexicon: SentimentLexicon
) -> CleanResult:
    """Drop unusable rows, impute ratings and derive every feature.

    Rows missing a core field are dropped with a reason. Missing ratings
    are replaced by the mean of the observed ratings of the kept rows.
    Missing text counts as zero words with zero sentiment.
    """
    kept: List[Tuple[RawListing, float]] = []
    dropped: List[Tuple[int, str]] = []
    for listing, rate in rows:
        reason = _drop_reason(listing)
        if reason is None:
            kept.append((listing, rate))
        else:
            dropped.append((listing.host_id, reason))
    if not kept:
        raise NoUsableRows(f"no usable rows ({len(dropped)} dropped)")

    observed = [listing.rating for listing, _ in kept if listing.rating is not None]
    if observed:
        imputed_rating = math.fsum(observed) / len(observed)
    else:
        log.warning("no observed ratings; imputing 0")
        imputed_rating = 0.0
    n_imputed = len(kept) - len(observed)

    unparseable = 0
    listings = []
    for listing, rate in kept:
        items = amenity_items(listing.amenities_raw)
        if items is None:
            unparseable += 1
            log.debug("unparseable amenities for host %d", listing.host_id)
        assert listing.price is not None
        listings.append(
            CleanListing(
                host_id=listing.host_id,
                name=listing.name,
                summary=listing.summary,
                space=listing.space,
                property_type=listing.property_type,
                accommodates=listing.accommodates,
                bathrooms=float(listing.bathrooms),  # type: ignore[arg-type]
                bedrooms=int(listing.bedrooms),  # type: ignore[arg-type]
                beds=int(listing.beds),  # type: ignore[arg-type]
                bed_type=listing.bed_type,
                price=listing.price,
                number_of_reviews=listing.number_of_reviews,
                zipcode=listing.zipcode or "",
                amenities_raw=listing.amenities_raw,
                rating=imputed_rating if listing.rating is None else listing.rating,
                summary_length=word_count(listing.summary),
                space_length=word_count(listing.space),
                num_amenities=len(items or ()),
                price_per_occupant=price_per_occupant(
                    listing.price, listing.accommodates
                ),
                sentiment_summary=score_text(lexicon, listing.summary),
                sentiment_space=score_text(lexicon, listing.space),
                occupancy_rate=rate,
            )
        )
    if dropped:
        log.info("dropped %d rows while cleaning", len(dropped))
    if unparseable:
        log.warning("%d amenities fields could not be parsed", unparseable)
    return CleanResult(listings, dropped, imputed_rating, n_imputed, unparseable)


def drop_report(
    parsed: ParsedListings, joined: JoinResult, cleaned: CleanResult
) -> DropReport:
    return DropReport(
        parsed_rows=len(parsed.listings) + parsed.skipped,
        skipped_rows=parsed.skipped,
        unmatched=joined.unmatched,
        kept=len(cleaned.listings),
        dropped=cleaned.drop_counts(),
        imputed_rating=cleaned.imputed_rating if cleaned.n_imputed else None,
        imputed_rows=cleaned.n_imputed,
        unparseable_amenities=cleaned.unparseable_amenities,
        errors=[str(error) for error in parsed.errors],
    )


CLEAN_COLUMNS = (*RawListing._fields, "occupancy_rate")


def clean_frame(listings: Sequence[CleanListing]) -> pd.DataFrame:
    """The cleaned table in the shape :func:`parse_listings` reads back.

    Derived features are appended after the raw columns.
    """
    derived = [name for name in CleanListing._fields if name not in CLEAN_COLUMNS]
    records: List[Dict[str, Any]] = [listing._asdict() for listing in listings]
    return pd.DataFrame.from_records(records, columns=[*CLEAN_COLUMNS, *derived])
