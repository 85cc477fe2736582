# ruff: noqa: FA100 (missing __future__.annotations import)
"""Seeded synthetic listings with a known occupancy model.

Summaries and space descriptions are real word sequences: sentiment words
drawn from the loaded lexicon plus neutral filler, so their lexicon score
is known by construction and the scoring pipeline runs on them unchanged.
"""

import logging
import math
import os
from dataclasses import dataclass
from dataclasses import field
from typing import Any
from typing import Dict
from typing import List
from typing import Mapping
from typing import NamedTuple
from typing import Sequence
from typing import Tuple

import marshmallow
import numpy as np
import numpy.typing as npt
import pandas as pd
from marshmallow_dataclass import class_schema

from .artifacts import frame_to_csv
from .artifacts import write_text
from .errors import AnalysisError
from .features import NUMERIC_FEATURES
from .ingest import RawListing
from .lexicon import SentimentLexicon
from .lexicon import tokenize

log = logging.getLogger()

LISTINGS_FILENAME = "listings.csv"
OCCUPANCY_FILENAME = "occupancy.csv"
FIRST_HOST_ID = 100000

ACCOMMODATES = (1, 2, 3, 4, 5, 6, 7, 8)
ACCOMMODATES_WEIGHTS = (0.15, 0.35, 0.12, 0.18, 0.06, 0.08, 0.03, 0.03)
MEAN_ACCOMMODATES = sum(a * w for a, w in zip(ACCOMMODATES, ACCOMMODATES_WEIGHTS))
BATHROOMS = (1.0, 1.5, 2.0, 2.5)
BATHROOMS_WEIGHTS = (0.8, 0.08, 0.1, 0.02)
PROPERTY_TYPES = ("Apartment", "House", "Loft", "Condominium", "Townhouse")
PROPERTY_TYPE_WEIGHTS = (0.8, 0.08, 0.05, 0.04, 0.03)
BED_TYPES = ("Real Bed", "Futon", "Pull-out Sofa", "Airbed")
BED_TYPE_WEIGHTS = (0.95, 0.02, 0.02, 0.01)

# fmt: off
AMENITIES = (
    "TV", "Wireless Internet", "Kitchen", "Heating", "Air conditioning", "Washer",
    "Dryer", "Essentials", "Shampoo", "Hangers", "Hair dryer", "Iron",
    "Laptop friendly workspace", "Smoke detector", "Carbon monoxide detector",
    "First aid kit", "Fire extinguisher", "Elevator in building",
    "Buzzer/wireless intercom", "Family/kid friendly", "Free parking on premises",
    "Pets allowed", "Cable TV", "Internet", "Doorman", "Gym", "Pool", "Hot tub",
    "Breakfast", "Indoor fireplace", "Suitable for events", "Smoking allowed",
    "Wheelchair accessible", "Lock on bedroom door", "24-hour check-in",
    "Self Check-In", "Private entrance", "Safety card", "Dishwasher", "Microwave",
    "Coffee maker", "Refrigerator", "Oven", "Stove", "Bed linens",
    "Extra pillows and blankets", "Patio or balcony", "Garden or backyard",
    "Luggage dropoff allowed", "Long term stays allowed",
)

FILLER = (
    "apartment", "room", "bedroom", "kitchen", "bathroom", "street", "block",
    "subway", "train", "station", "minutes", "walk", "building", "floor", "window",
    "living", "space", "located", "neighborhood", "restaurants", "shops", "cafes",
    "studio", "queen", "bed", "sofa", "couch", "desk", "closet", "shower", "towels",
    "guests", "stay", "nights", "weekend", "morning", "evening", "city", "downtown",
    "midtown", "brooklyn", "manhattan", "queens", "harlem", "corner", "avenue",
    "square", "feet", "the", "a", "an", "and", "with", "in", "of", "to", "from",
    "near", "our", "your", "this", "is", "has", "two", "three", "four", "blocks",
    "away", "floors", "elevator", "laundry", "table", "chairs", "lamp", "rooftop",
    "terrace", "hallway", "entrance", "door", "keys", "bus", "line", "museum",
    "bridge", "river", "market", "deli", "bakery",
)
# fmt: on

DEFAULT_TRUTH: Mapping[str, float] = {
    "number_of_reviews": 0.004,
    "num_amenities": 0.005,
    "summary_length": 0.002,
}

DEFAULT_ZIPCODES: Mapping[str, float] = {
    "10003": 1.15,
    "10011": 1.6,
    "10014": 1.35,
    "10025": 0.95,
    "11101": 0.85,
    "11211": 1.0,
    "11225": 0.6,
    "11237": 0.5,
}


class SynthSpecError(AnalysisError):
    """Raised for an invalid synthetic-data specification."""


@dataclass
class SynthSpec:
    """What to generate. Every key is optional in the JSON form."""

    n: int = 1000
    seed: int = 1729
    intercept: float = 0.3
    true_coefficients: Dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_TRUTH)
    )
    noise_sd: float = 0.05
    missing_fraction: float = 0.05

    summary_length_mean: float = 44.4
    summary_length_sd: float = 15.0
    space_length_mean: float = 60.0
    space_length_sd: float = 30.0
    sentiment_mean: float = 5.0
    sentiment_sd: float = 6.0
    space_sentiment_mean: float = 4.0
    space_sentiment_sd: float = 5.0
    price_mean: float = 137.0
    price_sd: float = 104.0
    reviews_mean: float = 25.0
    reviews_dispersion: float = 4.0
    amenities_max: int = 40
    amenities_p: float = 0.4
    rating_sd: float = 0.4
    zipcodes: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_ZIPCODES))

    class Meta:
        unknown = marshmallow.RAISE

    def validate(self) -> None:
        unknown = sorted(set(self.true_coefficients) - set(NUMERIC_FEATURES))
        if unknown:
            raise SynthSpecError(f"coefficients for unknown feature(s): {unknown}")
        if self.n < 1:
            raise SynthSpecError(f"n must be at least 1, not {self.n}")
        if self.seed < 0:
            raise SynthSpecError(f"seed must be non-negative, not {self.seed}")
        if self.noise_sd < 0:
            raise SynthSpecError("noise_sd must be non-negative")
        if not 0 <= self.missing_fraction < 1:
            raise SynthSpecError("missing_fraction must lie in [0, 1)")
        if not 0 < self.amenities_max <= len(AMENITIES):
            raise SynthSpecError(f"amenities_max must lie in [1, {len(AMENITIES)}]")
        if not 0 <= self.amenities_p <= 1:
            raise SynthSpecError("amenities_p must lie in [0, 1]")
        if self.price_mean <= 0 or self.price_sd <= 0:
            raise SynthSpecError("price_mean and price_sd must be positive")
        if self.reviews_mean <= 0 or self.reviews_dispersion <= 0:
            raise SynthSpecError("reviews_mean and reviews_dispersion must be positive")
        if not self.zipcodes or min(self.zipcodes.values()) <= 0:
            raise SynthSpecError("zipcodes must map zips to positive multipliers")


SynthSpecSchema = class_schema(SynthSpec)


def load_spec(data: Mapping[str, Any]) -> SynthSpec:
    try:
        spec: SynthSpec = SynthSpecSchema().load(data)
    except marshmallow.ValidationError as exc:
        raise SynthSpecError(f"invalid spec: {exc.messages}") from exc
    spec.validate()
    return spec


class SynthRow(NamedTuple):
    listing: RawListing
    occupancy_rate: float


class WordPools(NamedTuple):
    by_score: Dict[int, Tuple[str, ...]]
    filler: Tuple[str, ...]

    @classmethod
    def from_lexicon(cls, lexicon: SentimentLexicon) -> "WordPools":
        def usable(word: str) -> bool:
            return tokenize(word.capitalize() + ".") == (word,)

        by_score = {
            score: tuple(word for word in lexicon.with_score(score) if usable(word))
            for score in (-3, -2, -1, 1, 2, 3)
        }
        if not by_score[1] or not by_score[-1]:
            raise SynthSpecError("lexicon lacks words scored +1 and -1")
        filler = tuple(word for word in FILLER if word not in lexicon and usable(word))
        if not filler:
            raise SynthSpecError("every filler word is in the lexicon")
        return cls({k: v for k, v in by_score.items() if v}, filler)


def _sentiment_words(
    rng: np.random.Generator, target: int, pools: WordPools
) -> List[str]:
    """Lexicon words whose scores add up to ``target``."""
    words = []
    remaining = target
    while remaining:
        sign = 1 if remaining > 0 else -1
        magnitude = max(
            m for m in (1, 2, 3) if m <= abs(remaining) and sign * m in pools.by_score
        )
        pool = pools.by_score[sign * magnitude]
        words.append(pool[int(rng.integers(len(pool)))])
        remaining -= sign * magnitude
    return words


def _text(
    rng: np.random.Generator, length: int, sentiment: int, pools: WordPools
) -> Tuple[str, int]:
    """A sentence scoring ``sentiment``; returns it with its word count."""
    words = _sentiment_words(rng, sentiment, pools)
    n_filler = max(length - len(words), 0)
    filler = rng.integers(len(pools.filler), size=n_filler)
    words.extend(pools.filler[i] for i in filler)
    words = [words[i] for i in rng.permutation(len(words))]
    if not words:
        return "", 0
    words[0] = words[0].capitalize()
    return " ".join(words) + ".", len(words)


def _amenities(rng: np.random.Generator, count: int) -> str:
    chosen = rng.choice(len(AMENITIES), size=count, replace=False)
    items = (AMENITIES[i] for i in sorted(chosen))
    quoted = (item if item.isalnum() else f'"{item}"' for item in items)
    return "{" + ",".join(quoted) + "}"


def _lognormal_params(mean: float, sd: float) -> Tuple[float, float]:
    sigma2 = math.log1p((sd / mean) ** 2)
    return math.log(mean) - sigma2 / 2, math.sqrt(sigma2)


def _rounded_normal(
    rng: np.random.Generator, mean: float, sd: float, size: int
) -> npt.NDArray[np.int64]:
    return np.rint(rng.normal(mean, sd, size)).astype(np.int64)


def generate_rows(spec: SynthSpec, lexicon: SentimentLexicon) -> List[SynthRow]:
    """Draw ``spec.n`` listings and their occupancy rates.

    Occupancy is ``intercept + Σ coef·feature + N(0, noise_sd²)`` clamped to
    [0, 1], evaluated on the values the cleaning step will derive. A listing
    with a missing rating contributes its drawn (unpublished) rating.
    """
    spec.validate()
    pools = WordPools.from_lexicon(lexicon)
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    n = spec.n

    accommodates = rng.choice(ACCOMMODATES, size=n, p=ACCOMMODATES_WEIGHTS)
    bathrooms = rng.choice(BATHROOMS, size=n, p=BATHROOMS_WEIGHTS)
    half = np.ceil(accommodates / 2).astype(np.int64)
    bedrooms = np.maximum(half - (rng.random(n) < 0.15), 0)
    beds = np.maximum(half + (rng.random(n) < 0.3), 1)
    property_types = rng.choice(len(PROPERTY_TYPES), size=n, p=PROPERTY_TYPE_WEIGHTS)
    bed_types = rng.choice(len(BED_TYPES), size=n, p=BED_TYPE_WEIGHTS)
    zips = sorted(spec.zipcodes)
    zip_index = rng.integers(len(zips), size=n)

    mu, sigma = _lognormal_params(spec.price_mean, spec.price_sd)
    size_factor = 1 + 0.25 * (accommodates - MEAN_ACCOMMODATES)
    multiplier = np.array([spec.zipcodes[zips[i]] for i in zip_index])
    prices = np.round(
        np.maximum(rng.lognormal(mu, sigma, n) * size_factor * multiplier, 10.0), 2
    )

    p_review = spec.reviews_dispersion / (spec.reviews_dispersion + spec.reviews_mean)
    reviews = rng.negative_binomial(spec.reviews_dispersion, p_review, n)
    n_amenities = rng.binomial(spec.amenities_max, spec.amenities_p, n)
    ratings = np.round(np.clip(5 - np.abs(rng.normal(0, spec.rating_sd, n)), 1, 5), 2)

    summary_lengths = np.maximum(
        _rounded_normal(rng, spec.summary_length_mean, spec.summary_length_sd, n), 1
    )
    space_lengths = np.maximum(
        _rounded_normal(rng, spec.space_length_mean, spec.space_length_sd, n), 1
    )
    summary_scores = _rounded_normal(rng, spec.sentiment_mean, spec.sentiment_sd, n)
    space_scores = _rounded_normal(
        rng, spec.space_sentiment_mean, spec.space_sentiment_sd, n
    )
    missing_summary = rng.random(n) < spec.missing_fraction
    missing_space = rng.random(n) < spec.missing_fraction
    missing_rating = rng.random(n) < spec.missing_fraction
    noise = rng.normal(0.0, spec.noise_sd, n)

    rows = []
    for i in range(n):
        summary, summary_length = (None, 0)
        if not missing_summary[i]:
            summary, summary_length = _text(
                rng, int(summary_lengths[i]), int(summary_scores[i]), pools
            )
        space, space_length = (None, 0)
        if not missing_space[i]:
            space, space_length = _text(
                rng, int(space_lengths[i]), int(space_scores[i]), pools
            )
        name, _ = _text(rng, 3, 0, pools)
        amenities = _amenities(rng, int(n_amenities[i]))

        listing = RawListing(
            host_id=FIRST_HOST_ID + i,
            name=name,
            summary=summary,
            space=space,
            property_type=PROPERTY_TYPES[property_types[i]],
            accommodates=int(accommodates[i]),
            bathrooms=float(bathrooms[i]),
            bedrooms=int(bedrooms[i]),
            beds=int(beds[i]),
            bed_type=BED_TYPES[bed_types[i]],
            price=float(prices[i]),
            number_of_reviews=int(reviews[i]),
            zipcode=zips[zip_index[i]],
            amenities_raw=amenities,
            rating=None if missing_rating[i] else float(ratings[i]),
        )
        features = {
            "accommodates": listing.accommodates,
            "bathrooms": listing.bathrooms,
            "bedrooms": listing.bedrooms,
            "beds": listing.beds,
            "num_amenities": int(n_amenities[i]),
            "number_of_reviews": listing.number_of_reviews,
            "price": listing.price,
            "price_per_occupant": float(prices[i]) / listing.accommodates,
            "rating": float(ratings[i]),
            "sentiment_space": int(space_scores[i]) if space else 0,
            "sentiment_summary": int(summary_scores[i]) if summary else 0,
            "space_length": space_length,
            "summary_length": summary_length,
        }
        rate = spec.intercept + noise[i]
        for name_, coef in spec.true_coefficients.items():
            rate += coef * features[name_]
        rows.append(SynthRow(listing, min(max(float(rate), 0.0), 1.0)))

    log.info("generated %d synthetic listings (seed %d)", n, spec.seed)
    return rows


def _cell(value: Any) -> str:
    if value is None:
        return "NA"
    return str(value)


def _listings_frame(rows: Sequence[SynthRow]) -> pd.DataFrame:
    records = []
    for row in rows:
        listing = row.listing
        record = {name: _cell(value) for name, value in listing._asdict().items()}
        record["price"] = f"${listing.price:,.2f}"
        records.append(record)
    frame = pd.DataFrame.from_records(records, columns=list(RawListing._fields))
    return frame.rename(columns={"amenities_raw": "amenities"})


def generate(spec: SynthSpec, lexicon: SentimentLexicon) -> Tuple[str, str]:
    """Listings and occupancy tables as CSV text, in the ingestion formats."""
    rows = generate_rows(spec, lexicon)
    occupancy = pd.DataFrame(
        {
            "host_id": [str(row.listing.host_id) for row in rows],
            "occupancy_rate": [repr(row.occupancy_rate) for row in rows],
        }
    )
    return frame_to_csv(_listings_frame(rows)), frame_to_csv(occupancy)


def write_dataset(
    directory: "os.PathLike[str] | str", spec: SynthSpec, lexicon: SentimentLexicon
) -> Tuple[str, str]:
    """Write ``listings.csv`` and ``occupancy.csv`` into ``directory``."""
    listings_text, occupancy_text = generate(spec, lexicon)
    listings_path = os.path.join(directory, LISTINGS_FILENAME)
    occupancy_path = os.path.join(directory, OCCUPANCY_FILENAME)
    write_text(listings_path, listings_text)
    write_text(occupancy_path, occupancy_text)
    return listings_path, occupancy_path
