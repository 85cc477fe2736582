"""Zip-code price tiers and review-count strata."""

from __future__ import annotations

import enum
import logging
import math
from typing import Iterable
from typing import NamedTuple
from typing import Sequence

from .errors import AnalysisError
from .evaluate import mean_sd
from .ingest import CleanListing

log = logging.getLogger()

TIER_BAND = 0.5
"""Half-width of the average band, in global price standard deviations."""


class StrataError(AnalysisError):
    """Raised for a stratification request that can not be satisfied."""


class Tier(enum.Enum):
    EXPENSIVE = "expensive"
    AVERAGE = "average"
    AFFORDABLE = "affordable"

    def __str__(self) -> str:
        return self.value


class ZipTierTable(NamedTuple):
    global_mean_price: float
    global_sd_price: float
    tiers: dict[str, Tier]
    per_zip_mean_price: dict[str, float]
    per_zip_count: dict[str, int]


class TierRow(NamedTuple):
    zipcode: str
    mean_price: float
    tier: str
    n_listings: int


def classify_tier(zip_mean: float, global_mean: float, global_sd: float) -> Tier:
    """Expensive or affordable only when strictly outside mean ± σ/2."""
    if zip_mean > global_mean + TIER_BAND * global_sd:
        return Tier.EXPENSIVE
    if zip_mean < global_mean - TIER_BAND * global_sd:
        return Tier.AFFORDABLE
    return Tier.AVERAGE


def price_tiers(listings: Sequence[CleanListing]) -> ZipTierTable:
    """Tier every zip code by its mean listing price.

    The global mean and standard deviation are taken over all listing
    prices, including those without a zip code.
    """
    prices: dict[str, list[float]] = {}
    for listing in listings:
        if listing.zipcode:
            prices.setdefault(listing.zipcode, []).append(listing.price)
    if not prices:
        raise StrataError("no listing has a zip code")

    global_mean, global_sd = mean_sd([listing.price for listing in listings])
    zip_means = {
        zipcode: math.fsum(values) / len(values)
        for zipcode, values in sorted(prices.items())
    }
    tiers = {
        zipcode: classify_tier(mean, global_mean, global_sd)
        for zipcode, mean in zip_means.items()
    }
    log.info(
        "price mean %.2f, sd %.2f over %d listings in %d zip codes",
        global_mean,
        global_sd,
        len(listings),
        len(zip_means),
    )
    return ZipTierTable(
        global_mean,
        global_sd,
        tiers,
        zip_means,
        {zipcode: len(values) for zipcode, values in sorted(prices.items())},
    )


def tier_rows(table: ZipTierTable) -> list[TierRow]:
    return [
        TierRow(
            zipcode,
            table.per_zip_mean_price[zipcode],
            str(tier),
            table.per_zip_count[zipcode],
        )
        for zipcode, tier in sorted(table.tiers.items())
    ]


def representatives(table: ZipTierTable) -> dict[Tier, str]:
    """Per tier, the zip code with the most listings (ties → smaller zip)."""
    chosen: dict[Tier, str] = {}
    for zipcode, tier in sorted(table.tiers.items()):
        best = chosen.get(tier)
        if best is None or table.per_zip_count[zipcode] > table.per_zip_count[best]:
            chosen[tier] = zipcode
    return {tier: chosen[tier] for tier in Tier if tier in chosen}


def filter_by_reviews(
    listings: Iterable[CleanListing], lo: int, hi: int
) -> list[CleanListing]:
    """Listings with between ``lo`` and ``hi`` reviews, inclusive."""
    if lo < 0:
        raise StrataError(f"lower review bound must be non-negative, not {lo}")
    if lo > hi:
        raise StrataError(f"empty review range [{lo}, {hi}]")
    return [listing for listing in listings if lo <= listing.number_of_reviews <= hi]


def filter_by_zip(listings: Iterable[CleanListing], zipcode: str) -> list[CleanListing]:
    return [listing for listing in listings if listing.zipcode == zipcode]
