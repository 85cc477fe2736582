from __future__ import annotations

import io
import math
from pathlib import Path

import numpy as np
import pytest

from occupancy.evaluate import mse
from occupancy.evaluate import pearson
from occupancy.evaluate import split
from occupancy.features import build_matrix
from occupancy.features import DEFAULT_CANDIDATES
from occupancy.features import take_rows
from occupancy.ingest import clean
from occupancy.ingest import CleanListing
from occupancy.ingest import join_occupancy
from occupancy.ingest import parse_listings
from occupancy.ingest import parse_occupancy
from occupancy.lexicon import score_text
from occupancy.lexicon import SentimentLexicon
from occupancy.lexicon import tokenize
from occupancy.models import fit_ols
from occupancy.models import predict_linear
from occupancy.stepwise import forward_stepwise
from occupancy.synthgen import DEFAULT_TRUTH
from occupancy.synthgen import FIRST_HOST_ID
from occupancy.synthgen import generate
from occupancy.synthgen import generate_rows
from occupancy.synthgen import LISTINGS_FILENAME
from occupancy.synthgen import load_spec
from occupancy.synthgen import OCCUPANCY_FILENAME
from occupancy.synthgen import SynthSpec
from occupancy.synthgen import SynthSpecError
from occupancy.synthgen import WordPools
from occupancy.synthgen import write_dataset


def cleaned(spec: SynthSpec, lexicon: SentimentLexicon) -> list[CleanListing]:
    rows = generate_rows(spec, lexicon)
    return clean([(row.listing, row.occupancy_rate) for row in rows], lexicon).listings


class Test_load_spec:
    def test_defaults(self) -> None:
        spec = load_spec({})
        assert spec == SynthSpec()
        assert spec.true_coefficients == dict(DEFAULT_TRUTH)

    def test_overrides(self) -> None:
        spec = load_spec({"n": 20, "seed": 3, "true_coefficients": {"rating": 0.1}})
        assert spec.n == 20
        assert spec.seed == 3
        assert spec.true_coefficients == {"rating": 0.1}

    @pytest.mark.parametrize(
        ("data", "message"),
        [
            ({"colour": "red"}, "invalid spec"),
            ({"n": "many"}, "invalid spec"),
            ({"true_coefficients": {"occupancy_rate": 1.0}}, "unknown feature"),
            ({"n": 0}, "n must be"),
            ({"seed": -1}, "seed"),
            ({"noise_sd": -0.1}, "noise_sd"),
            ({"missing_fraction": 1.0}, "missing_fraction"),
            ({"amenities_max": 0}, "amenities_max"),
            ({"amenities_p": 1.5}, "amenities_p"),
            ({"price_sd": 0}, "price"),
            ({"reviews_mean": 0}, "reviews"),
            ({"zipcodes": {}}, "zipcodes"),
            ({"zipcodes": {"10001": 0.0}}, "zipcodes"),
        ],
    )
    def test_invalid(self, data: dict[str, object], message: str) -> None:
        with pytest.raises(SynthSpecError, match=message):
            load_spec(data)


class TestWordPools:
    def test_from_lexicon(self, lexicon: SentimentLexicon) -> None:
        pools = WordPools.from_lexicon(lexicon)
        for score, words in pools.by_score.items():
            assert words
            assert all(lexicon[word] == score for word in words)
        assert "can't stand" not in {w for ws in pools.by_score.values() for w in ws}
        assert not any(word in lexicon for word in pools.filler)

    def test_filler_avoids_lexicon(self) -> None:
        lexicon = SentimentLexicon({"good": 1, "bad": -1, "apartment": 2})
        pools = WordPools.from_lexicon(lexicon)
        assert "apartment" not in pools.filler
        assert pools.by_score == {1: ("good",), -1: ("bad",), 2: ("apartment",)}

    def test_needs_unit_words(self) -> None:
        with pytest.raises(SynthSpecError, match="scored"):
            WordPools.from_lexicon(SentimentLexicon({"great": 3, "bad": -1}))


class Test_generate_rows:
    def test_deterministic(self, lexicon: SentimentLexicon) -> None:
        spec = SynthSpec(n=50, seed=3)
        assert generate_rows(spec, lexicon) == generate_rows(spec, lexicon)
        assert generate(spec, lexicon) == generate(spec, lexicon)

    def test_seed_matters(self, lexicon: SentimentLexicon) -> None:
        first = generate(SynthSpec(n=50, seed=3), lexicon)
        second = generate(SynthSpec(n=50, seed=4), lexicon)
        assert first != second

    def test_rows(self, lexicon: SentimentLexicon) -> None:
        rows = generate_rows(SynthSpec(n=200, seed=8), lexicon)
        assert [row.listing.host_id for row in rows] == list(
            range(FIRST_HOST_ID, FIRST_HOST_ID + 200)
        )
        for row in rows:
            listing = row.listing
            assert 0 <= row.occupancy_rate <= 1
            assert listing.accommodates >= 1
            assert listing.price is not None
            assert listing.price >= 10
            assert listing.zipcode in SynthSpec().zipcodes

    def test_sentiment_by_construction(self, lexicon: SentimentLexicon) -> None:
        spec = SynthSpec(
            n=300,
            seed=2,
            intercept=0.3,
            true_coefficients={"sentiment_summary": 0.01, "summary_length": 0.001},
            noise_sd=0.0,
            missing_fraction=0.0,
        )
        for row in generate_rows(spec, lexicon):
            summary = row.listing.summary
            expected = 0.3 + 0.01 * score_text(lexicon, summary)
            expected += 0.001 * len(tokenize(summary))
            assert row.occupancy_rate == pytest.approx(expected, abs=1e-12)

    def test_noiseless_recovery(self, lexicon: SentimentLexicon) -> None:
        truth = {
            "sentiment_summary": 0.01,
            "num_amenities": 0.002,
            "summary_length": 0.001,
        }
        spec = SynthSpec(
            n=500,
            seed=11,
            intercept=0.3,
            true_coefficients=truth,
            noise_sd=0.0,
            missing_fraction=0.0,
        )
        listings = cleaned(spec, lexicon)
        model = fit_ols(build_matrix(listings, list(truth)))
        assert model.intercept == pytest.approx(0.3, abs=1e-9)
        assert model.coefficients == pytest.approx(list(truth.values()), abs=1e-9)
        assert model.r_squared == pytest.approx(1.0)

    def test_moments(self, synthetic_listings: list[CleanListing]) -> None:
        lengths = [listing.summary_length for listing in synthetic_listings]
        prices = [listing.price for listing in synthetic_listings]
        assert 35 < np.mean(lengths) < 50
        assert 90 < np.mean(prices) < 200

    def test_sentiment_unrelated(self, lexicon: SentimentLexicon) -> None:
        listings = cleaned(SynthSpec(n=10000, seed=5, missing_fraction=0.0), lexicon)
        r = pearson(
            [listing.sentiment_summary for listing in listings],
            [listing.occupancy_rate for listing in listings],
        )
        assert abs(r) < 0.05


class TestFiles:
    def test_round_trip(self, lexicon: SentimentLexicon) -> None:
        spec = SynthSpec(n=300, seed=21)
        listings_text, occupancy_text = generate(spec, lexicon)
        parsed = parse_listings(io.StringIO(listings_text))
        assert parsed.errors == []
        occupancy = parse_occupancy(io.StringIO(occupancy_text))
        joined = join_occupancy(parsed.listings, occupancy)
        assert joined.unmatched == 0
        result = clean(joined.rows, lexicon)
        assert result.listings == cleaned(spec, lexicon)

    def test_formats(self, lexicon: SentimentLexicon) -> None:
        listings_text, occupancy_text = generate(SynthSpec(n=5, seed=1), lexicon)
        header = listings_text.splitlines()[0].split(",")
        assert header[0] == "host_id"
        assert "amenities" in header
        assert "$" in listings_text
        assert occupancy_text.splitlines()[0] == "host_id,occupancy_rate"
        assert len(occupancy_text.splitlines()) == 6

    def test_write_dataset(self, tmp_path: Path, lexicon: SentimentLexicon) -> None:
        spec = SynthSpec(n=10, seed=1)
        listings, occupancy = write_dataset(tmp_path / "out", spec, lexicon)
        assert Path(listings) == tmp_path / "out" / LISTINGS_FILENAME
        assert Path(occupancy) == tmp_path / "out" / OCCUPANCY_FILENAME
        expected = generate(spec, lexicon)
        assert Path(listings).read_text(encoding="utf-8") == expected[0]
        assert Path(occupancy).read_text(encoding="utf-8") == expected[1]


@pytest.mark.slow
def test_recovers_true_features(lexicon: SentimentLexicon) -> None:
    exact = 0
    for seed in range(100):
        listings = cleaned(SynthSpec(n=20000, seed=seed), lexicon)
        matrix = build_matrix(listings, DEFAULT_CANDIDATES)
        indices = split(matrix.n, 0.8, seed)
        train = take_rows(matrix, indices.train)
        validation = take_rows(matrix, indices.validation)
        trace = forward_stepwise(train, "linear", DEFAULT_CANDIDATES, criterion="bic")
        if set(trace.selected) == set(DEFAULT_TRUTH):
            exact += 1
        assert trace.linear_model is not None
        error = mse(predict_linear(trace.linear_model, validation), validation.y)
        assert math.isclose(error, 0.05**2, rel_tol=0.10)
    assert exact >= 95


@pytest.mark.slow
def test_sentiment_rarely_selected(lexicon: SentimentLexicon) -> None:
    chosen = 0
    uncorrelated = 0
    for seed in range(100):
        spec = SynthSpec(n=5000, seed=seed, missing_fraction=0.0)
        listings = cleaned(spec, lexicon)
        matrix = build_matrix(listings, DEFAULT_CANDIDATES)
        sentiment = matrix.X[:, matrix.columns.index("sentiment_summary")]
        uncorrelated += abs(pearson(sentiment, matrix.y)) < 0.05
        trace = forward_stepwise(matrix, "linear", DEFAULT_CANDIDATES, criterion="bic")
        chosen += "sentiment_summary" in trace.selected
    assert chosen <= 10
    assert uncorrelated >= 95
