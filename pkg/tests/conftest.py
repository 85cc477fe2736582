from __future__ import annotations

from pathlib import Path

import pytest

from occupancy.ingest import clean
from occupancy.ingest import CleanListing
from occupancy.lexicon import load_lexicon
from occupancy.lexicon import SentimentLexicon
from occupancy.synthgen import generate_rows
from occupancy.synthgen import SynthSpec
from occupancy.synthgen import write_dataset

TESTS_DIR = Path(__file__).parent


@pytest.fixture
def tests_dir() -> Path:
    return TESTS_DIR


@pytest.fixture(scope="session")
def lexicon_sample_txt() -> Path:
    return TESTS_DIR / "lexicon-sample.txt"


@pytest.fixture(scope="session")
def lexicon(lexicon_sample_txt: Path) -> SentimentLexicon:
    """A small AFINN-format lexicon (39 words plus one multi-word entry)."""
    return load_lexicon(lexicon_sample_txt.read_bytes())


@pytest.fixture
def afinn_111(tests_dir: Path) -> Path:
    """Path to the published AFINN-111 file."""
    path = tests_dir / "AFINN-111.txt"
    if not path.exists():
        pytest.skip("test requires tests/AFINN-111.txt")
    return path


@pytest.fixture(scope="session")
def synthetic_listings(lexicon: SentimentLexicon) -> list[CleanListing]:
    """Cleaned listings from the default synthetic model, n=2000."""
    rows = generate_rows(SynthSpec(n=2000, seed=42), lexicon)
    return clean([(row.listing, row.occupancy_rate) for row in rows], lexicon).listings


@pytest.fixture
def synthetic_dataset(
    tmp_path: Path, lexicon_sample_txt: Path, lexicon: SentimentLexicon
) -> dict[str, Path]:
    """Synthetic listings.csv and occupancy.csv on disk, with the lexicon file."""
    directory = tmp_path / "data"
    listings, occupancy = write_dataset(directory, SynthSpec(n=600, seed=7), lexicon)
    return {
        "afinn": lexicon_sample_txt,
        "listings": Path(listings),
        "occupancy": Path(occupancy),
    }
