"""AFINN-style sentiment lexicon and count-times-score text scoring."""

from __future__ import annotations

import logging
import re
from types import MappingProxyType
from typing import BinaryIO
from typing import Iterable
from typing import Iterator
from typing import Mapping
from typing import Sequence
from typing import Tuple

import numpy as np
import numpy.typing as npt
from scipy import sparse

from .errors import AnalysisError

log = logging.getLogger()

MIN_SCORE = -5
MAX_SCORE = 5

TokenSequence = Tuple[str, ...]

# Anything that is not a letter, digit or apostrophe, anchored at either end.
_EDGE_RE = re.compile(r"^(?:[^\w']|_)+|(?:[^\w']|_)+$")
_WHITESPACE_RE = re.compile(r"\s")


class LexiconError(AnalysisError):
    """Raised if a lexicon file can not be parsed."""

    def __init__(self, message: str, lineno: int | None = None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno


class SentimentLexicon(Mapping[str, int]):
    """An immutable token → integer sentiment score map.

    Entries keep the order in which they were read; that order fixes the
    columns of :func:`count_matrix`.
    """

    def __init__(
        self,
        entries: Mapping[str, int] | Iterable[tuple[str, int]],
        dropped_multiword: int = 0,
    ):
        items = entries.items() if isinstance(entries, Mapping) else entries
        table: dict[str, int] = {}
        for token, score in items:
            if not token or token != token.lower() or _WHITESPACE_RE.search(token):
                raise LexiconError(f"invalid token {token!r}")
            if not MIN_SCORE <= score <= MAX_SCORE:
                raise LexiconError(f"score {score} for {token!r} outside [-5, 5]")
            if token in table:
                raise LexiconError(f"duplicate token {token!r}")
            table[token] = int(score)
        self._entries = table
        self._index = {token: i for i, token in enumerate(table)}
        self.dropped_multiword = dropped_multiword
        self.score_vector: npt.NDArray[np.int64] = np.fromiter(
            table.values(), dtype=np.int64, count=len(table)
        )
        self.score_vector.setflags(write=False)

    def __getitem__(self, token: str) -> int:
        return self._entries[token]

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __repr__(self) -> str:
        return (
            f"<{self.__class__.__name__} {len(self)} entries, "
            f"{self.dropped_multiword} multi-word skipped>"
        )

    def words(self) -> tuple[str, ...]:
        return tuple(self._entries)

    @property
    def entries(self) -> Mapping[str, int]:
        return MappingProxyType(self._entries)

    def index_of(self, token: str) -> int | None:
        """Column of ``token`` in the count matrix, or ``None`` if unknown."""
        return self._index.get(token)

    def with_score(self, score: int) -> tuple[str, ...]:
        """All tokens rated exactly ``score``, in lexicon order."""
        return tuple(token for token, s in self._entries.items() if s == score)


def load_lexicon(source: BinaryIO | bytes) -> SentimentLexicon:
    """Parse an AFINN file: UTF-8, one ``token<TAB>score`` entry per line.

    Entries whose token contains internal whitespace (e.g. ``can't stand``)
    can never match a single token, so they are skipped and counted.
    """
    data = source if isinstance(source, bytes) else source.read()
    try:
        text = data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise LexiconError(f"lexicon is not valid UTF-8: {exc}") from exc
    if not text.strip():
        raise LexiconError("empty lexicon")

    entries: dict[str, int] = {}
    dropped = 0
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise LexiconError("expected 'token<TAB>score'", lineno)
        token, score_field = fields[0].strip().lower(), fields[1].strip()
        try:
            score = int(score_field)
        except ValueError:
            raise LexiconError(f"non-integer score {score_field!r}", lineno) from None
        if not MIN_SCORE <= score <= MAX_SCORE:
            raise LexiconError(f"score {score} outside [-5, 5]", lineno)
        if not token:
            raise LexiconError("empty token", lineno)
        if _WHITESPACE_RE.search(token):
            dropped += 1
            continue
        if token in entries:
            raise LexiconError(f"duplicate token {token!r}", lineno)
        entries[token] = score

    if not entries:
        raise LexiconError("empty lexicon")
    if dropped:
        log.info("skipped %d multi-word lexicon entries", dropped)
    return SentimentLexicon(entries, dropped_multiword=dropped)


def tokenize(text: str | None) -> TokenSequence:
    """Lower-case ``text``, split on whitespace runs, and trim each token.

    Characters other than letters, digits and apostrophes are stripped from
    both ends of a token; internal punctuation (``it's``, ``self-check``)
    survives. Tokens left empty are dropped.
    """
    if not text:
        return ()
    trimmed = (_EDGE_RE.sub("", word) for word in text.lower().split())
    return tuple(token for token in trimmed if token)


def score_text(lexicon: SentimentLexicon, text: str | None) -> int:
    """Sum of the lexicon scores of the tokens of ``text``."""
    get = lexicon.get
    return sum(get(token, 0) for token in tokenize(text))


def count_matrix(
    lexicon: SentimentLexicon, texts: Sequence[str | None]
) -> sparse.csr_matrix:
    """Documents × lexicon-entries occurrence counts."""
    rows: list[int] = []
    cols: list[int] = []
    for row, text in enumerate(texts):
        for token in tokenize(text):
            col = lexicon.index_of(token)
            if col is not None:
                rows.append(row)
                cols.append(col)
    counts = np.ones(len(rows), dtype=np.int64)
    # Duplicate (row, col) pairs are summed on conversion to CSR.
    return sparse.coo_matrix(
        (counts, (rows, cols)), shape=(len(texts), len(lexicon)), dtype=np.int64
    ).tocsr()


def score_documents(
    lexicon: SentimentLexicon, texts: Sequence[str | None]
) -> npt.NDArray[np.int64]:
    """Score many documents at once as count matrix · score vector."""
    scores: npt.NDArray[np.int64] = count_matrix(lexicon, texts) @ lexicon.score_vector
    return scores
