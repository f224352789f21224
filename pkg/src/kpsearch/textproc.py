"""Deterministic analysis chain shared by indexing, querying and extraction.

tokenize -> optional stopword removal -> Porter stem. Positions are assigned
on the post-tokenization stream and survive stopword removal, so gaps in the
position sequence mark removed stopwords.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

from .porter import stem

__all__ = ["Token", "STOPWORDS", "tokenize", "stem", "analyze", "stem_phrase"]

# Letters and digits, underscore excluded; hyphens and all other punctuation
# split tokens.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


@dataclass(frozen=True)
class Token:
    surface: str
    stem: str
    position: int


def _load_stopwords() -> frozenset[str]:
    text = resources.files(__package__).joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


STOPWORDS = _load_stopwords()


def tokenize(text: str) -> list[str]:
    """Lowercased surface tokens, split on whitespace and punctuation."""
    return _TOKEN_RE.findall(text.lower())


def analyze(text: str, drop_stopwords: bool = True) -> list[Token]:
    """Tokenize, optionally remove stopwords, and stem.

    Token positions index the full post-tokenization stream, so removal
    leaves gaps rather than renumbering.
    """
    tokens = []
    for position, surface in enumerate(tokenize(text)):
        if drop_stopwords and surface in STOPWORDS:
            continue
        tokens.append(Token(surface=surface, stem=stem(surface), position=position))
    return tokens


def stem_phrase(phrase: str) -> tuple[str, ...]:
    """Stemmed token sequence of a phrase, stopwords retained.

    The common normalization for phrase matching: casing and repeated
    whitespace do not matter, stems do.
    """
    return tuple(stem(tok) for tok in tokenize(phrase))
