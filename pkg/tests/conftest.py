import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # makes oracles importable

from kpsearch.corpus import (
    Document,
    load_corpus,
    load_predictions,
    load_qrels,
    load_topics,
)

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture(scope="session")
def small_corpus():
    return load_corpus(FIXTURES / "corpus_small.jsonl")


@pytest.fixture(scope="session")
def small_topics():
    return load_topics(FIXTURES / "topics.jsonl")


@pytest.fixture(scope="session")
def small_qrels():
    return load_qrels(FIXTURES / "qrels.txt")


@pytest.fixture(scope="session")
def small_predictions():
    return load_predictions(FIXTURES / "predictions_small.jsonl")


@pytest.fixture(scope="session")
def keyword_predictions():
    return load_predictions(FIXTURES / "predictions_keywords.jsonl")


@pytest.fixture(scope="session")
def grammar_corpus():
    return load_corpus(FIXTURES / "corpus_grammar.jsonl")


@pytest.fixture(scope="session")
def grammar_doc(grammar_corpus) -> Document:
    return grammar_corpus[0]


@pytest.fixture(scope="session")
def s2s_copy_predictions():
    return load_predictions(FIXTURES / "predictions_s2s_copy.jsonl")


def oracle_tokens(doc: Document, fields: str = "ta", expansion=()) -> list[str]:
    """Token stream of a letter-token fixture document, bypassing the
    analyzer (fixture tokens are whitespace-separated analyzer fixpoints)."""
    tokens = doc.title.split() + doc.abstract.split()
    if fields == "tak":
        for phrase in doc.author_keywords:
            tokens += phrase.split()
    for phrase in expansion:
        tokens += phrase.split()
    return tokens


def oracle_corpus_tokens(corpus, fields: str = "ta", predictions=None, n: int = 0):
    docs = {}
    for doc in corpus:
        expansion = predictions.phrases(doc.id, n) if predictions and n else ()
        docs[doc.id] = oracle_tokens(doc, fields, expansion)
    return docs
