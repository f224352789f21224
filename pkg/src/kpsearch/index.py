"""Immutable inverted index over a corpus under a field configuration.

Postings are stored CSR-style (flat arrays plus offsets) keyed by integer
term ids, with a forward index (document vectors) kept for relevance
feedback. Arrays are frozen read-only; a built index is safe for unlimited
concurrent searches.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .corpus import Document, FieldConfig, KeyphrasePredictions
from .errors import DataFormatError
from .textproc import analyze, tokenize
from .porter import stem as porter_stem

_MAGIC = b"KPSEARCH"
_VERSION = 1


@dataclass(frozen=True)
class InvertedIndex:
    doc_ids: tuple[str, ...]
    terms: tuple[str, ...]
    vocab: dict[str, int]
    # postings, CSR over term ids
    term_indptr: np.ndarray  # int64, len n_terms + 1
    term_ords: np.ndarray    # int32 document ordinals, ascending per term
    term_tfs: np.ndarray     # float64 term frequencies (integral values)
    # forward index, CSR over doc ordinals
    doc_indptr: np.ndarray   # int64, len n_docs + 1
    doc_term_ids: np.ndarray  # int32
    doc_term_tfs: np.ndarray  # float64
    doc_lengths: np.ndarray  # float64 post-analysis token counts
    cf: np.ndarray           # float64 collection frequency per term id
    _doc_id_array: np.ndarray = field(repr=False, default=None)
    _ordinals: dict = field(repr=False, default=None)

    @property
    def n_docs(self) -> int:
        return len(self.doc_ids)

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    @property
    def collection_len(self) -> float:
        return float(self.doc_lengths.sum())

    @property
    def avg_doc_len(self) -> float:
        return self.collection_len / self.n_docs

    def postings(self, term_stem: str) -> tuple[np.ndarray, np.ndarray]:
        """(ordinals, tfs) for a stem; empty arrays when unseen."""
        tid = self.vocab.get(term_stem)
        if tid is None:
            return (np.empty(0, np.int32), np.empty(0, np.float64))
        lo, hi = self.term_indptr[tid], self.term_indptr[tid + 1]
        return self.term_ords[lo:hi], self.term_tfs[lo:hi]

    def doc_vector(self, ordinal: int) -> tuple[np.ndarray, np.ndarray]:
        """(term ids, tfs) of one document."""
        lo, hi = self.doc_indptr[ordinal], self.doc_indptr[ordinal + 1]
        return self.doc_term_ids[lo:hi], self.doc_term_tfs[lo:hi]

    def df(self, term_stem: str) -> int:
        tid = self.vocab.get(term_stem)
        if tid is None:
            return 0
        return int(self.term_indptr[tid + 1] - self.term_indptr[tid])

    def collection_freq(self, term_stem: str) -> int:
        tid = self.vocab.get(term_stem)
        return 0 if tid is None else int(self.cf[tid])

    def term_stats(self, word: str) -> tuple[int, int]:
        """(df, cf) for a raw word, after analysis; (0, 0) when unseen."""
        tokens = tokenize(word)
        if not tokens:
            return (0, 0)
        term_stem = porter_stem(tokens[0])
        return (self.df(term_stem), self.collection_freq(term_stem))

    def ordinal(self, doc_id: str) -> int:
        return self._ordinals[doc_id]

    def audit(self) -> None:
        """Check the accounting invariants; raises AssertionError on breakage."""
        df = np.diff(self.term_indptr)
        assert np.all(df >= 1) and np.all(df <= self.n_docs)
        assert self.term_tfs.min(initial=1.0) >= 1.0
        per_term_cf = np.add.reduceat(
            self.term_tfs, self.term_indptr[:-1]
        ) if len(self.term_tfs) else np.zeros(0)
        assert np.array_equal(per_term_cf, self.cf)
        assert self.doc_lengths.sum() == self.cf.sum()
        for tid in range(self.n_terms):
            lo, hi = self.term_indptr[tid], self.term_indptr[tid + 1]
            ords = self.term_ords[lo:hi]
            assert np.all(np.diff(ords) > 0), "postings must be sorted by ordinal"

    def save(self, path) -> None:
        """Flat binary snapshot (versioned; stability across versions not
        guaranteed)."""
        header = json.dumps(
            {"doc_ids": list(self.doc_ids), "terms": list(self.terms)},
            ensure_ascii=False,
            sort_keys=True,
        ).encode("utf-8")
        arrays = [
            self.term_indptr.astype("<i8"),
            self.term_ords.astype("<i4"),
            self.term_tfs.astype("<f8"),
            self.doc_indptr.astype("<i8"),
            self.doc_term_ids.astype("<i4"),
            self.doc_term_tfs.astype("<f8"),
            self.doc_lengths.astype("<f8"),
            self.cf.astype("<f8"),
        ]
        with open(path, "wb") as handle:
            handle.write(_MAGIC)
            handle.write(struct.pack("<I", _VERSION))
            handle.write(struct.pack("<Q", len(header)))
            handle.write(header)
            for arr in arrays:
                handle.write(struct.pack("<Q", arr.nbytes))
                handle.write(arr.tobytes())

    @classmethod
    def load(cls, path) -> "InvertedIndex":
        with open(path, "rb") as handle:
            if handle.read(len(_MAGIC)) != _MAGIC:
                raise DataFormatError(f"{path}: not an index snapshot")
            (version,) = struct.unpack("<I", handle.read(4))
            if version != _VERSION:
                raise DataFormatError(f"{path}: unsupported snapshot version {version}")
            (header_len,) = struct.unpack("<Q", handle.read(8))
            header = json.loads(handle.read(header_len).decode("utf-8"))

            def read_array(dtype):
                (nbytes,) = struct.unpack("<Q", handle.read(8))
                return np.frombuffer(handle.read(nbytes), dtype=dtype)

            term_indptr = read_array("<i8")
            term_ords = read_array("<i4")
            term_tfs = read_array("<f8")
            doc_indptr = read_array("<i8")
            doc_term_ids = read_array("<i4")
            doc_term_tfs = read_array("<f8")
            doc_lengths = read_array("<f8")
            cf = read_array("<f8")
        return _finalize(
            tuple(header["doc_ids"]),
            tuple(header["terms"]),
            term_indptr,
            term_ords,
            term_tfs,
            doc_indptr,
            doc_term_ids,
            doc_term_tfs,
            doc_lengths,
            cf,
        )


def _finalize(doc_ids, terms, *arrays) -> InvertedIndex:
    frozen = []
    for arr in arrays:
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        frozen.append(arr)
    doc_id_array = np.array(doc_ids, dtype=str)
    doc_id_array.setflags(write=False)
    return InvertedIndex(
        doc_ids=doc_ids,
        terms=terms,
        vocab={t: i for i, t in enumerate(terms)},
        term_indptr=frozen[0],
        term_ords=frozen[1],
        term_tfs=frozen[2],
        doc_indptr=frozen[3],
        doc_term_ids=frozen[4],
        doc_term_tfs=frozen[5],
        doc_lengths=frozen[6],
        cf=frozen[7],
        _doc_id_array=doc_id_array,
        _ordinals={d: i for i, d in enumerate(doc_ids)},
    )


def _doc_expansion(
    doc: Document, config: FieldConfig, predictions: Optional[KeyphrasePredictions]
) -> tuple[str, ...]:
    if predictions is not None and config.expansion_count > 0:
        return predictions.phrases(doc.id, config.expansion_count)
    return doc.expansion_keyphrases


def build_index(
    corpus: Sequence[Document],
    config: FieldConfig = FieldConfig(),
    predictions: Optional[KeyphrasePredictions] = None,
) -> InvertedIndex:
    """Build the index; the token stream of a document is the concatenation
    of its enabled fields, analyzed with stopword removal. Keyword and
    expansion phrases are analyzed as text, so multi-word phrases contribute
    one token each."""
    if not corpus:
        raise ValueError("cannot index an empty corpus")
    if config.expansion_count > 0 and predictions is None:
        raise ValueError("expansion_count > 0 requires predictions")
    seen_ids: set[str] = set()
    vocab: dict[str, int] = {}
    terms: list[str] = []
    # per-term postings accumulated in doc-ordinal order
    post_ords: list[list[int]] = []
    post_tfs: list[list[int]] = []
    doc_indptr = [0]
    doc_term_ids: list[int] = []
    doc_term_tfs: list[int] = []
    doc_lengths = []
    for ordinal, doc in enumerate(corpus):
        if doc.id in seen_ids:
            raise DataFormatError(f"duplicate document id {doc.id!r}")
        seen_ids.add(doc.id)
        counts: dict[int, int] = {}
        length = 0
        pieces: list[str] = []
        if config.include_title:
            pieces.append(doc.title)
        if config.include_abstract:
            pieces.append(doc.abstract)
        if config.include_author_keywords:
            pieces.extend(doc.author_keywords)
        pieces.extend(_doc_expansion(doc, config, predictions))
        for piece in pieces:
            for token in analyze(piece, drop_stopwords=True):
                tid = vocab.get(token.stem)
                if tid is None:
                    tid = len(terms)
                    vocab[token.stem] = tid
                    terms.append(token.stem)
                    post_ords.append([])
                    post_tfs.append([])
                counts[tid] = counts.get(tid, 0) + 1
                length += 1
        for tid in sorted(counts):
            post_ords[tid].append(ordinal)
            post_tfs[tid].append(counts[tid])
            doc_term_ids.append(tid)
            doc_term_tfs.append(counts[tid])
        doc_indptr.append(len(doc_term_ids))
        doc_lengths.append(length)

    term_indptr = np.zeros(len(terms) + 1, dtype=np.int64)
    for tid, ords in enumerate(post_ords):
        term_indptr[tid + 1] = term_indptr[tid] + len(ords)
    term_ords = np.fromiter(
        (o for ords in post_ords for o in ords), dtype=np.int32, count=int(term_indptr[-1])
    )
    term_tfs = np.fromiter(
        (t for tfs in post_tfs for t in tfs), dtype=np.float64, count=int(term_indptr[-1])
    )
    cf = (
        np.add.reduceat(term_tfs, term_indptr[:-1])
        if len(term_tfs)
        else np.zeros(0, dtype=np.float64)
    )
    return _finalize(
        tuple(doc.id for doc in corpus),
        tuple(terms),
        term_indptr,
        term_ords,
        term_tfs,
        np.asarray(doc_indptr, dtype=np.int64),
        np.asarray(doc_term_ids, dtype=np.int32),
        np.asarray(doc_term_tfs, dtype=np.float64),
        np.asarray(doc_lengths, dtype=np.float64),
        cf,
    )


def term_stats(index: InvertedIndex, word: str) -> tuple[int, int]:
    """(df, cf) of a raw word under the index's analysis chain."""
    return index.term_stats(word)
