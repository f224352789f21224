"""BM25 and query-likelihood ranking with optional RM3 feedback.

Both scorers run term-at-a-time over the postings (see kernels) and score
only documents containing at least one query term. Parameter defaults are
the Anserini defaults (k1=0.9, b=0.4, mu=1000, fb_docs=fb_terms=10,
original-query weight 0.5).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .corpus import Query
from .errors import DataFormatError
from .index import InvertedIndex
from .textproc import analyze


@dataclass(frozen=True)
class RankingParams:
    model: str = "bm25"
    k1: float = 0.9
    b: float = 0.4
    mu: float = 1000.0
    top_k: int = 1000

    def __post_init__(self):
        if self.model not in ("bm25", "ql"):
            raise ValueError(f"unknown model {self.model!r}")
        if self.k1 < 0:
            raise ValueError("k1 must be >= 0")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError("b must be in [0, 1]")
        if self.mu <= 0:
            raise ValueError("mu must be > 0")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")


@dataclass(frozen=True)
class Rm3Params:
    enabled: bool = False
    fb_docs: int = 10
    fb_terms: int = 10
    orig_query_weight: float = 0.5

    def __post_init__(self):
        if self.fb_docs < 1 or self.fb_terms < 1:
            raise ValueError("fb_docs and fb_terms must be >= 1")
        if not 0.0 <= self.orig_query_weight <= 1.0:
            raise ValueError("orig_query_weight must be in [0, 1]")


@dataclass(frozen=True)
class Ranking:
    """Scored documents, descending score, ties broken by ascending doc id."""

    query_id: str
    entries: tuple[tuple[str, float], ...]

    def doc_ids(self) -> list[str]:
        return [doc_id for doc_id, _ in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


def _rank_candidates(
    index: InvertedIndex, scores: np.ndarray, matched: np.ndarray, top_k: int, query_id: str
) -> Ranking:
    cands = np.nonzero(matched)[0]
    if len(cands) == 0:
        return Ranking(query_id, ())
    order = np.lexsort((index._doc_id_array[cands], -scores[cands]))
    top = cands[order[:top_k]]
    return Ranking(
        query_id, tuple((index.doc_ids[o], float(scores[o])) for o in top)
    )


def score_weighted(
    index: InvertedIndex,
    term_weights: Mapping[str, float],
    params: RankingParams,
    query_id: str = "",
) -> Ranking:
    """Rank documents for a weighted query (stems mapped to weights).

    With all weights equal to the query term counts this is the plain
    scorer; RM3 passes interpolated weights.
    """
    scores = np.zeros(index.n_docs, dtype=np.float64)
    matched = np.zeros(index.n_docs, dtype=np.bool_)
    if params.model == "bm25":
        n = index.n_docs
        avg = index.avg_doc_len
        for term, weight in sorted(term_weights.items()):
            ords, tfs = index.postings(term)
            if len(ords) == 0 or weight == 0.0:
                continue
            df = len(ords)
            idf = math.log(1.0 + (n - df + 0.5) / (df + 0.5))
            kernels.bm25_accumulate(
                scores, matched, ords, tfs, index.doc_lengths,
                weight * idf, params.k1, params.b, avg,
            )
    else:
        mu = params.mu
        collection_len = index.collection_len
        base = 0.0
        weight_total = 0.0
        for term, weight in sorted(term_weights.items()):
            ords, tfs = index.postings(term)
            cf = float(tfs.sum())
            if cf == 0.0 or weight == 0.0:
                continue  # cf = 0 terms are dropped before scoring
            mu_pc = mu * (cf / collection_len)
            kernels.ql_accumulate(scores, matched, ords, tfs, weight, mu_pc)
            base += weight * math.log(mu_pc)
            weight_total += weight
        cands = np.nonzero(matched)[0]
        scores[cands] += base - weight_total * np.log(index.doc_lengths[cands] + mu)
    return _rank_candidates(index, scores, matched, params.top_k, query_id)


def score_bm25(
    index: InvertedIndex,
    query_terms: Sequence[str],
    k1: float = 0.9,
    b: float = 0.4,
    top_k: int = 1000,
    query_id: str = "",
) -> Ranking:
    """BM25 ranking for analyzed query terms (stems)."""
    params = RankingParams(model="bm25", k1=k1, b=b, top_k=top_k)
    weights = {t: float(c) for t, c in Counter(query_terms).items()}
    return score_weighted(index, weights, params, query_id)


def score_ql(
    index: InvertedIndex,
    query_terms: Sequence[str],
    mu: float = 1000.0,
    top_k: int = 1000,
    query_id: str = "",
) -> Ranking:
    """Dirichlet-smoothed query likelihood ranking for analyzed terms."""
    params = RankingParams(model="ql", mu=mu, top_k=top_k)
    weights = {t: float(c) for t, c in Counter(query_terms).items()}
    return score_weighted(index, weights, params, query_id)


def _softmax(values: np.ndarray) -> np.ndarray:
    shifted = np.exp(values - values.max())
    return shifted / shifted.sum()


def rm3_rerank(
    index: InvertedIndex,
    query_terms: Sequence[str],
    first_pass: Ranking,
    params: RankingParams,
    rm3: Rm3Params,
) -> Ranking:
    """Expand the query with a relevance model from the top feedback
    documents, then re-score.

    Feedback document weights are the softmax of their retrieval scores.
    Final term weights interpolate the normalized original query term
    distribution with the relevance model. Stopwords never appear (the
    index drops them at build time).
    """
    if not first_pass.entries:
        return first_pass
    feedback = first_pass.entries[: rm3.fb_docs]
    doc_weights = _softmax(np.array([score for _, score in feedback], dtype=np.float64))
    relevance: dict[int, float] = {}
    for (doc_id, _), doc_weight in zip(feedback, doc_weights):
        ordinal = index.ordinal(doc_id)
        term_ids, tfs = index.doc_vector(ordinal)
        doc_len = index.doc_lengths[ordinal]
        for tid, tf in zip(term_ids.tolist(), tfs.tolist()):
            relevance[tid] = relevance.get(tid, 0.0) + doc_weight * (tf / doc_len)
    kept = sorted(relevance.items(), key=lambda kv: (-kv[1], index.terms[kv[0]]))
    kept = kept[: rm3.fb_terms]

    lam = rm3.orig_query_weight
    counts = Counter(query_terms)
    total = float(sum(counts.values()))
    weights: dict[str, float] = {t: lam * (c / total) for t, c in counts.items()}
    for tid, p in kept:
        term = index.terms[tid]
        weights[term] = weights.get(term, 0.0) + (1.0 - lam) * p
    weights = {t: w for t, w in weights.items() if w > 0.0}
    return score_weighted(index, weights, params, first_pass.query_id)


def search(
    index: InvertedIndex,
    query: Query,
    params: RankingParams = RankingParams(),
    rm3: Rm3Params = Rm3Params(),
) -> Ranking:
    """Analyze the query text, score, optionally apply RM3, truncate."""
    terms = [token.stem for token in analyze(query.text, drop_stopwords=True)]
    if not terms:
        return Ranking(query.id, ())
    weights = {t: float(c) for t, c in Counter(terms).items()}
    first = score_weighted(index, weights, params, query.id)
    if rm3.enabled:
        return rm3_rerank(index, terms, first, params, rm3)
    return first


def write_run(rankings: Sequence[Ranking], path, tag: str = "kpsearch") -> None:
    """TREC run format: qid Q0 docid rank score tag."""
    with open(path, "w", encoding="utf-8") as handle:
        for ranking in rankings:
            for rank, (doc_id, score) in enumerate(ranking.entries, start=1):
                handle.write(
                    f"{ranking.query_id} Q0 {doc_id} {rank} {score:.6f} {tag}\n"
                )


def read_run(path) -> list[Ranking]:
    """Read a TREC run file; rankings returned in first-appearance order."""
    path = Path(path)
    entries: dict[str, list[tuple[int, str, float]]] = {}
    order: list[str] = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 6:
                raise DataFormatError(f"{path}:{lineno}: expected 6 columns, got {len(parts)}")
            qid, _, doc_id, rank, score, _ = parts
            try:
                rank_value, score_value = int(rank), float(score)
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: bad rank or score") from None
            if qid not in entries:
                entries[qid] = []
                order.append(qid)
            entries[qid].append((rank_value, doc_id, score_value))
    rankings = []
    for qid in order:
        rows = sorted(entries[qid])
        rankings.append(Ranking(qid, tuple((doc, score) for _, doc, score in rows)))
    return rankings
