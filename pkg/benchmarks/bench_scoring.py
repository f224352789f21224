"""Benchmark the numba kernels against the pure-numpy fallback.

Builds a synthetic index (Zipf-ish postings over a configurable number of
documents), runs a batch of multi-term queries through both backends, checks
that the rankings agree, and prints per-query timings.

Usage:
    python benchmarks/bench_scoring.py [--docs 100000] [--queries 50]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from kpsearch import kernels
from kpsearch.corpus import Document, Query
from kpsearch.index import build_index
from kpsearch.ranking import RankingParams, search

WORDS = [f"w{i:04d}" for i in range(2000)]


def synthetic_corpus(n_docs: int, seed: int = 7) -> list[Document]:
    rng = np.random.default_rng(seed)
    # Zipf-ish sampling: low word ids are frequent, like real term statistics
    ranks = np.arange(1, len(WORDS) + 1, dtype=np.float64)
    probs = (1.0 / ranks) / (1.0 / ranks).sum()
    docs = []
    for i in range(n_docs):
        length = int(rng.integers(40, 160))
        token_ids = rng.choice(len(WORDS), size=length, p=probs)
        text = " ".join(WORDS[t] for t in token_ids)
        docs.append(Document(f"doc{i:07d}", "", text))
    return docs


def bench(index, queries, model: str, backend: str) -> tuple[float, list]:
    kernels.use_backend(backend)
    params = RankingParams(model=model)
    # warm-up compiles the numba kernels outside the timed region
    search(index, queries[0], params)
    start = time.perf_counter()
    results = [search(index, q, params) for q in queries]
    elapsed = time.perf_counter() - start
    return elapsed / len(queries), results


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--docs", type=int, default=100_000)
    parser.add_argument("--queries", type=int, default=50)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    print(f"building synthetic index over {args.docs} documents ...")
    index = build_index(synthetic_corpus(args.docs, args.seed))
    print(f"  {index.n_terms} terms, collection length {int(index.collection_len)}")

    rng = np.random.default_rng(args.seed + 1)
    queries = [
        Query(f"q{i}", " ".join(WORDS[t] for t in rng.integers(0, 400, size=4)))
        for i in range(args.queries)
    ]

    backends = ["numpy"] + (["numba"] if kernels.HAS_NUMBA else [])
    for model in ("bm25", "ql"):
        timings = {}
        rankings = {}
        for backend in backends:
            per_query, results = bench(index, queries, model, backend)
            timings[backend] = per_query
            rankings[backend] = [r.doc_ids() for r in results]
            print(f"{model:5s} {backend:6s} {per_query * 1e3:8.2f} ms/query")
        if len(backends) == 2:
            assert rankings["numba"] == rankings["numpy"], "backends disagree"
            speedup = timings["numpy"] / timings["numba"]
            print(f"{model:5s} numba speedup: {speedup:.2f}x (identical rankings)")


if __name__ == "__main__":
    main()
