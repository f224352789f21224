"""Unsupervised keyphrase extraction over a multipartite candidate graph.

Pipeline: candidate phrases -> topic clustering (Jaccard over stem sets,
average-linkage) -> directed graph weighted by inverse positional distance
between candidates of different topics -> promotion of each topic's
earliest candidate -> biased random walk -> one phrase per topic.

Candidates are maximal token runs free of function words and punctuation
breaks, capped at max_len tokens. This is a POS-free approximation, so a
separate, fuller function-word list is used here than the short analyzer
stopword list (see function_words.txt).
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from typing import Optional, Sequence

import numpy as np

from .corpus import Document, KeyphrasePredictions
from .errors import ConvergenceError
from .porter import stem
from .textproc import _TOKEN_RE


def _load_function_words() -> frozenset[str]:
    text = resources.files(__package__).joinpath("function_words.txt").read_text("utf-8")
    return frozenset(line.strip() for line in text.splitlines() if line.strip())


FUNCTION_WORDS = _load_function_words()


@dataclass(frozen=True)
class MpRankParams:
    alpha: float = 1.1
    damping: float = 0.85
    tol: float = 1e-6
    max_len: int = 5
    cluster_threshold: float = 0.25
    max_iter: int = 1000


@dataclass(frozen=True)
class CandidatePhrase:
    surface: tuple[str, ...]
    stems: tuple[str, ...]
    occurrences: tuple[int, ...]  # sorted first-token positions

    @property
    def first_position(self) -> int:
        return self.occurrences[0]

    @property
    def text(self) -> str:
        return " ".join(self.surface)


@dataclass(frozen=True)
class TopicGraph:
    candidates: tuple[CandidatePhrase, ...]
    topic_of: tuple[int, ...]
    # directed edge weights keyed by candidate indices
    weights: dict[tuple[int, int], float]

    def n_topics(self) -> int:
        return len(set(self.topic_of)) if self.topic_of else 0


def _token_segments(text: str, position_offset: int) -> list[list[tuple[str, int]]]:
    """Token runs unbroken by punctuation; positions are global token
    indices (whitespace between tokens does not break a run)."""
    segments: list[list[tuple[str, int]]] = []
    current: list[tuple[str, int]] = []
    last_end: Optional[int] = None
    lowered = text.lower()
    for position, match in enumerate(_TOKEN_RE.finditer(lowered)):
        if last_end is not None and lowered[last_end: match.start()].strip():
            if current:
                segments.append(current)
            current = []
        current.append((match.group(), position_offset + position))
        last_end = match.end()
    if current:
        segments.append(current)
    return segments


def extract_candidates(doc: Document, max_len: int = 5) -> list[CandidatePhrase]:
    """Candidate phrases of a document, in reading order.

    Maximal runs of non-function-word tokens within a segment, capped at
    max_len tokens from the run start; runs sharing a stem sequence merge
    into one candidate with all occurrence positions.
    """
    segments: list[list[tuple[str, int]]] = []
    offset = 0
    for field in (doc.title, doc.abstract):
        segments.extend(_token_segments(field, offset))
        offset += len(_TOKEN_RE.findall(field.lower()))
    merged: dict[tuple[str, ...], tuple[tuple[str, ...], list[int]]] = {}
    for segment in segments:
        run: list[tuple[str, int]] = []
        for item in itertools.chain(segment, [(None, -1)]):
            token = item[0]
            if token is None or token in FUNCTION_WORDS:
                if run:
                    capped = run[:max_len]
                    stems = tuple(stem(tok) for tok, _ in capped)
                    if stems in merged:
                        merged[stems][1].append(capped[0][1])
                    else:
                        merged[stems] = (tuple(tok for tok, _ in capped), [capped[0][1]])
                run = []
            else:
                run.append(item)
    candidates = [
        CandidatePhrase(surface=surface, stems=stems, occurrences=tuple(sorted(positions)))
        for stems, (surface, positions) in merged.items()
    ]
    candidates.sort(key=lambda c: c.first_position)
    return candidates


def _jaccard(a: frozenset, b: frozenset) -> float:
    return len(a & b) / len(a | b)


def cluster_topics(
    candidates: Sequence[CandidatePhrase], threshold: float = 0.25
) -> tuple[int, ...]:
    """Average-linkage agglomerative clustering on stem-set Jaccard
    similarity; merging stops when no pair exceeds the threshold.

    The result is independent of candidate order: ties between equally
    similar cluster pairs break on the lexicographically smallest member
    stem sequences, and topic ids follow that same ordering.
    """
    if not candidates:
        return ()
    n = len(candidates)
    stem_sets = [frozenset(c.stems) for c in candidates]
    sim = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            sim[i, j] = sim[j, i] = _jaccard(stem_sets[i], stem_sets[j])
    clusters: list[list[int]] = [[i] for i in range(n)]
    keys: list[tuple[str, ...]] = [candidates[i].stems for i in range(n)]
    while len(clusters) > 1:
        best = None
        for a, b in itertools.combinations(range(len(clusters)), 2):
            pair_sims = [sim[i, j] for i in clusters[a] for j in clusters[b]]
            linkage = sum(pair_sims) / len(pair_sims)
            if linkage <= threshold:
                continue
            key = tuple(sorted((keys[a], keys[b])))
            if best is None or linkage > best[0] or (linkage == best[0] and key < best[3]):
                best = (linkage, a, b, key)
        if best is None:
            break
        _, a, b, _ = best
        merged = clusters[a] + clusters[b]
        merged_key = min(keys[a], keys[b])
        clusters = [c for k, c in enumerate(clusters) if k not in (a, b)]
        keys = [k for idx, k in enumerate(keys) if idx not in (a, b)]
        clusters.append(merged)
        keys.append(merged_key)
    order = sorted(range(len(clusters)), key=lambda k: keys[k])
    topic_of = [0] * n
    for topic_id, cluster_idx in enumerate(order):
        for member in clusters[cluster_idx]:
            topic_of[member] = topic_id
    return tuple(topic_of)


def build_graph(
    candidates: Sequence[CandidatePhrase], topic_of: Sequence[int]
) -> TopicGraph:
    """Directed edges between candidates of different topics, weighted by
    the summed inverse distance between occurrence positions."""
    weights: dict[tuple[int, int], float] = {}
    n = len(candidates)
    for i in range(n):
        for j in range(n):
            if i == j or topic_of[i] == topic_of[j]:
                continue
            total = 0.0
            for pi in candidates[i].occurrences:
                for pj in candidates[j].occurrences:
                    total += 1.0 / abs(pi - pj)
            if total > 0.0:
                weights[(i, j)] = total
    return TopicGraph(tuple(candidates), tuple(topic_of), weights)


def adjust_weights(graph: TopicGraph, alpha: float = 1.1) -> TopicGraph:
    """Promote each topic's earliest candidate: edges into it gain
    alpha * e^(1/(1+pos_i)) times the source's weight into the rest of the
    topic. All deltas are computed from the pre-adjustment weights."""
    weights = dict(graph.weights)
    topics: dict[int, list[int]] = {}
    for idx, topic in enumerate(graph.topic_of):
        topics.setdefault(topic, []).append(idx)
    for topic, members in sorted(topics.items()):
        if len(members) < 2:
            continue
        first = min(members, key=lambda idx: graph.candidates[idx].first_position)
        others = [idx for idx in members if idx != first]
        for i in range(len(graph.candidates)):
            if graph.topic_of[i] == topic:
                continue
            neighbour_sum = sum(graph.weights.get((i, k), 0.0) for k in others)
            if neighbour_sum == 0.0:
                continue
            boost = (
                alpha
                * math.exp(1.0 / (1 + graph.candidates[i].first_position))
                * neighbour_sum
            )
            weights[(i, first)] = weights.get((i, first), 0.0) + boost
    return TopicGraph(graph.candidates, graph.topic_of, weights)


def rank_candidates(
    graph: TopicGraph,
    damping: float = 0.85,
    tol: float = 1e-6,
    max_iter: int = 1000,
) -> dict[CandidatePhrase, float]:
    """Biased random walk over incoming edges; scores sum to 1.

    Dangling candidates distribute their mass uniformly. Raises
    ConvergenceError if max_iter iterations leave the residual above tol.
    """
    n = len(graph.candidates)
    if n == 0:
        raise ValueError("graph has no candidates")
    w = np.zeros((n, n))
    for (i, j), weight in graph.weights.items():
        w[i, j] = weight
    out_strength = w.sum(axis=1)
    dangling = out_strength == 0.0
    transition = np.zeros((n, n))
    nonzero = ~dangling
    transition[nonzero] = w[nonzero] / out_strength[nonzero, None]
    scores = np.full(n, 1.0 / n)
    residual = float("inf")
    for _ in range(max_iter):
        updated = (1.0 - damping) / n + damping * (
            transition.T @ scores + scores[dangling].sum() / n
        )
        residual = np.abs(updated - scores).max()
        scores = updated
        if residual < tol:
            return {c: float(s) for c, s in zip(graph.candidates, scores)}
    raise ConvergenceError(
        f"random walk residual {residual:.3e} > {tol:.1e} after {max_iter} iterations"
    )


def extract_keyphrases(
    doc: Document, n: int, params: MpRankParams = MpRankParams()
) -> list[str]:
    """Top-n keyphrases of a document, at most one per topic.

    Ordering is by walk score, ties broken by earlier first occurrence then
    lexicographic stem sequence.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    candidates = extract_candidates(doc, params.max_len)
    if not candidates:
        return []
    topic_of = cluster_topics(candidates, params.cluster_threshold)
    graph = adjust_weights(build_graph(candidates, topic_of), params.alpha)
    scores = rank_candidates(graph, params.damping, params.tol, params.max_iter)

    def sort_key(candidate: CandidatePhrase):
        return (-scores[candidate], candidate.first_position, candidate.stems)

    best_per_topic: dict[int, CandidatePhrase] = {}
    for candidate, topic in zip(candidates, topic_of):
        current = best_per_topic.get(topic)
        if current is None or sort_key(candidate) < sort_key(current):
            best_per_topic[topic] = candidate
    ranked = sorted(best_per_topic.values(), key=sort_key)
    return [candidate.text for candidate in ranked[:n]]


def batch_extract(
    docs: Sequence[Document],
    n: int,
    params: MpRankParams = MpRankParams(),
    threads: int = 1,
) -> KeyphrasePredictions:
    """Extract keyphrases for every document; output follows input order
    regardless of the thread count."""
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda d: extract_keyphrases(d, n, params), docs))
    else:
        results = [extract_keyphrases(doc, n, params) for doc in docs]
    return KeyphrasePredictions(
        by_doc={doc.id: tuple(phrases) for doc, phrases in zip(docs, results)},
        scores={},
    )
