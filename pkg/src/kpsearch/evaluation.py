"""Retrieval and keyphrase metrics: AP/MAP, P@k, F1@k, paired t-test,
present/absent and research-field splits.

The t-test p-value comes from an in-repo regularized incomplete beta
routine (accurate to ~1e-10 against reference values), so there is no
external stats dependency.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .corpus import Document, Query, RelevanceJudgments
from .errors import DataFormatError
from .ranking import Ranking
from .textproc import stem_phrase, tokenize
from .porter import stem as porter_stem


@dataclass(frozen=True)
class EvalReport:
    per_query: Mapping[str, tuple[float, float]]  # qid -> (AP, P@10)
    map: float
    p_at_10: float
    n_queries: int

    def ap_vector(self, query_ids: Sequence[str]) -> list[float]:
        return [self.per_query.get(qid, (0.0, 0.0))[0] for qid in query_ids]


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    p_value: float
    degrees_of_freedom: int

    @property
    def significant_at_05(self) -> bool:
        return self.p_value < 0.05


def average_precision(ranking: Ranking, relevant: frozenset[str]) -> float:
    """Mean of precision at each relevant document's rank, over the total
    number of relevant documents; 0 when nothing is relevant."""
    total_relevant = len(relevant)
    if total_relevant == 0:
        return 0.0
    hits = 0
    precision_sum = 0.0
    for rank, (doc_id, _) in enumerate(ranking.entries, start=1):
        if doc_id in relevant:
            hits += 1
            precision_sum += hits / rank
    return precision_sum / total_relevant


def precision_at_k(ranking: Ranking, relevant: frozenset[str], k: int = 10) -> float:
    """Relevant fraction of the first k positions; missing positions count
    as non-relevant."""
    if k < 1:
        raise ValueError("k must be >= 1")
    hits = sum(1 for doc_id, _ in ranking.entries[:k] if doc_id in relevant)
    return hits / k


def evaluate_run(
    run: Sequence[Ranking],
    judgments: RelevanceJudgments,
    query_ids: Optional[Sequence[str]] = None,
) -> EvalReport:
    """Aggregate AP and P@10 over the full topic set; queries missing from
    the run contribute 0. Duplicate or unknown query ids fail loudly."""
    topic_ids = tuple(query_ids) if query_ids is not None else judgments.query_ids
    topic_set = set(topic_ids)
    by_query: dict[str, Ranking] = {}
    for ranking in run:
        if ranking.query_id in by_query:
            raise DataFormatError(f"duplicate ranking for query {ranking.query_id!r}")
        if ranking.query_id not in topic_set:
            raise DataFormatError(f"ranking for unknown query {ranking.query_id!r}")
        by_query[ranking.query_id] = ranking
    per_query: dict[str, tuple[float, float]] = {}
    for qid in topic_ids:
        ranking = by_query.get(qid, Ranking(qid, ()))
        relevant = judgments.relevant_docs(qid)
        per_query[qid] = (
            average_precision(ranking, relevant),
            precision_at_k(ranking, relevant, 10),
        )
    n = len(topic_ids)
    mean_ap = sum(ap for ap, _ in per_query.values()) / n if n else 0.0
    mean_p10 = sum(p for _, p in per_query.values()) / n if n else 0.0
    return EvalReport(per_query=per_query, map=mean_ap, p_at_10=mean_p10, n_queries=n)


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-14:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log(1.0 - x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_two_sided_p(t: float, df: int) -> float:
    """Two-sided tail probability of Student's t distribution."""
    if df < 1:
        raise ValueError("df must be >= 1")
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))


def paired_t_test(per_query_a: Sequence[float], per_query_b: Sequence[float]) -> TTestResult:
    """Student's paired t-test on aligned per-query scores (two-sided)."""
    if len(per_query_a) != len(per_query_b):
        raise ValueError("paired samples must have equal length")
    n = len(per_query_a)
    if n < 2:
        raise ValueError("paired t-test needs n >= 2")
    diffs = [a - b for a, b in zip(per_query_a, per_query_b)]
    mean = sum(diffs) / n
    variance = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    df = n - 1
    if variance == 0.0:
        if mean == 0.0:  # all differences zero
            return TTestResult(t_statistic=0.0, p_value=1.0, degrees_of_freedom=df)
        # constant nonzero difference: the zero-variance limit
        return TTestResult(
            t_statistic=math.copysign(math.inf, mean), p_value=0.0,
            degrees_of_freedom=df,
        )
    t = mean / math.sqrt(variance / n)
    return TTestResult(
        t_statistic=t, p_value=student_t_two_sided_p(t, df), degrees_of_freedom=df
    )


def _normalize_phrase(phrase: str) -> tuple[str, ...]:
    return stem_phrase(phrase)


def f1_at_k(
    predicted: Sequence[str],
    gold: Sequence[str],
    k: int = 5,
    strict_denominator: bool = True,
) -> float:
    """F1 between top-k predictions and gold phrases.

    A match is equality of stemmed, lowercased, whitespace-normalized token
    sequences; each gold phrase counts at most once. Precision divides by k
    (the strict @k convention); pass strict_denominator=False to divide by
    the number of predictions actually available.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    gold_forms = {form for form in (_normalize_phrase(g) for g in gold) if form}
    if not gold_forms:
        raise ValueError("gold phrase list is empty")
    top = [_normalize_phrase(p) for p in predicted[:k]]
    matched = gold_forms & {form for form in top if form}
    denominator = k if strict_denominator else min(k, len(predicted))
    if denominator == 0:
        return 0.0
    precision = len(matched) / denominator
    recall = len(matched) / len(gold_forms)
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def split_present_absent(
    phrases: Sequence[str], doc: Document
) -> tuple[list[str], list[str]]:
    """Partition phrases into those whose stemmed token sequence occurs
    contiguously in the stemmed title+abstract stream (stopwords retained)
    and those that do not; order is preserved."""
    haystack = [porter_stem(tok) for tok in tokenize(doc.title) + tokenize(doc.abstract)]
    present: list[str] = []
    absent: list[str] = []
    for phrase in phrases:
        needle = list(_normalize_phrase(phrase))
        if needle and _contains_sublist(haystack, needle):
            present.append(phrase)
        else:
            absent.append(phrase)
    return present, absent


def _contains_sublist(haystack: list[str], needle: list[str]) -> bool:
    n = len(needle)
    return any(haystack[i: i + n] == needle for i in range(len(haystack) - n + 1))


@dataclass(frozen=True)
class DomainSplitTable:
    """Research field -> True when the field is in-domain."""

    in_domain: Mapping[str, bool]

    @classmethod
    def from_csv(cls, path) -> "DomainSplitTable":
        table: dict[str, bool] = {}
        with open(path, encoding="utf-8", newline="") as handle:
            for row in csv.reader(handle):
                if not row or row[0].startswith("#"):
                    continue
                if len(row) != 2 or row[1] not in ("in", "out"):
                    raise DataFormatError(f"{path}: bad domain table row {row!r}")
                table[row[0]] = row[1] == "in"
        return cls(in_domain=table)

    @classmethod
    def bundled(cls) -> "DomainSplitTable":
        with resources.as_file(
            resources.files(__package__).joinpath("domain_fields.csv")
        ) as path:
            return cls.from_csv(path)


def split_queries_by_domain(
    queries: Sequence[Query], table: Optional[DomainSplitTable] = None
) -> tuple[list[Query], list[Query]]:
    """A query is in-domain iff any of its research fields is marked in."""
    if table is None:
        table = DomainSplitTable.bundled()
    in_domain: list[Query] = []
    out_domain: list[Query] = []
    for query in queries:
        for field in query.research_fields:
            if field not in table.in_domain:
                raise DataFormatError(f"query {query.id}: unknown research field {field!r}")
        if any(table.in_domain[f] for f in query.research_fields):
            in_domain.append(query)
        else:
            out_domain.append(query)
    return in_domain, out_domain


def write_per_query_csv(report: EvalReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["qid", "ap", "p10"])
        for qid, (ap, p10) in report.per_query.items():
            writer.writerow([qid, f"{ap:.6f}", f"{p10:.6f}"])


def read_per_query_csv(path) -> dict[str, tuple[float, float]]:
    path = Path(path)
    out: dict[str, tuple[float, float]] = {}
    with open(path, encoding="utf-8", newline="") as handle:
        rows = list(csv.reader(handle))
    if not rows or rows[0] != ["qid", "ap", "p10"]:
        raise DataFormatError(f"{path}: expected header qid,ap,p10")
    for row in rows[1:]:
        if len(row) != 3:
            raise DataFormatError(f"{path}: bad row {row!r}")
        out[row[0]] = (float(row[1]), float(row[2]))
    return out


def write_aggregate_json(report: EvalReport, path) -> None:
    payload = {
        "map": report.map,
        "p_at_10": report.p_at_10,
        "n_queries": report.n_queries,
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", "utf-8")
