"""Loading and writing of documents, topics, qrels and keyphrase predictions.

All loaders are single-threaded and return immutable objects that are safe
to share across threads. Loading never reorders documents, topics or
keyphrase lists.

Exchange formats:
  corpus JSONL       {"id": str, "title": str, "abstract": str, "keywords": [str]}
  predictions JSONL  {"id": str, "keyphrases": [str], "scores": [float]?}
  TREC qrels         "qid 0 docid grade" per line
  topics             TREC-style <top> blocks or JSONL {"id", "text", "fields"?}
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .errors import DataFormatError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Document:
    id: str
    title: str
    abstract: str
    author_keywords: tuple[str, ...] = ()
    expansion_keyphrases: tuple[str, ...] = ()


@dataclass(frozen=True)
class Query:
    id: str
    text: str
    research_fields: frozenset[str] = frozenset()


@dataclass(frozen=True)
class RelevanceJudgments:
    """Binary relevance per (query, doc); unjudged pairs are non-relevant."""

    relevant: Mapping[str, frozenset[str]]
    query_ids: tuple[str, ...]

    def is_relevant(self, query_id: str, doc_id: str) -> bool:
        return doc_id in self.relevant.get(query_id, frozenset())

    def relevant_docs(self, query_id: str) -> frozenset[str]:
        return self.relevant.get(query_id, frozenset())

    def relevant_count(self, query_id: str) -> int:
        return len(self.relevant.get(query_id, frozenset()))


@dataclass(frozen=True)
class KeyphrasePredictions:
    """Rank-ordered predicted keyphrases per document id."""

    by_doc: Mapping[str, tuple[str, ...]]
    scores: Mapping[str, tuple[float, ...]]

    def phrases(self, doc_id: str, n: Optional[int] = None) -> tuple[str, ...]:
        phrases = self.by_doc.get(doc_id, ())
        return phrases if n is None else phrases[:n]

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self.by_doc

    def __len__(self) -> int:
        return len(self.by_doc)


@dataclass(frozen=True)
class FieldConfig:
    """Which document fields are indexed, and how many predicted
    keyphrases expand each document."""

    include_title: bool = True
    include_abstract: bool = True
    include_author_keywords: bool = False
    expansion_count: int = 0

    def __post_init__(self):
        if self.expansion_count < 0:
            raise ValueError("expansion_count must be >= 0")
        if self.expansion_count > 9:
            log.warning(
                "expansion_count=%d is outside the usual [0, 9] range",
                self.expansion_count,
            )

    @classmethod
    def ta(cls, expansion_count: int = 0) -> "FieldConfig":
        """Title and abstract only."""
        return cls(expansion_count=expansion_count)

    @classmethod
    def tak(cls, expansion_count: int = 0) -> "FieldConfig":
        """Title, abstract and author keywords."""
        return cls(include_author_keywords=True, expansion_count=expansion_count)

    @property
    def label(self) -> str:
        return "tak" if self.include_author_keywords else "ta"


def _read_jsonl(path: Path) -> Iterable[tuple[int, dict]]:
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(record, dict):
                raise DataFormatError(f"{path}:{lineno}: expected a JSON object")
            yield lineno, record


def _require_str(record: dict, key: str, path: Path, lineno: int) -> str:
    value = record.get(key)
    if not isinstance(value, str):
        raise DataFormatError(f"{path}:{lineno}: missing or non-string field {key!r}")
    return value


def _phrase_list(value, what: str, path: Path, lineno: int) -> tuple[str, ...]:
    if not isinstance(value, list) or not all(isinstance(p, str) for p in value):
        raise DataFormatError(f"{path}:{lineno}: {what} must be a list of strings")
    for phrase in value:
        if not phrase.strip():
            raise DataFormatError(f"{path}:{lineno}: empty phrase in {what}")
    return tuple(value)


def load_corpus(path, format: str = "jsonl") -> list[Document]:
    """Load documents in file order."""
    if format != "jsonl":
        raise ValueError(f"unsupported corpus format: {format!r}")
    path = Path(path)
    docs: list[Document] = []
    seen: set[str] = set()
    for lineno, record in _read_jsonl(path):
        doc_id = _require_str(record, "id", path, lineno)
        if not doc_id:
            raise DataFormatError(f"{path}:{lineno}: empty document id")
        if doc_id in seen:
            raise DataFormatError(f"{path}:{lineno}: duplicate document id {doc_id!r}")
        seen.add(doc_id)
        title = _require_str(record, "title", path, lineno)
        abstract = _require_str(record, "abstract", path, lineno)
        keywords = _phrase_list(record.get("keywords", []), "keywords", path, lineno)
        docs.append(
            Document(id=doc_id, title=title, abstract=abstract, author_keywords=keywords)
        )
    log.info("loaded %d documents from %s", len(docs), path)
    return docs


def save_corpus(docs: Sequence[Document], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for doc in docs:
            record: dict = {"id": doc.id, "title": doc.title, "abstract": doc.abstract}
            if doc.author_keywords:
                record["keywords"] = list(doc.author_keywords)
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


_TOPIC_TAG_RE = re.compile(r"<(num|title|desc|narr|fields?)>", re.IGNORECASE)


def _parse_trec_topics(path: Path) -> list[Query]:
    text = path.read_text(encoding="utf-8")
    queries: list[Query] = []
    for block in re.split(r"<top>", text, flags=re.IGNORECASE)[1:]:
        block = re.split(r"</top>", block, flags=re.IGNORECASE)[0]
        parts: dict[str, str] = {}
        pos = 0
        matches = list(_TOPIC_TAG_RE.finditer(block))
        for i, match in enumerate(matches):
            tag = match.group(1).lower().rstrip("s")
            if tag == "field":
                tag = "fields"
            end = matches[i + 1].start() if i + 1 < len(matches) else len(block)
            parts[tag] = block[match.end():end].strip()
        num = re.sub(r"^\s*Number\s*:", "", parts.get("num", ""), flags=re.IGNORECASE).strip()
        if not num:
            raise DataFormatError(f"{path}: topic block without <num>")
        desc = re.sub(
            r"^\s*Description\s*:", "", parts.get("desc", ""), flags=re.IGNORECASE
        ).strip()
        if not desc:
            raise DataFormatError(f"{path}: topic {num} has no description")
        fields = frozenset(
            f.strip() for f in parts.get("fields", "").split(";") if f.strip()
        )
        queries.append(Query(id=num, text=desc, research_fields=fields))
    return queries


def _parse_jsonl_topics(path: Path) -> list[Query]:
    queries: list[Query] = []
    seen: set[str] = set()
    for lineno, record in _read_jsonl(path):
        query_id = _require_str(record, "id", path, lineno)
        if query_id in seen:
            raise DataFormatError(f"{path}:{lineno}: duplicate query id {query_id!r}")
        seen.add(query_id)
        text = _require_str(record, "text", path, lineno)
        if not text.strip():
            raise DataFormatError(f"{path}:{lineno}: topic {query_id} has empty text")
        raw_fields = record.get("fields", [])
        if not isinstance(raw_fields, list) or not all(
            isinstance(f, str) for f in raw_fields
        ):
            raise DataFormatError(f"{path}:{lineno}: fields must be a list of strings")
        queries.append(
            Query(id=query_id, text=text, research_fields=frozenset(raw_fields))
        )
    return queries


def load_topics(path, format: str = "auto") -> list[Query]:
    """Load queries; TREC-style topic files use the description as text."""
    path = Path(path)
    if format == "auto":
        head = path.read_text(encoding="utf-8").lstrip()[:1]
        format = "trec-topics" if head == "<" else "jsonl"
    if format == "trec-topics":
        queries = _parse_trec_topics(path)
    elif format == "jsonl":
        queries = _parse_jsonl_topics(path)
    else:
        raise ValueError(f"unsupported topics format: {format!r}")
    ids = [q.id for q in queries]
    if len(set(ids)) != len(ids):
        raise DataFormatError(f"{path}: duplicate query ids")
    log.info("loaded %d topics from %s", len(queries), path)
    return queries


def save_topics(queries: Sequence[Query], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for query in queries:
            record: dict = {"id": query.id, "text": query.text}
            if query.research_fields:
                record["fields"] = sorted(query.research_fields)
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_qrels(path, binary_threshold: Optional[int] = None) -> RelevanceJudgments:
    """Load TREC qrels, binarized at ``binary_threshold``.

    With no threshold, only the highest grade present in the file counts as
    relevant; lower positive grades ("partially relevant") map to 0.
    """
    path = Path(path)
    rows: list[tuple[str, str, int]] = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 4:
                raise DataFormatError(f"{path}:{lineno}: expected 4 columns, got {len(parts)}")
            qid, _, docid, grade = parts
            try:
                grade_value = int(grade)
            except ValueError:
                raise DataFormatError(f"{path}:{lineno}: non-integer grade {grade!r}") from None
            rows.append((qid, docid, grade_value))
    if binary_threshold is None:
        positive = [g for _, _, g in rows if g > 0]
        binary_threshold = max(positive) if positive else 1
    relevant: dict[str, set[str]] = {}
    query_ids: list[str] = []
    for qid, docid, grade_value in rows:
        if qid not in relevant:
            relevant[qid] = set()
            query_ids.append(qid)
        if grade_value >= binary_threshold:
            relevant[qid].add(docid)
    frozen = {qid: frozenset(docs) for qid, docs in relevant.items()}
    return RelevanceJudgments(relevant=frozen, query_ids=tuple(query_ids))


def load_predictions(path) -> KeyphrasePredictions:
    """Load predicted keyphrases, preserving rank order exactly."""
    path = Path(path)
    by_doc: dict[str, tuple[str, ...]] = {}
    scores: dict[str, tuple[float, ...]] = {}
    for lineno, record in _read_jsonl(path):
        doc_id = _require_str(record, "id", path, lineno)
        if doc_id in by_doc:
            raise DataFormatError(f"{path}:{lineno}: duplicate document id {doc_id!r}")
        phrases = _phrase_list(record.get("keyphrases"), "keyphrases", path, lineno)
        folded = [p.casefold() for p in phrases]
        if len(set(folded)) != len(folded):
            raise DataFormatError(
                f"{path}:{lineno}: duplicate keyphrase (after case-folding) for {doc_id!r}"
            )
        by_doc[doc_id] = phrases
        if "scores" in record:
            raw = record["scores"]
            if (
                not isinstance(raw, list)
                or len(raw) != len(phrases)
                or not all(isinstance(s, (int, float)) for s in raw)
            ):
                raise DataFormatError(
                    f"{path}:{lineno}: scores must parallel keyphrases"
                )
            scores[doc_id] = tuple(float(s) for s in raw)
    return KeyphrasePredictions(by_doc=by_doc, scores=scores)


def save_predictions(preds: KeyphrasePredictions, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for doc_id, phrases in preds.by_doc.items():
            record: dict = {"id": doc_id, "keyphrases": list(phrases)}
            if doc_id in preds.scores:
                record["scores"] = list(preds.scores[doc_id])
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def expand_document(doc: Document, preds: KeyphrasePredictions, n: int) -> Document:
    """Attach the first ``n`` predicted keyphrases; other fields unchanged.

    A document absent from the predictions gets an empty expansion.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    return replace(doc, expansion_keyphrases=preds.phrases(doc.id, n))


def expand_corpus(
    docs: Sequence[Document], preds: KeyphrasePredictions, n: int
) -> tuple[list[Document], int]:
    """Expand every document; returns (documents, count missing predictions)."""
    missing = sum(1 for doc in docs if doc.id not in preds)
    if missing and n > 0:
        log.warning("%d of %d documents have no predictions", missing, len(docs))
    return [expand_document(doc, preds, n) for doc in docs], missing
