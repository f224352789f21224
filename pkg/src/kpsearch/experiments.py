"""Experiment orchestration: index-config matrices, expansion-count sweeps,
present/absent and domain split reports.

Every experiment is a pure function of its inputs: indexes are cached by
content hash, runs and reports are byte-identical across invocations and
thread counts, and a manifest records every parameter and input hash.
"""

from __future__ import annotations

import hashlib
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import __version__, kernels
from .corpus import (
    Document,
    FieldConfig,
    KeyphrasePredictions,
    Query,
    RelevanceJudgments,
)
from .errors import DataFormatError
from .evaluation import (
    DomainSplitTable,
    EvalReport,
    TTestResult,
    evaluate_run,
    paired_t_test,
    split_present_absent,
    split_queries_by_domain,
    write_aggregate_json,
    write_per_query_csv,
)
from .index import InvertedIndex, build_index
from .mprank import MpRankParams, batch_extract
from .ranking import Ranking, RankingParams, Rm3Params, search, write_run

log = logging.getLogger(__name__)

INTERNAL_MPRANK = "internal-mprank"


@dataclass(frozen=True)
class ExperimentSpec:
    corpus: str = ""
    topics: str = ""
    qrels: str = ""
    predictions: Optional[str] = None  # path, "internal-mprank", or None
    fields: str = "ta"  # ta | tak
    n: int = 5
    n_values: tuple[int, ...] = tuple(range(10))
    model: str = "bm25"
    rm3: bool = False
    k1: float = 0.9
    b: float = 0.4
    mu: float = 1000.0
    fb_docs: int = 10
    fb_terms: int = 10
    orig_weight: float = 0.5
    top_k: int = 1000
    split: str = "none"  # none | present | absent | in_domain | out_domain
    domain_table: Optional[str] = None  # CSV path; default is the bundled table
    out: str = "runs"
    threads: int = 1
    seed: Optional[int] = None
    tag: str = "kpsearch"

    def __post_init__(self):
        if self.fields not in ("ta", "tak"):
            raise ValueError(f"fields must be 'ta' or 'tak', got {self.fields!r}")
        if any(n < 0 for n in (self.n, *self.n_values)):
            raise ValueError("expansion counts must be >= 0")

    def field_config(self, n: Optional[int] = None) -> FieldConfig:
        count = self.n if n is None else n
        make = FieldConfig.tak if self.fields == "tak" else FieldConfig.ta
        return make(expansion_count=count)

    def ranking_params(self) -> RankingParams:
        return RankingParams(
            model=self.model, k1=self.k1, b=self.b, mu=self.mu, top_k=self.top_k
        )

    def rm3_params(self) -> Rm3Params:
        return Rm3Params(
            enabled=self.rm3,
            fb_docs=self.fb_docs,
            fb_terms=self.fb_terms,
            orig_query_weight=self.orig_weight,
        )


_SPEC_KEYS = set(ExperimentSpec.__dataclass_fields__)


def _parse_toml_minimal(text: str, origin: str) -> dict:
    """Flat TOML subset: key = string | number | bool | array. Used when
    the stdlib parser (3.11+) is unavailable."""
    try:
        import tomllib  # Python >= 3.11

        return tomllib.loads(text)
    except ImportError:
        pass

    def parse_value(raw: str):
        raw = raw.strip()
        if raw.startswith("[") and raw.endswith("]"):
            inner = raw[1:-1].strip()
            return [parse_value(v) for v in inner.split(",")] if inner else []
        if raw.startswith('"') and raw.endswith('"') and len(raw) >= 2:
            return json.loads(raw)
        if raw in ("true", "false"):
            return raw == "true"
        try:
            return int(raw)
        except ValueError:
            try:
                return float(raw)
            except ValueError:
                raise DataFormatError(f"{origin}: cannot parse TOML value {raw!r}") from None

    result: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("["):
            raise DataFormatError(f"{origin}:{lineno}: TOML tables are not supported")
        if "=" not in stripped:
            raise DataFormatError(f"{origin}:{lineno}: expected key = value")
        key, _, raw = stripped.partition("=")
        result[key.strip()] = parse_value(raw)
    return result


def load_spec(path, overrides: Optional[dict] = None) -> ExperimentSpec:
    """Experiment spec from a JSON or TOML config file plus overrides."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        raw = json.loads(text)
    else:
        raw = _parse_toml_minimal(text, str(path))
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = set(raw) - _SPEC_KEYS
    if unknown:
        raise DataFormatError(f"{path}: unknown config keys {sorted(unknown)}")
    if "n_values" in raw:
        raw["n_values"] = tuple(int(n) for n in raw["n_values"])
    return ExperimentSpec(**raw)


def _corpus_digest(corpus: Sequence[Document]) -> str:
    buf = io.StringIO()
    for doc in corpus:
        buf.write(
            json.dumps(
                [doc.id, doc.title, doc.abstract, list(doc.author_keywords),
                 list(doc.expansion_keyphrases)],
                ensure_ascii=False,
            )
        )
        buf.write("\n")
    return hashlib.sha256(buf.getvalue().encode("utf-8")).hexdigest()


def _predictions_digest(preds: Optional[KeyphrasePredictions]) -> str:
    if preds is None:
        return "none"
    payload = json.dumps(
        {doc_id: list(phrases) for doc_id, phrases in preds.by_doc.items()},
        ensure_ascii=False,
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def index_cache_key(
    corpus: Sequence[Document],
    config: FieldConfig,
    predictions: Optional[KeyphrasePredictions],
) -> str:
    parts = "|".join(
        [
            _corpus_digest(corpus),
            config.label,
            str(config.expansion_count),
            _predictions_digest(predictions if config.expansion_count > 0 else None),
        ]
    )
    return hashlib.sha256(parts.encode("utf-8")).hexdigest()


def build_or_load_index(
    corpus: Sequence[Document],
    config: FieldConfig,
    predictions: Optional[KeyphrasePredictions] = None,
    cache_dir: Optional[Path] = None,
) -> InvertedIndex:
    if cache_dir is None:
        return build_index(corpus, config, predictions)
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    snapshot = cache_dir / (index_cache_key(corpus, config, predictions) + ".idx")
    if snapshot.exists():
        log.info("reusing cached index %s", snapshot.name)
        return InvertedIndex.load(snapshot)
    index = build_index(corpus, config, predictions)
    index.save(snapshot)
    return index


def run_queries(
    index: InvertedIndex,
    topics: Sequence[Query],
    params: RankingParams,
    rm3: Rm3Params,
    threads: int = 1,
) -> list[Ranking]:
    """Search all topics; results follow topic order at any thread count."""
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda q: search(index, q, params, rm3), topics))
    return [search(index, q, params, rm3) for q in topics]


def resolve_predictions(
    spec: ExperimentSpec, corpus: Sequence[Document]
) -> Optional[KeyphrasePredictions]:
    from .corpus import load_predictions  # local import to avoid cycle noise

    if spec.predictions is None:
        return None
    if spec.predictions == INTERNAL_MPRANK:
        n_max = max((spec.n, *spec.n_values)) if spec.n_values else spec.n
        log.info("extracting keyphrases internally (n=%d)", max(n_max, 1))
        return batch_extract(corpus, max(n_max, 1), MpRankParams(), threads=spec.threads)
    return load_predictions(spec.predictions)


@dataclass
class ExperimentResult:
    report: EvalReport
    run_path: Optional[Path]
    baseline_report: Optional[EvalReport] = None
    ttest: Optional[TTestResult] = None


def _evaluate(
    run: Sequence[Ranking], qrels: RelevanceJudgments, topics: Sequence[Query]
) -> EvalReport:
    return evaluate_run(run, qrels, [q.id for q in topics])


def _safe_ttest(a: Sequence[float], b: Sequence[float]) -> Optional[TTestResult]:
    """Paired t-test, or None when there are fewer than two pairs."""
    if len(a) < 2:
        return None
    return paired_t_test(a, b)


def run_experiment(
    spec: ExperimentSpec,
    corpus: Sequence[Document],
    topics: Sequence[Query],
    qrels: RelevanceJudgments,
    predictions: Optional[KeyphrasePredictions] = None,
    out_dir: Optional[Path] = None,
) -> ExperimentResult:
    """One indexing configuration end to end: build (or reuse) the index,
    search, evaluate, and t-test against the no-expansion baseline when
    predictions are configured."""
    if spec.n > 0 and predictions is None:
        raise ValueError("expansion configured but no predictions supplied")
    out_dir = Path(out_dir if out_dir is not None else spec.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cache_dir = out_dir / ".index-cache"
    params, rm3 = spec.ranking_params(), spec.rm3_params()
    query_ids = [q.id for q in topics]

    index = build_or_load_index(corpus, spec.field_config(), predictions, cache_dir)
    run = run_queries(index, topics, params, rm3, spec.threads)
    report = _evaluate(run, qrels, topics)
    run_path = out_dir / f"run_{spec.fields}_n{spec.n}_{spec.model}{'_rm3' if spec.rm3 else ''}.txt"
    write_run(run, run_path, spec.tag)
    write_per_query_csv(report, run_path.with_suffix(".perquery.csv"))
    write_aggregate_json(report, run_path.with_suffix(".metrics.json"))

    baseline_report = None
    ttest = None
    if predictions is not None:
        baseline_index = build_or_load_index(
            corpus, spec.field_config(n=0), None, cache_dir
        )
        baseline_run = run_queries(baseline_index, topics, params, rm3, spec.threads)
        baseline_report = _evaluate(baseline_run, qrels, topics)
        ttest = _safe_ttest(
            report.ap_vector(query_ids), baseline_report.ap_vector(query_ids)
        )
    _write_manifest(spec, out_dir, corpus, predictions)
    return ExperimentResult(report, run_path, baseline_report, ttest)


@dataclass(frozen=True)
class SweepRow:
    n: int
    map: float
    p_value: float
    significant: bool


def sweep_n(
    spec: ExperimentSpec,
    corpus: Sequence[Document],
    topics: Sequence[Query],
    qrels: RelevanceJudgments,
    predictions: KeyphrasePredictions,
    out_dir: Optional[Path] = None,
) -> list[SweepRow]:
    """One row per expansion count; significance is against the n=0 row."""
    if predictions is None:
        raise ValueError("sweep requires predictions")
    out_dir = Path(out_dir if out_dir is not None else spec.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cache_dir = out_dir / ".index-cache"
    params, rm3 = spec.ranking_params(), spec.rm3_params()
    query_ids = [q.id for q in topics]

    baseline_index = build_or_load_index(corpus, spec.field_config(n=0), None, cache_dir)
    baseline_run = run_queries(baseline_index, topics, params, rm3, spec.threads)
    baseline = _evaluate(baseline_run, qrels, topics)
    baseline_ap = baseline.ap_vector(query_ids)

    rows: list[SweepRow] = []
    for n in spec.n_values:
        if n == 0:
            report = baseline
        else:
            index = build_or_load_index(
                corpus, spec.field_config(n=n), predictions, cache_dir
            )
            run = run_queries(index, topics, params, rm3, spec.threads)
            report = _evaluate(run, qrels, topics)
        test = _safe_ttest(report.ap_vector(query_ids), baseline_ap)
        p_value = test.p_value if test else float("nan")
        significant = test.significant_at_05 if test else False
        rows.append(SweepRow(n, report.map, p_value, significant))
    _write_manifest(spec, out_dir, corpus, predictions)
    return rows


def write_sweep_csv(rows: Sequence[SweepRow], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("n,map,p_value,significant\n")
        for row in rows:
            handle.write(
                f"{row.n},{row.map:.6f},{row.p_value:.6f},{int(row.significant)}\n"
            )


def _filtered_predictions(
    predictions: KeyphrasePredictions,
    corpus: Sequence[Document],
    keep_present: bool,
) -> KeyphrasePredictions:
    by_doc: dict[str, tuple[str, ...]] = {}
    for doc in corpus:
        phrases = predictions.phrases(doc.id)
        if not phrases:
            continue
        present, absent = split_present_absent(phrases, doc)
        by_doc[doc.id] = tuple(present if keep_present else absent)
    return KeyphrasePredictions(by_doc=by_doc, scores={})


@dataclass(frozen=True)
class SplitRow:
    label: str
    n_queries: int
    baseline_map: float
    map: float
    p_value: float
    significant: bool


def split_report(
    spec: ExperimentSpec,
    corpus: Sequence[Document],
    topics: Sequence[Query],
    qrels: RelevanceJudgments,
    predictions: KeyphrasePredictions,
    mode: str,
    out_dir: Optional[Path] = None,
) -> list[SplitRow]:
    """Two-column report: expansion with only present (or absent)
    keyphrases, or evaluation on in/out-domain query subsets."""
    if mode not in ("present_absent", "domain"):
        raise ValueError(f"unknown split mode {mode!r}")
    out_dir = Path(out_dir if out_dir is not None else spec.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    cache_dir = out_dir / ".index-cache"
    params, rm3 = spec.ranking_params(), spec.rm3_params()
    query_ids = [q.id for q in topics]

    baseline_index = build_or_load_index(corpus, spec.field_config(n=0), None, cache_dir)
    baseline_run = run_queries(baseline_index, topics, params, rm3, spec.threads)
    baseline = _evaluate(baseline_run, qrels, topics)

    rows: list[SplitRow] = []
    if mode == "present_absent":
        for label, keep_present in (("present", True), ("absent", False)):
            filtered = _filtered_predictions(predictions, corpus, keep_present)
            index = build_or_load_index(corpus, spec.field_config(), filtered, cache_dir)
            run = run_queries(index, topics, params, rm3, spec.threads)
            report = _evaluate(run, qrels, topics)
            test = _safe_ttest(
                report.ap_vector(query_ids), baseline.ap_vector(query_ids)
            )
            rows.append(
                SplitRow(label, len(topics), baseline.map, report.map,
                         test.p_value if test else float("nan"),
                         test.significant_at_05 if test else False)
            )
    else:
        index = build_or_load_index(corpus, spec.field_config(), predictions, cache_dir)
        run = run_queries(index, topics, params, rm3, spec.threads)
        table = (
            DomainSplitTable.from_csv(spec.domain_table) if spec.domain_table else None
        )
        in_queries, out_queries = split_queries_by_domain(topics, table)
        run_by_qid = {r.query_id: r for r in run}
        baseline_by_qid = {r.query_id: r for r in baseline_run}
        for label, subset in (("in_domain", in_queries), ("out_domain", out_queries)):
            if not subset:
                rows.append(SplitRow(label, 0, float("nan"), float("nan"), 1.0, False))
                continue
            subset_ids = [q.id for q in subset]
            sub_report = evaluate_run(
                [run_by_qid[qid] for qid in subset_ids if qid in run_by_qid],
                qrels, subset_ids,
            )
            sub_baseline = evaluate_run(
                [baseline_by_qid[qid] for qid in subset_ids if qid in baseline_by_qid],
                qrels, subset_ids,
            )
            if len(subset) >= 2:
                test = paired_t_test(
                    sub_report.ap_vector(subset_ids), sub_baseline.ap_vector(subset_ids)
                )
                p_value, significant = test.p_value, test.significant_at_05
            else:  # a t-test needs two pairs; report n/a instead of failing
                p_value, significant = float("nan"), False
            rows.append(
                SplitRow(label, len(subset), sub_baseline.map, sub_report.map,
                         p_value, significant)
            )
    _write_manifest(spec, out_dir, corpus, predictions)
    return rows


def write_split_csv(rows: Sequence[SplitRow], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("split,n_queries,baseline_map,map,p_value,significant\n")
        for row in rows:
            handle.write(
                f"{row.label},{row.n_queries},{row.baseline_map:.6f},"
                f"{row.map:.6f},{row.p_value:.6f},{int(row.significant)}\n"
            )


def write_markdown_table(
    headers: Sequence[str], rows: Sequence[Sequence[str]], path
) -> None:
    """Aligned Markdown table; significance markers are already in cells."""
    widths = [
        max(len(str(h)), *(len(str(r[i])) for r in rows)) if rows else len(str(h))
        for i, h in enumerate(headers)
    ]

    def fmt(cells) -> str:
        return "| " + " | ".join(str(c).ljust(w) for c, w in zip(cells, widths)) + " |\n"

    with open(path, "w", encoding="utf-8") as handle:
        handle.write(fmt(headers))
        handle.write("|" + "|".join("-" * (w + 2) for w in widths) + "|\n")
        for row in rows:
            handle.write(fmt(row))


def significance_marker(significant: bool) -> str:
    return "†" if significant else ""


def _write_manifest(
    spec: ExperimentSpec,
    out_dir: Path,
    corpus: Sequence[Document],
    predictions: Optional[KeyphrasePredictions],
) -> None:
    manifest = {
        "version": __version__,
        "kernel_backend": kernels.active_backend(),
        "corpus_sha256": _corpus_digest(corpus),
        "predictions_sha256": _predictions_digest(predictions),
        "parameters": {
            key: (list(value) if isinstance(value, tuple) else value)
            for key, value in sorted(spec.__dict__.items())
        },
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", "utf-8"
    )
