"""Command-line interface: index, search, extract, evaluate, ttest, sweep,
experiment.

Exit codes: 0 success, 1 usage error, 2 data error. Defaults reproduce the
standard configuration (BM25 k1=0.9 b=0.4, QL mu=1000, RM3 10/10/0.5,
top 1000); every run directory gets a manifest echoing resolved parameters.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .corpus import (
    load_corpus,
    load_predictions,
    load_qrels,
    load_topics,
    save_predictions,
)
from .errors import KpsearchError
from .evaluation import (
    evaluate_run,
    paired_t_test,
    read_per_query_csv,
    write_aggregate_json,
    write_per_query_csv,
)
from .experiments import (
    ExperimentSpec,
    load_spec,
    resolve_predictions,
    run_experiment,
    run_queries,
    significance_marker,
    split_report,
    sweep_n,
    write_markdown_table,
    write_split_csv,
    write_sweep_csv,
)
from .index import InvertedIndex, build_index
from .mprank import MpRankParams, batch_extract
from .ranking import read_run, write_run


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_ranking_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", choices=("bm25", "ql"), default="bm25",
                        help="ranking model (default: %(default)s)")
    parser.add_argument("--rm3", action="store_true",
                        help="apply RM3 pseudo-relevance feedback")
    parser.add_argument("--k1", type=float, default=0.9,
                        help="BM25 k1 (default: %(default)s)")
    parser.add_argument("--b", type=float, default=0.4,
                        help="BM25 b (default: %(default)s)")
    parser.add_argument("--mu", type=float, default=1000.0,
                        help="QL Dirichlet mu (default: %(default)s)")
    parser.add_argument("--fb-docs", type=int, default=10,
                        help="RM3 feedback documents (default: %(default)s)")
    parser.add_argument("--fb-terms", type=int, default=10,
                        help="RM3 feedback terms (default: %(default)s)")
    parser.add_argument("--orig-weight", type=float, default=0.5,
                        help="RM3 original-query weight (default: %(default)s)")
    parser.add_argument("--top-k", type=int, default=1000,
                        help="ranking depth (default: %(default)s)")


def _add_field_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--fields", choices=("ta", "tak"), default="ta",
                        help="indexed fields: title+abstract or +keywords "
                             "(default: %(default)s)")
    parser.add_argument("--n", type=int, default=0,
                        help="predicted keyphrases indexed per document "
                             "(default: %(default)s)")
    parser.add_argument("--predictions", help="predictions JSONL path")


def _spec_from_flags(args: argparse.Namespace) -> ExperimentSpec:
    return ExperimentSpec(
        fields=args.fields, n=args.n, model=args.model, rm3=args.rm3,
        k1=args.k1, b=args.b, mu=args.mu, fb_docs=args.fb_docs,
        fb_terms=args.fb_terms, orig_weight=args.orig_weight,
        top_k=args.top_k, threads=args.threads, tag=args.tag,
    )


def _write_cli_manifest(path: Path, command: str, params: dict) -> None:
    payload = {"version": __version__, "command": command,
               "parameters": {k: v for k, v in sorted(params.items())}}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", "utf-8")


def _build_parser() -> _Parser:
    parser = _Parser(prog="kpsearch", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="build and save an index snapshot")
    p.add_argument("--corpus", required=True, help="corpus JSONL")
    _add_field_flags(p)
    p.add_argument("--out", required=True, help="snapshot output path")

    p = sub.add_parser("search", help="rank topics, emit a TREC run file")
    p.add_argument("--corpus", help="corpus JSONL (builds the index)")
    p.add_argument("--index", help="index snapshot (alternative to --corpus)")
    p.add_argument("--topics", required=True, help="topic file (TREC or JSONL)")
    _add_field_flags(p)
    _add_ranking_flags(p)
    p.add_argument("--out", required=True, help="run file output path")
    p.add_argument("--tag", default="kpsearch", help="run tag (default: %(default)s)")
    p.add_argument("--threads", type=int, default=1,
                   help="search worker threads; output is identical at any "
                        "count (default: %(default)s)")
    p.add_argument("--seed", type=int, help="reserved; the pipeline is deterministic")

    p = sub.add_parser("extract", help="extract keyphrases to predictions JSONL")
    p.add_argument("--corpus", required=True, help="corpus JSONL")
    p.add_argument("--n", type=int, default=5,
                   help="keyphrases per document (default: %(default)s)")
    p.add_argument("--out", required=True, help="predictions JSONL output path")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads (default: %(default)s)")

    p = sub.add_parser("evaluate", help="MAP and P@10 of a run against qrels")
    p.add_argument("--run", required=True, help="TREC run file")
    p.add_argument("--qrels", required=True, help="TREC qrels file")
    p.add_argument("--binary-threshold", type=int,
                   help="grade mapped to relevant (default: highest grade)")
    p.add_argument("--per-query", help="write per-query CSV here")
    p.add_argument("--out", help="write aggregate JSON here")

    p = sub.add_parser("ttest", help="paired t-test between two per-query CSVs")
    p.add_argument("--a", required=True, help="per-query CSV (variant)")
    p.add_argument("--b", required=True, help="per-query CSV (baseline)")
    p.add_argument("--metric", choices=("ap", "p10"), default="ap",
                   help="column to compare (default: %(default)s)")

    for name, help_text in (
        ("sweep", "expansion-count sweep from a config file"),
        ("experiment", "one experiment configuration from a config file"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="TOML or JSON config")
        p.add_argument("--corpus")
        p.add_argument("--topics")
        p.add_argument("--qrels")
        p.add_argument("--predictions")
        p.add_argument("--fields", choices=("ta", "tak"))
        p.add_argument("--n", type=int)
        p.add_argument("--model", choices=("bm25", "ql"))
        p.add_argument("--rm3", action="store_const", const=True, default=None)
        p.add_argument("--no-rm3", dest="rm3", action="store_const", const=False)
        p.add_argument("--k1", type=float)
        p.add_argument("--b", type=float)
        p.add_argument("--mu", type=float)
        p.add_argument("--fb-docs", type=int, dest="fb_docs")
        p.add_argument("--fb-terms", type=int, dest="fb_terms")
        p.add_argument("--orig-weight", type=float, dest="orig_weight")
        p.add_argument("--top-k", type=int, dest="top_k")
        p.add_argument("--domain-table", dest="domain_table",
                       help="research-field CSV overriding the bundled table")
        p.add_argument("--out")
        p.add_argument("--threads", type=int)
        p.add_argument("--seed", type=int)
    return parser


def _cmd_index(args) -> int:
    corpus = load_corpus(args.corpus)
    predictions = load_predictions(args.predictions) if args.predictions else None
    spec = ExperimentSpec(fields=args.fields, n=args.n)
    index = build_index(corpus, spec.field_config(), predictions)
    index.save(args.out)
    _write_cli_manifest(
        Path(args.out).with_suffix(".manifest.json"), "index",
        {"corpus": args.corpus, "fields": args.fields, "n": args.n,
         "predictions": args.predictions, "out": args.out},
    )
    print(f"indexed {index.n_docs} documents, {index.n_terms} terms, "
          f"collection length {int(index.collection_len)}")
    return 0


def _cmd_search(args) -> int:
    if bool(args.corpus) == bool(args.index):
        raise UsageError("search: exactly one of --corpus or --index is required")
    if args.index:
        index = InvertedIndex.load(args.index)
    else:
        corpus = load_corpus(args.corpus)
        predictions = load_predictions(args.predictions) if args.predictions else None
        spec = _spec_from_flags(args)
        index = build_index(corpus, spec.field_config(), predictions)
    topics = load_topics(args.topics)
    spec = _spec_from_flags(args)
    run = run_queries(index, topics, spec.ranking_params(), spec.rm3_params(),
                      args.threads)
    write_run(run, args.out, args.tag)
    _write_cli_manifest(
        Path(args.out).with_suffix(".manifest.json"), "search",
        {key: getattr(args, key) for key in (
            "corpus", "index", "topics", "fields", "n", "predictions", "model",
            "rm3", "k1", "b", "mu", "fb_docs", "fb_terms", "orig_weight",
            "top_k", "threads", "seed", "tag", "out")},
    )
    print(f"wrote {sum(len(r) for r in run)} result lines for "
          f"{len(topics)} topics to {args.out}")
    return 0


def _cmd_extract(args) -> int:
    corpus = load_corpus(args.corpus)
    predictions = batch_extract(corpus, args.n, MpRankParams(), threads=args.threads)
    save_predictions(predictions, args.out)
    print(f"extracted keyphrases for {len(predictions)} documents to {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    run = read_run(args.run)
    qrels = load_qrels(args.qrels, args.binary_threshold)
    report = evaluate_run(run, qrels)
    if args.per_query:
        write_per_query_csv(report, args.per_query)
    if args.out:
        write_aggregate_json(report, args.out)
    print(f"MAP {report.map:.4f}")
    print(f"P@10 {report.p_at_10:.4f}")
    print(f"queries {report.n_queries}")
    return 0


def _cmd_ttest(args) -> int:
    column = 0 if args.metric == "ap" else 1
    a = read_per_query_csv(args.a)
    b = read_per_query_csv(args.b)
    if set(a) != set(b):
        raise KpsearchError("per-query files cover different query sets")
    qids = sorted(a)
    result = paired_t_test([a[q][column] for q in qids], [b[q][column] for q in qids])
    print(f"t {result.t_statistic:.4f}")
    print(f"df {result.degrees_of_freedom}")
    print(f"p {result.p_value:.6f}")
    print(f"significant_at_05 {'yes' if result.significant_at_05 else 'no'}")
    return 0


def _spec_overrides(args) -> dict:
    keys = ("corpus", "topics", "qrels", "predictions", "fields", "n", "model",
            "rm3", "k1", "b", "mu", "fb_docs", "fb_terms", "orig_weight",
            "top_k", "domain_table", "out", "threads", "seed")
    return {key: getattr(args, key) for key in keys}


def _load_inputs(spec: ExperimentSpec):
    if not spec.corpus or not spec.topics or not spec.qrels:
        raise UsageError("config must provide corpus, topics and qrels")
    corpus = load_corpus(spec.corpus)
    topics = load_topics(spec.topics)
    qrels = load_qrels(spec.qrels)
    predictions = resolve_predictions(spec, corpus)
    return corpus, topics, qrels, predictions


def _cmd_sweep(args) -> int:
    spec = load_spec(args.config, _spec_overrides(args))
    corpus, topics, qrels, predictions = _load_inputs(spec)
    if predictions is None:
        raise UsageError("sweep requires predictions (path or internal-mprank)")
    rows = sweep_n(spec, corpus, topics, qrels, predictions)
    out_dir = Path(spec.out)
    write_sweep_csv(rows, out_dir / "sweep.csv")
    write_markdown_table(
        ["n", "map", "p_value", "sig"],
        [[row.n, f"{row.map:.4f}", f"{row.p_value:.4f}",
          significance_marker(row.significant)] for row in rows],
        out_dir / "sweep.md",
    )
    for row in rows:
        print(f"n={row.n} map={row.map:.4f} p={row.p_value:.4f}"
              f"{' ' + significance_marker(row.significant) if row.significant else ''}")
    return 0


def _cmd_experiment(args) -> int:
    spec = load_spec(args.config, _spec_overrides(args))
    corpus, topics, qrels, predictions = _load_inputs(spec)
    out_dir = Path(spec.out)
    if spec.split in ("present", "absent", "in_domain", "out_domain"):
        mode = "present_absent" if spec.split in ("present", "absent") else "domain"
        rows = split_report(spec, corpus, topics, qrels, predictions, mode)
        write_split_csv(rows, out_dir / "split.csv")
        write_markdown_table(
            ["split", "queries", "baseline", "map", "p_value", "sig"],
            [[row.label, row.n_queries, f"{row.baseline_map:.4f}",
              f"{row.map:.4f}", f"{row.p_value:.4f}",
              significance_marker(row.significant)] for row in rows],
            out_dir / "split.md",
        )
        for row in rows:
            print(f"{row.label}: baseline={row.baseline_map:.4f} "
                  f"map={row.map:.4f} p={row.p_value:.4f}")
        return 0
    result = run_experiment(spec, corpus, topics, qrels, predictions)
    print(f"MAP {result.report.map:.4f}")
    print(f"P@10 {result.report.p_at_10:.4f}")
    if result.ttest is not None:
        print(f"baseline MAP {result.baseline_report.map:.4f}")
        print(f"p {result.ttest.p_value:.6f}"
              f"{' ' + significance_marker(True) if result.ttest.significant_at_05 else ''}")
    return 0


_COMMANDS = {
    "index": _cmd_index,
    "search": _cmd_search,
    "extract": _cmd_extract,
    "evaluate": _cmd_evaluate,
    "ttest": _cmd_ttest,
    "sweep": _cmd_sweep,
    "experiment": _cmd_experiment,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"kpsearch: {exc}", file=sys.stderr)
        return 1
    except (KpsearchError, FileNotFoundError, ValueError, OSError) as exc:
        print(f"kpsearch: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
