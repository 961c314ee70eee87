"""Command-line entry point.

Subcommands: index (build index + IDF cache), run (batch reformulate +
retrieve), eval (metrics and significance), census (ambiguity counts),
trace (inspect trace files), repl (interactive session).

Configuration precedence is flags > ZEQR_* environment variables > config
file > defaults; the effective configuration is echoed to stderr so every
invocation is auditable. Exit codes: 0 success, 1 partial failure,
2 usage or format error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

from . import evaluation, ingest, reformulator, retrieval
from .datamodel import MODES, Config, Session, Turn, context_for_turn
from .errors import ZeqrError
from .reader import make_reader
from .text import Analyzer

logger = logging.getLogger(__name__)

ENV_PREFIX = "ZEQR_"

_CONFIG_TYPES = {
    "idf_threshold": float,
    "bm25_k1": float,
    "bm25_b": float,
    "reader_max_tokens": int,
    "min_answer_score": float,
    "mode": str,
    "map_relevance_cutoff": int,
    "omission_strict": bool,
}
_PATH_KEYS = ("collection", "topics", "qrels", "idf_cache", "index", "reader",
              "inventory", "tagger")
_ALL_KEYS = tuple(_CONFIG_TYPES) + _PATH_KEYS


def _coerce(key: str, raw: str):
    kind = _CONFIG_TYPES.get(key, str)
    if kind is bool:
        lowered = raw.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{key}: expected a boolean, got {raw!r}")
    return kind(raw.strip())


def load_config_file(path: str | Path) -> dict:
    """Parse the `key = value` config format; unknown keys are rejected."""
    values: dict = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in _ALL_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _coerce(key, raw)
    return values


def env_overrides() -> dict:
    values: dict = {}
    for key in _ALL_KEYS:
        raw = os.environ.get(ENV_PREFIX + key.upper())
        if raw is not None:
            values[key] = _coerce(key, raw)
    return values


def effective_settings(args: argparse.Namespace) -> dict:
    """Merge defaults, config file, environment and flags."""
    settings: dict = {f.name: f.default for f in dataclasses.fields(Config)}
    if getattr(args, "config", None):
        settings.update(load_config_file(args.config))
    settings.update(env_overrides())
    for key in _ALL_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def _echo(settings: dict) -> None:
    rendered = " ".join(f"{k}={settings[k]}" for k in sorted(settings))
    print(f"config: {rendered}", file=sys.stderr)


def _to_config(settings: dict) -> Config:
    return Config(**{k: v for k, v in settings.items() if k in _CONFIG_TYPES})


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


def _load_linguistic_seams(settings: dict):
    """Resolve the inventory file and tagger plugin configuration keys."""
    from .linguistics import load_pronoun_inventory

    inventory = None
    if settings.get("inventory"):
        inventory = load_pronoun_inventory(settings["inventory"])
    tagger = None
    if settings.get("tagger"):
        import importlib

        module_name, _, attr = settings["tagger"].partition(":")
        if not attr:
            raise ValueError("tagger must be 'module:attr', e.g. mypkg.tags:MyTagger")
        tagger = getattr(importlib.import_module(module_name), attr)()
    return inventory, tagger


def _index_paths(out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    return out / "index.npz", out / "idf.tsv"


def cmd_index(args: argparse.Namespace) -> int:
    settings = effective_settings(args)
    _echo(settings)
    collection_path = settings.get("collection")
    if not collection_path:
        return _fail("index needs --collection")
    if not Path(collection_path).exists():
        return _fail(f"collection file not found: {collection_path}")
    try:
        collection = ingest.load_collection(collection_path)
        analyzer = Analyzer(stem=args.stem, remove_stopwords=args.stopwords)
        index = retrieval.build_index(collection, analyzer)
        idf = ingest.build_idf_table(collection)
    except (ZeqrError, ValueError) as exc:
        return _fail(str(exc))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    index_path, idf_path = _index_paths(out)
    retrieval.save_index(index, index_path)
    ingest.save_idf_table(idf, idf_path)
    print(f"indexed {index.num_docs} documents, {index.num_terms} terms")
    return 0


def _load_run_inputs(args: argparse.Namespace, settings: dict):
    index_path = settings.get("index")
    collection_path = settings.get("collection")
    collection = None
    if collection_path:
        if not Path(collection_path).exists():
            raise FileNotFoundError(f"collection file not found: {collection_path}")
        collection = ingest.load_collection(collection_path)

    if index_path:
        index_file = Path(index_path)
        if index_file.is_dir():
            index_file = _index_paths(index_file)[0]
        index = retrieval.load_index(index_file)
        idf_path = settings.get("idf_cache") or index_file.with_name("idf.tsv")
        idf = ingest.load_idf_table(idf_path)
    elif collection is not None:
        index = retrieval.build_index(collection)
        idf = ingest.build_idf_table(collection)
    else:
        raise FileNotFoundError("run needs --index or --collection")

    topics_path = settings.get("topics")
    if not topics_path:
        raise FileNotFoundError("run needs --topics")
    sessions = ingest.load_topics(topics_path, collection)
    unresolved = sum(
        1 for s in sessions for t in s.turns
        if t.canonical_answer_id is not None and t.canonical_answer is None
    )
    if unresolved:
        logger.warning(
            "%d turns reference canonical passage ids but no --collection was "
            "given to resolve them; contexts will lack passages", unresolved)
    return index, idf, sessions


def cmd_run(args: argparse.Namespace) -> int:
    settings = effective_settings(args)
    _echo(settings)
    try:
        config = _to_config(settings)
        index, idf, sessions = _load_run_inputs(args, settings)
        reader_spec = settings.get("reader")
        if not reader_spec:
            return _fail("run needs --reader (echo, oracle:file.json, remote:url, local:path)")
        reader = make_reader(reader_spec)
        inventory, tagger = _load_linguistic_seams(settings)
    except (ZeqrError, OSError, ValueError, ImportError, AttributeError) as exc:
        return _fail(str(exc))

    results: list[retrieval.RunResult] = []
    trace_lines: list[str] = []
    attempted = failures = 0
    for session in sessions:
        for turn in session.turns:
            attempted += 1
            query_id = f"{session.session_id}_{turn.turn_id}"
            try:
                context = context_for_turn(session, turn.turn_id, config)
                trace = reformulator.reformulate(turn, context, idf, reader, config,
                                                 tagger=tagger, inventory=inventory)
                if args.endpoint:
                    result = retrieval.external_search(args.endpoint, trace.q_double_star,
                                                       args.k, query_id=query_id,
                                                       tag=args.tag)
                else:
                    result = retrieval.bm25_search(index, trace.q_double_star, args.k,
                                                   config, query_id=query_id,
                                                   tag=args.tag)
            except ZeqrError as exc:
                failures += 1
                logger.error("turn %s failed: %s", query_id, exc)
                continue
            results.append(result)
            record = {"query_id": query_id}
            record.update(trace.to_dict())
            trace_lines.append(json.dumps(record, ensure_ascii=False))

    retrieval.write_run(results, args.out)
    if args.traces:
        Path(args.traces).write_text("\n".join(trace_lines) + ("\n" if trace_lines else ""),
                                     encoding="utf-8")
    print(f"ran {attempted - failures}/{attempted} turns -> {args.out}")
    return 1 if attempted and failures == attempted else 0


def cmd_eval(args: argparse.Namespace) -> int:
    settings = effective_settings(args)
    _echo(settings)
    qrels_path = settings.get("qrels")
    if not qrels_path:
        return _fail("eval needs --qrels")
    try:
        config = _to_config(settings)
        qrels = ingest.load_qrels(qrels_path)
        runs = [retrieval.read_run(path) for path in args.run]
    except (ZeqrError, OSError, ValueError) as exc:
        return _fail(str(exc))

    reports = [evaluation.evaluate_run(run, qrels, config) for run in runs]
    for path, report in zip(args.run, reports):
        print(f"# run: {path}")
        print(evaluation.format_metric_table(report))

    if len(reports) == 2:
        first, second = reports
        common = sorted(set(first.per_query) & set(second.per_query))
        print(f"# paired t-test over {len(common)} shared queries "
              f"({args.run[0]} vs {args.run[1]})")
        print("metric\tt\tp\tsignificant(p<0.05)")
        for name in evaluation.METRIC_FIELDS:
            if len(common) < 2:
                print(f"{name}\tn/a\tn/a\tn/a")
                continue
            test = evaluation.paired_t_test(
                [first.per_query[q][name] for q in common],
                [second.per_query[q][name] for q in common],
            )
            marker = "*" if test.p_value < 0.05 else ""
            print(f"{name}\t{test.t_statistic:.4f}\t{test.p_value:.4f}\t{marker}")
    return 0


def cmd_census(args: argparse.Namespace) -> int:
    settings = effective_settings(args)
    _echo(settings)
    topics_path = settings.get("topics")
    if not topics_path:
        return _fail("census needs --topics")
    try:
        config = _to_config(settings)
        if settings.get("idf_cache"):
            idf = ingest.load_idf_table(settings["idf_cache"])
        elif settings.get("collection"):
            idf = ingest.build_idf_table(ingest.load_collection(settings["collection"]))
        else:
            return _fail("census needs --idf-cache or --collection")
        sessions = ingest.load_topics(topics_path)
        inventory, tagger = _load_linguistic_seams(settings)
    except (ZeqrError, OSError, ValueError, ImportError, AttributeError) as exc:
        return _fail(str(exc))
    census = evaluation.ambiguity_census(sessions, idf, config,
                                         tagger=tagger, inventory=inventory)
    print(evaluation.format_census(census))
    return 0


def _format_step(step: dict) -> str:
    answer = step.get("answer")
    answer_text = answer["text"] if answer else "(no answer)"
    mark = "applied" if step["applied"] else "skipped"
    return f"    Q: {step['question']}\n    A: {answer_text} [{mark}]"


def cmd_trace(args: argparse.Namespace) -> int:
    path = Path(args.file)
    if not path.exists():
        return _fail(f"trace file not found: {path}")
    try:
        records = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()
                   if line.strip()]
    except json.JSONDecodeError as exc:
        return _fail(f"{path}: invalid JSON line: {exc}")
    for record in records:
        if args.query_id and record.get("query_id") != args.query_id:
            continue
        print(f"{record.get('query_id', '?')}: {record['raw_query']}  [{record['mode']}]")
        for step in record["coref_steps"]:
            print(f"  coref {step['pronoun']['surface']!r}:")
            print(_format_step(step))
        print(f"  q*  : {record['q_star']}")
        for step in record["omission_steps"]:
            print(f"  omission {step['candidate']['surface']!r} ({step['preposition']}):")
            print(_format_step(step))
        print(f"  q** : {record['q_double_star']}")
    return 0


def cmd_repl(args: argparse.Namespace) -> int:
    settings = effective_settings(args)
    _echo(settings)
    try:
        config = _to_config(settings)
        collection_path = settings.get("collection")
        if not collection_path:
            return _fail("repl needs --collection (for passage bodies)")
        collection = ingest.load_collection(collection_path)
        bodies = {doc.doc_id: doc.body for doc in collection}
        if settings.get("index"):
            index_file = Path(settings["index"])
            if index_file.is_dir():
                index_file = _index_paths(index_file)[0]
            index = retrieval.load_index(index_file)
            idf = ingest.load_idf_table(settings.get("idf_cache")
                                        or index_file.with_name("idf.tsv"))
        else:
            index = retrieval.build_index(collection)
            idf = ingest.build_idf_table(collection)
        reader_spec = settings.get("reader")
        if not reader_spec:
            return _fail("repl needs --reader")
        reader = make_reader(reader_spec)
        inventory, tagger = _load_linguistic_seams(settings)
    except (ZeqrError, OSError, ValueError, ImportError, AttributeError) as exc:
        return _fail(str(exc))

    turns: list[Turn] = []
    last_trace: reformulator.ReformulationTrace | None = None
    print("type a query, or :reset / :trace / :quit", file=sys.stderr)
    while True:
        try:
            print("> ", end="", file=sys.stderr, flush=True)
            line = input()
        except EOFError:
            return 0
        line = line.strip()
        if not line:
            continue
        if line == ":quit":
            return 0
        if line == ":reset":
            turns = []
            last_trace = None
            print("session reset", file=sys.stderr)
            continue
        if line == ":trace":
            print(json.dumps(last_trace.to_dict(), ensure_ascii=False, indent=2)
                  if last_trace else "(no trace yet)")
            continue

        turn = Turn(turn_id=len(turns) + 1, raw_query=line)
        session = Session(session_id="repl", turns=tuple(turns) + (turn,))
        try:
            context = context_for_turn(session, turn.turn_id, config)
            trace = reformulator.reformulate(turn, context, idf, reader, config,
                                             tagger=tagger, inventory=inventory)
            result = retrieval.bm25_search(index, trace.q_double_star, args.k, config,
                                           query_id=f"repl_{turn.turn_id}")
        except ZeqrError as exc:
            print(f"error: {exc}", file=sys.stderr)
            continue
        last_trace = trace
        for step in trace.coref_steps:
            status = "->" if step.applied else "x "
            answer = step.answer.text if step.answer else "(no answer)"
            print(f"coref  {status} {step.pronoun.surface!r}: {answer}")
        for step in trace.omission_steps:
            status = "->" if step.applied else "x "
            answer = step.answer.text if step.answer else "(no answer)"
            print(f"omis   {status} {step.candidate.surface!r} {step.preposition}: {answer}")
        print(f"q**: {trace.q_double_star}")
        for rank, (doc_id, score) in enumerate(result.ranked, start=1):
            print(f"{rank}. {doc_id} {score:.4f}")

        canonical = bodies[result.ranked[0][0]] if result.ranked else None
        turns.append(Turn(turn_id=turn.turn_id, raw_query=line,
                          canonical_answer=canonical))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zeqr",
        description="Conversational query reformulation, retrieval and evaluation.",
    )
    parser.add_argument("--config", help="key = value configuration file")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--idf-threshold", dest="idf_threshold", type=float)
        p.add_argument("--bm25-k1", dest="bm25_k1", type=float)
        p.add_argument("--bm25-b", dest="bm25_b", type=float)
        p.add_argument("--reader-max-tokens", dest="reader_max_tokens", type=int)
        p.add_argument("--min-answer-score", dest="min_answer_score", type=float)
        p.add_argument("--mode", choices=MODES)
        p.add_argument("--map-relevance-cutoff", dest="map_relevance_cutoff", type=int)
        p.add_argument("--omission-lenient", dest="omission_strict",
                       action="store_const", const=False,
                       help="only the template preposition blocks a candidate")
        p.add_argument("--inventory", help="pronoun inventory file, one word per line")
        p.add_argument("--tagger", help="tagger plugin as module:attr")

    p_index = sub.add_parser("index", help="build the inverted index and IDF cache")
    p_index.add_argument("--collection")
    p_index.add_argument("--out", required=True, help="output directory")
    p_index.add_argument("--stem", action="store_true")
    p_index.add_argument("--stopwords", action="store_true")
    add_config_flags(p_index)
    p_index.set_defaults(func=cmd_index)

    p_run = sub.add_parser("run", help="reformulate every turn and retrieve")
    p_run.add_argument("--topics")
    p_run.add_argument("--index", help="index directory or .npz file")
    p_run.add_argument("--collection",
                       help="collection JSONL; resolves canonical passage ids and, "
                            "without --index, builds the index on the fly")
    p_run.add_argument("--idf-cache", dest="idf_cache")
    p_run.add_argument("--reader", help="echo | oracle:file.json | remote:url | local:path")
    p_run.add_argument("--endpoint", help="external retriever base URL")
    p_run.add_argument("--out", required=True, help="TREC run file to write")
    p_run.add_argument("--traces", help="JSONL trace file to write")
    p_run.add_argument("-k", type=int, default=100, help="ranking depth")
    p_run.add_argument("--tag", default="zeqr")
    add_config_flags(p_run)
    p_run.set_defaults(func=cmd_run)

    p_eval = sub.add_parser("eval", help="score runs against qrels")
    p_eval.add_argument("--run", action="append", required=True,
                        help="run file; repeat for a significance comparison")
    p_eval.add_argument("--qrels")
    add_config_flags(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_census = sub.add_parser("census", help="count ambiguities per raw query")
    p_census.add_argument("--topics")
    p_census.add_argument("--idf-cache", dest="idf_cache")
    p_census.add_argument("--collection")
    add_config_flags(p_census)
    p_census.set_defaults(func=cmd_census)

    p_trace = sub.add_parser("trace", help="inspect a trace file")
    p_trace.add_argument("--file", required=True)
    p_trace.add_argument("--query-id", dest="query_id")
    p_trace.set_defaults(func=cmd_trace)

    p_repl = sub.add_parser("repl", help="interactive conversational session")
    p_repl.add_argument("--collection")
    p_repl.add_argument("--index")
    p_repl.add_argument("--idf-cache", dest="idf_cache")
    p_repl.add_argument("--reader")
    p_repl.add_argument("-k", type=int, default=5)
    add_config_flags(p_repl)
    p_repl.set_defaults(func=cmd_repl)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except ValueError as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
