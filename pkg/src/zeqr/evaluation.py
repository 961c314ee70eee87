"""Ranking metrics (NDCG@5, P@5, R@100, MAP), paired t-tests, and the
per-query ambiguity census.

Metric conventions follow trec_eval: gain is the raw relevance grade,
unjudged documents count as non-relevant, and queries without relevant
documents are dropped from the means rather than scored zero. The binary
relevance cutoff for P/R/AP is configurable (grade >= cutoff counts).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .datamodel import Config, Session
from .ingest import IdfTable, Qrels
from .linguistics import Tagger, detect_pronouns, find_omission_candidates, tokenize_and_tag
from .retrieval import RunResult

logger = logging.getLogger(__name__)

METRIC_FIELDS = ("ndcg_at_5", "p_at_5", "r_at_100", "ap")


@dataclass
class MetricReport:
    """Per-query metric values and their arithmetic means."""

    per_query: dict[str, dict[str, float]]
    means: dict[str, float]
    num_queries: int
    num_unjudged: int = 0


@dataclass
class AmbiguityCensus:
    """Which raw queries carry which ambiguity, with totals."""

    coreference_count: int
    omission_count: int
    per_turn: dict[tuple[str, int], dict[str, bool]] = field(default_factory=dict)


def _discount(rank: int) -> float:
    return 1.0 / math.log2(rank + 1.0)


def _query_metrics(ranked_docs: list[str], judged: dict[str, int], cutoff: int) -> dict[str, float]:
    relevant = {d for d, g in judged.items() if g >= cutoff}

    dcg = sum(judged.get(d, 0) * _discount(rank)
              for rank, d in enumerate(ranked_docs[:5], start=1))
    ideal_gains = sorted(judged.values(), reverse=True)[:5]
    idcg = sum(g * _discount(rank) for rank, g in enumerate(ideal_gains, start=1))
    ndcg = dcg / idcg if idcg > 0 else 0.0

    p_at_5 = sum(1 for d in ranked_docs[:5] if d in relevant) / 5.0
    r_at_100 = len([d for d in ranked_docs[:100] if d in relevant]) / len(relevant)

    hits = 0
    precision_sum = 0.0
    for rank, doc in enumerate(ranked_docs, start=1):
        if doc in relevant:
            hits += 1
            precision_sum += hits / rank
    ap = precision_sum / len(relevant)

    return {"ndcg_at_5": ndcg, "p_at_5": p_at_5, "r_at_100": r_at_100, "ap": ap}


def evaluate_run(run: list[RunResult], qrels: Qrels, config: Config) -> MetricReport:
    """Score a run against qrels.

    Queries absent from the qrels are skipped with a warning count;
    queries whose judgments contain no relevant document are dropped from
    the means, matching trec_eval.
    """
    cutoff = config.map_relevance_cutoff
    judged_query_ids = qrels.query_ids()
    per_query: dict[str, dict[str, float]] = {}
    num_unjudged = 0
    for result in run:
        if result.query_id not in judged_query_ids:
            num_unjudged += 1
            continue
        judged = qrels.judged_docs(result.query_id)
        if not any(g >= cutoff for g in judged.values()):
            continue
        ranked_docs = [doc_id for doc_id, _ in result.ranked]
        per_query[result.query_id] = _query_metrics(ranked_docs, judged, cutoff)
    if num_unjudged:
        logger.warning("%d run queries had no qrels entries and were skipped",
                       num_unjudged)

    if per_query:
        means = {
            name: sum(metrics[name] for metrics in per_query.values()) / len(per_query)
            for name in METRIC_FIELDS
        }
    else:
        means = {name: math.nan for name in METRIC_FIELDS}
    return MetricReport(per_query=per_query, means=means,
                        num_queries=len(per_query), num_unjudged=num_unjudged)


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    p_value: float
    degenerate: bool = False


def paired_t_test(a: list[float], b: list[float]) -> TTestResult:
    """Two-sided paired t-test on per-query differences.

    Identical samples give t=0, p=1. Zero-variance differences with a
    nonzero mean are reported as p=0 with the degenerate flag set, since
    the statistic diverges.
    """
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("samples must be 1-d and of equal length")
    n = len(x)
    if n < 2:
        raise ValueError(f"need at least 2 paired observations, got {n}")
    diff = x - y
    mean = float(diff.mean())
    sd = float(diff.std(ddof=1))
    if sd == 0.0:
        if mean == 0.0:
            return TTestResult(t_statistic=0.0, p_value=1.0, degenerate=True)
        return TTestResult(t_statistic=math.copysign(math.inf, mean),
                           p_value=0.0, degenerate=True)
    t = mean / (sd / math.sqrt(n))
    p = 2.0 * float(stats.t.sf(abs(t), df=n - 1))
    return TTestResult(t_statistic=t, p_value=p)


def ambiguity_census(
    sessions: list[Session],
    idf: IdfTable,
    config: Config,
    tagger: Tagger | None = None,
    inventory: frozenset[str] | None = None,
) -> AmbiguityCensus:
    """Flag each raw query for coreference/omission ambiguity and count."""
    per_turn: dict[tuple[str, int], dict[str, bool]] = {}
    for session in sessions:
        for turn in session.turns:
            tokens = tokenize_and_tag(turn.raw_query, tagger)
            has_coref = bool(detect_pronouns(tokens, inventory))
            has_omission = bool(
                find_omission_candidates(tokens, idf, config.idf_threshold,
                                         config.omission_strict)
            )
            per_turn[(session.session_id, turn.turn_id)] = {
                "has_coref": has_coref,
                "has_omission": has_omission,
            }
    return AmbiguityCensus(
        coreference_count=sum(1 for f in per_turn.values() if f["has_coref"]),
        omission_count=sum(1 for f in per_turn.values() if f["has_omission"]),
        per_turn=per_turn,
    )


def format_metric_table(report: MetricReport) -> str:
    """Render the TSV table: one row per query plus the `all` means row."""
    lines = ["query_id\tndcg@5\tp@5\tr@100\tap"]
    for query_id in sorted(report.per_query):
        metrics = report.per_query[query_id]
        lines.append(query_id + "\t" + "\t".join(
            f"{metrics[name]:.4f}" for name in METRIC_FIELDS))
    if report.num_queries:
        means = "\t".join(f"{report.means[name]:.4f}" for name in METRIC_FIELDS)
    else:
        means = "\t".join("n/a" for _ in METRIC_FIELDS)
    lines.append(f"all\t{means}")
    return "\n".join(lines)


def write_metric_report(report: MetricReport, path: str | Path) -> None:
    Path(path).write_text(format_metric_table(report) + "\n", encoding="utf-8")


def format_census(census: AmbiguityCensus) -> str:
    """Render the per-turn census TSV plus the totals rows."""
    lines = ["session_id\tturn_id\thas_coref\thas_omission"]
    for (session_id, turn_id) in sorted(census.per_turn):
        flags = census.per_turn[(session_id, turn_id)]
        lines.append(f"{session_id}\t{turn_id}\t"
                     f"{int(flags['has_coref'])}\t{int(flags['has_omission'])}")
    lines.append(f"coreference\t{census.coreference_count}")
    lines.append(f"omission\t{census.omission_count}")
    return "\n".join(lines)


def write_census(census: AmbiguityCensus, path: str | Path) -> None:
    Path(path).write_text(format_census(census) + "\n", encoding="utf-8")
