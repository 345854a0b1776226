"""TREC-style evaluation: AP, R-precision, P@k, and paired t-tests.

Queries with no relevant documents are excluded from the metric means
(the usual trec_eval convention) and counted in the report metadata.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from scipy.special import stdtr

from .corpus import Qrels
from .errors import DataError
from .ranking import RunResult, read_run_file

log = logging.getLogger(__name__)

PRECISION_CUTOFFS = (5, 10, 20, 100)

METRIC_KEYS = ("AP", "R-prec") + tuple(f"P@{k}" for k in PRECISION_CUTOFFS)

SUMMARY_COLUMNS = ("MAP", "R-Prec", "P@5", "P@10", "P@20", "P@100")

SIGNIFICANCE_LEVEL = 0.05

DEFAULT_DEPTH = 1000


def _check_no_duplicates(run: Sequence[str]) -> None:
    if len(set(run)) != len(run):
        raise DataError("duplicate doc_id in ranked run")


def average_precision(run: Sequence[str], relevant: set[str]) -> float:
    """AP over the full ranking; unretrieved relevant docs contribute 0."""
    if not relevant:
        raise ValueError("average_precision requires at least one relevant document")
    _check_no_duplicates(run)
    hits = 0
    total = 0.0
    for rank, doc_id in enumerate(run, start=1):
        if doc_id in relevant:
            hits += 1
            total += hits / rank
    return total / len(relevant)


def precision_at(run: Sequence[str], relevant: set[str], k: int) -> float:
    """Relevant fraction of the top k; short runs count as misses below."""
    if k < 1:
        raise ValueError("k must be >= 1")
    _check_no_duplicates(run)
    return sum(1 for d in run[:k] if d in relevant) / k


def r_precision(run: Sequence[str], relevant: set[str]) -> float:
    if not relevant:
        raise ValueError("r_precision requires at least one relevant document")
    return precision_at(run, relevant, len(relevant))


@dataclass(frozen=True)
class TTestResult:
    t_statistic: float
    p_value: float
    significant: bool
    n: int


def paired_t_test(a: Mapping[str, float], b: Mapping[str, float]) -> TTestResult:
    """Two-sided paired t-test on per-query values aligned by query_id.

    Zero-variance differences: all-zero means identical systems (t=0,
    p=1); a constant nonzero shift is treated as infinitely significant
    (p=0).
    """
    if set(a) != set(b):
        raise DataError("paired t-test requires the same query set on both sides")
    qids = sorted(a)
    n = len(qids)
    if n < 2:
        raise DataError("paired t-test requires at least 2 paired samples")
    diffs = [a[q] - b[q] for q in qids]
    mean = sum(diffs) / n
    var = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    sd = math.sqrt(var)
    if sd == 0.0:
        if mean == 0.0:
            return TTestResult(0.0, 1.0, False, n)
        t = math.inf if mean > 0 else -math.inf
        return TTestResult(t, 0.0, True, n)
    t = mean / (sd / math.sqrt(n))
    p = 2.0 * float(stdtr(n - 1, -abs(t)))
    return TTestResult(t, p, p < SIGNIFICANCE_LEVEL, n)


@dataclass
class EvalReport:
    per_query: dict[str, dict[str, float]]
    aggregates: dict[str, float]
    num_queries: int
    num_excluded: int = 0
    skipped_query_ids: list[str] = field(default_factory=list)

    def ap_by_query(self) -> dict[str, float]:
        return {q: m["AP"] for q, m in self.per_query.items()}


def _query_metrics(run: Sequence[str], relevant: set[str]) -> dict[str, float]:
    metrics = {
        "AP": average_precision(run, relevant),
        "R-prec": r_precision(run, relevant),
    }
    for k in PRECISION_CUTOFFS:
        metrics[f"P@{k}"] = precision_at(run, relevant, k)
    return metrics


def evaluate_run(
    run: str | Path | Mapping[str, Sequence[str]] | Sequence[RunResult],
    qrels: Qrels,
    depth: int = DEFAULT_DEPTH,
) -> EvalReport:
    """Score a run (file path, mapping, or RunResults) against qrels.

    Judged queries absent from the run score zero; run queries without
    judgments are skipped with a warning recorded in the report.
    """
    if isinstance(run, (str, Path)):
        per_query_run: Mapping[str, Sequence[str]] = read_run_file(run)
    elif isinstance(run, Mapping):
        per_query_run = run
    else:
        per_query_run = {r.query_id: r.doc_ids() for r in run}

    evaluated: dict[str, dict[str, float]] = {}
    excluded = 0
    for qid in qrels.query_ids():
        relevant = qrels.relevant_docs(qid)
        if not relevant:
            excluded += 1
            continue
        docs = list(per_query_run.get(qid, ()))[:depth]
        evaluated[qid] = _query_metrics(docs, relevant)

    skipped = sorted(set(per_query_run) - set(qrels.query_ids()))
    if skipped:
        log.warning("run references %d query id(s) absent from the qrels: %s",
                    len(skipped), ", ".join(skipped))

    aggregates = {}
    for col, key in zip(SUMMARY_COLUMNS, METRIC_KEYS):
        vals = [m[key] for m in evaluated.values()]
        aggregates[col] = sum(vals) / len(vals) if vals else 0.0
    return EvalReport(
        per_query=evaluated,
        aggregates=aggregates,
        num_queries=len(evaluated),
        num_excluded=excluded,
        skipped_query_ids=skipped,
    )


def write_report_tsv(report: EvalReport, path: str | Path) -> None:
    """Flat TSV: one row per query plus an aggregate row."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("query_id\t" + "\t".join(METRIC_KEYS) + "\n")
        for qid in sorted(report.per_query):
            row = report.per_query[qid]
            fh.write(qid + "\t" + "\t".join(f"{row[k]:.6f}" for k in METRIC_KEYS) + "\n")
        fh.write(
            "all\t" + "\t".join(f"{report.aggregates[c]:.6f}" for c in SUMMARY_COLUMNS) + "\n"
        )


def format_summary(report: EvalReport) -> str:
    """Compact percent summary with the usual table columns."""
    header = " | ".join(f"{c:>7}" for c in SUMMARY_COLUMNS)
    values = " | ".join(f"{100.0 * report.aggregates[c]:7.2f}" for c in SUMMARY_COLUMNS)
    meta = f"queries evaluated: {report.num_queries}, without relevant docs: {report.num_excluded}"
    return f"{header}\n{values}\n{meta}"
