"""BM25+ and LM-Dirichlet scoring over the inverted index.

Both models share one retrieval status value, the sum over query terms
of query-side weight times document-side weight. BM25+ sums over terms
present in the document; LM-Dirichlet is defined over all query terms
and scores absent terms with the tf=0 smoothing floor, folded in as a
per-document constant plus matched-term corrections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .corpus import TokenizationConfig, tokenize
from .errors import DataError
from .index import InvertedIndex

MODELS = ("bm25plus", "lm_dirichlet")

DEFAULT_TOP_K = 1000

ORIGIN_RAW = "raw"
ORIGIN_EXPANDED = "expanded"
ORIGIN_REWEIGHTED = "reweighted"


@dataclass(frozen=True)
class WeightedQuery:
    """Universal query representation: term -> non-negative weight.

    Raw queries carry integer counts c(t,q); expanded and reweighted
    queries carry real weights. Zero-weight terms are dropped.
    """

    terms: dict[str, float]
    origin: str = ORIGIN_RAW
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        cleaned = {}
        for term, w in self.terms.items():
            w = float(w)
            if w < 0:
                raise ValueError(f"negative query weight for {term!r}")
            if w > 0:
                cleaned[term] = w
        object.__setattr__(self, "terms", cleaned)

    @classmethod
    def from_tokens(cls, tokens: Iterable[str], origin: str = ORIGIN_RAW) -> "WeightedQuery":
        counts: dict[str, float] = {}
        for t in tokens:
            counts[t] = counts.get(t, 0.0) + 1.0
        return cls(terms=counts, origin=origin)

    @classmethod
    def from_text(cls, text: str, config: TokenizationConfig | None = None) -> "WeightedQuery":
        return cls.from_tokens(tokenize(text, config))

    def normalized(self) -> "WeightedQuery":
        total = sum(self.terms.values())
        if total == 0:
            return WeightedQuery({}, origin=self.origin, meta=dict(self.meta))
        return WeightedQuery(
            {t: w / total for t, w in self.terms.items()},
            origin=self.origin,
            meta=dict(self.meta),
        )

    def __len__(self) -> int:
        return len(self.terms)


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    k3: float = 1000.0
    b: float = 0.75
    delta: float = 1.0

    def __post_init__(self):
        if self.k1 <= 0 or self.k3 <= 0:
            raise ValueError("k1 and k3 must be positive")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError("b must lie in [0, 1]")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")


@dataclass(frozen=True)
class DirichletParams:
    mu: float = 2500.0

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("mu must be positive")


@dataclass
class RunResult:
    """Ranked output for one query: (doc_id, score) sorted by score
    descending, ties broken by ascending doc_id."""

    query_id: str
    ranking: list[tuple[str, float]]
    run_tag: str = "genqe"

    def __post_init__(self):
        seen = set()
        for doc_id, _ in self.ranking:
            if doc_id in seen:
                raise ValueError(f"duplicate doc_id {doc_id!r} in ranking")
            seen.add(doc_id)

    def doc_ids(self) -> list[str]:
        return [d for d, _ in self.ranking]


def bm25plus_wd(tf: float, dl: float, avdl: float, n_docs: int, df: int, params: Bm25Params) -> float:
    """Document-side BM25+ weight; callers must skip terms with df=0."""
    if df <= 0 or df > n_docs:
        raise ValueError(f"df must lie in [1, N]; got df={df}, N={n_docs}")
    if tf < 1:
        raise ValueError("bm25plus_wd is defined for tf >= 1")
    norm = params.k1 * (1.0 - params.b + params.b * dl / avdl) + tf
    return ((params.k1 + 1.0) * tf / norm + params.delta) * math.log((n_docs + 1.0) / df)


def bm25plus_wq(weight: float, params: Bm25Params) -> float:
    """Query-side BM25+ saturation; accepts real-valued weights."""
    if weight <= 0:
        raise ValueError("query-side weight must be positive")
    return (params.k3 + 1.0) * weight / (params.k3 + weight)


def lm_dirichlet_wd(tf: float, dl: float, mu: float, p_tc: float) -> float:
    """Dirichlet-smoothed document weight; p(t|C) must be positive and
    dl >= 1 (zero-length documents never reach the scorer)."""
    if p_tc <= 0:
        raise ValueError("p(t|C) must be positive; skip terms unseen in the collection")
    if dl < 1:
        raise ValueError("dl must be >= 1")
    return math.log(mu / (dl + mu) + tf / ((dl + mu) * p_tc))


def score_all(
    index: InvertedIndex,
    query: WeightedQuery,
    model: str = "bm25plus",
    params: Bm25Params | DirichletParams | None = None,
    *,
    query_id: str = "",
    top_k: int = DEFAULT_TOP_K,
    run_tag: str = "genqe",
    kernel_backend=None,
) -> RunResult:
    """Rank all documents matching at least one query term.

    Unknown terms (df=0) are dropped; if nothing remains the result is
    empty. Results are truncated to ``top_k``.
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}, expected one of {MODELS}")
    kern = kernel_backend or kernels.active

    terms = [(t, w) for t, w in sorted(query.terms.items()) if index.df(t) > 0]
    if not terms:
        return RunResult(query_id=query_id, ranking=[], run_tag=run_tag)

    n = index.n_docs
    acc = np.zeros(n, dtype=np.float64)
    doc_lengths = index.stats.doc_lengths

    if model == "bm25plus":
        p = params or Bm25Params()
        if not isinstance(p, Bm25Params):
            raise TypeError("bm25plus scoring requires Bm25Params")
        for term, w in terms:
            ords, tfs = index.postings_arrays(term)
            idf = math.log((n + 1.0) / len(ords))
            kern.bm25plus_accumulate(
                acc, ords, tfs, doc_lengths, bm25plus_wq(w, p), idf, p.k1, p.b, p.delta, index.avdl
            )
        matched = np.flatnonzero(acc > 0.0)
        scores = acc[matched]
    else:
        p = params or DirichletParams()
        if not isinstance(p, DirichletParams):
            raise TypeError("lm_dirichlet scoring requires DirichletParams")
        wq_sum = 0.0
        for term, w in terms:
            ords, tfs = index.postings_arrays(term)
            kern.lm_dirichlet_accumulate(acc, ords, tfs, w, p.mu, index.p_collection(term))
            wq_sum += w
        matched = np.flatnonzero(acc > 0.0)
        dl = doc_lengths[matched].astype(np.float64)
        scores = acc[matched] + wq_sum * np.log(p.mu / (dl + p.mu))

    ids = np.array([index.doc_ids[o] for o in matched])
    order = np.lexsort((ids, -scores))[:top_k]
    ranking = [(str(ids[i]), float(scores[i])) for i in order]
    return RunResult(query_id=query_id, ranking=ranking, run_tag=run_tag)


def write_run_file(results: Sequence[RunResult], path: str | Path) -> None:
    """TREC 6-column run format, rank starting at 1, >= 6 significant digits."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for res in sorted(results, key=lambda r: r.query_id):
            for rank, (doc_id, score) in enumerate(res.ranking, start=1):
                fh.write(f"{res.query_id} Q0 {doc_id} {rank} {score:.9g} {res.run_tag}\n")


def read_run_file(path: str | Path) -> dict[str, list[str]]:
    """Parse a TREC run file into query_id -> doc_ids ordered by the rank column."""
    per_query: dict[str, list[tuple[int, str, float]]] = {}
    if not Path(path).is_file():
        raise DataError(f"run file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 6:
                raise DataError(f"run file line {lineno}: expected 6 fields, got {len(parts)}")
            qid, _, doc_id, rank_s, _score, _tag = parts
            try:
                rank = int(rank_s)
            except ValueError as exc:
                raise DataError(f"run file line {lineno}: bad rank {rank_s!r}") from exc
            per_query.setdefault(qid, []).append((rank, doc_id, 0.0))
    out: dict[str, list[str]] = {}
    for qid, entries in per_query.items():
        entries.sort(key=lambda e: e[0])
        docs = [d for _, d, _ in entries]
        if len(set(docs)) != len(docs):
            raise DataError(f"duplicate doc_id in run for query {qid!r}")
        out[qid] = docs
    return out
