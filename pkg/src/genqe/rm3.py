"""RM3 pseudo-relevance feedback over a first-pass LM retrieval.

Relevance model: p(t|R) proportional to the sum over the top feedback
documents of the Dirichlet-smoothed document model p(t|d) times the
query likelihood p(q|d) = exp(first-pass score). The model is truncated
to the strongest terms, renormalized, and interpolated with the original
query's maximum-likelihood distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .index import InvertedIndex
from .ranking import ORIGIN_EXPANDED, DirichletParams, RunResult, WeightedQuery
from .util import top_items


@dataclass(frozen=True)
class Rm3Config:
    fb_docs: int = 10
    fb_terms: int = 100
    lambda_orig: float = 0.5

    def __post_init__(self):
        if self.fb_docs < 1:
            raise ValueError("fb_docs must be >= 1")
        if self.fb_terms < 1:
            raise ValueError("fb_terms must be >= 1")
        if not 0.0 <= self.lambda_orig <= 1.0:
            raise ValueError("lambda_orig must lie in [0, 1]")


def rm3_expand(
    index: InvertedIndex,
    query: WeightedQuery,
    first_pass: RunResult,
    cfg: Rm3Config,
    dirichlet: DirichletParams | None = None,
) -> WeightedQuery:
    """Expand ``query`` from the top-ranked documents of ``first_pass``.

    Output weights are a probability distribution (sum 1). An empty
    first pass falls back to the normalized original query, flagged in
    the result metadata.
    """
    if not first_pass.ranking:
        out = query.normalized()
        return WeightedQuery(out.terms, origin=ORIGIN_EXPANDED, meta={"fallback": "empty-first-pass"})

    q_mle = query.normalized().terms
    # The lambda=1 endpoint bypasses feedback entirely so the identity
    # with the normalized original query is exact in floats.
    if cfg.lambda_orig == 1.0:
        return WeightedQuery(dict(q_mle), origin=ORIGIN_EXPANDED)

    mu = (dirichlet or DirichletParams()).mu
    fb = first_pass.ranking[: cfg.fb_docs]
    max_score = max(s for _, s in fb)
    doc_weights = {doc_id: math.exp(s - max_score) for doc_id, s in fb}

    ordinals = {doc_id: index.ordinal(doc_id) for doc_id in doc_weights}
    vectors = index.doc_term_vectors(list(ordinals.values()))
    doc_lengths = index.stats.doc_lengths

    candidates: set[str] = set()
    for vec in vectors.values():
        candidates.update(vec)

    rel_model: dict[str, float] = {}
    for term in sorted(candidates):
        p_tc = index.p_collection(term)
        mass = 0.0
        for doc_id, w in doc_weights.items():
            o = ordinals[doc_id]
            tf = vectors[o].get(term, 0)
            mass += w * (tf + mu * p_tc) / (float(doc_lengths[o]) + mu)
        rel_model[term] = mass

    total = sum(rel_model.values())
    rel_model = {t: v / total for t, v in rel_model.items()}

    kept = dict(top_items(rel_model, cfg.fb_terms))
    kept_total = sum(kept.values())
    kept = {t: v / kept_total for t, v in kept.items()}

    lam = cfg.lambda_orig
    combined: dict[str, float] = {}
    for term in set(q_mle) | set(kept):
        combined[term] = lam * q_mle.get(term, 0.0) + (1.0 - lam) * kept.get(term, 0.0)
    norm = sum(combined.values())
    combined = {t: v / norm for t, v in combined.items()}
    return WeightedQuery(combined, origin=ORIGIN_EXPANDED)
