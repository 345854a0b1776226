"""Turn generated texts into weighted queries.

Four modes: the full concatenation (every term weighted by its count
across all generated texts), the k most frequent terms weighted by
frequency or by a fixed 1/k, and re-weighting that keeps only the
original query terms but swaps in their generated-text counts.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import Topic, TokenizationConfig, tokenize
from .generation import GeneratedSet
from .ranking import ORIGIN_EXPANDED, ORIGIN_REWEIGHTED, WeightedQuery
from .util import top_items

MODES = ("full", "top_k_frequency", "top_k_fixed", "reweight_only")


@dataclass(frozen=True)
class ExpansionConfig:
    mode: str = "full"
    k: int | None = None
    include_seed_texts: bool = True
    original_floor: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown expansion mode {self.mode!r}, expected one of {MODES}")
        if self.mode in ("top_k_frequency", "top_k_fixed"):
            if self.k is None or self.k < 1:
                raise ValueError(f"mode {self.mode!r} requires k >= 1")


def concatenation_counts(
    gen: GeneratedSet, config: TokenizationConfig | None = None, include_seed_texts: bool = True
) -> Counter[str]:
    """Term counts of the concatenation of all generated texts.

    With include_seed_texts off, the seed prefix that generators echo at
    the head of each text is stripped before counting.
    """
    seed_tokens = tokenize(gen.seed_text, config)
    counts: Counter[str] = Counter()
    for text in gen.texts:
        tokens = tokenize(text, config)
        if not include_seed_texts and tokens[: len(seed_tokens)] == seed_tokens:
            tokens = tokens[len(seed_tokens):]
        counts.update(tokens)
    return counts


def build_expanded_query(
    topic: Topic,
    gen: GeneratedSet,
    cfg: ExpansionConfig,
    config: TokenizationConfig | None = None,
) -> WeightedQuery:
    """Build the query form selected by ``cfg`` from one generated set.

    An empty generated set falls back to the original query counts.
    """
    if gen.query_id != topic.query_id:
        raise ValueError(
            f"generated set belongs to query {gen.query_id!r}, topic is {topic.query_id!r}"
        )
    original = WeightedQuery.from_text(topic.title, config)
    if not gen.texts:
        return original

    counts = concatenation_counts(gen, config, cfg.include_seed_texts)

    if cfg.mode == "full":
        return WeightedQuery(dict(counts), origin=ORIGIN_EXPANDED)

    if cfg.mode == "top_k_frequency":
        return WeightedQuery(dict(top_items(counts, cfg.k)), origin=ORIGIN_EXPANDED)

    if cfg.mode == "top_k_fixed":
        kept = top_items(counts, cfg.k)
        return WeightedQuery({t: 1.0 / cfg.k for t, _ in kept}, origin=ORIGIN_EXPANDED)

    # reweight_only: original vocabulary, generated-text counts as weights
    weights: dict[str, float] = {}
    for term, c_orig in original.terms.items():
        w = float(counts.get(term, 0))
        if cfg.original_floor:
            w = max(w, c_orig)
        weights[term] = w
    return WeightedQuery(weights, origin=ORIGIN_REWEIGHTED)


def sweep_k(
    topic: Topic,
    gen: GeneratedSet,
    k_values: Sequence[int],
    weighting: str = "frequency",
    config: TokenizationConfig | None = None,
    include_seed_texts: bool = True,
) -> dict[int, WeightedQuery]:
    """Expanded queries for each k, with fixed or frequency weights."""
    if weighting not in ("fixed", "frequency"):
        raise ValueError("weighting must be 'fixed' or 'frequency'")
    mode = "top_k_frequency" if weighting == "frequency" else "top_k_fixed"
    out: dict[int, WeightedQuery] = {}
    for k in k_values:
        cfg = ExpansionConfig(mode=mode, k=k, include_seed_texts=include_seed_texts)
        out[k] = build_expanded_query(topic, gen, cfg, config)
    return out


def write_weighted_queries(
    queries: Iterable[tuple[str, WeightedQuery]], path: str | Path
) -> None:
    """One JSON object per line: query_id, origin, term->weight map."""
    with open(path, "w", encoding="utf-8") as fh:
        for query_id, wq in queries:
            obj = {
                "query_id": query_id,
                "origin": wq.origin,
                "terms": {t: wq.terms[t] for t in sorted(wq.terms)},
            }
            fh.write(json.dumps(obj) + "\n")


def read_weighted_queries(path: str | Path) -> list[tuple[str, WeightedQuery]]:
    out: list[tuple[str, WeightedQuery]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            out.append(
                (str(obj["query_id"]), WeightedQuery(dict(obj["terms"]), origin=obj.get("origin", "raw")))
            )
    return out
