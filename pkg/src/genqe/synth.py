"""Deterministic synthetic retrieval collection.

Documents mix a Zipf-distributed background vocabulary with one topical
term distribution per query topic. Topic vocabularies are sampled from
a shared pool whose popular terms belong to many topics, so topics
genuinely confuse each other; how topical a relevant document is varies
per document. Background documents occasionally leak a few uniformly
drawn topical terms, which penalizes expansion weightings that ignore
term frequency. Everything derives from one seeded PCG64 stream.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Document, Qrels, Topic, TokenizationConfig, write_documents_jsonl, write_qrels, write_topics_jsonl
from .util import derived_rng


@dataclass
class SyntheticCollection:
    documents: list[Document]
    topics: list[Topic]
    qrels: Qrels

    def write(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "corpus": out / "corpus.jsonl",
            "topics": out / "topics.jsonl",
            "qrels": out / "qrels.txt",
        }
        write_documents_jsonl(self.documents, paths["corpus"])
        write_topics_jsonl(self.topics, paths["topics"])
        write_qrels(self.qrels, paths["qrels"])
        return paths


def _zipf(n: int, exponent: float) -> np.ndarray:
    p = (np.arange(1, n + 1, dtype=np.float64)) ** (-exponent)
    return p / p.sum()


def build_synthetic_collection(
    n_docs: int = 2000,
    n_topics: int = 50,
    n_rel_per_topic: int = 15,
    topic_vocab: int = 60,
    doc_topic_terms: int = 18,
    topic_pool: int = 600,
    pool_zipf: float = 1.0,
    bg_vocab: int = 400,
    topic_zipf: float = 0.8,
    bg_zipf: float = 1.0,
    topic_mix_range: tuple[float, float] = (0.25, 0.6),
    contam_prob: float = 0.5,
    contam_frac: float = 0.35,
    doc_len_range: tuple[int, int] = (40, 80),
    leak_prob: float = 0.35,
    leak_tokens: tuple[int, int] = (2, 4),
    query_noise_ranks: tuple[int, int] = (10, 40),
    seed: int = 91501,
) -> SyntheticCollection:
    """Build the collection; same arguments always yield identical data."""
    n_rel_total = n_topics * n_rel_per_topic
    if n_rel_total >= n_docs:
        raise ValueError("n_docs must exceed n_topics * n_rel_per_topic")
    rng = derived_rng(seed, "synthetic-collection")

    bg_terms = np.array([f"bg{i:03d}" for i in range(bg_vocab)])
    bg_dist = _zipf(bg_vocab, bg_zipf)

    pool = np.array([f"tw{i:03d}" for i in range(topic_pool)])
    pool_dist = _zipf(topic_pool, pool_zipf)
    # popular pool terms land in many topics and blur them together; a
    # topic's most frequent terms are its most specific ones (rarest in
    # the pool), the way a topic's core vocabulary is distinctive
    topic_terms = []
    for _ in range(n_topics):
        chosen = rng.choice(topic_pool, size=topic_vocab, replace=False, p=pool_dist)
        topic_terms.append(pool[np.sort(chosen)[::-1]])
    topic_dist = _zipf(topic_vocab, topic_zipf)

    config = TokenizationConfig()
    documents: list[Document] = []
    qrels_entries: dict[tuple[str, str], int] = {}
    topics: list[Topic] = []

    lo, hi = doc_len_range
    mix_lo, mix_hi = topic_mix_range
    doc_no = 0

    for ti in range(n_topics):
        qid = f"q{ti:03d}"
        for _ in range(n_rel_per_topic):
            length = int(rng.integers(lo, hi + 1))
            mix = float(rng.uniform(mix_lo, mix_hi))
            n_topical = int(rng.binomial(length, mix))
            # each document uses its own slice of the topic vocabulary;
            # core (frequent) terms recur across documents, rare ones
            # are hit-or-miss
            sub = rng.choice(topic_vocab, size=min(doc_topic_terms, topic_vocab), replace=False, p=topic_dist)
            sub_dist = topic_dist[sub] / topic_dist[sub].sum()
            # documents are multi-topical: some carry a slice of a
            # sibling topic, which is what leaks off-topic terms into
            # expansion models fitted on relevant documents
            n_own = n_topical
            n_sib = 0
            if n_topics > 1 and rng.random() < contam_prob:
                n_sib = int(rng.binomial(n_topical, contam_frac))
                n_own = n_topical - n_sib
            parts = [
                rng.choice(topic_terms[ti][sub], size=n_own, p=sub_dist),
                rng.choice(bg_terms, size=length - n_topical, p=bg_dist),
            ]
            if n_sib:
                sib = int(rng.integers(0, n_topics - 1))
                sib = sib + 1 if sib >= ti else sib
                parts.append(rng.choice(topic_terms[sib], size=n_sib, p=topic_dist))
            tokens = np.concatenate(parts)
            tokens = rng.permutation(tokens)
            doc_id = f"d{doc_no:05d}"
            doc_no += 1
            documents.append(Document.from_text(doc_id, " ".join(tokens), config))
            qrels_entries[(qid, doc_id)] = 1

        r1 = int(rng.integers(5, 12))
        r2 = int(rng.integers(15, 25))
        noise = bg_terms[int(rng.integers(query_noise_ranks[0], query_noise_ranks[1]))]
        title = f"{topic_terms[ti][r1]} {topic_terms[ti][r2]} {noise}"
        topics.append(Topic(query_id=qid, title=title))

    for _ in range(n_docs - n_rel_total):
        length = int(rng.integers(lo, hi + 1))
        tokens = rng.choice(bg_terms, size=length, p=bg_dist)
        if rng.random() < leak_prob:
            ti = int(rng.integers(0, n_topics))
            n_leak = int(rng.integers(leak_tokens[0], leak_tokens[1] + 1))
            leak = rng.choice(topic_terms[ti], size=n_leak)  # uniform, not topical
            tokens = np.concatenate([tokens, leak])
        tokens = rng.permutation(tokens)
        doc_id = f"d{doc_no:05d}"
        doc_no += 1
        documents.append(Document.from_text(doc_id, " ".join(tokens), config))

    order = rng.permutation(len(documents))
    documents = [documents[i] for i in order]

    return SyntheticCollection(documents=documents, topics=topics, qrels=Qrels(qrels_entries))
