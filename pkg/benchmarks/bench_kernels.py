#!/usr/bin/env python3
"""Compare the compiled scoring kernels against the numpy fallback.

Builds a synthetic index, then times score_all for both models and both
kernel backends over a batch of expanded-size queries.

Usage: python benchmarks/bench_kernels.py [--docs 50000] [--queries 20]
"""

import argparse
import time

from genqe import kernels
from genqe.corpus import TokenizationConfig
from genqe.index import build_index
from genqe.ranking import Bm25Params, DirichletParams, WeightedQuery, score_all
from genqe.synth import build_synthetic_collection


def run(args):
    n_topics = 50
    coll = build_synthetic_collection(
        n_docs=args.docs,
        n_topics=n_topics,
        n_rel_per_topic=max(5, args.docs // 400),
        seed=4242,
    )
    index = build_index(coll.documents, TokenizationConfig())
    print(
        f"index: {index.n_docs} docs, {sum(1 for _ in index.vocabulary())} terms, "
        f"{index.stats.total_tokens} tokens"
    )

    # expanded-style queries: every term of a few topics' documents
    queries = []
    for topic in coll.topics[: args.queries]:
        rel = sorted(coll.qrels.relevant_docs(topic.query_id))
        counts: dict[str, float] = {}
        by_id = {d.doc_id: d for d in coll.documents}
        for doc_id in rel:
            for tok in by_id[doc_id].tokens:
                counts[tok] = counts.get(tok, 0.0) + 1.0
        queries.append(WeightedQuery(counts))
    avg_terms = sum(len(q) for q in queries) / len(queries)
    print(f"queries: {len(queries)}, avg {avg_terms:.0f} weighted terms\n")

    header = f"{'model':<14} {'backend':<8} {'total s':>9} {'ms/query':>10}"
    print(header)
    print("-" * len(header))
    for model, params in (("bm25plus", Bm25Params()), ("lm_dirichlet", DirichletParams())):
        timings = {}
        for name in kernels.available_backends():
            kern = kernels.get_backend(name)
            start = time.perf_counter()
            for rep in range(args.repeats):
                for i, q in enumerate(queries):
                    score_all(index, q, model, params, query_id=str(i), kernel_backend=kern)
            timings[name] = time.perf_counter() - start
        for name, elapsed in timings.items():
            per_query = 1000.0 * elapsed / (len(queries) * args.repeats)
            note = ""
            if name != "python" and "python" in timings:
                note = f"  ({timings['python'] / elapsed:.2f}x vs python)"
            print(f"{model:<14} {name:<8} {elapsed:>9.3f} {per_query:>10.3f}{note}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--docs", type=int, default=50000)
    parser.add_argument("--queries", type=int, default=20)
    parser.add_argument("--repeats", type=int, default=3)
    run(parser.parse_args())


if __name__ == "__main__":
    main()
