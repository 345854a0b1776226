"""Pipeline commands behind the CLI: index, generate, run, eval, ttest,
sweeps, plus fixture helpers.

Every artifact-producing command writes a manifest next to its output
with the fully resolved configuration, so a run can be reproduced
bit-for-bit (deterministic backends assumed).
"""

from __future__ import annotations

import json
import re
import statistics
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__, kernels
from .config import ExperimentConfig
from .corpus import Qrels, Topic, load_documents, load_qrels, load_topics
from .errors import CacheMissError, DataError, UsageError
from .evaluation import EvalReport, TTestResult, evaluate_run, paired_t_test, write_report_tsv
from .expansion import build_expanded_query, write_weighted_queries
from .generation import (
    CacheBackend,
    CorpusModel,
    GeneratedSet,
    HttpBackend,
    PerTopicStubBackend,
    StubBackend,
    cache_load,
    cache_store,
    generate_for_topic,
)
from .index import InvertedIndex, build_index, load_index, save_index
from .ranking import RunResult, WeightedQuery, score_all, write_run_file
from .rm3 import rm3_expand
from .synth import build_synthetic_collection
from .util import derived_rng


def _write_manifest(out_path: Path, command: str, cfg: ExperimentConfig | None, **extra) -> None:
    manifest = {
        "command": command,
        "genqe_version": __version__,
        "kernel_backend": kernels.BACKEND,
        "config": cfg.to_dict() if cfg is not None else None,
        **extra,
    }
    path = Path(str(out_path) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_topics_sorted(cfg: ExperimentConfig) -> list[Topic]:
    topics = load_topics(cfg.paths.topics, cfg.paths.topics_format)
    from .corpus import tokenize

    empty = [t.query_id for t in topics if not tokenize(t.title, cfg.tokenization)]
    if empty:
        raise DataError(
            f"topics tokenize to nothing under the active config: {', '.join(sorted(empty))}"
        )
    return sorted(topics, key=lambda t: t.query_id)


def _load_index_checked(cfg: ExperimentConfig) -> InvertedIndex:
    cfg.require_paths("index")
    index = load_index(cfg.paths.index)
    index.check_config(cfg.tokenization)
    return index


def cmd_index(cfg: ExperimentConfig) -> Path:
    """Build and persist the inverted index for the configured corpus."""
    cfg.require_paths("corpus")
    docs = load_documents(cfg.paths.corpus, cfg.paths.corpus_format, cfg.tokenization)
    index = build_index(docs, cfg.tokenization)
    out = Path(cfg.paths.index)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_index(index, out)
    _write_manifest(out, "index", cfg, n_docs=index.n_docs)
    return out


def _generation_backend(cfg: ExperimentConfig, for_generate: bool):
    gen = cfg.generation
    if gen is None:
        raise UsageError("this command needs a generation section in the config")
    if gen.backend == "cache":
        if for_generate:
            raise UsageError("generate cannot use the cache backend; pick stub or http")
        return CacheBackend(cfg.paths.cache_dir, cfg.tokenization)
    if gen.backend == "http":
        return HttpBackend(gen.endpoint, cfg.tokenization)
    # stub: fit on the whole corpus, or per topic on its relevant documents
    cfg.require_paths("corpus")
    docs = load_documents(cfg.paths.corpus, cfg.paths.corpus_format, cfg.tokenization)
    if gen.stub_fit == "corpus":
        model = CorpusModel.fit((d.tokens for d in docs), order=gen.stub_order)
        return StubBackend(model, cfg.tokenization)
    cfg.require_paths("qrels")
    qrels = load_qrels(cfg.paths.qrels)
    by_id = {d.doc_id: d for d in docs}
    models: dict[str, CorpusModel] = {}
    for qid in qrels.query_ids():
        rel = sorted(qrels.relevant_docs(qid))
        streams = [by_id[d].tokens for d in rel if d in by_id]
        if streams:
            models[qid] = CorpusModel.fit(streams, order=gen.stub_order)
    return PerTopicStubBackend(models, cfg.tokenization)


def cmd_generate(cfg: ExperimentConfig) -> Path:
    """Populate the generated-text cache for every topic."""
    cfg.require_paths("topics")
    topics = _load_topics_sorted(cfg)
    backend = _generation_backend(cfg, for_generate=True)
    params = cfg.generation.params()
    cache_dir = Path(cfg.paths.cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)

    def one(topic: Topic) -> str:
        gset = generate_for_topic(backend, topic, params)
        cache_store(gset, cache_dir)
        return topic.query_id

    with ThreadPoolExecutor(max_workers=cfg.generation.workers) as pool:
        list(pool.map(one, topics))
    _write_manifest(cache_dir / "cache", "generate", cfg, n_topics=len(topics))
    return cache_dir


def _expanded_queries(cfg: ExperimentConfig, topics: list[Topic]) -> list[tuple[Topic, WeightedQuery]]:
    backend = _generation_backend(cfg, for_generate=False)
    params = cfg.generation.params()
    out: list[tuple[Topic, WeightedQuery]] = []
    missing: list[str] = []
    for topic in topics:
        try:
            gset = generate_for_topic(backend, topic, params)
        except CacheMissError:
            missing.append(topic.query_id)
            continue
        out.append((topic, build_expanded_query(topic, gset, cfg.expansion, cfg.tokenization)))
    if missing:
        raise DataError(f"missing cache entries for queries: {', '.join(missing)}")
    return out


def cmd_run(cfg: ExperimentConfig, dump_queries: str | Path | None = None) -> Path:
    """Retrieve for every topic and write a TREC run file.

    The query side is the raw title, a generated expansion, or an RM3
    expansion, per configuration.
    """
    cfg.require_paths("topics")
    index = _load_index_checked(cfg)
    topics = _load_topics_sorted(cfg)
    params = cfg.model.ranking_params()

    pairs: list[tuple[Topic, WeightedQuery]]
    if cfg.expansion is not None:
        pairs = _expanded_queries(cfg, topics)
    elif cfg.rm3 is not None:
        pairs = []
        for topic in topics:
            raw = WeightedQuery.from_text(topic.title, cfg.tokenization)
            first = score_all(
                index,
                raw,
                "lm_dirichlet",
                cfg.model.dirichlet(),
                query_id=topic.query_id,
                top_k=cfg.top_k,
            )
            pairs.append((topic, rm3_expand(index, raw, first, cfg.rm3, cfg.model.dirichlet())))
    else:
        pairs = [(t, WeightedQuery.from_text(t.title, cfg.tokenization)) for t in topics]

    results: list[RunResult] = []
    for topic, wq in pairs:
        results.append(
            score_all(
                index,
                wq,
                cfg.model.name,
                params,
                query_id=topic.query_id,
                top_k=cfg.top_k,
                run_tag=cfg.run_tag,
            )
        )

    out_dir = Path(cfg.paths.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / f"{cfg.run_tag}.run"
    write_run_file(results, out)
    if dump_queries is not None:
        write_weighted_queries([(t.query_id, wq) for t, wq in pairs], dump_queries)
    _write_manifest(out, "run", cfg, n_topics=len(topics))
    return out


def cmd_eval(cfg: ExperimentConfig, run_path: str | Path, out_tsv: str | Path | None = None) -> EvalReport:
    cfg.require_paths("qrels")
    qrels = load_qrels(cfg.paths.qrels)
    report = evaluate_run(run_path, qrels, depth=cfg.top_k)
    if out_tsv is not None:
        write_report_tsv(report, out_tsv)
        _write_manifest(Path(out_tsv), "eval", cfg, run=str(run_path))
    return report


def cmd_ttest(cfg: ExperimentConfig, run_a: str | Path, run_b: str | Path) -> TTestResult:
    """Paired t-test on per-query average precision of two runs."""
    cfg.require_paths("qrels")
    qrels = load_qrels(cfg.paths.qrels)
    rep_a = evaluate_run(run_a, qrels, depth=cfg.top_k)
    rep_b = evaluate_run(run_b, qrels, depth=cfg.top_k)
    return paired_t_test(rep_a.ap_by_query(), rep_b.ap_by_query())


def _cached_sets(cfg: ExperimentConfig, topics: list[Topic]) -> dict[str, GeneratedSet]:
    sets = {}
    missing = []
    for topic in topics:
        try:
            sets[topic.query_id] = cache_load(topic.query_id, cfg.paths.cache_dir)
        except CacheMissError:
            missing.append(topic.query_id)
    if missing:
        raise DataError(f"missing cache entries for queries: {', '.join(missing)}")
    return sets


def _map_for_queries(
    cfg: ExperimentConfig,
    index: InvertedIndex,
    qrels: Qrels,
    pairs: list[tuple[Topic, WeightedQuery]],
) -> float:
    results = [
        score_all(
            index, wq, cfg.model.name, cfg.model.ranking_params(),
            query_id=t.query_id, top_k=cfg.top_k,
        )
        for t, wq in pairs
    ]
    return evaluate_run(results, qrels, depth=cfg.top_k).aggregates["MAP"]


def cmd_sweep_k(cfg: ExperimentConfig, k_values: list[int]) -> Path:
    """MAP per expansion size and weighting scheme; emits plot-ready TSV."""
    from .expansion import ExpansionConfig  # local to avoid confusion with cfg.expansion

    cfg.require_paths("topics", "qrels")
    index = _load_index_checked(cfg)
    topics = _load_topics_sorted(cfg)
    qrels = load_qrels(cfg.paths.qrels)
    sets = _cached_sets(cfg, topics)
    include_seed = cfg.expansion.include_seed_texts if cfg.expansion is not None else True

    out_dir = Path(cfg.paths.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / f"{cfg.run_tag}.sweep-k.tsv"
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("k\tmode\tMAP\n")
        for mode_name, mode in (("fixed", "top_k_fixed"), ("frequency", "top_k_frequency")):
            for k in k_values:
                ecfg = ExpansionConfig(mode=mode, k=k, include_seed_texts=include_seed)
                pairs = [
                    (t, build_expanded_query(t, sets[t.query_id], ecfg, cfg.tokenization))
                    for t in topics
                ]
                fh.write(f"{k}\t{mode_name}\t{_map_for_queries(cfg, index, qrels, pairs):.6f}\n")
    _write_manifest(out, "sweep-k", cfg, k_values=k_values)
    return out


def subsample_set(gset: GeneratedSet, n: int, rng) -> GeneratedSet:
    """Seeded without-replacement subsample of a generated set."""
    n = min(n, len(gset.texts))
    idx = sorted(rng.choice(len(gset.texts), size=n, replace=False)) if n else []
    return GeneratedSet(
        gset.query_id,
        gset.seed_text,
        [gset.texts[i] for i in idx],
        gset.backend_tag,
        gset.params,
    )


def cmd_sweep_ndocs(cfg: ExperimentConfig, n_values: list[int], repeats: int = 5) -> Path:
    """MAP versus number of generated texts, averaged over seeded
    subsamples of one cache (sample stdev across repeats)."""
    cfg.require_paths("topics", "qrels")
    index = _load_index_checked(cfg)
    topics = _load_topics_sorted(cfg)
    qrels = load_qrels(cfg.paths.qrels)
    sets = _cached_sets(cfg, topics)
    ecfg = cfg.expansion
    if ecfg is None:
        from .expansion import ExpansionConfig

        ecfg = ExpansionConfig(mode="full")
    base_seed = cfg.generation.rng_seed if cfg.generation is not None else 0

    out_dir = Path(cfg.paths.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / f"{cfg.run_tag}.sweep-ndocs.tsv"
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("n\tmean_MAP\tstdev_MAP\n")
        for n in n_values:
            maps = []
            for rep in range(repeats):
                pairs = []
                for t in topics:
                    rng = derived_rng(base_seed or 0, rep, t.query_id, "ndocs-subsample")
                    sub = subsample_set(sets[t.query_id], n, rng)
                    pairs.append((t, build_expanded_query(t, sub, ecfg, cfg.tokenization)))
                maps.append(_map_for_queries(cfg, index, qrels, pairs))
            mean = statistics.fmean(maps)
            stdev = statistics.stdev(maps) if len(maps) > 1 else 0.0
            fh.write(f"{n}\t{mean:.6f}\t{stdev:.6f}\n")
    _write_manifest(out, "sweep-ndocs", cfg, n_values=n_values, repeats=repeats)
    return out


def cmd_export_text(cfg: ExperimentConfig, out_dir: str | Path) -> Path:
    """Dump the corpus as one plain-text file per document (the input
    layout the generation sidecar's fine-tuning entry point expects)."""
    cfg.require_paths("corpus")
    docs = load_documents(cfg.paths.corpus, cfg.paths.corpus_format, cfg.tokenization)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i, doc in enumerate(docs):
        safe = re.sub(r"[^0-9A-Za-z._-]", "_", doc.doc_id)
        (out / f"{i:06d}_{safe}.txt").write_text(doc.text, encoding="utf-8")
    return out


def cmd_synth(out_dir: str | Path, n_docs: int = 2000, n_topics: int = 50, seed: int = 91501) -> dict:
    """Write the bundled synthetic collection (corpus/topics/qrels)."""
    coll = build_synthetic_collection(n_docs=n_docs, n_topics=n_topics, seed=seed)
    return coll.write(out_dir)
