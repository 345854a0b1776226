import pytest

from genqe.corpus import Document
from genqe.index import build_index
from genqe.ranking import DirichletParams, RunResult, WeightedQuery, score_all
from genqe.rm3 import Rm3Config, rm3_expand
from genqe.util import derived_rng

from oracles import random_corpus, random_query


def test_config_validation():
    Rm3Config(fb_docs=10, fb_terms=80)  # per-collection setting used downstream
    with pytest.raises(ValueError):
        Rm3Config(fb_docs=0)
    with pytest.raises(ValueError):
        Rm3Config(fb_terms=0)
    with pytest.raises(ValueError):
        Rm3Config(lambda_orig=1.5)


def _first_pass(index, query, top_k=1000):
    return score_all(index, query, "lm_dirichlet", DirichletParams(), query_id="q", top_k=top_k)


def test_lambda_one_returns_normalized_original(toy_index):
    query = WeightedQuery.from_text("oil oil price")
    first = _first_pass(toy_index, query)
    out = rm3_expand(toy_index, query, first, Rm3Config(lambda_orig=1.0))
    assert out.terms == query.normalized().terms
    assert out.origin == "expanded"


def test_single_feedback_doc_worked_values(toy_index):
    # Feedback doc d1 = "oil oil price", dl=3, mu=2500, p(t|C)=2/5 for both
    # candidates: smoothed p(oil|d1)=1002/2503, p(price|d1)=1001/2503,
    # hence p(oil|R)=1002/2003 > p(price|R)=1001/2003.
    query = WeightedQuery.from_text("oil")
    first = _first_pass(toy_index, query)
    assert first.ranking[0][0] == "d1" and len(first.ranking) == 1

    out = rm3_expand(toy_index, query, first, Rm3Config(fb_docs=1, fb_terms=2, lambda_orig=0.0))
    assert set(out.terms) == {"oil", "price"}
    assert out.terms["oil"] == pytest.approx(1002 / 2003, abs=1e-12)
    assert out.terms["price"] == pytest.approx(1001 / 2003, abs=1e-12)
    assert out.terms["oil"] > out.terms["price"]


def test_interpolation_mixes_query_and_feedback(toy_index):
    query = WeightedQuery.from_text("oil")
    first = _first_pass(toy_index, query)
    out = rm3_expand(toy_index, query, first, Rm3Config(fb_docs=1, fb_terms=2, lambda_orig=0.5))
    expect_oil = 0.5 * 1.0 + 0.5 * (1002 / 2003)
    expect_price = 0.5 * (1001 / 2003)
    total = expect_oil + expect_price
    assert out.terms["oil"] == pytest.approx(expect_oil / total, abs=1e-12)
    assert out.terms["price"] == pytest.approx(expect_price / total, abs=1e-12)


def test_truncation_keeps_strongest_term(toy_index):
    query = WeightedQuery.from_text("oil")
    first = _first_pass(toy_index, query)
    out = rm3_expand(toy_index, query, first, Rm3Config(fb_docs=1, fb_terms=1, lambda_orig=0.0))
    assert set(out.terms) == {"oil"}
    assert out.terms["oil"] == pytest.approx(1.0)


def test_fb_terms_beyond_vocabulary_keeps_all(toy_index):
    query = WeightedQuery.from_text("oil")
    first = _first_pass(toy_index, query)
    out = rm3_expand(toy_index, query, first, Rm3Config(fb_docs=1, fb_terms=500, lambda_orig=0.0))
    assert set(out.terms) == {"oil", "price"}


def test_fb_docs_clamped_to_first_pass(toy_index):
    query = WeightedQuery.from_text("price")
    first = _first_pass(toy_index, query)
    out = rm3_expand(toy_index, query, first, Rm3Config(fb_docs=50, fb_terms=10))
    assert sum(out.terms.values()) == pytest.approx(1.0, abs=1e-9)


def test_empty_first_pass_falls_back_to_original(toy_index):
    query = WeightedQuery.from_text("oil price")
    empty = RunResult(query_id="q", ranking=[])
    out = rm3_expand(toy_index, query, empty, Rm3Config())
    assert out.terms == query.normalized().terms
    assert out.meta.get("fallback") == "empty-first-pass"


def _random_index(rng):
    vocab, docs = random_corpus(rng, max_docs=8, max_vocab=10)
    index = build_index([Document.from_text(d, " ".join(t)) for d, t in docs.items()])
    return vocab, index


def test_output_is_distribution_on_random_instances():
    rng = derived_rng(31, "rm3-distribution")
    for _ in range(80):
        vocab, index = _random_index(rng)
        query = WeightedQuery(random_query(rng, vocab))
        first = _first_pass(index, query)
        if not first.ranking:
            continue
        cfg = Rm3Config(
            fb_docs=int(rng.integers(1, 5)),
            fb_terms=int(rng.integers(1, 8)),
            lambda_orig=float(rng.uniform(0, 1)),
        )
        out = rm3_expand(index, query, first, cfg)
        assert sum(out.terms.values()) == pytest.approx(1.0, abs=1e-9)
        assert all(w > 0 for w in out.terms.values())
        assert out.origin == "expanded"


def test_truncation_vocabulary_is_nested():
    rng = derived_rng(32, "rm3-nested")
    for _ in range(25):
        vocab, index = _random_index(rng)
        query = WeightedQuery(random_query(rng, vocab))
        first = _first_pass(index, query)
        if not first.ranking:
            continue
        prev: set[str] = set()
        for fb_terms in range(1, 9):
            cfg = Rm3Config(fb_docs=3, fb_terms=fb_terms, lambda_orig=0.3)
            vocab_k = set(rm3_expand(index, query, first, cfg).terms)
            assert prev <= vocab_k
            prev = vocab_k
