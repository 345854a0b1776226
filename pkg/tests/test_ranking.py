import math

import pytest

from genqe.corpus import Document
from genqe.errors import DataError
from genqe.index import build_index
from genqe.ranking import (
    Bm25Params,
    DirichletParams,
    RunResult,
    WeightedQuery,
    bm25plus_wd,
    bm25plus_wq,
    lm_dirichlet_wd,
    read_run_file,
    score_all,
    write_run_file,
)
from genqe.util import derived_rng

from oracles import naive_scores, random_corpus, random_query


# --- weighted query ----------------------------------------------------------


def test_weighted_query_drops_zero_weights():
    wq = WeightedQuery({"a": 0.0, "b": 2.0})
    assert wq.terms == {"b": 2.0}


def test_weighted_query_rejects_negative():
    with pytest.raises(ValueError):
        WeightedQuery({"a": -0.1})


def test_weighted_query_from_text_counts():
    wq = WeightedQuery.from_text("oil price oil")
    assert wq.terms == {"oil": 2.0, "price": 1.0}
    assert wq.origin == "raw"


def test_param_validation():
    with pytest.raises(ValueError):
        Bm25Params(k1=0.0)
    with pytest.raises(ValueError):
        Bm25Params(b=1.2)
    with pytest.raises(ValueError):
        DirichletParams(mu=0.0)


# --- document/query weights --------------------------------------------------


def test_bm25plus_wd_worked_value():
    got = bm25plus_wd(tf=2, dl=3, avdl=2.5, n_docs=2, df=1, params=Bm25Params())
    expect = (4.4 / 3.38 + 1.0) * math.log(3.0)
    assert got == pytest.approx(expect, abs=1e-12)
    assert got == pytest.approx(2.5288, abs=1e-4)


def test_bm25_pure_term_with_zero_delta():
    got = bm25plus_wd(tf=2, dl=3, avdl=2.5, n_docs=2, df=1, params=Bm25Params(delta=0.0))
    assert got == pytest.approx((4.4 / 3.38) * math.log(3.0), abs=1e-12)
    assert got == pytest.approx(1.4301, abs=1e-4)


def test_bm25_idf_is_ln2_when_df_equals_n_equals_1():
    for tf in (1, 3, 10):
        got = bm25plus_wd(tf=tf, dl=5, avdl=5, n_docs=1, df=1, params=Bm25Params())
        bracket = 2.2 * tf / (1.2 + tf) + 1.0
        assert got == pytest.approx(bracket * math.log(2.0), abs=1e-12)


def test_bm25_wd_contract_violations():
    with pytest.raises(ValueError):
        bm25plus_wd(tf=1, dl=3, avdl=2.5, n_docs=2, df=0, params=Bm25Params())
    with pytest.raises(ValueError):
        bm25plus_wd(tf=0, dl=3, avdl=2.5, n_docs=2, df=1, params=Bm25Params())


def test_bm25_lower_bound_property():
    rng = derived_rng(21, "bm25-lower-bound")
    p = Bm25Params()
    for _ in range(300):
        tf = int(rng.integers(1, 30))
        dl = int(rng.integers(1, 200))
        avdl = float(rng.uniform(1, 100))
        n = int(rng.integers(1, 1000))
        df = int(rng.integers(1, n + 1))
        idf = math.log((n + 1) / df)
        assert bm25plus_wd(tf, dl, avdl, n, df, p) >= p.delta * idf


def test_bm25plus_wq_unit_count():
    assert bm25plus_wq(1.0, Bm25Params()) == pytest.approx(1.0)


def test_bm25plus_wq_saturates_below_k3_plus_1():
    p = Bm25Params()
    big = bm25plus_wq(1e6, p)
    assert big < p.k3 + 1.0
    assert big == pytest.approx(p.k3 + 1.0, rel=1e-2)


def test_bm25plus_wq_worked_value_and_monotonicity():
    assert bm25plus_wq(5.0, Bm25Params()) == pytest.approx(5005 / 1005, abs=1e-12)
    assert bm25plus_wq(5.0, Bm25Params()) == pytest.approx(4.9801, abs=1e-4)
    ws = [bm25plus_wq(w, Bm25Params()) for w in (0.1, 0.5, 1, 2, 5, 50, 1e4)]
    assert ws == sorted(ws)


def test_lm_wd_smoothing_only_branch():
    got = lm_dirichlet_wd(tf=0, dl=100, mu=2500, p_tc=0.3)
    assert got == pytest.approx(math.log(2500 / 2600), abs=1e-12)
    assert got == pytest.approx(-0.03922, abs=1e-5)
    assert got < 0


def test_lm_wd_worked_value():
    got = lm_dirichlet_wd(tf=2, dl=3, mu=2500, p_tc=0.4)
    assert got == pytest.approx(math.log(2500 / 2503 + 2 / (2503 * 0.4)), abs=1e-12)
    assert got == pytest.approx(0.00080, abs=1e-5)


def test_lm_wd_contract_violations():
    with pytest.raises(ValueError):
        lm_dirichlet_wd(tf=1, dl=3, mu=2500, p_tc=0.0)
    with pytest.raises(ValueError):
        lm_dirichlet_wd(tf=1, dl=0, mu=2500, p_tc=0.1)


# --- score_all ---------------------------------------------------------------


def test_score_all_single_term(toy_index):
    run = score_all(toy_index, WeightedQuery.from_text("oil"), "bm25plus", query_id="q")
    assert [d for d, _ in run.ranking] == ["d1"]
    assert run.ranking[0][1] == pytest.approx(2.5288, abs=1e-4)


def test_score_all_empty_query(toy_index):
    run = score_all(toy_index, WeightedQuery({}), "bm25plus", query_id="q")
    assert run.ranking == []


def test_score_all_unknown_terms_only(toy_index):
    run = score_all(toy_index, WeightedQuery.from_text("zebra"), "bm25plus", query_id="q")
    assert run.ranking == []


def test_length_normalization_prefers_shorter_doc(toy_index):
    run = score_all(toy_index, WeightedQuery.from_text("price"), "bm25plus", query_id="q")
    assert [d for d, _ in run.ranking] == ["d2", "d1"]


def test_lm_includes_smoothing_for_absent_terms(toy_index):
    # d2 lacks "oil": its score is the tf=0 floor for oil plus the
    # matched-term weight for price.
    run = score_all(toy_index, WeightedQuery.from_text("oil price"), "lm_dirichlet", query_id="q")
    scores = dict(run.ranking)
    mu = 2500.0
    d2 = lm_dirichlet_wd(0, 2, mu, 2 / 5) + lm_dirichlet_wd(1, 2, mu, 2 / 5)
    d1 = lm_dirichlet_wd(2, 3, mu, 2 / 5) + lm_dirichlet_wd(1, 3, mu, 2 / 5)
    assert scores["d2"] == pytest.approx(d2, abs=1e-12)
    assert scores["d1"] == pytest.approx(d1, abs=1e-12)


def test_score_all_rejects_mismatched_params(toy_index):
    with pytest.raises(TypeError):
        score_all(toy_index, WeightedQuery.from_text("oil"), "bm25plus", DirichletParams())
    with pytest.raises(ValueError):
        score_all(toy_index, WeightedQuery.from_text("oil"), "bm42", None)


def _index_from(docs_dict):
    docs = [Document.from_text(d, " ".join(toks)) for d, toks in docs_dict.items()]
    return build_index(docs)


@pytest.mark.parametrize("model", ["bm25plus", "lm_dirichlet"])
def test_score_all_matches_oracle_on_random_corpora(model):
    rng = derived_rng(22, "ranking-oracle", model)
    for _ in range(150):
        vocab, docs = random_corpus(rng)
        query = random_query(rng, vocab, fractional=bool(rng.integers(0, 2)))
        index = _index_from(docs)
        run = score_all(index, WeightedQuery(query), model, query_id="q")
        expect = naive_scores(docs, query, model)
        got = dict(run.ranking)
        assert set(got) == set(expect)
        for d in expect:
            assert got[d] == pytest.approx(expect[d], abs=1e-9)


def test_rank_stability_under_insertion_order():
    rng = derived_rng(23, "ranking-permute")
    vocab, docs = random_corpus(rng, max_docs=8, max_vocab=10)
    query = WeightedQuery(random_query(rng, vocab))
    items = list(docs.items())
    base = None
    for _ in range(5):
        perm = [items[int(i)] for i in rng.permutation(len(items))]
        index = build_index([Document.from_text(d, " ".join(t)) for d, t in perm])
        run = score_all(index, query, "bm25plus", query_id="q")
        ranking = [(d, round(s, 12)) for d, s in run.ranking]
        if base is None:
            base = ranking
        else:
            assert ranking == base


def test_query_weight_monotonicity_pairwise():
    rng = derived_rng(24, "ranking-monotone")
    checked = 0
    while checked < 60:
        vocab, docs = random_corpus(rng, max_docs=6, max_vocab=8)
        query = random_query(rng, vocab)
        term = sorted(query)[0]
        boosted = dict(query)
        boosted[term] = boosted[term] + float(rng.uniform(0.5, 3.0))
        before = naive_scores(docs, query, "bm25plus")
        after = naive_scores(docs, boosted, "bm25plus")
        ranked = sorted(before, key=lambda d: -before[d])
        for hi, lo in zip(ranked, ranked[1:]):
            if before[hi] > before[lo] and docs[lo].count(term) == 0 and after[hi] < after[lo]:
                raise AssertionError(
                    f"boosting {term} dropped {hi} below {lo} which lacks the term"
                )
        checked += 1


def test_tie_breaking_by_ascending_doc_id():
    docs = {
        "dz": ["oil", "gas"],
        "da": ["oil", "gas"],
        "dm": ["oil", "gas"],
    }
    index = _index_from(docs)
    run = score_all(index, WeightedQuery.from_text("oil"), "bm25plus", query_id="q")
    assert [d for d, _ in run.ranking] == ["da", "dm", "dz"]
    assert len({s for _, s in run.ranking}) == 1


def test_top_k_truncation():
    docs = {f"d{i:02d}": ["oil"] * (i + 1) for i in range(30)}
    index = _index_from(docs)
    run = score_all(index, WeightedQuery.from_text("oil"), "bm25plus", query_id="q", top_k=7)
    assert len(run.ranking) == 7


def test_run_result_rejects_duplicates():
    with pytest.raises(ValueError):
        RunResult(query_id="q", ranking=[("d1", 1.0), ("d1", 0.5)])


# --- run files ---------------------------------------------------------------


def test_run_file_format_and_round_trip(tmp_path, toy_index):
    runs = [
        score_all(toy_index, WeightedQuery.from_text("price"), "bm25plus", query_id="q2", run_tag="tagx"),
        score_all(toy_index, WeightedQuery.from_text("oil"), "bm25plus", query_id="q1", run_tag="tagx"),
    ]
    path = tmp_path / "out.run"
    write_run_file(runs, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0].split() == ["q1", "Q0", "d1", "1", "2.52875846", "tagx"]
    first = lines[1].split()
    assert first[:2] == ["q2", "Q0"] and first[3] == "1" and first[5] == "tagx"
    parsed = read_run_file(path)
    assert parsed["q1"] == ["d1"]
    assert parsed["q2"] == ["d2", "d1"]


def test_run_file_scores_have_six_significant_digits(tmp_path, toy_index):
    run = score_all(toy_index, WeightedQuery.from_text("price"), "lm_dirichlet", query_id="q")
    path = tmp_path / "lm.run"
    write_run_file([run], path)
    for line in path.read_text().strip().split("\n"):
        score = line.split()[4]
        digits = len(score.split("e")[0].replace("-", "").replace(".", "").lstrip("0"))
        assert digits >= 6


def test_read_run_file_orders_by_rank_column(tmp_path):
    path = tmp_path / "shuffled.run"
    path.write_text(
        "q1 Q0 d3 3 0.1 t\n"
        "q1 Q0 d1 1 0.9 t\n"
        "q1 Q0 d2 2 0.5 t\n"
    )
    assert read_run_file(path) == {"q1": ["d1", "d2", "d3"]}


def test_read_run_file_rejects_duplicates(tmp_path):
    path = tmp_path / "dup.run"
    path.write_text("q1 Q0 d1 1 0.9 t\nq1 Q0 d1 2 0.5 t\n")
    with pytest.raises(DataError):
        read_run_file(path)
