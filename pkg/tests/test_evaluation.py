import io
import math

import pytest

from genqe.corpus import load_qrels
from genqe.errors import DataError
from genqe.evaluation import (
    SUMMARY_COLUMNS,
    average_precision,
    evaluate_run,
    format_summary,
    paired_t_test,
    precision_at,
    r_precision,
    write_report_tsv,
)
from genqe.ranking import RunResult
from genqe.util import derived_rng

from oracles import (
    naive_average_precision,
    naive_precision_at,
    naive_r_precision,
    reference_paired_t,
)


def _qrels(text):
    return load_qrels(io.StringIO(text))


# --- single metrics ----------------------------------------------------------


def test_ap_second_position():
    assert average_precision(["d2", "d1"], {"d1"}) == 0.5


def test_ap_perfect_ranking_any_order():
    assert average_precision(["d1", "d2", "d3"], {"d1", "d2"}) == 1.0
    assert average_precision(["d2", "d1", "d3"], {"d1", "d2"}) == 1.0


def test_ap_mixed_positions():
    assert average_precision(["d1", "d2", "d3"], {"d1", "d3"}) == pytest.approx(5 / 6)


def test_ap_unretrieved_relevant_contribute_zero():
    assert average_precision(["d1"], {"d1", "dx", "dy"}) == pytest.approx(1 / 3)


def test_ap_duplicate_doc_rejected():
    with pytest.raises(DataError):
        average_precision(["d1", "d1"], {"d1"})


def test_ap_requires_relevant():
    with pytest.raises(ValueError):
        average_precision(["d1"], set())


def test_precision_at_short_run_padding():
    assert precision_at(["d1"], {"d1"}, 5) == pytest.approx(0.2)


def test_precision_at_perfect_top_k():
    assert precision_at(["d1", "d2", "d3"], {"d1", "d2", "d3"}, 3) == 1.0


def test_precision_at_k2():
    assert precision_at(["d2", "d1"], {"d1"}, 2) == 0.5


def test_r_precision_cases():
    assert r_precision(["d1", "d2"], {"d1"}) == 1.0
    assert r_precision(["d2", "d1"], {"d1"}) == 0.0
    assert r_precision(["d1", "d3", "d2"], {"d1", "d2"}) == 0.5


# --- paired t-test -----------------------------------------------------------


def test_ttest_identical_systems():
    a = {"q1": 0.3, "q2": 0.7, "q3": 0.5}
    res = paired_t_test(a, dict(a))
    assert res.t_statistic == 0.0
    assert res.p_value == 1.0
    assert not res.significant
    assert res.n == 3


def test_ttest_constant_nonzero_shift():
    a = {f"q{i}": 0.5 + 0.1 for i in range(4)}
    b = {f"q{i}": 0.5 for i in range(4)}
    res = paired_t_test(a, b)
    assert math.isinf(res.t_statistic) and res.t_statistic > 0
    assert res.p_value == 0.0
    assert res.significant


def test_ttest_worked_example():
    diffs = [0.2, -0.1, 0.3, 0.0, 0.1]
    a = {f"q{i}": 0.5 + d for i, d in enumerate(diffs)}
    b = {f"q{i}": 0.5 for i in range(5)}
    res = paired_t_test(a, b)
    ref_t, ref_p = reference_paired_t([a[q] for q in sorted(a)], [b[q] for q in sorted(b)])
    assert res.t_statistic == pytest.approx(ref_t, abs=1e-10)
    assert res.p_value == pytest.approx(ref_p, abs=1e-10)
    assert res.t_statistic == pytest.approx(1.4142, abs=1e-4)
    assert res.p_value == pytest.approx(0.2302, abs=1e-4)
    assert not res.significant


def test_ttest_matches_reference_on_random_vectors():
    rng = derived_rng(51, "ttest-reference")
    for _ in range(50):
        n = int(rng.integers(2, 30))
        a = {f"q{i}": float(rng.uniform(0, 1)) for i in range(n)}
        b = {f"q{i}": float(rng.uniform(0, 1)) for i in range(n)}
        res = paired_t_test(a, b)
        ref_t, ref_p = reference_paired_t([a[q] for q in sorted(a)], [b[q] for q in sorted(b)])
        assert res.t_statistic == pytest.approx(ref_t, abs=1e-9)
        assert res.p_value == pytest.approx(ref_p, abs=1e-9)
        assert res.significant == (res.p_value < 0.05)


def test_ttest_mismatched_queries_rejected():
    with pytest.raises(DataError):
        paired_t_test({"q1": 0.1, "q2": 0.2}, {"q1": 0.1, "q3": 0.2})


def test_ttest_requires_two_samples():
    with pytest.raises(DataError):
        paired_t_test({"q1": 0.1}, {"q1": 0.2})


# --- evaluate_run ------------------------------------------------------------


def test_evaluate_run_composition():
    report = evaluate_run({"701": ["d2", "d1"]}, _qrels("701 0 d1 1\n"))
    row = report.per_query["701"]
    assert row["AP"] == 0.5
    assert row["R-prec"] == 0.0
    assert row["P@5"] == pytest.approx(0.2)
    assert report.aggregates["MAP"] == 0.5
    assert report.num_queries == 1


def test_evaluate_run_empty_run_scores_zero():
    report = evaluate_run({}, _qrels("701 0 d1 1\n702 0 d2 1\n"))
    assert report.num_queries == 2
    for row in report.per_query.values():
        assert all(v == 0.0 for v in row.values())


def test_evaluate_run_macro_average():
    qrels = _qrels("701 0 d1 1\n702 0 d9 1\n")
    run = {"701": ["d2", "d1"], "702": ["d9"]}
    report = evaluate_run(run, qrels)
    assert report.aggregates["MAP"] == pytest.approx((0.5 + 1.0) / 2)


def test_evaluate_run_excludes_queries_without_relevant():
    qrels = _qrels("701 0 d1 1\n702 0 d2 0\n")
    report = evaluate_run({"701": ["d1"], "702": ["d2"]}, qrels)
    assert report.num_queries == 1
    assert report.num_excluded == 1
    assert "702" not in report.per_query


def test_evaluate_run_skips_unknown_queries(caplog):
    with caplog.at_level("WARNING"):
        report = evaluate_run({"701": ["d1"], "999": ["d1"]}, _qrels("701 0 d1 1\n"))
    assert report.skipped_query_ids == ["999"]
    assert any("999" in r.message for r in caplog.records)


def test_evaluate_run_depth_truncation():
    qrels = _qrels("701 0 d9 1\n")
    run = {"701": [f"d{i}" for i in range(5)] + ["d9"]}
    assert evaluate_run(run, qrels, depth=5).aggregates["MAP"] == 0.0
    assert evaluate_run(run, qrels, depth=6).aggregates["MAP"] == pytest.approx(1 / 6)


def test_evaluate_run_accepts_run_results():
    results = [RunResult(query_id="701", ranking=[("d1", 1.0)])]
    report = evaluate_run(results, _qrels("701 0 d1 1\n"))
    assert report.aggregates["MAP"] == 1.0


def test_run_file_line_order_irrelevant(tmp_path):
    a = tmp_path / "a.run"
    b = tmp_path / "b.run"
    lines = [
        "701 Q0 d1 1 0.9 t",
        "701 Q0 d2 2 0.5 t",
        "702 Q0 d3 1 0.9 t",
    ]
    a.write_text("\n".join(lines) + "\n")
    b.write_text("\n".join(reversed(lines)) + "\n")
    qrels = _qrels("701 0 d2 1\n702 0 d3 1\n")
    assert evaluate_run(a, qrels).aggregates == evaluate_run(b, qrels).aggregates


def test_ap_invariant_to_tail_order():
    rng = derived_rng(52, "ap-tail")
    relevant = {"r1", "r2"}
    head = ["r1", "x1", "r2"]
    tail = [f"n{i}" for i in range(6)]
    base = average_precision(head + tail, relevant)
    for _ in range(10):
        perm = [tail[int(i)] for i in rng.permutation(len(tail))]
        assert average_precision(head + perm, relevant) == base


def test_metrics_match_naive_oracle_randomized():
    rng = derived_rng(53, "metric-oracle-small")
    for _ in range(100):
        pool = [f"d{i}" for i in range(int(rng.integers(2, 20)))]
        run = [pool[int(i)] for i in rng.permutation(len(pool))][: int(rng.integers(1, len(pool) + 1))]
        relevant = {d for d in pool if rng.random() < 0.4} or {pool[0]}
        assert average_precision(run, relevant) == pytest.approx(
            naive_average_precision(run, relevant), abs=1e-12
        )
        assert r_precision(run, relevant) == pytest.approx(
            naive_r_precision(run, relevant), abs=1e-12
        )
        for k in (1, 3, 5, 10):
            assert precision_at(run, relevant, k) == pytest.approx(
                naive_precision_at(run, relevant, k), abs=1e-12
            )


# --- report output -----------------------------------------------------------


def test_report_tsv_layout(tmp_path):
    report = evaluate_run({"701": ["d2", "d1"]}, _qrels("701 0 d1 1\n"))
    path = tmp_path / "report.tsv"
    write_report_tsv(report, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0].split("\t") == ["query_id", "AP", "R-prec", "P@5", "P@10", "P@20", "P@100"]
    assert lines[1].startswith("701\t0.500000")
    assert lines[-1].startswith("all\t")


def test_summary_columns_match_standard_table():
    report = evaluate_run({"701": ["d1"]}, _qrels("701 0 d1 1\n"))
    summary = format_summary(report)
    assert SUMMARY_COLUMNS == ("MAP", "R-Prec", "P@5", "P@10", "P@20", "P@100")
    for col in SUMMARY_COLUMNS:
        assert col in summary
