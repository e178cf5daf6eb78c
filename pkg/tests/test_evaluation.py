import json
import math
import statistics

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lacuna.evaluation import (CoverageError, EvalReport, GroundTruth, TruthError, aggregate, combinations,
                               detected_dead, format_table, load_truth, metrics, rank_key, score, sweep_results,
                               truth_from_dict, truth_to_dict)
from lacuna.graph import GLOBAL_ID, FunctionId
from strategies import ensembles, function_ids

from conftest import A, B, C, INLINE, RUNNING
from test_graph import running_g0
from test_merge import running_results

TRUTH = GroundTruth("running", frozenset({C}), frozenset({A, INLINE, B}))


def f_oracle(p, r):
    # harmonic mean from the standard library, independent of the tool's formula
    return statistics.harmonic_mean([p, r]) if p > 0 and r > 0 else 0.0


class TestScore:
    def test_exact_detection(self):
        rep = score({C}, TRUTH)
        assert (rep.tp, rep.fp, rep.fn, rep.tn) == (1, 0, 0, 3)
        assert rep.precision == rep.recall == rep.f_score == 1.0

    def test_one_false_positive(self):
        rep = score({B, C}, TRUTH)
        assert rep.precision == 0.5 and rep.recall == 1.0
        assert rep.f_score == pytest.approx(2 / 3)

    def test_precision_recall_example(self):
        # precision 0.825 and recall 0.972 give an F-score of about 0.8925
        tp, fp, fn = 33 * 972, 7 * 972, 33 * 28  # exact p = 0.825, r = 0.972
        p, r, f, undefined = metrics(tp, fp, fn, tp + fn)
        assert (p, r) == (pytest.approx(0.825), pytest.approx(0.972))
        assert f == pytest.approx(0.8925, abs=5e-4)
        assert f == pytest.approx(f_oracle(0.825, 0.972))
        assert not undefined

    def test_detection_outside_truth(self):
        with pytest.raises(CoverageError):
            score({FunctionId("x.js", 0, 1)}, TRUTH)

    def test_combination_is_sorted(self):
        assert score({C}, TRUTH, ["static", "acg"]).combination == ("acg", "static")


class TestDegenerateMetrics:
    def test_nothing_dead_nothing_detected(self):
        assert metrics(0, 0, 0, 0) == (1.0, 1.0, 1.0, False)

    def test_nothing_detected_but_something_dead(self):
        p, r, f, undefined = metrics(0, 0, 3, 3)
        assert (p, r, f, undefined) == (0.0, 0.0, None, True)

    def test_all_false_positives(self):
        p, r, f, undefined = metrics(0, 2, 0, 0)
        assert p == 0.0 and r == 1.0 and f == 0.0 and not undefined

    def test_undefined_f_counts_as_zero_in_mean(self):
        good = score({C}, TRUTH)
        bad = EvalReport("x", (), 0, 0, 1, 0, 0.0, 0.0, None, True)
        mean = aggregate([good, bad])
        assert mean.f_score == 0.5
        assert mean.undefined_precision


@settings(max_examples=300)
@given(st.integers(1, 30), st.data())
def test_count_invariants(n, data):
    ids = function_ids(n)
    dead = frozenset(data.draw(st.sets(st.sampled_from(ids))))
    detected = data.draw(st.sets(st.sampled_from(ids)))
    truth = GroundTruth("t", dead, frozenset(ids) - dead)
    rep = score(detected, truth)
    assert rep.tp + rep.fp == len(detected)
    assert rep.tp + rep.fn == len(dead)
    assert rep.tp + rep.fp + rep.fn + rep.tn == n
    assert 0 <= rep.precision <= 1 and 0 <= rep.recall <= 1
    if rep.f_score is not None:
        assert rep.f_score == pytest.approx(f_oracle(rep.precision, rep.recall))
        assert min(rep.precision, rep.recall) - 1e-12 <= rep.f_score <= max(rep.precision, rep.recall) + 1e-12
    # order independence
    assert score(sorted(detected, reverse=True), truth) == rep


class TestTruthFiles:
    def test_running_example(self, running_inventory):
        inv, _ = running_inventory
        truth = load_truth(RUNNING / "truth.json", inv.function_ids())
        assert len(truth.universe) == 4
        assert truth.dead == {C}

    def test_empty_file_for_empty_app(self, tmp_path):
        path = tmp_path / "truth.json"
        path.write_text("")
        truth = load_truth(path, [])
        assert truth.dead == truth.alive == frozenset()

    def test_missing_function_is_named(self):
        doc = {"app": "r", "functions": [{"id": str(f), "status": "alive"} for f in (A, INLINE, B)]}
        with pytest.raises(CoverageError, match=r"script\.js\[120:223\]"):
            truth_from_dict(doc, [A, INLINE, B, C])

    def test_unknown_function(self):
        doc = {"functions": [{"id": "ghost.js[0:4]", "status": "dead"}]}
        with pytest.raises(CoverageError, match="unknown"):
            truth_from_dict(doc, [])

    def test_duplicate_entry(self):
        doc = {"functions": [{"id": str(C), "status": "dead"}, {"id": str(C), "status": "alive"}]}
        with pytest.raises(TruthError, match="duplicate"):
            truth_from_dict(doc)

    @pytest.mark.parametrize("entry", [{"id": str(C), "status": "zombie"}, {"id": "nope"}, {"status": "dead"}])
    def test_bad_entries(self, entry):
        with pytest.raises(TruthError):
            truth_from_dict({"functions": [entry]})

    def test_round_trip(self):
        doc = truth_to_dict(TRUTH)
        assert truth_from_dict(json.loads(json.dumps(doc))) == TRUTH
        assert [FunctionId.parse(e["id"]) for e in doc["functions"]] == sorted(TRUTH.universe)


class TestSweep:
    @pytest.mark.parametrize("n", range(1, 8))
    def test_cardinality(self, n):
        combos = combinations([f"a{i}" for i in range(n)])
        assert len(combos) == 2 ** n - 1
        assert len(set(combos)) == len(combos)

    def test_empty_sweep_rejected(self):
        with pytest.raises(ValueError):
            combinations([])

    def test_running_example_sweep(self):
        g0 = running_g0()
        results = dict(running_results(g0))
        reports = sweep_results("running", g0, results, {}, TRUTH, results)
        assert len(reports) == 7
        best = reports[0]
        assert best.combination == ("dynamic", "native-calls", "static")
        assert best.f_score == 1.0
        assert [r.f_score or 0 for r in reports] == sorted((r.f_score or 0 for r in reports), reverse=True)

    def test_failed_analyzer_marks_its_combinations(self):
        g0 = running_g0()
        results = dict(running_results(g0))
        del results["static"]
        reports = sweep_results("running", g0, results, {"static": "boom"}, TRUTH,
                                ["dynamic", "native-calls", "static"])
        failed = [r for r in reports if r.error]
        assert len(failed) == 4
        assert all("static" in r.combination and r.error == "boom" for r in failed)
        assert all(r.error is None for r in reports[:3])

    def test_dummy_analyzer_changes_nothing(self):
        g0 = running_g0()
        results = dict(running_results(g0))
        results["dummy"] = g0.without_edges()
        reports = {r.combination: r for r in sweep_results("running", g0, results, {}, TRUTH, results)}
        for combo, rep in reports.items():
            if "dummy" in combo and len(combo) > 1:
                base = reports[tuple(n for n in combo if n != "dummy")]
                assert (rep.tp, rep.fp, rep.fn, rep.tn) == (base.tp, base.fp, base.fn, base.tn)
                assert rep.f_score == base.f_score

    def test_tie_break(self):
        mk = lambda name, p, f: EvalReport("x", (name,), 0, 0, 0, 0, p, 1.0, f)
        reports = [mk("b", 0.5, 0.8), mk("a", 0.5, 0.8), mk("c", 0.9, 0.8), mk("d", 1.0, 0.9), mk("e", 1.0, None)]
        assert [r.name for r in sorted(reports, key=rank_key)] == ["d", "c", "a", "b", "e"]

    @settings(max_examples=150)
    @given(ensembles(max_analyzers=4), st.data())
    def test_monotonicity(self, ens, data):
        g0, results = ens
        if not results:
            return
        ids = [n.id for n in g0.function_nodes()]
        dead = frozenset(data.draw(st.sets(st.sampled_from(ids))) if ids else set())
        truth = GroundTruth("t", dead, frozenset(ids) - dead)
        table = dict(results)
        reports = {r.combination: r for r in sweep_results("t", g0, table, {}, truth, table)}
        for small in reports:
            for big in reports:
                if set(small) <= set(big):
                    assert detected_dead(g0, table, big) <= detected_dead(g0, table, small)
                    assert reports[big].fp <= reports[small].fp
                    assert reports[big].recall <= reports[small].recall


class TestAggregate:
    def test_unweighted_mean(self):
        r1 = EvalReport("a", ("x",), 1, 0, 0, 9, 1.0, 1.0, 1.0)
        r2 = EvalReport("b", ("x",), 1, 1, 1, 0, 0.5, 0.5, 0.5)
        mean = aggregate([r1, r2])
        assert mean.app == "(mean)"
        assert (mean.precision, mean.recall, mean.f_score) == (0.75, 0.75, 0.75)
        assert (mean.tp, mean.fp, mean.fn, mean.tn) == (2, 1, 1, 9)

    def test_errors_are_excluded(self):
        ok = EvalReport("a", ("x",), 1, 0, 0, 0, 1.0, 1.0, 1.0)
        broken = EvalReport("b", ("x",), 0, 0, 0, 0, 0.0, 0.0, None, error="boom")
        assert aggregate([ok, broken]).f_score == 1.0
        with pytest.raises(ValueError):
            aggregate([broken])

    def test_table(self):
        rows = [score({C}, TRUTH, ["static"]),
                EvalReport("z", ("acg",), 0, 0, 1, 0, 0.0, 0.0, None, True),
                EvalReport("q", ("acg",), 0, 0, 0, 0, 0.0, 0.0, None, error="x")]
        text = format_table(rows)
        lines = text.splitlines()
        assert lines[0].split() == ["app", "analyzers", "tp", "fp", "fn", "tn", "precision", "recall", "f-score"]
        assert lines[1].split()[-3:] == ["1.000", "1.000", "1.000"]
        assert "0.000*" in lines[2] and lines[2].endswith("n/a")
        assert lines[3].endswith("error")

    def test_mean_of_f_differs_from_f_of_means(self):
        r1 = EvalReport("a", ("x",), 0, 0, 0, 0, 1.0, 0.5, f_oracle(1.0, 0.5))
        r2 = EvalReport("b", ("x",), 0, 0, 0, 0, 0.5, 1.0, f_oracle(0.5, 1.0))
        mean = aggregate([r1, r2])
        assert not math.isclose(mean.f_score, f_oracle(mean.precision, mean.recall))
