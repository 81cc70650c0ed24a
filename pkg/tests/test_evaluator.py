import numpy as np
import pytest

from nerforge.evaluator import PRF, macro_f1, render_report, report_lines, score_flat, score_nested
from nerforge.types import EntitySpan

from helpers import oracle_match_counts, oracle_per_type_counts, random_flat_spans, random_laminar

ETYPES = ("PER", "ORG", "LOC", "MISC")


class TestScoreFlat:
    def test_perfect(self):
        gold = [{EntitySpan(0, 2, "PER")}]
        total, _ = score_flat(gold, gold)
        assert (total.precision, total.recall, total.f1) == (1.0, 1.0, 1.0)

    def test_half(self):
        gold = [{EntitySpan(0, 2, "PER"), EntitySpan(3, 4, "LOC")}]
        pred = [{EntitySpan(0, 2, "PER"), EntitySpan(4, 5, "LOC")}]
        total, _ = score_flat(gold, pred)
        assert (total.tp, total.fp, total.fn) == (1, 1, 1)
        assert total.f1 == pytest.approx(0.5)

    def test_empty_pred_conventions(self):
        gold = [{EntitySpan(0, 1, "PER")}]
        total, _ = score_flat(gold, [set()])
        assert (total.precision, total.recall, total.f1) == (0.0, 0.0, 0.0)

    def test_all_empty(self):
        total, per_type = score_flat([set(), set()], [set(), set()])
        assert (total.tp, total.fp, total.fn) == (0, 0, 0)
        assert total.f1 == 0.0
        assert per_type == {}

    def test_mismatched_lengths(self):
        with pytest.raises(ValueError, match="aligned"):
            score_flat([set()], [set(), set()])

    def test_micro_equals_sum_of_per_type(self):
        rng = np.random.default_rng(20)
        gold = [random_flat_spans(rng, 12, ETYPES) for _ in range(50)]
        pred = [random_flat_spans(rng, 12, ETYPES) for _ in range(50)]
        total, per_type = score_flat(gold, pred)
        summed = PRF()
        for prf in per_type.values():
            summed = summed + prf
        assert (summed.tp, summed.fp, summed.fn) == (total.tp, total.fp, total.fn)

    def test_oracle_equivalence(self):
        rng = np.random.default_rng(21)
        for _ in range(200):
            n_sents = int(rng.integers(1, 8))
            gold, pred = [], []
            for _ in range(n_sents):
                n = int(rng.integers(1, 14))
                gold.append(random_flat_spans(rng, n, ETYPES))
                pred.append(random_flat_spans(rng, n, ETYPES))
            total, per_type = score_flat(gold, pred)
            assert (total.tp, total.fp, total.fn) == oracle_match_counts(gold, pred)
            assert {
                t: (p.tp, p.fp, p.fn) for t, p in per_type.items()
            } == oracle_per_type_counts(gold, pred)

    def test_symmetry_swaps_precision_recall(self):
        rng = np.random.default_rng(22)
        gold = [random_flat_spans(rng, 10, ETYPES) for _ in range(30)]
        pred = [random_flat_spans(rng, 10, ETYPES) for _ in range(30)]
        a, _ = score_flat(gold, pred)
        b, _ = score_flat(pred, gold)
        assert a.precision == b.recall and a.recall == b.precision
        assert a.f1 == pytest.approx(b.f1)


class TestScoreNested:
    def test_partial(self):
        gold = [{EntitySpan(0, 3, "ORG"), EntitySpan(0, 2, "PER")}]
        pred = [{EntitySpan(0, 3, "ORG")}]
        prf = score_nested(gold, pred)
        assert prf.precision == 1.0
        assert prf.recall == pytest.approx(0.5)
        assert prf.f1 == pytest.approx(2 / 3)

    def test_oracle_equivalence_nested(self):
        rng = np.random.default_rng(23)
        for _ in range(200):
            n_sents = int(rng.integers(1, 6))
            gold, pred = [], []
            for _ in range(n_sents):
                n = int(rng.integers(1, 10))
                gold.append(random_laminar(rng, n, ETYPES, 4))
                pred.append(random_laminar(rng, n, ETYPES, 4))
            prf = score_nested(gold, pred)
            assert (prf.tp, prf.fp, prf.fn) == oracle_match_counts(gold, pred)

    def test_score_self_perfect(self):
        rng = np.random.default_rng(24)
        gold = [random_laminar(rng, 8, ETYPES, 3) for _ in range(20)]
        prf = score_nested(gold, gold)
        assert prf.fp == prf.fn == 0
        if prf.tp:
            assert prf.f1 == 1.0


class TestMacroF1:
    def test_mean(self):
        assert macro_f1([0.90, 0.80]) == pytest.approx(0.85)

    def test_singleton(self):
        assert macro_f1([0.7]) == 0.7

    def test_permutation_invariant(self):
        values = [0.1, 0.4, 0.9, 0.6]
        assert macro_f1(values) == pytest.approx(macro_f1(values[::-1]))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            macro_f1([])


class TestReports:
    def test_lines_and_table(self):
        gold = [{EntitySpan(0, 2, "PER")}]
        report = {"demo": score_flat(gold, gold)}
        lines = report_lines(report)
        assert lines[0].startswith("demo\tALL\t1\t0\t0")
        assert any(line.split("\t")[1] == "PER" for line in lines)
        table = render_report(report)
        assert "demo" in table and "PER" in table
