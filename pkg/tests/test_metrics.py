import csv
import json

import numpy as np
import pytest

from hscrf.exact import MarginalSet
from hscrf.metrics import (
    PROBABILITY_FLOOR,
    avg_kl,
    avg_l1,
    compare_marginals,
    decode_match,
    write_comparison_csv,
    write_comparison_summary,
)


def one_cell(exact_row, estimate_row):
    return (
        MarginalSet([np.array([exact_row])], np.zeros((0, 1)), None),
        MarginalSet([np.array([estimate_row])], np.zeros((0, 1)), None),
    )


class TestKl:
    def test_single_cell_value(self):
        exact, estimate = one_cell([0.5, 0.5], [0.25, 0.75])
        # 0.5 ln(0.5/0.25) + 0.5 ln(0.5/0.75) = 0.5 ln(4/3)
        assert avg_kl(exact, estimate) == pytest.approx(
            0.14384103622589045, abs=1e-15
        )

    def test_identical_rows_have_zero_divergence(self):
        exact, estimate = one_cell([0.2, 0.8], [0.2, 0.8])
        assert avg_kl(exact, estimate) == pytest.approx(0.0, abs=1e-12)

    def test_zero_estimate_mass_is_floored_to_a_finite_value(self):
        exact, estimate = one_cell([0.5, 0.5], [1.0, 0.0])
        value = avg_kl(exact, estimate)
        assert np.isfinite(value)
        floored = np.array([1.0, PROBABILITY_FLOOR])
        floored /= floored.sum()
        expected = 0.5 * np.log(0.5 / floored[0]) + 0.5 * np.log(0.5 / floored[1])
        assert value == pytest.approx(expected, rel=1e-12)

    def test_zero_exact_mass_contributes_nothing(self):
        exact, estimate = one_cell([1.0, 0.0], [0.5, 0.5])
        assert avg_kl(exact, estimate) == pytest.approx(np.log(2.0), abs=1e-12)

    def test_averages_over_levels_and_positions(self):
        state_exact = [np.array([[0.5, 0.5], [0.5, 0.5]]), np.array([[1.0, 0.0]])]
        state_estimate = [np.array([[0.25, 0.75], [0.5, 0.5]]), np.array([[1.0, 0.0]])]
        exact = MarginalSet(state_exact, np.zeros((1, 2)), None)
        estimate = MarginalSet(state_estimate, np.zeros((1, 2)), None)
        assert avg_kl(exact, estimate) == pytest.approx(
            0.14384103622589045 / 3, abs=1e-9
        )


class TestL1:
    def test_single_cell_value(self):
        exact, estimate = one_cell([0.5, 0.5], [0.25, 0.75])
        assert avg_l1(exact, estimate) == pytest.approx(0.5, abs=1e-15)

    def test_upper_bound_is_two(self):
        exact, estimate = one_cell([1.0, 0.0], [0.0, 1.0])
        assert avg_l1(exact, estimate) == pytest.approx(2.0, abs=1e-15)


class TestDecode:
    def test_match_counts_agreeing_argmax_cells(self):
        state_exact = [np.array([[0.9, 0.1], [0.2, 0.8]])]
        state_estimate = [np.array([[0.6, 0.4], [0.7, 0.3]])]
        exact = MarginalSet(state_exact, np.zeros((1, 1)), None)
        estimate = MarginalSet(state_estimate, np.zeros((1, 1)), None)
        assert decode_match(exact, estimate) == pytest.approx(0.5)

    def test_ties_resolve_to_the_lowest_state(self):
        exact, estimate = one_cell([0.5, 0.5], [0.5, 0.5])
        assert decode_match(exact, estimate) == 1.0


class TestCompare:
    def test_per_level_breakdown(self):
        state_exact = [np.array([[0.5, 0.5]]), np.array([[0.5, 0.5]])]
        state_estimate = [np.array([[0.5, 0.5]]), np.array([[0.25, 0.75]])]
        exact = MarginalSet(state_exact, np.zeros((0, 2)), None)
        estimate = MarginalSet(state_estimate, np.zeros((0, 2)), None)
        report = compare_marginals(exact, estimate)
        assert report.kl_per_level[0] == pytest.approx(0.0, abs=1e-12)
        assert report.kl_per_level[1] == pytest.approx(0.14384103622589045, abs=1e-12)
        assert report.avg_kl == pytest.approx(sum(report.kl_per_level) / 2, rel=1e-12)
        assert report.l1_per_level == (0.0, pytest.approx(0.5))
        assert report.match_per_level == (1.0, 0.0)
        assert report.decode_match == pytest.approx(0.5)

    def test_depth_mismatch_is_rejected(self):
        a = MarginalSet([np.ones((1, 2))], np.zeros((0, 1)), None)
        b = MarginalSet([np.ones((1, 2))] * 2, np.zeros((0, 2)), None)
        with pytest.raises(ValueError, match="different depths"):
            avg_kl(a, b)

    def test_shape_mismatch_is_rejected(self):
        a = MarginalSet([np.ones((1, 2))], np.zeros((0, 1)), None)
        b = MarginalSet([np.ones((2, 2))], np.zeros((1, 1)), None)
        with pytest.raises(ValueError, match="mismatched state tables"):
            avg_l1(a, b)


class TestReports:
    def make_reports(self):
        exact, estimate = one_cell([0.5, 0.5], [0.25, 0.75])
        return [compare_marginals(exact, estimate), compare_marginals(exact, exact)]

    def test_csv_layout_and_values(self, tmp_path):
        path = tmp_path / "comparison.csv"
        write_comparison_csv(self.make_reports(), path)
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert [r["metric"] for r in rows[:3]] == ["avg_kl", "avg_l1", "decode_match"]
        assert {r["sequence"] for r in rows} == {"0", "1"}
        by_key = {(r["sequence"], r["metric"]): float(r["value"]) for r in rows}
        assert by_key[("0", "avg_kl")] == pytest.approx(0.14384103622589045, abs=1e-15)
        assert by_key[("1", "avg_l1")] == 0.0

    def test_summary_layout(self, tmp_path):
        path = tmp_path / "summary.json"
        write_comparison_summary(self.make_reports(), path)
        summary = json.loads(path.read_text())
        assert summary["sequences"] == 2
        assert summary["avg_l1"]["mean"] == pytest.approx(0.25)
        expected_std = float(np.std([0.5, 0.0], ddof=1))
        assert summary["avg_l1"]["std"] == pytest.approx(expected_std)

    def test_single_report_summary_has_zero_std(self, tmp_path):
        path = tmp_path / "one.json"
        write_comparison_summary(self.make_reports()[:1], path)
        summary = json.loads(path.read_text())
        assert summary["avg_kl"]["std"] == 0.0
