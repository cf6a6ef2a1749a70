"""Tests for count-table loading, application filters, and analysis reports."""

import numpy as np
import pytest

from stepfdr.errors import DataError
from stepfdr.ingest import (
    CountRecord,
    analyze,
    filter_hiv,
    filter_methylation,
    load_counts,
    report_rows,
    report_summary,
)
from stepfdr.pvalue import PValueFlavor, bt_pvalues, fet_pvalues
from stepfdr import ingest


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


class TestLoadCounts:
    def test_csv_roundtrip(self, tmp_path):
        path = write(tmp_path, "a.csv", "id,c1,c2\nx,3,0\ny,0,7\n")
        records = load_counts(path)
        assert records == [CountRecord("x", 3, 0), CountRecord("y", 0, 7)]

    def test_tsv_inferred_from_extension(self, tmp_path):
        path = write(tmp_path, "a.tsv", "id\tc1\tc2\tn1\tn2\nx\t3\t0\t5\t5\n")
        records = load_counts(path)
        assert records == [CountRecord("x", 3, 0, 5, 5)]

    def test_explicit_fmt_overrides_extension(self, tmp_path):
        path = write(tmp_path, "a.txt", "id\tc1\tc2\nx\t1\t2\n")
        assert load_counts(path, fmt="tsv") == [CountRecord("x", 1, 2)]

    def test_bad_fmt_rejected(self, tmp_path):
        path = write(tmp_path, "a.csv", "id,c1,c2\n")
        with pytest.raises(ValueError):
            load_counts(path, fmt="xlsx")

    def test_blank_lines_skipped(self, tmp_path):
        path = write(tmp_path, "a.csv", "id,c1,c2\nx,1,2\n\n  \ny,3,4\n")
        assert [r.id for r in load_counts(path)] == ["x", "y"]

    def test_header_case_and_spacing_normalized(self, tmp_path):
        path = write(tmp_path, "a.csv", " ID , C1 , C2 \nx,1,2\n")
        assert load_counts(path) == [CountRecord("x", 1, 2)]

    def test_bad_header_lists_location(self, tmp_path):
        path = write(tmp_path, "a.csv", "name,a,b\nx,1,2\n")
        with pytest.raises(DataError, match=r"a\.csv:1"):
            load_counts(path)

    def test_empty_file(self, tmp_path):
        path = write(tmp_path, "a.csv", "")
        with pytest.raises(DataError, match=r"a\.csv:1"):
            load_counts(path)

    def test_noninteger_count_reports_line(self, tmp_path):
        path = write(tmp_path, "a.csv", "id,c1,c2\nx,1,2\ny,one,2\n")
        with pytest.raises(DataError, match=r"a\.csv:3.*c1"):
            load_counts(path)

    def test_negative_count_reports_line(self, tmp_path):
        path = write(tmp_path, "a.csv", "id,c1,c2\nx,-1,2\n")
        with pytest.raises(DataError, match=r"a\.csv:2"):
            load_counts(path)

    def test_wrong_field_count_reports_line(self, tmp_path):
        path = write(tmp_path, "a.csv", "id,c1,c2\nx,1\n")
        with pytest.raises(DataError, match=r"a\.csv:2.*fields"):
            load_counts(path)

    def test_empty_id_rejected(self, tmp_path):
        path = write(tmp_path, "a.csv", "id,c1,c2\n ,1,2\n")
        with pytest.raises(DataError, match="empty id"):
            load_counts(path)

    def test_count_above_total_rejected(self, tmp_path):
        path = write(tmp_path, "a.csv", "id,c1,c2,n1,n2\nx,6,0,5,5\n")
        with pytest.raises(DataError, match=r"a\.csv:2"):
            load_counts(path)

    def test_missing_file_raises_oserror(self, tmp_path):
        with pytest.raises(OSError):
            load_counts(str(tmp_path / "nope.csv"))


class TestCountRecord:
    def test_totals_must_pair(self):
        with pytest.raises(DataError):
            CountRecord("x", 1, 2, n1=5)

    def test_negative_counts_rejected(self):
        with pytest.raises(DataError):
            CountRecord("x", -1, 2)

    def test_total_property(self):
        assert CountRecord("x", 3, 4).total == 7


class TestFilters:
    def test_methylation_boundaries(self):
        kept = CountRecord("k", 11, 0)
        at_cap = CountRecord("c", 25, 1)
        low_total = CountRecord("l", 5, 5)
        over_cap = CountRecord("o", 26, 0)
        out = filter_methylation([kept, at_cap, low_total, over_cap])
        assert out == [kept, at_cap]

    def test_hiv_boundaries(self):
        drop = CountRecord("d", 2, 2, 73, 73)
        keep = CountRecord("k", 2, 3, 73, 73)
        assert filter_hiv([drop, keep]) == [keep]

    def test_filters_preserve_order_and_are_idempotent(self):
        records = [CountRecord(f"r{i}", 10 + i, 3) for i in range(5)]
        once = filter_methylation(records)
        assert filter_methylation(once) == once
        assert [r.id for r in once] == sorted([r.id for r in once])


class TestAnalyze:
    def records_bt(self):
        return [CountRecord("a", 14, 0), CountRecord("b", 6, 5),
                CountRecord("c", 0, 12), CountRecord("d", 4, 4)]

    def records_fet(self):
        return [CountRecord("a", 9, 0, 10, 10), CountRecord("b", 4, 5, 10, 10),
                CountRecord("c", 1, 10, 12, 12)]

    def test_bt_pvalues_match_direct_computation(self):
        records = self.records_bt()
        report = analyze(records, "bt", 0.05)
        for i, r in enumerate(records):
            conv, _ = bt_pvalues(r.c1, r.c2, PValueFlavor.CONVENTIONAL)
            mid, _ = bt_pvalues(r.c1, r.c2, PValueFlavor.MID)
            assert report.p_conv[i] == conv
            assert report.p_mid[i] == mid

    def test_fet_pvalues_match_direct_computation(self):
        records = self.records_fet()
        report = analyze(records, "fet", 0.05)
        for i, r in enumerate(records):
            conv, _ = fet_pvalues(r.c1, r.c2, r.n1, r.n2,
                                  PValueFlavor.CONVENTIONAL)
            assert report.p_conv[i] == conv

    def test_rejected_mask_matches_results(self):
        report = analyze(self.records_bt(), "bt", 0.1)
        for name in report.procedures:
            mask = report.rejected_mask(name)
            assert mask.sum() == report.results[name].rejection_count
            assert np.array_equal(np.flatnonzero(mask),
                                  np.sort(report.results[name].rejected))

    def test_comparison_present_only_with_both_adaptive_runs(self):
        records = self.records_bt()
        full = analyze(records, "bt", 0.05)
        assert full.comparison is not None
        assert full.comparison.r_mp == full.results["MidPBH+"].rejection_count
        conv_only = analyze(records, "bt", 0.05, procedures=("BH", "BH+"))
        assert conv_only.comparison is None
        assert "MidPBH+" not in conv_only.results
        assert conv_only.p_mid is None
        mid_only = analyze(records, "bt", 0.05, procedures=("MidPBH+",))
        assert mid_only.comparison is None
        assert mid_only.p_conv is None
        assert set(mid_only.results) == {"MidPBH+"}

    def test_procedure_order_canonicalized(self):
        report = analyze(self.records_bt(), "bt", 0.05,
                         procedures=("MidPBH+", "BH+", "BH"))
        assert report.procedures == ("BH", "BH+", "MidPBH+")

    def test_unknown_procedure_rejected(self):
        with pytest.raises(ValueError, match="unknown procedure"):
            analyze(self.records_bt(), "bt", 0.05, procedures=("BY",))

    def test_empty_procedures_rejected(self):
        with pytest.raises(ValueError):
            analyze(self.records_bt(), "bt", 0.05, procedures=())

    def test_empty_records_rejected(self):
        with pytest.raises(DataError, match="no hypotheses"):
            analyze([], "bt", 0.05)

    def test_fet_requires_totals(self):
        with pytest.raises(DataError, match="trial totals"):
            analyze([CountRecord("a", 3, 0)], "fet", 0.05)

    def test_bad_alpha_and_test(self):
        with pytest.raises(ValueError):
            analyze(self.records_bt(), "bt", 1.5)
        with pytest.raises(ValueError):
            analyze(self.records_bt(), "chisq", 0.05)

    def test_mid_count_ordering_matches_condition_flag(self):
        rng = np.random.default_rng(14)
        for _ in range(25):
            m = int(rng.integers(2, 18))
            records = [CountRecord(f"t{i}", int(rng.integers(0, 15)),
                                   int(rng.integers(0, 15)))
                       for i in range(m)]
            report = analyze(records, "bt", float(rng.uniform(0.05, 0.25)))
            cmp_res = report.comparison
            assert cmp_res.condition_holds == (cmp_res.r_mp >= cmp_res.r_cp)


class TestReports:
    def test_report_rows_layout_and_flags(self):
        records = [CountRecord("a", 14, 0), CountRecord("b", 6, 5)]
        report = analyze(records, "bt", 0.05)
        rows = report_rows(report)
        assert [r["id"] for r in rows] == ["a", "b"]
        for i, row in enumerate(rows):
            assert tuple(row) == ingest.DETAIL_FIELDS
            assert row["p_conv"] == repr(float(report.p_conv[i]))
            assert row["p_mid"] == repr(float(report.p_mid[i]))
            for name, col in (("BH", "reject_bh"), ("BH+", "reject_bhplus"),
                              ("MidPBH+", "reject_midpbhplus")):
                assert row[col] == int(report.rejected_mask(name)[i])

    def test_report_rows_blank_for_skipped_procedures(self):
        report = analyze([CountRecord("a", 14, 0)], "bt", 0.05,
                         procedures=("BH",))
        row = report_rows(report)[0]
        assert row["p_mid"] == ""
        assert row["reject_bhplus"] == ""
        assert row["reject_midpbhplus"] == ""
        assert row["reject_bh"] in (0, 1)

    def test_report_summary_structure(self):
        records = [CountRecord("a", 14, 0), CountRecord("b", 6, 5)]
        report = analyze(records, "bt", 0.05)
        summary = report_summary(report)
        assert summary["schema_version"] == 1
        assert summary["test"] == "bt"
        assert summary["alpha"] == 0.05
        assert summary["m"] == 2
        assert set(summary["procedures"]) == {"BH", "BH+", "MidPBH+"}
        for name, block in summary["procedures"].items():
            assert block["rejections"] == report.results[name].rejection_count
        cmp_block = summary["mid_vs_conventional"]
        assert cmp_block["condition_holds"] == report.comparison.condition_holds
        assert cmp_block["r_cp"] == report.comparison.r_cp
        assert cmp_block["r_mp"] == report.comparison.r_mp

    def test_report_summary_omits_comparison_without_both_runs(self):
        report = analyze([CountRecord("a", 14, 0)], "bt", 0.05,
                         procedures=("BH",))
        summary = report_summary(report)
        assert "mid_vs_conventional" not in summary
