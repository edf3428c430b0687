import csv

import numpy as np
import pytest

from app.models.experiment import RunRecord
from app.models.solver import TraceRecord
from app.services.trace_io import (
    CURVE_HEADER,
    SUMMARY_HEADER,
    TRACE_HEADER,
    median_curve,
    read_trace_csv,
    summarize_trace,
    summary_line,
    write_curve_csv,
    write_summary_csv,
    write_trace_csv,
)


def trace_of(residuals, errors=None, step=1, cost=10):
    errors = errors if errors is not None else [None] * len(residuals)
    return [
        TraceRecord(iteration=i * step, residual=r, error_to_truth=e, rows_touched=i * step * cost,
                    selected=None if i == 0 else i % 3)
        for i, (r, e) in enumerate(zip(residuals, errors))
    ]


def read_rows(path):
    with open(path, newline="") as f:
        return list(csv.reader(f))


class TestTraceFile:
    def test_header_and_values(self, tmp_path):
        trace = trace_of([1.0, 0.1, 1 / 3], errors=[2.0, 0.5, 0.25])
        path = tmp_path / "trace.csv"
        write_trace_csv(path, trace)
        rows = read_rows(path)
        assert rows[0] == TRACE_HEADER
        assert rows[1] == ["0", "1.0", "2.0", "0", "", "0"]
        assert float(rows[3][1]) == 1 / 3

    def test_read_back(self, tmp_path):
        trace = trace_of([1.0, 0.3, 0.01], errors=[None, None, None])
        path = tmp_path / "trace.csv"
        write_trace_csv(path, trace)
        assert read_trace_csv(path) == trace

    def test_read_rejects_other_csv(self, tmp_path):
        path = tmp_path / "other.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError):
            read_trace_csv(path)


class TestSummary:
    def test_recomputed_from_trace(self):
        summary = summarize_trace(trace_of([1.0, 0.5, 1e-3, 1e-7, 5e-8], errors=[3.0, 2.0, 1.0, 0.1, 0.05]),
                                  residual_tol=1e-6)
        assert summary.iters == 4
        assert summary.iters_to_tol == 3
        assert summary.final_residual == 5e-8
        assert summary.final_error == 0.05
        assert summary.total_rows_touched == 40

    def test_floor_is_within_ten_percent_of_minimum(self):
        summary = summarize_trace(trace_of([1.0, 0.2, 0.105, 0.1, 0.101]))
        assert summary.iters_to_floor == 2
        assert summary.iters_to_tol is None

    def test_empty_trace(self):
        with pytest.raises(ValueError):
            summarize_trace([])

    def test_summary_line(self):
        summary = summarize_trace(trace_of([1.0, 0.25], errors=[1.0, 0.5]))
        assert summary_line("rka", summary) == "rka,1,0.25,0.5,10,0"

    def test_summary_line_without_truth(self):
        summary = summarize_trace(trace_of([1.0, 0.25]))
        assert summary_line("classical", summary) == "classical,1,0.25,,10,0"


class TestMedianCurve:
    def test_carries_final_values_forward(self):
        short = trace_of([1.0, 0.1], errors=[1.0, 0.1])
        long = trace_of([1.0, 0.5, 0.2, 0.05], errors=[1.0, 0.5, 0.2, 0.05])
        middle = trace_of([1.0, 0.3, 0.3, 0.3], errors=[1.0, 0.3, 0.3, 0.3])
        curve = median_curve([short, long, middle])
        assert curve["iteration"].tolist() == [0, 1, 2, 3]
        assert curve["median_residual"].tolist() == [1.0, 0.3, 0.2, 0.1]

    def test_sparse_traces_are_aligned(self):
        every_two = trace_of([1.0, 0.5, 0.25], step=2)
        every_one = trace_of([1.0, 0.9, 0.8, 0.7, 0.6])
        curve = median_curve([every_two, every_one])
        assert curve["iteration"].tolist() == [0, 1, 2, 3, 4]
        assert curve["median_residual"][1] == pytest.approx((1.0 + 0.9) / 2)

    def test_missing_truth(self):
        curve = median_curve([trace_of([1.0, 0.5]), trace_of([1.0, 0.4])])
        assert np.isnan(curve["median_error"]).all()

    def test_write(self, tmp_path):
        curve = median_curve([trace_of([1.0, 0.5]), trace_of([1.0, 0.4])])
        path = tmp_path / "curve.csv"
        write_curve_csv(path, curve)
        rows = read_rows(path)
        assert rows[0] == CURVE_HEADER
        assert rows[2] == ["1", "0.45", ""]

    def test_needs_a_trace(self):
        with pytest.raises(ValueError):
            median_curve([])


def test_summary_csv_is_sorted(tmp_path):
    summary = summarize_trace(trace_of([1.0, 0.1]))
    records = [
        RunRecord(method="rka", repetition=1, seed=2, status="completed", summary=summary, trace_path="b.csv"),
        RunRecord(method="classical", repetition=0, seed=1, status="failed", error_message="boom"),
        RunRecord(method="rka", repetition=0, seed=3, status="completed", summary=summary, trace_path="a.csv"),
    ]
    path = tmp_path / "summary.csv"
    write_summary_csv(path, records)
    rows = read_rows(path)
    assert rows[0] == SUMMARY_HEADER
    assert [(row[0], row[1]) for row in rows[1:]] == [("classical", "0"), ("rka", "0"), ("rka", "1")]
    assert rows[1][3] == "failed"
    assert rows[1][-1] == "boom"
    assert rows[2][10] == "a.csv"
