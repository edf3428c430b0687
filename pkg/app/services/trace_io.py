"""
Trace persistence and the statistics derived from traces: run summaries
and per-iteration median residual curves.
"""

import csv
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from app.models.experiment import RunRecord, RunSummary
from app.models.solver import TraceRecord

logger = logging.getLogger(__name__)

TRACE_HEADER = ["iteration", "residual", "error_to_truth", "rows_touched", "selected", "wall_nanos"]
SUMMARY_HEADER = [
    "method", "repetition", "seed", "status", "iters_to_tol", "iters_to_floor", "final_residual",
    "final_error", "total_rows_touched", "wall_nanos", "trace_file", "error",
]
CURVE_HEADER = ["iteration", "median_residual", "median_error"]

# A run has reached its residual floor once within this factor of its minimum residual
FLOOR_FACTOR = 1.1


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def _optional(text: str, cast):
    return cast(text) if text != "" else None


def write_trace_csv(path: Path, trace: Sequence[TraceRecord]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(TRACE_HEADER)
        for record in trace:
            writer.writerow([
                record.iteration,
                _fmt(record.residual),
                _fmt(record.error_to_truth),
                record.rows_touched,
                _fmt(record.selected),
                record.wall_nanos,
            ])


def read_trace_csv(path: Path) -> List[TraceRecord]:
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != TRACE_HEADER:
            raise ValueError(f"{path} is not a trace file (header {reader.fieldnames})")
        return [
            TraceRecord(
                iteration=int(row["iteration"]),
                residual=float(row["residual"]),
                error_to_truth=_optional(row["error_to_truth"], float),
                rows_touched=int(row["rows_touched"]),
                selected=_optional(row["selected"], int),
                wall_nanos=int(row["wall_nanos"]),
            )
            for row in reader
        ]


def summarize_trace(trace: Sequence[TraceRecord], residual_tol: Optional[float] = None) -> RunSummary:
    """Recompute a run summary from its trace alone"""
    if not trace:
        raise ValueError("cannot summarize an empty trace")
    residuals = np.array([record.residual for record in trace])
    floor = residuals.min() * FLOOR_FACTOR
    iters_to_floor = trace[int(np.argmax(residuals <= floor))].iteration

    iters_to_tol = None
    if residual_tol is not None:
        reached = np.flatnonzero(residuals <= residual_tol)
        if reached.size:
            iters_to_tol = trace[int(reached[0])].iteration

    final = trace[-1]
    return RunSummary(
        iters=final.iteration,
        iters_to_tol=iters_to_tol,
        iters_to_floor=iters_to_floor,
        final_residual=final.residual,
        final_error=final.error_to_truth,
        total_rows_touched=final.rows_touched,
        wall_nanos=final.wall_nanos,
    )


def summary_line(method: str, summary: RunSummary) -> str:
    """method,iters,final_residual,final_error,rows_touched,wall_nanos"""
    return ",".join([
        method,
        str(summary.iters),
        _fmt(summary.final_residual),
        _fmt(summary.final_error),
        str(summary.total_rows_touched),
        str(summary.wall_nanos),
    ])


def _carried(trace: Sequence[TraceRecord], iterations: np.ndarray, field: str) -> np.ndarray:
    """Value of `field` at each iteration, carrying the last traced value forward"""
    traced = np.array([record.iteration for record in trace])
    values = np.array([getattr(record, field) if getattr(record, field) is not None else np.nan
                       for record in trace], dtype=np.float64)
    positions = np.searchsorted(traced, iterations, side="right") - 1
    return values[positions]


def median_curve(traces: Sequence[Sequence[TraceRecord]]) -> Dict[str, np.ndarray]:
    """
    Median residual and error across repetitions at every traced iteration.

    A repetition that stopped early contributes its final values to later
    iterations.
    """
    if not traces:
        raise ValueError("median_curve needs at least one trace")
    iterations = np.unique(np.concatenate([[record.iteration for record in trace] for trace in traces]))
    residuals = np.vstack([_carried(trace, iterations, "residual") for trace in traces])
    errors = np.vstack([_carried(trace, iterations, "error_to_truth") for trace in traces])
    median_error = (np.full(iterations.shape, np.nan) if np.isnan(errors).all()
                    else np.nanmedian(errors, axis=0))
    return {
        "iteration": iterations,
        "median_residual": np.median(residuals, axis=0),
        "median_error": median_error,
    }


def write_curve_csv(path: Path, curve: Dict[str, np.ndarray]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CURVE_HEADER)
        for iteration, residual, error in zip(curve["iteration"], curve["median_residual"], curve["median_error"]):
            writer.writerow([
                int(iteration),
                repr(float(residual)),
                "" if np.isnan(error) else repr(float(error)),
            ])


def write_summary_csv(path: Path, records: Sequence[RunRecord]) -> None:
    """One row per run, ordered by (method, repetition)"""
    ordered = sorted(records, key=lambda record: (record.method, record.repetition))
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER)
        for record in ordered:
            summary = record.summary
            writer.writerow([
                record.method,
                record.repetition,
                record.seed,
                record.status,
                _fmt(summary.iters_to_tol) if summary else "",
                _fmt(summary.iters_to_floor) if summary else "",
                _fmt(summary.final_residual) if summary else "",
                _fmt(summary.final_error) if summary else "",
                _fmt(summary.total_rows_touched) if summary else "",
                _fmt(summary.wall_nanos) if summary else "",
                record.trace_path or "",
                record.error_message or "",
            ])
