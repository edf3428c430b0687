"""
Bench runner: every (method, repetition) pair is a job on an APScheduler
thread pool, tracked in a SQLAlchemy run registry so an interrupted bench
can be resumed.
"""

import logging
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional

from apscheduler.events import EVENT_JOB_ERROR, EVENT_JOB_EXECUTED, EVENT_JOB_MISSED
from apscheduler.executors.pool import ThreadPoolExecutor
from apscheduler.schedulers.background import BackgroundScheduler
from sqlalchemy import select

from app.core.config import settings
from app.core.seeds import derive_seed
from app.db.database import create_registry_engine, session_factory, session_scope
from app.db.models import BenchRun, run_id
from app.models.experiment import ExperimentSpec, RunRecord
from app.models.solver import SolverConfig
from app.models.system import LinearSystem
from app.services.paving import write_paving_csv
from app.services.row_clustering import write_assignments_csv
from app.services.solvers import BlockSolver, make_solver
from app.services.trace_io import (
    median_curve,
    read_trace_csv,
    summarize_trace,
    write_curve_csv,
    write_summary_csv,
    write_trace_csv,
)

logger = logging.getLogger(__name__)

TRACE_DIR = "traces"
SUMMARY_FILE = "summary.csv"


def repetition_seed(seed: int, repetition: int) -> int:
    """Seed shared by every method within one repetition"""
    return derive_seed(seed, "repetition", repetition)


def trace_file(method: str, repetition: int) -> str:
    return f"{TRACE_DIR}/{method}_rep{repetition:03d}.csv"


def curve_file(method: str) -> str:
    return f"curve_{method}.csv"


class BenchService:
    """Runs an ExperimentSpec against one instance"""

    def __init__(self, spec: ExperimentSpec, system: LinearSystem, seed: int = 0,
                 resume: bool = False, workers: Optional[int] = None):
        self.spec = spec
        self.system = system
        self.seed = seed
        self.resume = resume
        self.workers = workers or settings.BENCH_WORKERS
        self.out_dir = Path(spec.output_dir)
        self.sessions = session_factory(create_registry_engine(self.out_dir))

    def _planned_runs(self) -> List[tuple]:
        return [
            (cfg.model_copy(update={"seed": repetition_seed(self.seed, repetition)}), repetition)
            for cfg in self.spec.methods
            for repetition in range(self.spec.repetitions)
        ]

    def _planned(self, method: str, repetition: int) -> bool:
        return repetition < self.spec.repetitions and any(cfg.method.value == method for cfg in self.spec.methods)

    def _register(self, cfg: SolverConfig, repetition: int) -> bool:
        """Create or reset the registry row; False when the run can be skipped"""
        method = cfg.method.value
        with session_scope(self.sessions) as session:
            run = session.get(BenchRun, run_id(method, repetition))
            if run is None:
                session.add(BenchRun(
                    id=run_id(method, repetition),
                    method=method,
                    repetition=repetition,
                    seed=cfg.seed,
                    status="pending",
                ))
                return True

            done = run.status == "completed" and run.trace_path and (self.out_dir / run.trace_path).exists()
            if self.resume and done:
                logger.info(f"Skipping completed run {run.id}")
                return False
            run.seed = cfg.seed
            run.status = "pending"
            run.summary = None
            run.error_message = None
            return True

    def _update_run(self, rid: str, **values) -> None:
        with session_scope(self.sessions) as session:
            run = session.get(BenchRun, rid)
            for key, value in values.items():
                setattr(run, key, value)

    def run_job(self, cfg: SolverConfig, repetition: int) -> None:
        """Job body; failures are recorded in the registry, never raised"""
        method = cfg.method.value
        rid = run_id(method, repetition)
        self._update_run(rid, status="processing", started_at=datetime.now(timezone.utc))
        try:
            solver = make_solver(self.system, cfg)
            state = solver.solve()

            relative = trace_file(method, repetition)
            (self.out_dir / TRACE_DIR).mkdir(parents=True, exist_ok=True)
            write_trace_csv(self.out_dir / relative, state.trace)
            if isinstance(solver, BlockSolver):
                write_paving_csv(self.out_dir / relative.replace(".csv", "_paving.csv"), solver.paving)
            if getattr(solver, "clustering", None) is not None:
                write_assignments_csv(self.out_dir / relative.replace(".csv", "_clusters.csv"), solver.clustering)

            summary = summarize_trace(state.trace, cfg.residual_tol)
            self._update_run(
                rid,
                status="completed",
                completed_at=datetime.now(timezone.utc),
                trace_path=relative,
                summary=summary.model_dump(),
            )
            logger.info(f"Run {rid} completed after {summary.iters} iterations")
        except Exception as e:
            logger.error(f"Run {rid} failed: {e}")
            self._update_run(rid, status="failed", completed_at=datetime.now(timezone.utc),
                             error_message=str(e))

    def _execute(self, pending: List[tuple]) -> None:
        scheduler = BackgroundScheduler(
            executors={"default": ThreadPoolExecutor(self.workers)},
            job_defaults={"coalesce": False, "max_instances": 1},
        )
        finished = threading.Event()
        remaining = {"count": len(pending)}
        lock = threading.Lock()

        def on_job_event(event):
            if getattr(event, "exception", None):
                logger.error(f"Job {event.job_id} raised: {event.exception}")
            with lock:
                remaining["count"] -= 1
                if remaining["count"] == 0:
                    finished.set()

        scheduler.add_listener(on_job_event, EVENT_JOB_EXECUTED | EVENT_JOB_ERROR | EVENT_JOB_MISSED)
        scheduler.start()
        try:
            for cfg, repetition in pending:
                scheduler.add_job(
                    self.run_job,
                    "date",  # Run once immediately
                    args=[cfg, repetition],
                    id=f"bench_{run_id(cfg.method.value, repetition)}",
                    misfire_grace_time=None,
                )
            finished.wait()
        finally:
            scheduler.shutdown(wait=True)

    def collect(self) -> List[RunRecord]:
        """Registry rows as RunRecords, summaries recomputed from the trace files"""
        with session_scope(self.sessions) as session:
            runs = session.execute(select(BenchRun)).scalars().all()
            records = [run.to_record() for run in runs if self._planned(run.method, run.repetition)]

        tolerances = {cfg.method.value: cfg.residual_tol for cfg in self.spec.methods}
        for record in records:
            if record.status == "completed" and record.trace_path:
                trace = read_trace_csv(self.out_dir / record.trace_path)
                record.summary = summarize_trace(trace, tolerances.get(record.method))
        return sorted(records, key=lambda record: (record.method, record.repetition))

    def write_outputs(self, records: List[RunRecord]) -> Dict[str, Path]:
        """summary.csv plus one median residual curve per method"""
        paths = {"summary": self.out_dir / SUMMARY_FILE}
        write_summary_csv(paths["summary"], records)

        for cfg in self.spec.methods:
            method = cfg.method.value
            traces = [
                read_trace_csv(self.out_dir / record.trace_path)
                for record in records
                if record.method == method and record.status == "completed"
            ]
            if not traces:
                logger.warning(f"No completed runs for {method}; curve not written")
                continue
            paths[method] = self.out_dir / curve_file(method)
            write_curve_csv(paths[method], median_curve(traces))
        return paths

    def run(self) -> List[RunRecord]:
        planned = self._planned_runs()
        pending = [(cfg, repetition) for cfg, repetition in planned if self._register(cfg, repetition)]
        logger.info(f"Bench: {len(planned)} runs planned, {len(pending)} to execute with {self.workers} workers")
        if pending:
            self._execute(pending)

        records = self.collect()
        self.write_outputs(records)
        failed = [record for record in records if record.status != "completed"]
        if failed:
            logger.warning(f"{len(failed)} of {len(records)} runs did not complete")
        return records
