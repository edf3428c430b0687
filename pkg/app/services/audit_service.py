"""
Batch audits of the bound checkers.

Every trial draws from rng_for(seed, trial), so a batch gives the same
per-trial results in any execution order. Each audit writes a per-trial CSV
and, when a gated bound fails, dumps the first counterexample as JSON.
"""

import csv
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from app.core.errors import ConfigurationError
from app.core.seeds import derive_seed, rng_for
from app.models.analysis import AuditReport, Lemma1Step
from app.models.solver import SolverConfig, SolverMethod
from app.models.system import LinearSystem
from app.services.bounds import (
    check_thm2,
    check_thm3,
    check_thm4_thm5,
    lemma1_bound,
    orthogonality_probability_experiment,
    paving_quality,
)
from app.services.paving import build_random_paving
from app.services.solvers import BlockSolver

logger = logging.getLogger(__name__)

# Shape ranges used when k or p is not fixed
K_RANGE = (2, 10)
P_RANGE = (10, 100)
CONE_WIDTH = 0.3

COUNTEREXAMPLE_FILE = "counterexample.json"


def random_rows(rng: np.random.Generator, k: int, p: int) -> np.ndarray:
    """k Gaussian rows in R^p, normalized"""
    rows = rng.standard_normal((k, p))
    return rows / np.linalg.norm(rows, axis=1)[:, None]


def cone_rows(rng: np.random.Generator, k: int, p: int, width: float = CONE_WIDTH) -> np.ndarray:
    """k unit rows within a narrow cone around a random axis, so all pairwise inner products are positive"""
    axis = random_rows(rng, 1, p)[0]
    rows = axis + width * rng.standard_normal((k, p)) / np.sqrt(p)
    return rows / np.linalg.norm(rows, axis=1)[:, None]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def write_rows_csv(path: Path, header: Sequence[str], rows: Sequence[Dict]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(row.get(column)) for column in header])


def dump_counterexample(out_dir: Path, audit: str, trial: int, seed: int, result: BaseModel,
                        matrix: Optional[np.ndarray] = None) -> Path:
    path = out_dir / COUNTEREXAMPLE_FILE
    payload = {
        "audit": audit,
        "trial": trial,
        "seed": seed,
        "result": result.model_dump(mode="json"),
    }
    if matrix is not None:
        payload["matrix"] = matrix.tolist()
    path.write_text(json.dumps(payload, indent=2))
    logger.error(f"{audit} failed at trial {trial}; counterexample written to {path}")
    return path


MATRIX_AUDITS: Dict[str, tuple] = {
    # name: (row generator, checker, gated flag)
    "thm2": (random_rows, check_thm2, "holds"),
    "thm3": (cone_rows, check_thm3, "holds"),
    "thm45": (random_rows, lambda A: check_thm4_thm5(A, strict=False), "holds_gershgorin"),
}


def audit_matrices(name: str, trials: int, seed: int, out_dir: Path,
                   k: Optional[int] = None, p: Optional[int] = None) -> AuditReport:
    """
    Run one matrix bound checker over `trials` random matrices.

    Shapes are fixed by k and p when given, otherwise drawn per trial from
    K_RANGE and P_RANGE.
    """
    if name not in MATRIX_AUDITS:
        raise ConfigurationError(f"unknown matrix audit '{name}'")
    if trials < 1:
        raise ConfigurationError(f"trials must be >= 1, got {trials}")
    generate, check, gate = MATRIX_AUDITS[name]
    out_dir.mkdir(parents=True, exist_ok=True)

    report = AuditReport(name=name, trials=trials)
    rows = []
    for trial in range(trials):
        rng = rng_for(seed, name, trial)
        trial_k = k or int(rng.integers(K_RANGE[0], K_RANGE[1] + 1))
        trial_p = p or int(rng.integers(P_RANGE[0], P_RANGE[1] + 1))
        A = generate(rng, trial_k, trial_p)
        result = check(A)
        rows.append({"trial": trial, "p": trial_p, **result.model_dump()})

        if not getattr(result, gate):
            report.failures += 1
            if report.first_failure is None:
                report.first_failure = trial
                report.counterexample_path = str(dump_counterexample(out_dir, name, trial, seed, result, A))

    csv_path = out_dir / f"{name}.csv"
    header = ["trial", "p", *type(result).model_fields.keys()]
    write_rows_csv(csv_path, header, rows)
    report.csv_path = str(csv_path)
    logger.info(f"Audit {name}: {trials} trials, {report.failures} failures")
    return report


def audit_orthogonality(d: int, eps: float, delta: float, trials: int, seed: int, out_dir: Path) -> AuditReport:
    out_dir.mkdir(parents=True, exist_ok=True)
    result = orthogonality_probability_experiment(d, eps, delta, trials, seed)
    report = AuditReport(name="thm1", trials=trials)

    csv_path = out_dir / "thm1.csv"
    write_rows_csv(csv_path, list(type(result).model_fields.keys()), [result.model_dump()])
    report.csv_path = str(csv_path)
    if not result.holds:
        report.failures = 1
        report.first_failure = 0
        report.counterexample_path = str(dump_counterexample(out_dir, "thm1", 0, seed, result))
    return report


def lemma1_monte_carlo(system: LinearSystem, block_size: int, runs: int, iters: int,
                       seed: int) -> List[Lemma1Step]:
    """
    Mean squared error of randomized block Kaczmarz over `runs` seeded runs
    on one fixed random paving. Every step must satisfy both the one-step
    recursion and the unrolled j-step bound, with three standard errors of
    slack.
    """
    if system.x_star is None:
        raise ConfigurationError("the block error audit needs an instance with a known x*")
    if runs < 2:
        raise ConfigurationError(f"runs must be >= 2, got {runs}")
    e = system.e if system.e is not None else system.A @ system.x_star - system.b
    paving = build_random_paving(system.A, block_size, derive_seed(seed, "paving"))
    x0 = np.zeros(system.p)

    errors = np.empty((runs, iters + 1))
    for run in range(runs):
        cfg = SolverConfig(method=SolverMethod.RKA_BLOCK, block_size=block_size, seed=derive_seed(seed, "run", run))
        steps = BlockSolver(system, cfg, paving=paving).iterates(x0)
        errors[run, 0] = float(np.sum((x0 - system.x_star) ** 2))
        for j in range(1, iters + 1):
            x = next(steps).x
            errors[run, j] = float(np.sum((x - system.x_star) ** 2))

    means = errors.mean(axis=0)
    standard_errors = errors.std(axis=0, ddof=1) / np.sqrt(runs)
    one_step = lemma1_bound(system.A, paving, x0, system.x_star, e, iteration=1)

    steps_report = []
    for j in range(iters + 1):
        unrolled = one_step.contraction ** j * one_step.initial_error_sq + one_step.noise_floor
        recursion = one_step.recursion(means[j - 1]) if j > 0 else None
        slack = 3.0 * standard_errors[j]
        holds = means[j] <= unrolled + slack and (recursion is None or means[j] <= recursion + slack)
        steps_report.append(Lemma1Step(
            iteration=j,
            mean_error_sq=float(means[j]),
            standard_error=float(standard_errors[j]),
            recursion_bound=recursion,
            unrolled_bound=unrolled,
            holds=bool(holds),
        ))
    return steps_report


def audit_lemma1(system: LinearSystem, block_size: int, runs: int, iters: int, seed: int,
                 out_dir: Path) -> AuditReport:
    out_dir.mkdir(parents=True, exist_ok=True)
    steps = lemma1_monte_carlo(system, block_size, runs, iters, seed)
    report = AuditReport(name="lemma1", trials=runs)

    csv_path = out_dir / "lemma1.csv"
    write_rows_csv(csv_path, list(Lemma1Step.model_fields.keys()), [step.model_dump() for step in steps])
    report.csv_path = str(csv_path)
    failed = [step for step in steps if not step.holds]
    if failed:
        report.failures = len(failed)
        report.first_failure = failed[0].iteration
        report.counterexample_path = str(dump_counterexample(out_dir, "lemma1", failed[0].iteration, seed, failed[0]))
    return report


def audit_paving_quality(system: LinearSystem, k: int, paving_seeds: int, seed: int,
                         out_dir: Path) -> AuditReport:
    """Per-block samples of clustered and random pavings; passes when both clustered medians are smaller"""
    out_dir.mkdir(parents=True, exist_ok=True)
    quality = paving_quality(system.A, system.b, k=k, paving_seeds=paving_seeds, seed=seed)
    report = AuditReport(name="paving-quality", trials=paving_seeds)

    samples = [
        {"kind": kind, "cond": cond, "spectral_norm": spectral}
        for kind, conds, spectrals in (
            ("cluster", quality.cluster_cond, quality.cluster_spectral),
            ("random", quality.random_cond, quality.random_spectral),
        )
        for cond, spectral in zip(conds, spectrals)
    ]
    csv_path = out_dir / "paving_quality.csv"
    write_rows_csv(csv_path, ["kind", "cond", "spectral_norm"], samples)

    medians = quality.model_dump(exclude={"cluster_cond", "cluster_spectral", "random_cond", "random_spectral"})
    write_rows_csv(out_dir / "paving_quality_medians.csv", list(medians.keys()), [medians])
    report.csv_path = str(csv_path)
    if not quality.holds:
        report.failures = 1
        report.first_failure = 0
        report.counterexample_path = str(dump_counterexample(
            out_dir, "paving-quality", 0, seed,
            quality.model_copy(update={"cluster_cond": [], "cluster_spectral": [],
                                       "random_cond": [], "random_spectral": []}),
        ))
    return report
