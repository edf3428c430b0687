"""
Kaczmarz solvers with a uniform driver contract.

Every solver is a class whose `iterates()` generator performs one update per
step and yields a StepOutcome; `solve()` drives the generator, evaluates the
stopping rule and records the trace. Structures built at initialization
(sketch, clustering, paving) may be passed in pre-built.

Random streams are split from cfg.seed: "sampling" drives row/block
selection, "sketch" draws Phi, "structure" seeds clustering and paving.
"""

import logging
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Dict, Iterator, Optional, Type

import numpy as np

from app.core.config import settings
from app.core.errors import (
    ArityError,
    ConfigurationError,
    DegenerateRowError,
    DegenerateSystemError,
    IllPosedBlockError,
)
from app.core.seeds import derive_seed, rng_for
from app.models.clustering import RowClustering
from app.models.paving import RowPaving
from app.models.sketch import JLSketch
from app.models.solver import GuardRule, SolverConfig, SolverMethod, SolverState, TraceRecord
from app.models.system import LinearSystem
from app.services.jl_sketch import build_sketch, default_sketch_dim, sketch_point, sketched_gammas
from app.services.linalg import least_norm_solve, row_norms
from app.services.paving import build_cluster_paving, build_random_paving
from app.services.row_clustering import cluster_rows, furthest_cluster

logger = logging.getLogger(__name__)


def kaczmarz_step(x: np.ndarray, A_i: np.ndarray, b_i: float) -> np.ndarray:
    """Project x onto the hyperplane <A_i, x> = b_i"""
    if x.shape != A_i.shape:
        raise ArityError(f"x has shape {x.shape} but the row has shape {A_i.shape}")
    norm_sq = float(A_i @ A_i)
    if norm_sq == 0.0:
        raise DegenerateRowError("cannot project onto the hyperplane of a zero row")
    return x + ((b_i - A_i @ x) / norm_sq) * A_i


def block_step(x: np.ndarray, A_tau: np.ndarray, b_tau: np.ndarray) -> np.ndarray:
    """x + A_tau^+ (b_tau - A_tau x)"""
    if A_tau.shape[1] != x.shape[0] or b_tau.shape != (A_tau.shape[0],):
        raise ArityError(f"block {A_tau.shape} is inconsistent with x {x.shape} and b_tau {b_tau.shape}")
    return x + least_norm_solve(A_tau, b_tau - A_tau @ x)


def exact_distance(A_i: np.ndarray, b_i: float, x: np.ndarray, norm: float) -> float:
    """|b_i - <A_i, x>| / ||A_i||"""
    return float(abs(b_i - A_i @ x) / norm)


@dataclass
class StepOutcome:
    """Result of one solver update"""
    x: np.ndarray
    selected: int
    cost: int  # scalar reads spent on this step
    chosen_distance: Optional[float] = None
    guard_distance: Optional[float] = None


class BaseKaczmarzSolver(ABC):
    """Shared driver: stopping rule, tracing, cost accounting"""

    method: SolverMethod

    def __init__(self, system: LinearSystem, cfg: SolverConfig):
        self.system = system
        self.cfg = cfg
        self.A = system.A
        self.b = system.b
        self.n, self.p = system.A.shape
        self.rng = rng_for(cfg.seed, "sampling")

    @abstractmethod
    def iterates(self, x0: np.ndarray) -> Iterator[StepOutcome]:
        """Yield one StepOutcome per update, forever"""

    def block_stats(self, selected: int):
        """(cond, spectral_norm) of the selected block, for block methods"""
        return None, None

    def solve(self, x0: Optional[np.ndarray] = None) -> SolverState:
        x = np.zeros(self.p) if x0 is None else np.array(x0, dtype=np.float64)
        if x.shape != (self.p,):
            raise ArityError(f"x0 has shape {x.shape}, expected ({self.p},)")

        cfg = self.cfg
        record_wall = settings.RECORD_WALL_TIME
        started = time.perf_counter_ns()
        rows_touched = 0
        residual = self.system.relative_residual(x)
        trace = [TraceRecord(
            iteration=0,
            residual=residual,
            error_to_truth=self.system.error_to_truth(x),
            rows_touched=0,
            selected=None,
            wall_nanos=0,
        )]
        iteration = 0
        converged = residual <= cfg.residual_tol

        logger.info(f"Starting {self.method.value} on {self.n}x{self.p} system (seed {cfg.seed})")
        if not converged:
            steps = self.iterates(x)
            for iteration in range(1, cfg.max_iters + 1):
                outcome = next(steps)
                x = outcome.x
                rows_touched += outcome.cost
                residual = self.system.relative_residual(x)
                converged = residual <= cfg.residual_tol
                if iteration % cfg.trace_every == 0 or converged or iteration == cfg.max_iters:
                    block_cond, block_spectral = self.block_stats(outcome.selected)
                    trace.append(TraceRecord(
                        iteration=iteration,
                        residual=residual,
                        error_to_truth=self.system.error_to_truth(x),
                        rows_touched=rows_touched,
                        selected=outcome.selected,
                        wall_nanos=time.perf_counter_ns() - started if record_wall else 0,
                        block_cond=block_cond,
                        block_spectral_norm=block_spectral,
                    ))
                if converged:
                    break

        logger.info(f"{self.method.value} stopped at iteration {iteration} "
                    f"(residual {residual:.3e}, converged={converged})")
        return SolverState(method=self.method, x=x, iteration=iteration, converged=converged, trace=trace)


class ClassicalSolver(BaseKaczmarzSolver):
    """Cyclic sweep i = 0, 1, ..., n-1, 0, ... skipping zero rows"""

    method = SolverMethod.CLASSICAL

    def __init__(self, system: LinearSystem, cfg: SolverConfig):
        super().__init__(system, cfg)
        self.rows = np.flatnonzero(row_norms(self.A) > 0.0)
        if self.rows.size == 0:
            raise DegenerateSystemError("every row of A is zero")

    def iterates(self, x0):
        x = x0
        while True:
            for i in self.rows:
                x = kaczmarz_step(x, self.A[i], self.b[i])
                yield StepOutcome(x=x, selected=int(i), cost=self.p)


class RandomizedSolver(BaseKaczmarzSolver):
    """Rows drawn i.i.d. with probability ||A_i||^2 / ||A||_F^2"""

    method = SolverMethod.RKA

    def __init__(self, system: LinearSystem, cfg: SolverConfig):
        super().__init__(system, cfg)
        self.norms = row_norms(self.A)
        norms_sq = self.norms ** 2
        total = norms_sq.sum()
        if total == 0.0:
            raise DegenerateSystemError("every row of A is zero")
        self.probabilities = norms_sq / total

    def iterates(self, x0):
        x = x0
        while True:
            i = int(self.rng.choice(self.n, p=self.probabilities))
            x = kaczmarz_step(x, self.A[i], self.b[i])
            yield StepOutcome(x=x, selected=i, cost=self.p)


class JLSolver(RandomizedSolver):
    """
    Sketched greedy selection: sample s rows by norm, pick the largest
    sketched distance, then compare it exactly against one guard row.
    """

    method = SolverMethod.RKA_JL

    def __init__(self, system: LinearSystem, cfg: SolverConfig, sketch: Optional[JLSketch] = None):
        super().__init__(system, cfg)
        self.sample_count = cfg.sample_count or min(self.p, self.n)
        if self.sample_count > self.n:
            raise ConfigurationError(f"sample_count = {self.sample_count} exceeds n = {self.n}")
        if sketch is None:
            d = cfg.jl_dim or default_sketch_dim(self.p)
            sketch = build_sketch(self.A, d, derive_seed(cfg.seed, "sketch"))
        elif sketch.n != self.n or sketch.p != self.p:
            raise ArityError(f"sketch is for a {sketch.n}x{sketch.p} matrix, system is {self.n}x{self.p}")
        self.sketch = sketch
        self.guard_row = int(np.flatnonzero(self.norms > 0.0)[0])

    def selection_cost(self) -> int:
        return self.sample_count * self.sketch.d + 2 * self.p

    def candidate_pool(self, x: np.ndarray):
        """(row indices, probabilities) the s samples are drawn from"""
        return None, self.probabilities

    def _sample_candidates(self, x: np.ndarray, x_hat: np.ndarray):
        pool, probabilities = self.candidate_pool(x)
        for _ in range(2):
            if pool is None:
                draws = self.rng.choice(self.n, size=self.sample_count, p=probabilities)
            else:
                draws = self.rng.choice(pool, size=self.sample_count, p=probabilities)
            candidates = np.unique(draws)
            gammas = sketched_gammas(self.sketch, candidates, x_hat, self.b)
            if np.isfinite(gammas).any():
                return candidates, gammas
            logger.warning("All sampled rows have a zero sketch; resampling once")
        raise DegenerateSystemError("every sampled row has a zero sketch after resampling")

    def _draw_guard(self) -> int:
        if self.cfg.guard == GuardRule.FIXED_FIRST_ROW:
            return self.guard_row
        return int(self.rng.choice(self.n, p=self.probabilities))

    def iterates(self, x0):
        x = x0
        while True:
            x_hat = sketch_point(self.sketch, x)
            candidates, gammas = self._sample_candidates(x, x_hat)
            j = int(candidates[int(np.argmax(gammas))])

            # Test step: keep the better of the sketched choice and a guard row
            guard = self._draw_guard()
            gamma_j = exact_distance(self.A[j], self.b[j], x, self.norms[j])
            gamma_l = exact_distance(self.A[guard], self.b[guard], x, self.norms[guard])
            if gamma_l > gamma_j:
                j, gamma_j = guard, gamma_l

            x = kaczmarz_step(x, self.A[j], self.b[j])
            yield StepOutcome(
                x=x, selected=j, cost=self.selection_cost(),
                chosen_distance=gamma_j, guard_distance=gamma_l,
            )


class ClusterJLSolver(JLSolver):
    """JL selection restricted to the cluster whose centroid hyperplane is furthest from x"""

    method = SolverMethod.RKA_CLUSTER_JL

    def __init__(self, system: LinearSystem, cfg: SolverConfig,
                 sketch: Optional[JLSketch] = None, clustering: Optional[RowClustering] = None):
        super().__init__(system, cfg, sketch=sketch)
        if clustering is None:
            clustering = cluster_rows(self.A, self.b, cfg.cluster_count,
                                      derive_seed(cfg.seed, "structure"), cfg.kmeans_max_iters)
        elif clustering.n != self.n:
            raise ArityError(f"clustering covers {clustering.n} rows, system has {self.n}")
        self.clustering = clustering

        # Sampling distribution of every cluster, renormalized within the cluster
        self.cluster_pools = []
        for cluster in range(clustering.k):
            members = clustering.members(cluster)
            weights = self.norms[members] ** 2
            self.cluster_pools.append((members, weights / weights.sum()))

    def selection_cost(self) -> int:
        return self.clustering.k * self.p + super().selection_cost()

    def candidate_pool(self, x: np.ndarray):
        return self.cluster_pools[furthest_cluster(self.clustering, x)]


class BlockSolver(BaseKaczmarzSolver):
    """Uniformly chosen paving block, projected onto in one pseudo-inverse step"""

    method = SolverMethod.RKA_BLOCK

    def __init__(self, system: LinearSystem, cfg: SolverConfig, paving: Optional[RowPaving] = None):
        super().__init__(system, cfg)
        if cfg.block_size > self.p:
            logger.warning(f"block_size {cfg.block_size} exceeds p = {self.p}; blocks will be rank deficient")
        self.paving = paving if paving is not None else self.build_paving()
        if sum(len(block) for block in self.paving.blocks) != self.n:
            raise ArityError(f"paving does not cover the {self.n} rows of the system")
        self.block_rows = [np.asarray(block, dtype=np.int64) for block in self.paving.blocks]

    def build_paving(self) -> RowPaving:
        return build_random_paving(self.A, min(self.cfg.block_size, self.n), derive_seed(self.cfg.seed, "structure"))

    def block_stats(self, selected: int):
        spectrum = self.paving.per_block[selected]
        return spectrum.cond, spectrum.spectral_norm

    def iterates(self, x0):
        x = x0
        while True:
            for attempt in range(settings.MAX_BLOCK_RETRIES):
                block_id = int(self.rng.integers(self.paving.m))
                rows = self.block_rows[block_id]
                try:
                    x = block_step(x, self.A[rows], self.b[rows])
                    break
                except IllPosedBlockError as e:
                    logger.warning(f"Block {block_id} failed ({e}); resampling")
            else:
                raise IllPosedBlockError(f"{settings.MAX_BLOCK_RETRIES} consecutive block solves failed")
            yield StepOutcome(x=x, selected=block_id, cost=rows.shape[0] * self.p)


class ClusterBlockSolver(BlockSolver):
    """Block Kaczmarz over a paving with one row per cluster in every block"""

    method = SolverMethod.RKA_CLUSTER_BLOCK

    def __init__(self, system: LinearSystem, cfg: SolverConfig,
                 paving: Optional[RowPaving] = None, clustering: Optional[RowClustering] = None):
        self.clustering = clustering
        super().__init__(system, cfg, paving=paving)

    def build_paving(self) -> RowPaving:
        seed = derive_seed(self.cfg.seed, "structure")
        if self.clustering is None:
            self.clustering = cluster_rows(self.A, self.b, self.cfg.cluster_count, seed, self.cfg.kmeans_max_iters)
        return build_cluster_paving(self.A, self.clustering, seed)


SOLVERS: Dict[SolverMethod, Type[BaseKaczmarzSolver]] = {
    SolverMethod.CLASSICAL: ClassicalSolver,
    SolverMethod.RKA: RandomizedSolver,
    SolverMethod.RKA_JL: JLSolver,
    SolverMethod.RKA_CLUSTER_JL: ClusterJLSolver,
    SolverMethod.RKA_BLOCK: BlockSolver,
    SolverMethod.RKA_CLUSTER_BLOCK: ClusterBlockSolver,
}


def make_solver(system: LinearSystem, cfg: SolverConfig, **structures) -> BaseKaczmarzSolver:
    return SOLVERS[cfg.method](system, cfg, **structures)


def run_solver(system: LinearSystem, cfg: SolverConfig, x0: Optional[np.ndarray] = None) -> SolverState:
    """Dispatch on cfg.method"""
    return make_solver(system, cfg).solve(x0)


def _run(method: SolverMethod, system: LinearSystem, cfg: SolverConfig) -> SolverState:
    if cfg.method != method:
        cfg = cfg.model_copy(update={"method": method})
    return run_solver(system, cfg)


def solve_classical(system: LinearSystem, cfg: SolverConfig) -> SolverState:
    return _run(SolverMethod.CLASSICAL, system, cfg)


def solve_rka(system: LinearSystem, cfg: SolverConfig) -> SolverState:
    return _run(SolverMethod.RKA, system, cfg)


def solve_rka_jl(system: LinearSystem, cfg: SolverConfig) -> SolverState:
    return _run(SolverMethod.RKA_JL, system, cfg)


def solve_rka_cluster_jl(system: LinearSystem, cfg: SolverConfig) -> SolverState:
    return _run(SolverMethod.RKA_CLUSTER_JL, system, cfg)


def solve_rka_block(system: LinearSystem, cfg: SolverConfig) -> SolverState:
    return _run(SolverMethod.RKA_BLOCK, system, cfg)


def solve_rka_cluster_block(system: LinearSystem, cfg: SolverConfig) -> SolverState:
    return _run(SolverMethod.RKA_CLUSTER_BLOCK, system, cfg)
