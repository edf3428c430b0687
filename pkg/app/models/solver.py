from pydantic import BaseModel, ConfigDict, Field, PositiveInt
from typing import List, Optional
from enum import Enum
import numpy as np

from app.core.config import settings


class SolverMethod(str, Enum):
    """Kaczmarz variants"""
    CLASSICAL = "classical"
    RKA = "rka"
    RKA_JL = "rka-jl"
    RKA_CLUSTER_JL = "rka-cluster-jl"
    RKA_BLOCK = "rka-block"
    RKA_CLUSTER_BLOCK = "rka-cluster-block"


class GuardRule(str, Enum):
    """How the test-step guard row is chosen in the JL solvers"""
    FRESH_SAMPLE = "fresh-sample"
    FIXED_FIRST_ROW = "fixed-first-row"


class SolverConfig(BaseModel):
    """Configuration of one solver run"""
    method: SolverMethod = Field(..., description="Solver to run")
    max_iters: PositiveInt = Field(default_factory=lambda: settings.DEFAULT_MAX_ITERS)
    residual_tol: float = Field(
        default_factory=lambda: settings.DEFAULT_RESIDUAL_TOL, gt=0,
        description="Stop when ||Ax - b|| / ||b|| <= residual_tol",
    )
    sample_count: Optional[PositiveInt] = Field(None, description="Rows compared per JL selection; None means p")
    jl_dim: Optional[PositiveInt] = Field(None, description="Sketch dimension; None means max(10, ceil(4 ln p))")
    cluster_count: PositiveInt = Field(default_factory=lambda: settings.DEFAULT_CLUSTER_COUNT)
    block_size: PositiveInt = Field(default_factory=lambda: settings.DEFAULT_BLOCK_SIZE)
    seed: int = Field(0, ge=0)
    trace_every: PositiveInt = Field(default_factory=lambda: settings.DEFAULT_TRACE_EVERY)
    guard: GuardRule = Field(GuardRule.FRESH_SAMPLE, description="Test-step guard row rule")
    kmeans_max_iters: PositiveInt = Field(default_factory=lambda: settings.KMEANS_MAX_ITERS)


class TraceRecord(BaseModel):
    """One traced iteration"""
    iteration: int = Field(..., ge=0)
    residual: float = Field(..., ge=0, description="||Ax - b|| / ||b||")
    error_to_truth: Optional[float] = Field(None, description="||x - x*|| when x* is known")
    rows_touched: int = Field(..., ge=0, description="Cumulative scalar reads spent on row selection and updates")
    selected: Optional[int] = Field(None, description="Row index or block id used by this iteration")
    wall_nanos: int = Field(0, ge=0)

    # Block methods only
    block_cond: Optional[float] = Field(None, description="Condition number of the selected block")
    block_spectral_norm: Optional[float] = Field(None, description="Spectral norm of the selected block")


class SolverState(BaseModel):
    """Final iterate of a solve together with its trace"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    method: SolverMethod
    x: np.ndarray = Field(..., description="Current iterate x_k")
    iteration: int = Field(0, ge=0)
    converged: bool = False
    trace: List[TraceRecord] = Field(default_factory=list)

    @property
    def final(self) -> TraceRecord:
        return self.trace[-1]
