from pydantic import BaseModel, Field, PositiveInt, field_validator
from typing import List, Optional
from pathlib import Path

from .system import GenSpec
from .solver import SolverConfig


class ExperimentSpec(BaseModel):
    """A matched-seed comparison of several solvers on one generated instance"""
    gen: GenSpec
    methods: List[SolverConfig] = Field(..., min_length=1)
    repetitions: PositiveInt = Field(1, description="Repetitions per method")
    output_dir: Path = Field(Path("runs"), description="Where traces and summaries are written")

    @field_validator("methods")
    @classmethod
    def _unique_methods(cls, value: List[SolverConfig]) -> List[SolverConfig]:
        names = [cfg.method.value for cfg in value]
        if len(set(names)) != len(names):
            raise ValueError(f"methods must be distinct, got {names}")
        return value


class RunSummary(BaseModel):
    """Summary of one solver run; every field is recomputable from its trace"""
    iters: int = Field(..., description="Last traced iteration")
    iters_to_tol: Optional[int] = Field(None, description="Iteration where residual_tol was reached")
    iters_to_floor: int = Field(..., description="First iteration within 10% of the minimum residual")
    final_residual: float
    final_error: Optional[float] = None
    total_rows_touched: int
    wall_nanos: int


class RunRecord(BaseModel):
    """One (method, repetition) entry of a bench"""
    method: str
    repetition: int
    seed: int
    status: str = Field("pending", description="pending, processing, completed, failed")
    trace_path: Optional[str] = None
    summary: Optional[RunSummary] = None
    error_message: Optional[str] = None
