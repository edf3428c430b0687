# Models package

# Problem instances
from .system import (
    LinearSystem,
    GenSpec
)

# Solver configuration and traces
from .solver import (
    SolverMethod,
    GuardRule,
    SolverConfig,
    TraceRecord,
    SolverState
)

# Precomputed structures
from .sketch import JLSketch
from .clustering import RowClustering
from .paving import (
    BlockSpectrum,
    RowPaving
)

# Bound checks
from .analysis import (
    Thm2Check,
    Thm3Check,
    Thm45Check,
    OrthogonalityExperiment,
    Lemma1Bound,
    Lemma1Step,
    PavingQuality,
    AuditReport
)

# Benchmarks
from .experiment import (
    ExperimentSpec,
    RunSummary,
    RunRecord
)

__all__ = [
    "LinearSystem",
    "GenSpec",

    "SolverMethod",
    "GuardRule",
    "SolverConfig",
    "TraceRecord",
    "SolverState",

    "JLSketch",
    "RowClustering",
    "BlockSpectrum",
    "RowPaving",

    "Thm2Check",
    "Thm3Check",
    "Thm45Check",
    "OrthogonalityExperiment",
    "Lemma1Bound",
    "Lemma1Step",
    "PavingQuality",
    "AuditReport",

    "ExperimentSpec",
    "RunSummary",
    "RunRecord"
]
