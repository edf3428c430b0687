"""
Exception hierarchy shared by the solver library and the CLI.

Library errors derive from KaczmarzError. The CLI wraps them in CLIError
subclasses, which carry the process exit code the same way an HTTP layer
carries a status code.
"""


class KaczmarzError(Exception):
    """Base class for all library errors"""


class InvalidMatrixError(KaczmarzError, ValueError):
    """Matrix or vector is empty, not 1-D/2-D, or holds NaN/Inf"""


class ArityError(KaczmarzError, ValueError):
    """Dimension or count mismatch between arguments"""


class DegenerateRowError(KaczmarzError, ValueError):
    """A zero row was found where a direction is required"""


class DegenerateSystemError(KaczmarzError):
    """The system has nothing to iterate on (all rows zero, rank deficient, ...)"""


class DegeneratePavingError(KaczmarzError):
    """A paving block has a singular Gram matrix (alpha <= 0)"""


class PavingError(KaczmarzError):
    """Paving blocks do not partition the row set"""


class IllPosedBlockError(KaczmarzError):
    """SVD of a block did not converge; the caller may resample the block"""


class AccuracyError(KaczmarzError):
    """A spectral routine failed to reach the requested accuracy"""


class InfiniteConditionError(KaczmarzError):
    """The Gram matrix is singular so its condition number is infinite"""


class BoundUndefinedError(KaczmarzError):
    """A bound is undefined for the given input (e.g. cond bound with ov >= 1)"""


class ConfigurationError(KaczmarzError, ValueError):
    """Configuration is inconsistent with the problem instance"""


class CLIError(Exception):
    """Error carrying a process exit code and a diagnostic"""

    exit_code = 1

    def __init__(self, detail: str, exit_code: int | None = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


class UsageError(CLIError):
    exit_code = 2


class RuntimeFailure(CLIError):
    exit_code = 1
