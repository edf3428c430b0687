from pydantic import BaseModel, ConfigDict, Field, PositiveInt, field_validator, model_validator
from typing import Optional
import numpy as np

from app.services.linalg import as_matrix, as_vector


class LinearSystem(BaseModel):
    """Problem instance A x = b with optional ground truth x* and noise e = A x* - b"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    A: np.ndarray = Field(..., description="Coefficient matrix, n x p")
    b: np.ndarray = Field(..., description="Right-hand side, length n")
    x_star: Optional[np.ndarray] = Field(None, description="Ground truth, length p")
    e: Optional[np.ndarray] = Field(None, description="Noise vector A x* - b, length n")

    @field_validator("A", mode="before")
    @classmethod
    def _validate_matrix(cls, value):
        return as_matrix(value, name="A")

    @field_validator("b", "x_star", "e", mode="before")
    @classmethod
    def _validate_vectors(cls, value, info):
        if value is None:
            return None
        return as_vector(value, name=info.field_name)

    @model_validator(mode="after")
    def _check_dimensions(self):
        n, p = self.A.shape
        if self.b.shape[0] != n:
            raise ValueError(f"b has length {self.b.shape[0]}, expected n = {n}")
        if self.x_star is not None and self.x_star.shape[0] != p:
            raise ValueError(f"x_star has length {self.x_star.shape[0]}, expected p = {p}")
        if self.e is not None:
            if self.e.shape[0] != n:
                raise ValueError(f"e has length {self.e.shape[0]}, expected n = {n}")
            if self.x_star is not None:
                drift = np.linalg.norm((self.A @ self.x_star - self.b) - self.e)
                if drift > 1e-9 * max(1.0, np.linalg.norm(self.b)):
                    raise ValueError(f"e is inconsistent with A x* - b (difference {drift:.3e})")
        return self

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return self.A.shape[1]

    def relative_residual(self, x: np.ndarray) -> float:
        """||Ax - b|| / ||b||, or the absolute residual when b = 0"""
        denominator = float(np.linalg.norm(self.b)) or 1.0
        return float(np.linalg.norm(self.A @ x - self.b)) / denominator

    def error_to_truth(self, x: np.ndarray) -> Optional[float]:
        if self.x_star is None:
            return None
        return float(np.linalg.norm(x - self.x_star))


class GenSpec(BaseModel):
    """Parameters of a synthetic clustered instance"""
    n: PositiveInt = Field(..., description="Number of rows")
    p: PositiveInt = Field(..., description="Number of columns")
    k: PositiveInt = Field(4, description="Number of row clusters")
    spread: float = Field(0.1, ge=0, description="Within-cluster angular noise scale")
    noise_sigma: float = Field(0.0, ge=0, description="Standard deviation of the noise added to b")
    seed: int = Field(0, ge=0, description="Generator seed")

    @model_validator(mode="after")
    def _check_cluster_count(self):
        if self.k > min(self.n, self.p):
            raise ValueError(f"k ({self.k}) must be <= min(n, p) ({min(self.n, self.p)})")
        return self
