from pydantic import BaseModel, ConfigDict, Field, PositiveInt, model_validator
import numpy as np


class JLSketch(BaseModel):
    """Gaussian projection Phi (d x p) together with the pre-sketched rows Phi A_i"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    d: PositiveInt = Field(..., description="Sketch dimension")
    phi: np.ndarray = Field(..., description="Projection matrix, d x p, entries N(0, 1/d)")
    sketched_rows: np.ndarray = Field(..., description="Row i holds Phi A_i, n x d")
    sketched_row_norms: np.ndarray = Field(..., description="Euclidean norms of sketched_rows")
    seed: int = Field(..., ge=0, description="Seed Phi was drawn from")

    @model_validator(mode="after")
    def _check_shapes(self):
        if self.phi.shape[0] != self.d:
            raise ValueError(f"phi has {self.phi.shape[0]} rows, expected d = {self.d}")
        if self.sketched_rows.shape[1] != self.d:
            raise ValueError(f"sketched_rows has {self.sketched_rows.shape[1]} columns, expected d = {self.d}")
        if self.sketched_row_norms.shape != (self.sketched_rows.shape[0],):
            raise ValueError("sketched_row_norms must have one entry per sketched row")
        return self

    @property
    def p(self) -> int:
        return self.phi.shape[1]

    @property
    def n(self) -> int:
        return self.sketched_rows.shape[0]
