from pydantic import BaseModel, ConfigDict, Field, PositiveInt, model_validator
from typing import List
import numpy as np


class RowClustering(BaseModel):
    """Directional clustering of the rows of A"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    k: PositiveInt = Field(..., description="Number of clusters")
    assignments: np.ndarray = Field(..., description="Cluster index of every row, values in [0, k)")
    centroids: np.ndarray = Field(..., description="Unit-norm cluster directions, k x p")
    cluster_sizes: np.ndarray = Field(..., description="Number of rows per cluster")
    centroid_b: np.ndarray = Field(..., description="Mean right-hand side of the normalized member rows, each aligned to its centroid")
    seed: int = Field(..., ge=0, description="Seed of the initialization")
    iterations: int = Field(0, ge=0, description="Lloyd iterations performed")
    cost_trace: List[float] = Field(default_factory=list, description="Objective after every Lloyd iteration")

    @model_validator(mode="after")
    def _check_consistency(self):
        if self.centroids.shape[0] != self.k or self.centroid_b.shape != (self.k,):
            raise ValueError(f"centroids/centroid_b must have {self.k} entries")
        counts = np.bincount(self.assignments, minlength=self.k)
        if counts.shape[0] != self.k or not np.array_equal(counts, self.cluster_sizes):
            raise ValueError("cluster_sizes are inconsistent with assignments")
        if np.any(self.cluster_sizes == 0):
            raise ValueError("every cluster must be nonempty")
        return self

    @property
    def n(self) -> int:
        return self.assignments.shape[0]

    def members(self, cluster: int) -> np.ndarray:
        """Row indices of a cluster in ascending order"""
        return np.flatnonzero(self.assignments == cluster)
