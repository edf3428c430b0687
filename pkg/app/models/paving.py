from pydantic import BaseModel, Field
from typing import List, Tuple


class BlockSpectrum(BaseModel):
    """Spectral summary of one row-normalized block"""
    size: int = Field(..., description="Rows in the block")
    lambda_min: float = Field(..., description="Smallest eigenvalue of the block Gram matrix")
    lambda_max: float = Field(..., description="Largest eigenvalue of the block Gram matrix")
    cond: float = Field(..., description="lambda_max / lambda_min, inf for a singular Gram matrix")
    spectral_norm: float = Field(..., description="Largest singular value of the block")
    ov: float = Field(..., description="Orthogonality value of the block, 0 for a single row")


class RowPaving(BaseModel):
    """(m, alpha, beta) row paving: a partition of the rows into blocks"""
    blocks: List[Tuple[int, ...]] = Field(..., description="Disjoint row-index blocks covering every row once")
    m: int = Field(..., description="Number of blocks")
    alpha: float = Field(..., description="min over blocks of lambda_min")
    beta: float = Field(..., description="max over blocks of lambda_max")
    per_block: List[BlockSpectrum] = Field(default_factory=list)
    kind: str = Field("random", description="Construction used: random or cluster")
