from pydantic import BaseModel, Field
from typing import List, Optional


class Thm2Check(BaseModel):
    """Spectral norm of the Gram matrix against 1 + k * ov"""
    ov: float
    k: int
    spectral: float = Field(..., description="||A A^T||_2 of the row-normalized matrix")
    bound: float
    holds: bool


class Thm3Check(BaseModel):
    """Spectral norm of the Gram matrix against 1 + (k - 1) * delta"""
    delta: float = Field(..., description="min over i != j of |<A_i, A_j>|")
    k: int
    spectral: float
    bound: float
    applicable: bool = Field(..., description="Rows can be sign-flipped so every inner product is >= 0")
    holds: bool = Field(..., description="Bound satisfied; vacuously true when not applicable")


class Thm45Check(BaseModel):
    """Smallest eigenvalue and condition number of the Gram matrix against the ov-based bounds"""
    ov: float
    k: int
    sigma_min: float = Field(..., description="sigma_min(A A^T)")
    sigma_min_bound_paper: float = Field(..., description="1 - ov")
    sigma_min_bound_gershgorin: float = Field(..., description="1 - (k - 1) * ov")
    cond: float = Field(..., description="cond(A A^T), inf when singular")
    cond_bound: Optional[float] = Field(None, description="(1 + k ov) / (1 - ov); undefined for ov >= 1")
    holds_gershgorin: bool
    holds_paper: bool
    holds_cond: Optional[bool] = Field(None, description="cond <= cond_bound, report only")
    error: Optional[str] = None


class OrthogonalityExperiment(BaseModel):
    """Monte Carlo estimate of P(|cos(u, v)| <= eps) for Gaussian u, v"""
    d: int
    eps: float
    delta: float
    trials: int
    empirical_fraction: float
    structural_lower_bound: float = Field(..., description="1 - 1 / (eps^2 (1 - delta)^4 d)")
    standard_error: float
    vacuous: bool = Field(..., description="Lower bound is <= 0")
    holds: bool


class Lemma1Bound(BaseModel):
    """Expected squared error bound of randomized block Kaczmarz"""
    bound: float = Field(..., description="contraction^j ||x0 - x*||^2 + noise_floor")
    contraction: float = Field(..., description="1 - sigma_min(A)^2 / (m beta)")
    noise_floor: float = Field(..., description="(beta / alpha) ||e||^2 / sigma_min(A)^2")
    step_noise: float = Field(..., description="||e||^2 / (m alpha), the per-step additive term")
    initial_error_sq: float
    sigma_min: float
    alpha: float
    beta: float
    m: int
    iteration: int

    def recursion(self, previous_error_sq: float) -> float:
        """One-step bound on E||x_j - x*||^2 given E||x_{j-1} - x*||^2"""
        return self.contraction * previous_error_sq + self.step_noise


class PavingQuality(BaseModel):
    """Per-block condition numbers and spectral norms for clustered vs random pavings"""
    cluster_cond: List[float] = Field(default_factory=list)
    cluster_spectral: List[float] = Field(default_factory=list)
    random_cond: List[float] = Field(default_factory=list)
    random_spectral: List[float] = Field(default_factory=list)
    median_cluster_cond: float
    median_random_cond: float
    median_cluster_spectral: float
    median_random_spectral: float
    holds: bool = Field(..., description="Clustered medians strictly below random medians")


class Lemma1Step(BaseModel):
    """Monte Carlo estimate of E||x_j - x*||^2 against the one-step recursion"""
    iteration: int
    mean_error_sq: float
    standard_error: float
    recursion_bound: Optional[float] = Field(None, description="contraction * mean at j-1 + step_noise; none at j = 0")
    unrolled_bound: float
    holds: bool


class AuditReport(BaseModel):
    """Outcome of one audit batch"""
    name: str
    trials: int
    failures: int = 0
    first_failure: Optional[int] = Field(None, description="Index of the first failing trial")
    csv_path: Optional[str] = None
    counterexample_path: Optional[str] = None

    @property
    def passed(self) -> bool:
        return self.failures == 0
