"""
Dense matrix/vector kernel: norms, row normalization, SVD-based least-norm
solves and the spectral quantities used by the solvers and the bound audits.

All functions are pure; inputs are never modified.
"""

import logging

import numpy as np
import scipy.linalg

from app.core.errors import (
    AccuracyError,
    ArityError,
    DegenerateRowError,
    IllPosedBlockError,
    InfiniteConditionError,
    InvalidMatrixError,
)

logger = logging.getLogger(__name__)

EPS = np.finfo(np.float64).eps


def as_matrix(value, name: str = "matrix") -> np.ndarray:
    """Validate and return a read-only float64 copy of a 2-D array"""
    try:
        arr = np.array(value, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise InvalidMatrixError(f"{name} is not a real matrix: {e}") from e
    if arr.ndim != 2:
        raise InvalidMatrixError(f"{name} must be 2-D, got {arr.ndim}-D")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidMatrixError(f"{name} must have at least one row and one column, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidMatrixError(f"{name} contains NaN or Inf")
    arr.setflags(write=False)
    return arr


def as_vector(value, name: str = "vector") -> np.ndarray:
    """Validate and return a read-only float64 copy of a 1-D array"""
    try:
        arr = np.array(value, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise InvalidMatrixError(f"{name} is not a real vector: {e}") from e
    if arr.ndim != 1:
        raise InvalidMatrixError(f"{name} must be 1-D, got {arr.ndim}-D")
    if arr.shape[0] < 1:
        raise InvalidMatrixError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidMatrixError(f"{name} contains NaN or Inf")
    arr.setflags(write=False)
    return arr


def row_norms(A: np.ndarray) -> np.ndarray:
    return np.linalg.norm(np.asarray(A, dtype=np.float64), axis=1)


def frobenius_norm_sq(A: np.ndarray) -> float:
    norms = row_norms(A)
    return float(np.dot(norms, norms))


def normalize_rows(A: np.ndarray) -> np.ndarray:
    """Scale every row to unit Euclidean norm"""
    A = np.asarray(A, dtype=np.float64)
    norms = row_norms(A)
    zero_rows = np.flatnonzero(norms == 0.0)
    if zero_rows.size:
        raise DegenerateRowError(f"cannot normalize zero row(s) {zero_rows[:10].tolist()}")
    return A / norms[:, None]


def rank_tolerance(shape: tuple, sigma_max: float) -> float:
    return max(shape) * EPS * sigma_max


def least_norm_solve(M: np.ndarray, r: np.ndarray) -> np.ndarray:
    """
    Minimum-norm least-squares solution of M z = r, i.e. M^+ r.

    Singular values below max(n_rows, n_cols) * eps * sigma_max are treated
    as zero.
    """
    M = np.asarray(M, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    if M.ndim != 2:
        raise ArityError(f"M must be 2-D, got {M.ndim}-D")
    if r.shape != (M.shape[0],):
        raise ArityError(f"r has shape {r.shape}, expected ({M.shape[0]},)")
    try:
        U, s, Vt = np.linalg.svd(M, full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise IllPosedBlockError(f"SVD did not converge for a {M.shape[0]}x{M.shape[1]} block: {e}") from e

    if s.size == 0 or s[0] == 0.0:
        return np.zeros(M.shape[1])
    keep = s > rank_tolerance(M.shape, s[0])
    coefficients = (U[:, keep].T @ r) / s[keep]
    return Vt[keep].T @ coefficients


def singular_values(M: np.ndarray) -> np.ndarray:
    """Singular values in descending order"""
    try:
        return scipy.linalg.svdvals(np.asarray(M, dtype=np.float64))
    except np.linalg.LinAlgError as e:
        raise AccuracyError(f"singular value computation did not converge: {e}") from e


def spectral_norm(M: np.ndarray) -> float:
    return float(singular_values(M)[0])


def min_singular_value(M: np.ndarray) -> float:
    """Smallest singular value; zero for a matrix with more rows than columns that is rank deficient"""
    return float(singular_values(M)[-1])


def gram_eigenvalues(A: np.ndarray) -> np.ndarray:
    """
    Eigenvalues of A A^T in descending order, from the SVD of A.

    When A has more rows than columns the missing eigenvalues are exactly zero.
    """
    A = np.asarray(A, dtype=np.float64)
    s = singular_values(A)
    eigenvalues = s ** 2
    if A.shape[0] > eigenvalues.size:
        eigenvalues = np.concatenate([eigenvalues, np.zeros(A.shape[0] - eigenvalues.size)])
    return eigenvalues


def condition_number_gram(A: np.ndarray) -> float:
    """sigma_max(A A^T) / sigma_min(A A^T)"""
    eigenvalues = gram_eigenvalues(A)
    lam_max, lam_min = eigenvalues[0], eigenvalues[-1]
    if lam_max == 0.0 or lam_min <= rank_tolerance((A.shape[0], A.shape[0]), lam_max):
        raise InfiniteConditionError(
            f"Gram matrix is singular (lambda_min = {lam_min:.3e}, lambda_max = {lam_max:.3e})"
        )
    return float(max(1.0, lam_max / lam_min))


def pairwise_cosines(A: np.ndarray) -> np.ndarray:
    """Gram matrix of the row-normalized matrix"""
    normalized = normalize_rows(A)
    return normalized @ normalized.T


def orthogonality_value(A: np.ndarray) -> float:
    """
    max over i != j of |<A_i/|A_i|, A_j/|A_j|>|, clamped to [0, 1].

    Cosines within a few ulps of 1 are parallel rows and count as exactly 1.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 2:
        raise ArityError(f"orthogonality value needs at least two rows, got shape {A.shape}")
    cosines = np.abs(pairwise_cosines(A))
    np.fill_diagonal(cosines, 0.0)
    ov = float(np.clip(cosines.max(), 0.0, 1.0))
    return 1.0 if ov >= 1.0 - 16 * EPS else ov
