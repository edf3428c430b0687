"""
Johnson-Lindenstrauss Gaussian sketching of the rows of A and of iterates.

The 1/sqrt(d) scaling is folded into Phi so sketched norms and inner
products estimate the true ones directly.
"""

import logging
import math
from typing import Optional

import numpy as np

from app.core.errors import ArityError, DegenerateRowError
from app.models.sketch import JLSketch
from app.services.linalg import as_matrix, row_norms

logger = logging.getLogger(__name__)


def default_sketch_dim(p: int) -> int:
    """max(10, ceil(4 ln p))"""
    return max(10, math.ceil(4.0 * math.log(p))) if p > 1 else 10


def build_sketch(A: np.ndarray, d: int, seed: int, phi: Optional[np.ndarray] = None) -> JLSketch:
    """
    Draw Phi with i.i.d. N(0, 1/d) entries and pre-sketch every row of A.

    `phi` overrides the random draw with a fixed d x p matrix; tests use it
    to make the selection exact (identity when d = p).
    """
    A = as_matrix(A, name="A")
    if d < 1:
        raise ArityError(f"sketch dimension must be >= 1, got {d}")
    p = A.shape[1]

    if phi is None:
        rng = np.random.default_rng(seed)
        phi = rng.standard_normal((d, p)) / math.sqrt(d)
    else:
        phi = np.array(phi, dtype=np.float64)
        if phi.shape != (d, p):
            raise ArityError(f"phi override has shape {phi.shape}, expected ({d}, {p})")
    phi.setflags(write=False)

    sketched_rows = A @ phi.T
    sketched_rows.setflags(write=False)
    norms = row_norms(sketched_rows)
    norms.setflags(write=False)

    logger.debug(f"Built {d}x{p} sketch for {A.shape[0]} rows (seed {seed})")
    return JLSketch(d=d, phi=phi, sketched_rows=sketched_rows, sketched_row_norms=norms, seed=seed)


def sketch_point(s: JLSketch, x: np.ndarray) -> np.ndarray:
    """Phi x"""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (s.p,):
        raise ArityError(f"x has shape {x.shape}, expected ({s.p},)")
    return s.phi @ x


def sketched_gamma(s: JLSketch, i: int, x_hat: np.ndarray, b_i: float) -> float:
    """|b_i - <alpha_i, Phi x>| / ||alpha_i||"""
    if not 0 <= i < s.n:
        raise ArityError(f"row index {i} out of range [0, {s.n})")
    if x_hat.shape != (s.d,):
        raise ArityError(f"x_hat has shape {x_hat.shape}, expected ({s.d},)")
    norm = s.sketched_row_norms[i]
    if norm == 0.0:
        raise DegenerateRowError(f"sketched row {i} is zero")
    return float(abs(b_i - s.sketched_rows[i] @ x_hat) / norm)


def sketched_gammas(s: JLSketch, rows: np.ndarray, x_hat: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Vectorized sketched_gamma over `rows`.

    Rows with a zero sketched norm get -inf so they are never selected.
    """
    norms = s.sketched_row_norms[rows]
    numerators = np.abs(b[rows] - s.sketched_rows[rows] @ x_hat)
    gammas = np.full(rows.shape[0], -np.inf)
    usable = norms > 0.0
    gammas[usable] = numerators[usable] / norms[usable]
    return gammas
