"""
Numerical checkers for the orthogonality-value bounds, the block Kaczmarz
convergence bound and the Gaussian near-orthogonality probability.

Every checker normalizes rows internally and returns a pydantic result
with a `holds` flag; tolerances come from settings.BOUND_TOLERANCE.
"""

import logging
import math
from typing import Optional

import numpy as np

from app.core.config import settings
from app.core.errors import (
    ArityError,
    BoundUndefinedError,
    ConfigurationError,
    DegeneratePavingError,
    DegenerateSystemError,
    InfiniteConditionError,
)
from app.core.seeds import derive_seed, rng_for
from app.models.analysis import (
    Lemma1Bound,
    OrthogonalityExperiment,
    PavingQuality,
    Thm2Check,
    Thm3Check,
    Thm45Check,
)
from app.models.clustering import RowClustering
from app.models.paving import RowPaving
from app.services.linalg import (
    as_matrix,
    as_vector,
    condition_number_gram,
    gram_eigenvalues,
    min_singular_value,
    normalize_rows,
    rank_tolerance,
)
from app.services.paving import build_cluster_paving, build_random_paving
from app.services.row_clustering import cluster_rows

logger = logging.getLogger(__name__)

# Gaussian pairs drawn per batch in the orthogonality experiment
ORTHOGONALITY_CHUNK = 4096
MIN_ORTHOGONALITY_TRIALS = 1000


def _unit_gram(A: np.ndarray):
    unit = normalize_rows(as_matrix(A, name="A"))
    gram = unit @ unit.T
    off_diagonal = np.abs(gram[~np.eye(gram.shape[0], dtype=bool)])
    return unit, gram, off_diagonal


def check_thm2(A: np.ndarray) -> Thm2Check:
    """||A A^T||_2 <= 1 + k * ov(A) on the row-normalized matrix"""
    unit, _, off_diagonal = _unit_gram(A)
    k = unit.shape[0]
    ov = float(np.clip(off_diagonal.max(), 0.0, 1.0)) if off_diagonal.size else 0.0
    spectral = float(gram_eigenvalues(unit)[0])
    bound = 1.0 + k * ov
    return Thm2Check(ov=ov, k=k, spectral=spectral, bound=bound,
                     holds=spectral <= bound + settings.BOUND_TOLERANCE)


def sign_coherent(gram: np.ndarray, tol: float = settings.BOUND_TOLERANCE) -> bool:
    """
    True when some negation of rows makes every off-diagonal entry of the
    Gram matrix non-negative. Entries within tol of zero impose nothing.
    """
    k = gram.shape[0]
    signs = np.zeros(k)
    for root in range(k):
        if signs[root]:
            continue
        signs[root] = 1.0
        stack = [root]
        while stack:
            i = stack.pop()
            for j in np.flatnonzero(np.abs(gram[i]) > tol):
                if j == i:
                    continue
                wanted = signs[i] * np.sign(gram[i, j])
                if not signs[j]:
                    signs[j] = wanted
                    stack.append(int(j))
                elif signs[j] != wanted:
                    return False
    return True


def check_thm3(A: np.ndarray) -> Thm3Check:
    """
    ||A A^T||_2 >= 1 + (k - 1) * delta with delta the smallest absolute
    pairwise cosine.

    The bound needs a sign-coherent Gram matrix; otherwise the check is
    reported as not applicable and `holds` is vacuously true.
    """
    unit, gram, off_diagonal = _unit_gram(A)
    k = unit.shape[0]
    delta = float(np.clip(off_diagonal.min(), 0.0, 1.0)) if off_diagonal.size else 0.0
    spectral = float(gram_eigenvalues(unit)[0])
    bound = 1.0 + (k - 1) * delta

    applicable = delta <= settings.BOUND_TOLERANCE or sign_coherent(gram)
    holds = spectral >= bound - settings.BOUND_TOLERANCE if applicable else True
    return Thm3Check(delta=delta, k=k, spectral=spectral, bound=bound, applicable=applicable, holds=holds)


def check_thm4_thm5(A: np.ndarray, strict: bool = True) -> Thm45Check:
    """
    Lower bounds on sigma_min(A A^T) and the upper bound on cond(A A^T).

    Both the direct bound 1 - ov and the Gershgorin bound 1 - (k - 1) ov
    are evaluated. The cond bound (1 + k ov) / (1 - ov) is undefined for
    ov >= 1: strict mode raises BoundUndefinedError, otherwise the result
    carries the message in `error`.
    """
    unit, _, off_diagonal = _unit_gram(A)
    k = unit.shape[0]
    tol = settings.BOUND_TOLERANCE
    ov = float(np.clip(off_diagonal.max(), 0.0, 1.0)) if off_diagonal.size else 0.0

    eigenvalues = gram_eigenvalues(unit)
    sigma_min = float(max(eigenvalues[-1], 0.0))
    try:
        cond = condition_number_gram(unit)
    except InfiniteConditionError:
        cond = float("inf")

    bound_paper = 1.0 - ov
    bound_gershgorin = 1.0 - (k - 1) * ov
    result = Thm45Check(
        ov=ov,
        k=k,
        sigma_min=sigma_min,
        sigma_min_bound_paper=bound_paper,
        sigma_min_bound_gershgorin=bound_gershgorin,
        cond=cond,
        holds_gershgorin=sigma_min >= bound_gershgorin - tol,
        holds_paper=sigma_min >= bound_paper - tol,
    )

    if ov < 1.0:
        result.cond_bound = (1.0 + k * ov) / (1.0 - ov)
        result.holds_cond = cond <= result.cond_bound * (1.0 + tol)
    else:
        message = f"cond bound is undefined for ov = {ov:.6g} >= 1"
        if strict:
            raise BoundUndefinedError(message)
        result.error = message

    if not result.holds_paper:
        logger.warning(f"sigma_min = {sigma_min:.6g} is below 1 - ov = {bound_paper:.6g} "
                       f"(k={k}, ov={ov:.6g}); witness rows: {unit.tolist()}")
    return result


def orthogonality_probability_experiment(d: int, eps: float, delta: float, trials: int,
                                         seed: int) -> OrthogonalityExperiment:
    """
    Fraction of Gaussian pairs in R^d whose |cos angle| is at most eps,
    against the polynomial lower bound 1 - 1 / (eps^2 (1 - delta)^4 d).

    Pairs are drawn in chunks of ORTHOGONALITY_CHUNK from one seeded stream,
    so memory stays bounded for large d and trials.
    """
    if d < 1:
        raise ArityError(f"d must be >= 1, got {d}")
    if not 0.0 < eps < 1.0 or not 0.0 < delta < 1.0:
        raise ConfigurationError(f"eps and delta must lie in (0, 1), got eps={eps}, delta={delta}")
    if trials < MIN_ORTHOGONALITY_TRIALS:
        raise ConfigurationError(f"trials must be >= {MIN_ORTHOGONALITY_TRIALS}, got {trials}")

    rng = rng_for(seed, "orthogonality")
    hits = 0
    remaining = trials
    while remaining:
        size = min(ORTHOGONALITY_CHUNK, remaining)
        u = rng.standard_normal((size, d))
        v = rng.standard_normal((size, d))
        cosines = np.einsum("ij,ij->i", u, v) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
        hits += int(np.count_nonzero(np.abs(cosines) <= eps))
        remaining -= size

    fraction = hits / trials
    standard_error = math.sqrt(fraction * (1.0 - fraction) / trials)
    lower_bound = 1.0 - 1.0 / (eps ** 2 * (1.0 - delta) ** 4 * d)

    logger.info(f"Orthogonality experiment d={d}, eps={eps}: {fraction:.4f} vs bound {lower_bound:.4f}")
    return OrthogonalityExperiment(
        d=d,
        eps=eps,
        delta=delta,
        trials=trials,
        empirical_fraction=fraction,
        structural_lower_bound=lower_bound,
        standard_error=standard_error,
        vacuous=lower_bound <= 0.0,
        holds=fraction >= lower_bound - 2.0 * standard_error,
    )


def block_eigen_range(A: np.ndarray, paving: RowPaving):
    """(alpha, beta) of the paving evaluated on the blocks of A as given, without normalization"""
    alpha, beta = math.inf, 0.0
    for block in paving.blocks:
        eigenvalues = gram_eigenvalues(A[list(block)])
        alpha = min(alpha, float(eigenvalues[-1]))
        beta = max(beta, float(eigenvalues[0]))
    return alpha, beta


def lemma1_bound(A: np.ndarray, paving: RowPaving, x0: np.ndarray, x_star: np.ndarray,
                 e: np.ndarray, iteration: int = 1) -> Lemma1Bound:
    """
    Bound on E||x_j - x*||^2 for randomized block Kaczmarz over `paving`:

        (1 - sigma_min(A)^2 / (m beta))^j ||x0 - x*||^2 + (beta / alpha) ||e||^2 / sigma_min(A)^2

    alpha and beta are taken over the blocks exactly as the block solver
    applies them. `iteration=1` gives the one-step form.
    """
    A = as_matrix(A, name="A")
    x0, x_star, e = as_vector(x0, name="x0"), as_vector(x_star, name="x_star"), as_vector(e, name="e")
    n, p = A.shape
    if x0.shape != (p,) or x_star.shape != (p,) or e.shape != (n,):
        raise ArityError(f"x0, x_star must have length {p} and e length {n}")
    if iteration < 0:
        raise ArityError(f"iteration must be >= 0, got {iteration}")

    sigma_min = min_singular_value(A) if n >= p else 0.0
    if sigma_min <= rank_tolerance(A.shape, float(np.linalg.norm(A, 2))):
        raise DegenerateSystemError(f"A is rank deficient (sigma_min = {sigma_min:.3e})")

    alpha, beta = block_eigen_range(A, paving)
    if alpha <= rank_tolerance((n, n), beta):
        raise DegeneratePavingError(f"paving has a singular block (alpha = {alpha:.3e})")

    m = paving.m
    contraction = 1.0 - sigma_min ** 2 / (m * beta)
    noise_sq = float(e @ e)
    initial_error_sq = float(np.sum((x0 - x_star) ** 2))
    noise_floor = (beta / alpha) * noise_sq / sigma_min ** 2

    return Lemma1Bound(
        bound=contraction ** iteration * initial_error_sq + noise_floor,
        contraction=contraction,
        noise_floor=noise_floor,
        step_noise=noise_sq / (m * alpha),
        initial_error_sq=initial_error_sq,
        sigma_min=sigma_min,
        alpha=alpha,
        beta=beta,
        m=m,
        iteration=iteration,
    )


def paving_quality(A: np.ndarray, b: np.ndarray, k: int = settings.DEFAULT_CLUSTER_COUNT,
                   paving_seeds: int = 50, seed: int = 0,
                   clustering: Optional[RowClustering] = None) -> PavingQuality:
    """
    Per-block condition numbers and spectral norms of cluster pavings against
    random pavings with the same block size, over `paving_seeds` seeds.
    """
    A = as_matrix(A, name="A")
    if paving_seeds < 1:
        raise ArityError(f"paving_seeds must be >= 1, got {paving_seeds}")
    if clustering is None:
        clustering = cluster_rows(A, b, k, derive_seed(seed, "structure"))

    result = {"cluster_cond": [], "cluster_spectral": [], "random_cond": [], "random_spectral": []}
    for trial in range(paving_seeds):
        pavings = {
            "cluster": build_cluster_paving(A, clustering, derive_seed(seed, "cluster", trial)),
            "random": build_random_paving(A, clustering.k, derive_seed(seed, "random", trial)),
        }
        for kind, paving in pavings.items():
            result[f"{kind}_cond"].extend(spectrum.cond for spectrum in paving.per_block)
            result[f"{kind}_spectral"].extend(spectrum.spectral_norm for spectrum in paving.per_block)

    medians = {name: float(np.median(values)) for name, values in result.items()}
    holds = (medians["cluster_cond"] < medians["random_cond"]
             and medians["cluster_spectral"] < medians["random_spectral"])

    logger.info(f"Paving quality over {paving_seeds} seeds: median cond {medians['cluster_cond']:.4g} "
                f"(cluster) vs {medians['random_cond']:.4g} (random)")
    return PavingQuality(
        **result,
        median_cluster_cond=medians["cluster_cond"],
        median_random_cond=medians["random_cond"],
        median_cluster_spectral=medians["cluster_spectral"],
        median_random_spectral=medians["random_spectral"],
        holds=holds,
    )
