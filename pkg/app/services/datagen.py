"""
Seeded synthetic instances: clustered rows around orthonormal directions,
plain Gaussian systems, and additive Gaussian noise on b.
"""

import logging
from typing import Tuple

import numpy as np

from app.core.errors import ConfigurationError
from app.core.seeds import derive_seed, rng_for
from app.models.system import GenSpec, LinearSystem

logger = logging.getLogger(__name__)

ROW_SCALE_RANGE = (0.5, 2.0)


def balanced_labels(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Cluster label per row with sizes differing by at most one, in random order"""
    return rng.permutation(np.arange(n) % k)


def gen_clustered_system(spec: GenSpec) -> Tuple[LinearSystem, np.ndarray]:
    """
    Rows scale * (direction[label] + spread * g) around k orthonormal
    directions, g standard normal in R^p, with log-uniform row scales and
    b = A x*. A row's expected cosine to its direction is about
    1 / sqrt(1 + p * spread^2).

    Returns the consistent system together with the generating labels.
    """
    n, p, k = spec.n, spec.p, spec.k
    rng = rng_for(spec.seed, "clustered")

    directions, _ = np.linalg.qr(rng.standard_normal((p, k)))
    directions = directions.T
    labels = balanced_labels(n, k, rng)

    perturbation = spec.spread * rng.standard_normal((n, p))
    low, high = np.log(ROW_SCALE_RANGE[0]), np.log(ROW_SCALE_RANGE[1])
    scales = np.exp(rng.uniform(low, high, size=n))
    A = scales[:, None] * (directions[labels] + perturbation)

    x_star = rng.standard_normal(p)
    b = A @ x_star

    logger.info(f"Generated clustered {n}x{p} system with {k} clusters (seed {spec.seed})")
    return LinearSystem(A=A, b=b, x_star=x_star, e=np.zeros(n)), labels


def gen_gaussian_system(n: int, p: int, seed: int) -> LinearSystem:
    """A with i.i.d. standard normal entries, x* standard normal, b = A x*"""
    if n < p:
        logger.warning(f"Gaussian system with n = {n} < p = {p} is underdetermined")
    rng = rng_for(seed, "gaussian")
    A = rng.standard_normal((n, p))
    x_star = rng.standard_normal(p)
    return LinearSystem(A=A, b=A @ x_star, x_star=x_star, e=np.zeros(n))


def add_noise(system: LinearSystem, sigma: float, seed: int) -> LinearSystem:
    """b + eta with eta ~ N(0, sigma^2) i.i.d.; e = A x* - b is recorded when x* is known"""
    if sigma < 0:
        raise ConfigurationError(f"noise sigma must be >= 0, got {sigma}")
    if sigma == 0:
        return system

    eta = rng_for(seed, "noise").normal(0.0, sigma, size=system.n)
    b = system.b + eta
    e = system.A @ system.x_star - b if system.x_star is not None else None
    return LinearSystem(A=system.A, b=b, x_star=system.x_star, e=e)


def generate_instance(spec: GenSpec) -> Tuple[LinearSystem, np.ndarray]:
    """Clustered system with spec.noise_sigma noise on b"""
    system, labels = gen_clustered_system(spec)
    system = add_noise(system, spec.noise_sigma, derive_seed(spec.seed, "noise"))
    return system, labels
