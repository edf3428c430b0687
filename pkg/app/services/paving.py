"""
Row pavings: random and cluster-based partitions of the rows of A into
blocks, with (m, alpha, beta) constants computed on row-normalized blocks.
"""

import csv
import logging
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from app.core.errors import ArityError, PavingError
from app.models.clustering import RowClustering
from app.models.paving import BlockSpectrum, RowPaving
from app.services.linalg import as_matrix, gram_eigenvalues, rank_tolerance, row_norms

logger = logging.getLogger(__name__)


def _unit_rows(A_tau: np.ndarray) -> np.ndarray:
    """Row-normalize a block; zero rows stay zero"""
    norms = row_norms(A_tau)
    safe = np.where(norms > 0.0, norms, 1.0)
    return A_tau / safe[:, None]


def block_spectrum(A_tau: np.ndarray) -> BlockSpectrum:
    """Spectral summary of the row-normalized block"""
    unit = _unit_rows(np.asarray(A_tau, dtype=np.float64))
    eigenvalues = gram_eigenvalues(unit)
    lam_max, lam_min = float(eigenvalues[0]), float(eigenvalues[-1])
    if lam_max == 0.0 or lam_min <= rank_tolerance((unit.shape[0], unit.shape[0]), lam_max):
        cond = float("inf")
    else:
        cond = max(1.0, lam_max / lam_min)

    if unit.shape[0] < 2:
        ov = 0.0
    else:
        cosines = np.abs(unit @ unit.T)
        np.fill_diagonal(cosines, 0.0)
        ov = float(np.clip(cosines.max(), 0.0, 1.0))

    return BlockSpectrum(
        size=unit.shape[0],
        lambda_min=lam_min,
        lambda_max=lam_max,
        cond=cond,
        spectral_norm=float(np.sqrt(lam_max)),
        ov=ov,
    )


def validate_partition(blocks: Sequence[Sequence[int]], n: int) -> None:
    """Raise PavingError unless the blocks partition {0, ..., n-1}"""
    flat = np.concatenate([np.asarray(block, dtype=np.int64) for block in blocks]) if blocks else np.array([])
    if flat.size != n or np.any(np.bincount(flat.astype(np.int64), minlength=n) != 1):
        raise PavingError(f"{len(blocks)} blocks do not partition {n} rows exactly once")
    if any(len(block) == 0 for block in blocks):
        raise PavingError("paving contains an empty block")


def make_paving(A: np.ndarray, blocks: Iterable[Sequence[int]], kind: str) -> RowPaving:
    """Validate a partition and compute its per-block spectra and (m, alpha, beta)"""
    A = np.asarray(A, dtype=np.float64)
    blocks: List[Tuple[int, ...]] = [tuple(int(i) for i in block) for block in blocks]
    validate_partition(blocks, A.shape[0])

    per_block = [block_spectrum(A[list(block)]) for block in blocks]
    alpha = min(spectrum.lambda_min for spectrum in per_block)
    beta = max(spectrum.lambda_max for spectrum in per_block)

    logger.debug(f"Built {kind} paving: m={len(blocks)}, alpha={alpha:.4g}, beta={beta:.4g}")
    return RowPaving(blocks=blocks, m=len(blocks), alpha=alpha, beta=beta, per_block=per_block, kind=kind)


def build_random_paving(A: np.ndarray, block_size: int, seed: int) -> RowPaving:
    """Permute the rows by seed and chop them into ceil(n / block_size) consecutive blocks"""
    A = as_matrix(A, name="A")
    n = A.shape[0]
    if not 1 <= block_size <= n:
        raise ArityError(f"block_size = {block_size} must be in [1, n = {n}]")

    order = np.random.default_rng(seed).permutation(n)
    blocks = [order[start:start + block_size] for start in range(0, n, block_size)]
    return make_paving(A, blocks, kind="random")


def build_cluster_paving(A: np.ndarray, clustering: RowClustering, seed: int) -> RowPaving:
    """
    One row from every cluster that still has rows, per block.

    Rows are drawn without replacement in a seeded order. Once a cluster is
    exhausted the remaining clusters keep forming smaller blocks until every
    row is used exactly once.
    """
    A = as_matrix(A, name="A")
    if clustering.n != A.shape[0]:
        raise ArityError(f"clustering covers {clustering.n} rows, A has {A.shape[0]}")

    rng = np.random.default_rng(seed)
    pools = [list(rng.permutation(clustering.members(cluster))) for cluster in range(clustering.k)]

    blocks = []
    while any(pools):
        blocks.append([pool.pop() for pool in pools if pool])
    return make_paving(A, blocks, kind="cluster")


def write_paving_csv(path: Path, paving: RowPaving) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["block_id", "size", "lambda_min", "lambda_max", "cond", "spectral_norm", "ov", "rows"])
        for block_id, (block, spectrum) in enumerate(zip(paving.blocks, paving.per_block)):
            writer.writerow([
                block_id,
                spectrum.size,
                repr(float(spectrum.lambda_min)),
                repr(float(spectrum.lambda_max)),
                repr(float(spectrum.cond)),
                repr(float(spectrum.spectral_norm)),
                repr(float(spectrum.ov)),
                " ".join(str(i) for i in block),
            ])
