"""
Spherical k-means over the rows of A.

A hyperplane does not change when its equation is negated, so the
iteration works on row directions up to sign: rows are normalized and
sign-canonicalized, assigned by |cosine|, and enter their centroid with
the sign that aligns them to it. Antipodal rows always share a cluster.
"""

import csv
import logging
from pathlib import Path

import numpy as np

from app.core.config import settings
from app.core.errors import ArityError
from app.models.clustering import RowClustering
from app.services.linalg import as_matrix, as_vector, normalize_rows, row_norms

logger = logging.getLogger(__name__)


def canonical_signs(U: np.ndarray) -> np.ndarray:
    """+1/-1 per row so that the first nonzero coordinate of sign * row is positive"""
    first_nonzero = np.argmax(U != 0.0, axis=1)
    leading = U[np.arange(U.shape[0]), first_nonzero]
    return np.where(leading < 0.0, -1.0, 1.0)


def _farthest_first(U: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k distinct rows, each the farthest (in cosine distance) from those already chosen"""
    n = U.shape[0]
    chosen = [int(rng.integers(n))]
    distance = 1.0 - np.abs(U @ U[chosen[0]])
    distance[chosen[0]] = -np.inf
    for _ in range(1, k):
        nxt = int(np.argmax(distance))
        chosen.append(nxt)
        distance = np.minimum(distance, 1.0 - np.abs(U @ U[nxt]))
        distance[chosen] = -np.inf
    return U[chosen].copy()


def alignment_signs(similarity: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """+1/-1 per row: the side of its own centroid the row lies on"""
    own = similarity[np.arange(labels.shape[0]), labels]
    return np.where(own < 0.0, -1.0, 1.0)


def _repair_empty_clusters(U: np.ndarray, labels: np.ndarray, similarity: np.ndarray,
                           centroids: np.ndarray, k: int) -> np.ndarray:
    """Move the point farthest from its centroid into each empty cluster as a singleton"""
    labels = labels.copy()
    counts = np.bincount(labels, minlength=k)
    for empty in np.flatnonzero(counts == 0):
        own = np.abs(similarity[np.arange(U.shape[0]), labels])
        donors = counts[labels] > 1
        candidate = int(np.argmin(np.where(donors, own, np.inf)))
        counts[labels[candidate]] -= 1
        labels[candidate] = empty
        counts[empty] = 1
        centroids[empty] = U[candidate]
        similarity[:, empty] = U @ centroids[empty]
        logger.debug(f"Cluster {empty} was empty; reseeded with row {candidate}")
    return labels


def _update_centroids(U: np.ndarray, labels: np.ndarray, signs: np.ndarray, k: int) -> np.ndarray:
    sums = np.zeros((k, U.shape[1]))
    np.add.at(sums, labels, U * signs[:, None])
    return sums / np.linalg.norm(sums, axis=1)[:, None]


def _cost(U: np.ndarray, labels: np.ndarray, centroids: np.ndarray) -> float:
    """Sum of 1 - |cos(row, assigned centroid)|"""
    return float(np.sum(1.0 - np.abs(np.einsum("ij,ij->i", U, centroids[labels]))))


def cluster_rows(A: np.ndarray, b: np.ndarray, k: int, seed: int,
                 max_iters: int = settings.KMEANS_MAX_ITERS) -> RowClustering:
    """
    Lloyd-style spherical k-means on the normalized, sign-canonical rows.

    Stops at an assignment fixpoint or after max_iters iterations. The
    objective (sum of 1 - |cosine similarity|) never increases between
    iterations; its values are kept in `cost_trace`.
    """
    A = as_matrix(A, name="A")
    b = as_vector(b, name="b")
    n = A.shape[0]
    if b.shape[0] != n:
        raise ArityError(f"b has length {b.shape[0]}, expected {n}")
    if not 1 <= k <= n:
        raise ArityError(f"cluster count k = {k} must be in [1, n = {n}]")
    if max_iters < 1:
        raise ArityError(f"max_iters must be >= 1, got {max_iters}")

    signs = canonical_signs(A)
    U = normalize_rows(A) * signs[:, None]
    b_hat = b * signs / row_norms(A)

    rng = np.random.default_rng(seed)
    centroids = _farthest_first(U, k, rng)
    labels = None
    cost_trace = []
    iterations = 0

    for iterations in range(1, max_iters + 1):
        similarity = U @ centroids.T
        new_labels = np.argmax(np.abs(similarity), axis=1)
        new_labels = _repair_empty_clusters(U, new_labels, similarity, centroids, k)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        centroids = _update_centroids(U, labels, alignment_signs(similarity, labels), k)
        cost_trace.append(_cost(U, labels, centroids))

    # b in the frame of each member's aligned direction
    aligned = alignment_signs(U @ centroids.T, labels)
    sizes = np.bincount(labels, minlength=k)
    centroid_b = np.bincount(labels, weights=b_hat * aligned, minlength=k) / sizes

    logger.info(f"Clustered {n} rows into {k} clusters in {iterations} iterations "
                f"(cost {cost_trace[-1]:.6g}, sizes {sizes.tolist()})")
    return RowClustering(
        k=k,
        assignments=labels,
        centroids=centroids,
        cluster_sizes=sizes,
        centroid_b=centroid_b,
        seed=seed,
        iterations=iterations,
        cost_trace=cost_trace,
    )


def furthest_cluster(c: RowClustering, x_k: np.ndarray) -> int:
    """argmax over l of |centroid_b[l] - <c_l, x_k>| / ||c_l||; ties go to the lowest index"""
    x_k = np.asarray(x_k, dtype=np.float64)
    if x_k.shape != (c.centroids.shape[1],):
        raise ArityError(f"x_k has shape {x_k.shape}, expected ({c.centroids.shape[1]},)")
    distances = np.abs(c.centroid_b - c.centroids @ x_k) / np.linalg.norm(c.centroids, axis=1)
    return int(np.argmax(distances))


def write_assignments_csv(path: Path, c: RowClustering) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["row_index", "cluster_index"])
        for i, cluster in enumerate(c.assignments):
            writer.writerow([i, int(cluster)])
