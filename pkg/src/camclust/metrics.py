"""Distance and similarity primitives shared by clustering and training.

Four metrics live here: plain Euclidean, exp-based similarity/discrepancy,
the Euler-representation cosine distance used sample-to-cluster, and the
k-reciprocal Jaccard distance used sample-to-sample.
"""

import numpy as np

from .errors import BadK, DimensionMismatch, ZeroVector

NORM_FLOOR = 1e-12

# Default angular frequency of the Euler coordinate map.  Each coordinate x
# is lifted to (cos(a*pi*x), sin(a*pi*x)); values near 2 keep the map
# expressive for unit-norm feature rows without wrapping locally.
DEFAULT_EULER_ALPHA = 1.9


def l2_normalize_rows(m: np.ndarray) -> np.ndarray:
    """Divide every row by its Euclidean norm.

    Raises ZeroVector if any row norm falls below NORM_FLOOR.
    """
    m = np.asarray(m, dtype=float)
    norms = np.linalg.norm(m, axis=-1, keepdims=True)
    if np.any(norms < NORM_FLOOR):
        raise ZeroVector("cannot normalize rows with near-zero norm")
    return m / norms


def pairwise_euclidean(a: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    """Pairwise Euclidean distances between rows of `a` and rows of `b`.

    With b=None the self-distance matrix is returned with an exactly zero
    diagonal (the expanded-square form would otherwise leave ~1e-8 residue).
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    self_mode = b is None
    b = a if self_mode else np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(f"dimension {a.shape[1]} vs {b.shape[1]}")
    sq = (a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :] - 2.0 * (a @ b.T)
    np.maximum(sq, 0.0, out=sq)
    if self_mode:
        np.fill_diagonal(sq, 0.0)
    return np.sqrt(sq)


def pairwise_sim_disc(dist: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Turn a distance matrix into (similarity, discrepancy).

    sim = exp(-dist), disc = 1 - sim; sim + disc == 1 holds elementwise.
    """
    dist = np.asarray(dist, dtype=float)
    if np.any(dist < 0):
        raise ValueError("distances must be non-negative")
    sim = np.exp(-dist)
    disc = 1.0 - sim
    return sim, disc


def euler_map(x: np.ndarray, alpha: float = DEFAULT_EULER_ALPHA) -> np.ndarray:
    """Lift each row to the 2D-dim Euler representation.

    Coordinate x becomes (cos(alpha*pi*x), sin(alpha*pi*x)) / sqrt(D); the
    mapped rows are unit-norm by construction.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    phase = alpha * np.pi * x
    scale = np.sqrt(x.shape[1])
    return np.concatenate([np.cos(phase), np.sin(phase)], axis=1) / scale


def euler_cosine_distance_matrix(
    a: np.ndarray, b: np.ndarray, alpha: float = DEFAULT_EULER_ALPHA
) -> np.ndarray:
    """1 - cosine similarity between Euler-mapped rows of `a` and `b`."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(f"dimension {a.shape[1]} vs {b.shape[1]}")
    ma = l2_normalize_rows(euler_map(a, alpha))
    mb = l2_normalize_rows(euler_map(b, alpha))
    return 1.0 - ma @ mb.T


def euler_cosine_distance(
    a: np.ndarray, b: np.ndarray, alpha: float = DEFAULT_EULER_ALPHA
) -> float:
    """Euler-representation cosine distance between two vectors, in [0, 2]."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatch(f"length {a.shape[0]} vs {b.shape[0]}")
    return float(euler_cosine_distance_matrix(a[None, :], b[None, :], alpha)[0, 0])


def _neighbour_mask(rank: np.ndarray, k: int) -> np.ndarray:
    """Boolean matrix whose row i marks the k+1 nearest samples of i (self included)."""
    n = rank.shape[0]
    mask = np.zeros((n, n), dtype=bool)
    rows = np.repeat(np.arange(n), k + 1)
    mask[rows, rank[:, : k + 1].ravel()] = True
    return mask


def k_reciprocal_jaccard(features: np.ndarray, k1: int = 30, k2: int = 6) -> np.ndarray:
    """Pairwise k-reciprocal Jaccard distance between feature rows.

    Rows are l2-normalized and compared with Euclidean distance; each sample
    gets a sparse weight vector over its expanded k1-reciprocal neighbour set
    (Gaussian kernel exp(-d)), smoothed by averaging over the k2 nearest
    neighbours; the returned distance is 1 - sum(min)/sum(max) between weight
    vectors.  Square, symmetric, zero diagonal, entries in [0, 1].
    """
    if k1 < 1 or k2 < 1 or k2 > k1:
        raise BadK(f"need 1 <= k2 <= k1, got k1={k1} k2={k2}")
    x = l2_normalize_rows(np.atleast_2d(np.asarray(features, dtype=float)))
    n = x.shape[0]
    if n < 2:
        raise BadK("need at least 2 samples")
    k1 = min(k1, n - 1)
    k2 = min(k2, k1)

    dist = pairwise_euclidean(x)
    rank = np.argsort(dist, axis=1, kind="stable")

    mask_k1 = _neighbour_mask(rank, k1)
    recip_k1 = mask_k1 & mask_k1.T
    half = int(np.around(k1 / 2.0))
    mask_half = _neighbour_mask(rank, half)
    recip_half = mask_half & mask_half.T

    weights = np.zeros((n, n))
    for i in range(n):
        expanded = recip_k1[i].copy()
        for cand in np.flatnonzero(recip_k1[i]):
            cand_set = recip_half[cand]
            if np.count_nonzero(cand_set & recip_k1[i]) > (2.0 / 3.0) * np.count_nonzero(cand_set):
                expanded |= cand_set
        idx = np.flatnonzero(expanded)
        if idx.size == 0:
            # pathological tie pattern: fall back to the sample itself
            weights[i, i] = 1.0
            continue
        w = np.exp(-dist[i, idx])
        weights[i, idx] = w / w.sum()

    if k2 > 1:
        weights = weights[rank[:, :k2]].mean(axis=1)

    row_sums = weights.sum(axis=1)
    jaccard = np.empty((n, n))
    for i in range(n):
        nz = np.flatnonzero(weights[i])
        overlap = np.minimum(weights[i, nz][None, :], weights[:, nz]).sum(axis=1)
        union = row_sums[i] + row_sums - overlap
        with np.errstate(divide="ignore", invalid="ignore"):
            row = np.where(union > 0, 1.0 - overlap / union, 1.0)
        jaccard[i] = row
    np.fill_diagonal(jaccard, 0.0)
    np.clip(jaccard, 0.0, 1.0, out=jaccard)
    return jaccard
