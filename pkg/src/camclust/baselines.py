"""K-means and DBSCAN baselines plus pseudo-label housekeeping."""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import TooFewSamples
from .metrics import l2_normalize_rows, pairwise_euclidean


@dataclass
class DbscanConfig:
    eps: float = 0.6
    min_samples: int = 4

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.min_samples < 1:
            raise ValueError("min_samples must be >= 1")


def kmeans_plus_plus_indices(
    features: np.ndarray,
    k: int,
    rng: np.random.Generator,
    pair_dist: Callable[[np.ndarray, np.ndarray], np.ndarray] = pairwise_euclidean,
) -> np.ndarray:
    """Pick k distinct seed indices with squared-distance-weighted sampling.

    `pair_dist` supplies the metric; ties and degenerate (all-zero potential)
    situations fall back to the lowest unchosen index for determinism.
    """
    n = features.shape[0]
    if k > n:
        raise TooFewSamples(f"k={k} > n={n}")
    chosen = [int(rng.integers(n))]
    taken = np.zeros(n, dtype=bool)
    taken[chosen[0]] = True
    best = pair_dist(features, features[chosen[0]][None, :])[:, 0]
    for _ in range(k - 1):
        pot = best * best
        pot[taken] = 0.0
        total = pot.sum()
        if total > 0:
            r = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(pot), r, side="right"))
            idx = min(idx, n - 1)
            if taken[idx] or pot[idx] == 0.0:
                idx = int(np.flatnonzero(~taken)[0])
        else:
            idx = int(np.flatnonzero(~taken)[0])
        chosen.append(idx)
        taken[idx] = True
        best = np.minimum(best, pair_dist(features, features[idx][None, :])[:, 0])
    return np.array(chosen, dtype=int)


def _mean_by_label(x: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    cent = np.zeros((k, x.shape[1]))
    for kk in range(k):
        members = labels == kk
        if members.any():
            cent[kk] = x[members].mean(axis=0)
    return cent


def _lloyd(
    x: np.ndarray, centroids: np.ndarray, max_iters: int
) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Lloyd iterations on Euclidean distance; returns labels, centroids and
    the within-cluster sum of squares recorded after each assignment."""
    k = centroids.shape[0]
    n = x.shape[0]
    labels = None
    wcss_history = []
    for _ in range(max_iters):
        d = pairwise_euclidean(x, centroids)
        new_labels = np.argmin(d, axis=1)
        # re-seed emptied clusters with the sample farthest from its centroid
        counts = np.bincount(new_labels, minlength=k)
        for kk in np.flatnonzero(counts == 0):
            assigned = d[np.arange(n), new_labels]
            assigned = np.where(counts[new_labels] > 1, assigned, -np.inf)
            far = int(np.argmax(assigned))
            counts[new_labels[far]] -= 1
            new_labels[far] = kk
            counts[kk] += 1
        wcss_history.append(float((d[np.arange(n), new_labels] ** 2).sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        centroids = _mean_by_label(x, labels, k)
    return labels, centroids, wcss_history


def kmeans_fit(
    features: np.ndarray,
    k: int,
    max_iters: int = 100,
    seed: int = 0,
    min_cluster_size: int = 4,
) -> np.ndarray:
    """K-means++ seeding followed by Lloyd iterations on normalized rows.

    Clusters smaller than `min_cluster_size` are dissolved to -1 and the rest
    compacted, mirroring the small-cluster rule used everywhere else.
    """
    x = l2_normalize_rows(np.atleast_2d(np.asarray(features, dtype=float)))
    n = x.shape[0]
    if k > n:
        raise TooFewSamples(f"k={k} > n={n}")
    rng = np.random.default_rng(seed)
    seeds = kmeans_plus_plus_indices(x, k, rng)
    labels, _, _ = _lloyd(x, x[seeds], max_iters)
    labels = dissolve_small(labels, min_cluster_size)
    return relabel_compact(labels)


def dbscan_fit(dist: np.ndarray, config: DbscanConfig) -> np.ndarray:
    """Density clustering on a precomputed square distance matrix.

    Core points have >= min_samples neighbours within eps (self included);
    clusters are the connected components of the core graph; border points
    join the lowest-indexed claiming cluster; noise stays -1.
    """
    dist = np.asarray(dist, dtype=float)
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise ValueError("distance matrix must be square")
    n = dist.shape[0]
    near = dist <= config.eps
    core = near.sum(axis=1) >= config.min_samples
    labels = np.full(n, -1, dtype=int)
    cluster = 0
    for start in range(n):
        if not core[start] or labels[start] != -1:
            continue
        frontier = [start]
        labels[start] = cluster
        while frontier:
            i = frontier.pop()
            for j in np.flatnonzero(near[i] & core):
                if labels[j] == -1:
                    labels[j] = cluster
                    frontier.append(j)
        cluster += 1
    for i in np.flatnonzero(~core):
        claims = labels[near[i] & core]
        claims = claims[claims >= 0]
        if claims.size:
            labels[i] = int(claims.min())
    return labels


def dissolve_small(labels: np.ndarray, min_size: int) -> np.ndarray:
    """Send every cluster with fewer than `min_size` members to -1."""
    labels = np.asarray(labels, dtype=int).copy()
    kept = labels >= 0
    if not kept.any() or min_size <= 1:
        return labels
    counts = np.bincount(labels[kept])
    small = np.flatnonzero(counts < min_size)
    labels[np.isin(labels, small) & kept] = -1
    return labels


def relabel_compact(labels: np.ndarray) -> np.ndarray:
    """Rename surviving labels to 0..K'-1 in first-appearance order; -1 stays."""
    labels = np.asarray(labels, dtype=int)
    out = np.full(labels.shape, -1, dtype=int)
    mapping: dict[int, int] = {}
    for i, lab in enumerate(labels):
        if lab < 0:
            continue
        if lab not in mapping:
            mapping[lab] = len(mapping)
        out[i] = mapping[lab]
    return out
