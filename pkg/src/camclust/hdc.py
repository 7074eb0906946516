"""Harmonic-discrepancy clustering.

A partition-based algorithm that assigns each sample by how strongly it is
separated from every *other* cluster.  The discrepancy of a sample to a
cluster is read off a representative member: the member that is
simultaneously far from the sample and close to the cluster centroid (the
two criteria combined by a harmonic mean, so neither can be small).  Members
whose own discrepancy exceeds a mean-plus-std threshold are set aside as
peripheral and excluded from centroid updates; after the last iteration they
become outliers (-1).

Two different metrics drive the algorithm: sample-to-sample discrepancies
come from the k-reciprocal Jaccard distance, sample-to-centroid similarity
from exp(-Euler-cosine distance).
"""

from dataclasses import dataclass

import numpy as np

from .baselines import dissolve_small, kmeans_plus_plus_indices, relabel_compact
from .errors import EmptyCluster, TooFewSamples
from .metrics import (
    DEFAULT_EULER_ALPHA,
    euler_cosine_distance_matrix,
    k_reciprocal_jaccard,
    l2_normalize_rows,
    pairwise_sim_disc,
)


@dataclass
class HdcConfig:
    k: int
    max_iters: int = 20
    min_cluster_size: int = 4
    alpha_euler: float = DEFAULT_EULER_ALPHA
    k1: int = 30
    k2: int = 6
    seed: int = 0
    normalize: bool = True

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.min_cluster_size < 1:
            raise ValueError("min_cluster_size must be >= 1")


def init_clusters(
    features: np.ndarray, k: int, seed: int, alpha: float = DEFAULT_EULER_ALPHA
) -> np.ndarray:
    """K-means++ seeding on the Euler-cosine metric; each sample joins its
    nearest seed.  Deterministic given the seed."""
    features = np.atleast_2d(np.asarray(features, dtype=float))
    n = features.shape[0]
    if k > n:
        raise TooFewSamples(f"k={k} > n={n}")
    rng = np.random.default_rng(seed)
    metric = lambda a, b: euler_cosine_distance_matrix(a, b, alpha)
    seeds = kmeans_plus_plus_indices(features, k, rng, metric)
    return np.argmin(metric(features, features[seeds]), axis=1)


def compute_centroids(
    features: np.ndarray, labels: np.ndarray, n_clusters: int | None = None
) -> np.ndarray:
    """Row k is the mean of features currently labelled k; -1 is excluded."""
    features = np.atleast_2d(np.asarray(features, dtype=float))
    labels = np.asarray(labels, dtype=int)
    k = int(labels.max()) + 1 if n_clusters is None else n_clusters
    empty = [kk for kk in range(k) if not np.any(labels == kk)]
    if empty:
        raise EmptyCluster(empty)
    cent = np.empty((k, features.shape[1]))
    for kk in range(k):
        cent[kk] = features[labels == kk].mean(axis=0)
    return cent


def max_link_discrepancy(
    i: int, k: int, disc: np.ndarray, labels: np.ndarray
) -> float:
    """Max discrepancy between sample i and any member of cluster k.

    Kept as a documented reference point: the iteration below supersedes it
    with the representative-member (harmonic) variant.
    """
    members = np.flatnonzero(np.asarray(labels, dtype=int) == k)
    if members.size == 0:
        raise EmptyCluster(k)
    return float(disc[i, members].max())


def _harmonic_scores(d: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Harmonic mean 2ds/(d+s) with the 0/0 corner defined as 0."""
    num = 2.0 * d * s
    den = d + s
    return np.divide(num, den, out=np.zeros_like(num), where=den > 0)


def harmonic_discrepancy(
    i: int,
    k: int,
    disc: np.ndarray,
    sim_to_centroid: np.ndarray,
    labels: np.ndarray,
) -> tuple[int, float]:
    """Representative member of cluster k for sample i and the resulting
    discrepancy value.

    The representative maximizes the harmonic mean of disc(i, x) and
    sim(x, centroid_k); ties resolve to the lowest sample index.
    """
    members = np.flatnonzero(np.asarray(labels, dtype=int) == k)
    if members.size == 0:
        raise EmptyCluster(k)
    scores = _harmonic_scores(disc[i, members], sim_to_centroid[members, k])
    rep = int(members[np.argmax(scores)])
    return rep, float(disc[i, rep])


def _harmonic_discrepancy_matrix(
    disc: np.ndarray, sim_c: np.ndarray, labels: np.ndarray, k: int
) -> np.ndarray:
    n = labels.shape[0]
    hd = np.empty((n, k))
    for kk in range(k):
        members = np.flatnonzero(labels == kk)
        if members.size == 0:
            raise EmptyCluster(kk)
        scores = _harmonic_scores(disc[:, members], sim_c[members, kk][None, :])
        rep = members[np.argmax(scores, axis=1)]
        hd[:, kk] = disc[np.arange(n), rep]
    return hd


def assign_labels(hd: np.ndarray) -> np.ndarray:
    """Label each sample by the cluster it is least separated from.

    mu_k(i) averages the discrepancies to all clusters other than k; the
    argmax of mu equals the argmin of hd, with ties to the lowest index.
    """
    hd = np.atleast_2d(np.asarray(hd, dtype=float))
    k = hd.shape[1]
    if k < 2:
        raise ValueError("need at least 2 clusters")
    mu = (hd.sum(axis=1, keepdims=True) - hd) / (k - 1)
    return np.argmax(mu, axis=1)


def detect_peripherals(
    hd: np.ndarray, labels: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Flag members whose discrepancy to their own cluster strictly exceeds
    the cluster's mean + population-std threshold; they get label -1."""
    hd = np.atleast_2d(np.asarray(hd, dtype=float))
    labels = np.asarray(labels, dtype=int).copy()
    k = hd.shape[1]
    epsilon = np.full(k, np.nan)
    for kk in range(k):
        members = np.flatnonzero(labels == kk)
        if members.size == 0:
            continue
        vals = hd[members, kk]
        epsilon[kk] = vals.mean() + vals.std()
        labels[members[vals > epsilon[kk]]] = -1
    return labels, epsilon


def _repair_empty(
    features: np.ndarray, labels: np.ndarray, k: int, alpha: float
) -> np.ndarray:
    """Give every empty cluster one member: the sample farthest (Euler
    metric) from the centroid it is currently assigned to, drawn from
    clusters that can spare one."""
    counts = np.bincount(labels[labels >= 0], minlength=k)
    empties = np.flatnonzero(counts == 0)
    if empties.size == 0:
        return labels
    labels = labels.copy()
    n = labels.shape[0]
    for ke in empties:
        cent = np.zeros((k, features.shape[1]))
        for kk in np.flatnonzero(counts > 0):
            cent[kk] = features[labels == kk].mean(axis=0)
        assigned = labels >= 0
        safe = np.where(assigned, labels, 0)
        d_own = euler_cosine_distance_matrix(features, cent, alpha)[np.arange(n), safe]
        d_own = np.where(assigned & (counts[safe] > 1), d_own, -np.inf)
        donor = int(np.argmax(d_own))
        counts[labels[donor]] -= 1
        labels[donor] = ke
        counts[ke] += 1
    return labels


def hdc_fit(features: np.ndarray, config: HdcConfig) -> np.ndarray:
    """Run the full clustering loop and return per-sample labels.

    Per iteration: centroids from current core members, discrepancy matrix
    for every (sample, cluster) pair, reassignment of all samples (previous
    peripherals included), then peripheral detection on the same matrix.
    Stops early when an iteration changes nothing.  Afterwards clusters
    smaller than min_cluster_size dissolve to -1 and labels are compacted.
    """
    x = np.atleast_2d(np.asarray(features, dtype=float))
    if config.normalize:
        x = l2_normalize_rows(x)
    n = x.shape[0]
    if config.k > n:
        raise TooFewSamples(f"k={config.k} > n={n}")

    jac = k_reciprocal_jaccard(x, config.k1, config.k2)
    _, disc = pairwise_sim_disc(jac)

    labels = init_clusters(x, config.k, config.seed, config.alpha_euler)
    labels = _repair_empty(x, labels, config.k, config.alpha_euler)
    for _ in range(config.max_iters):
        cent = compute_centroids(x, labels, config.k)
        sim_c = np.exp(-euler_cosine_distance_matrix(x, cent, config.alpha_euler))
        hd = _harmonic_discrepancy_matrix(disc, sim_c, labels, config.k)
        new_labels = assign_labels(hd)
        new_labels = _repair_empty(x, new_labels, config.k, config.alpha_euler)
        new_labels, _ = detect_peripherals(hd, new_labels)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels

    labels = dissolve_small(labels, config.min_cluster_size)
    return relabel_compact(labels)
