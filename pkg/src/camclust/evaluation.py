"""Retrieval and clustering quality metrics."""

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, NoValidQuery
from .metrics import pairwise_euclidean

CMC_RANKS = (1, 5, 10)


@dataclass
class EvalReport:
    map: float
    cmc: dict[int, float]
    num_queries: int


def evaluate_map_cmc(embedder, dataset, cross_camera_filter: bool = True) -> EvalReport:
    """Rank the gallery by Euclidean distance of embedded features for every
    query and report mean average precision plus CMC at ranks 1/5/10.

    With the cross-camera filter on, gallery entries sharing both identity
    and camera with the query are excluded from the ranking.  Queries with
    no remaining correct match are skipped; precision is the non-interpolated
    precision-at-hit average.  Distance ties resolve by gallery index.
    """
    q_mask = dataset.mask("query")
    g_mask = dataset.mask("gallery")
    fq = embedder.transform(dataset.features[q_mask])
    fg = embedder.transform(dataset.features[g_mask])
    q_ids = dataset.true_id[q_mask]
    g_ids = dataset.true_id[g_mask]
    q_cams = dataset.camera[q_mask]
    g_cams = dataset.camera[g_mask]

    dist = pairwise_euclidean(fq, fg)
    aps = []
    first_hits = []
    for qi in range(fq.shape[0]):
        order = np.argsort(dist[qi], kind="stable")
        if cross_camera_filter:
            junk = (g_ids == q_ids[qi]) & (g_cams == q_cams[qi])
            order = order[~junk[order]]
        hits = g_ids[order] == q_ids[qi]
        n_hits = int(hits.sum())
        if n_hits == 0:
            continue
        ranks = np.flatnonzero(hits) + 1
        aps.append(float(((np.arange(n_hits) + 1) / ranks).mean()))
        first_hits.append(int(ranks[0]))
    if not aps:
        raise NoValidQuery("no query has a valid gallery match")
    first_hits = np.array(first_hits)
    cmc = {r: float((first_hits <= r).mean()) for r in CMC_RANKS}
    return EvalReport(map=float(np.mean(aps)), cmc=cmc, num_queries=len(aps))


def _outliers_to_singletons(labels: np.ndarray) -> np.ndarray:
    labels = np.asarray(labels, dtype=int).copy()
    noise = np.flatnonzero(labels < 0)
    if noise.size:
        start = labels.max() + 1 if (labels >= 0).any() else 0
        labels[noise] = start + np.arange(noise.size)
    return labels


def adjusted_rand_index(a: np.ndarray, b: np.ndarray) -> float:
    """Chance-corrected agreement between two labelings.

    Outliers (-1) count as singleton clusters.  Returns 1.0 for identical
    partitions up to renaming; degenerate denominators (both partitions
    trivially equal) also yield 1.0.
    """
    a = np.asarray(a, dtype=int)
    b = np.asarray(b, dtype=int)
    if a.shape[0] != b.shape[0]:
        raise LengthMismatch(f"length {a.shape[0]} vs {b.shape[0]}")
    n = a.shape[0]
    if n < 2:
        return 1.0
    a = _outliers_to_singletons(a)
    b = _outliers_to_singletons(b)
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    cont = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(cont, (ia, ib), 1)

    def comb2(x):
        x = x.astype(float)
        return x * (x - 1.0) / 2.0

    sum_cells = comb2(cont).sum()
    sum_rows = comb2(cont.sum(axis=1)).sum()
    sum_cols = comb2(cont.sum(axis=0)).sum()
    total = n * (n - 1.0) / 2.0
    expected = sum_rows * sum_cols / total
    max_index = 0.5 * (sum_rows + sum_cols)
    if max_index == expected:
        return 1.0
    return float((sum_cells - expected) / (max_index - expected))
