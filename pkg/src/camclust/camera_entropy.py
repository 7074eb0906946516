"""Camera diversity of a cluster and its conversion into loss weights.

A cluster whose members come from many cameras carries more cross-camera
signal, so it should steer the contrastive loss harder.  Diversity is the
Shannon entropy of the camera histogram; per mini-batch the entropies of the
sampled clusters pass through a softmax scaled so the weights sum to the
number of sampled clusters.
"""

import math

import numpy as np


def camera_histogram(cameras: np.ndarray, member_mask: np.ndarray | None = None) -> np.ndarray:
    """Counts per camera id (dense from 0) for the selected members."""
    cameras = np.asarray(cameras, dtype=int)
    if member_mask is not None:
        cameras = cameras[np.asarray(member_mask)]
    if cameras.size == 0:
        raise ValueError("histogram needs at least one member")
    if cameras.min() < 0:
        raise ValueError("camera ids must be non-negative")
    return np.bincount(cameras)


def cie(counts: np.ndarray, log_base: float = math.e) -> float:
    """Entropy of a camera count histogram; zero counts contribute nothing.

    Natural log by default; the base only rescales values before the softmax
    in batch_loss_weights, so it is exposed as a reproducibility knob.
    """
    counts = np.asarray(counts, dtype=float)
    if np.any(counts < 0):
        raise ValueError("counts must be non-negative")
    total = counts.sum()
    if total < 1:
        raise ValueError("histogram total must be >= 1")
    p = counts[counts > 0] / total
    h = float(-(p * np.log(p)).sum())
    if log_base != math.e:
        h /= math.log(log_base)
    return h


def batch_loss_weights(cies: np.ndarray) -> np.ndarray:
    """Softmax over the sampled clusters' entropies, scaled to sum to P.

    Equal entropies give exactly all-ones; shifting every entropy by a
    constant leaves the weights unchanged.
    """
    c = np.atleast_1d(np.asarray(cies, dtype=float))
    p = c.shape[0]
    e = np.exp(c - c.max())
    return e * p / e.sum()
