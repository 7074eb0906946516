"""Cluster-proxy memory, weighted contrastive loss and update strategies.

The memory holds one unit-norm proxy per cluster.  The loss is a weighted
softmax cross-entropy of a feature against all proxies at temperature tau;
proxies are constants for the gradient and only move through momentum
updates.  Four strategies pick the update sample(s) per cluster in a batch:

  vanilla  every member, in sampled order
  hard     the member farthest (cosine) from the proxy
  tccl     the batch-local camera centre farthest from the proxy
  chd      the member with the best tradeoff between being far from the
           proxy and close to its own camera centre (harmonic mean of the
           two rescaled cosines)
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import BadLabel, EmptyCluster, EmptyIntersection, NoMembers, ZeroVector
from .metrics import NORM_FLOOR, l2_normalize_rows

UPDATE_STRATEGIES = ("vanilla", "hard", "tccl", "chd")

# lower clamp for the rescaled cosine terms inside chd()
CHD_CLAMP = 1e-6


@dataclass
class ClusterMemory:
    proxies: np.ndarray
    momentum: float = 0.2
    temperature: float = 0.05

    def __post_init__(self):
        self.proxies = np.atleast_2d(np.asarray(self.proxies, dtype=float))
        if not 0.0 <= self.momentum <= 1.0:
            raise ValueError("momentum must lie in [0, 1]")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")

    @property
    def k(self) -> int:
        return self.proxies.shape[0]


@dataclass
class MiniBatch:
    indices: np.ndarray
    features: np.ndarray
    labels: np.ndarray
    cameras: np.ndarray
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=float))
        self.labels = np.asarray(self.labels, dtype=int)
        self.cameras = np.asarray(self.cameras, dtype=int)
        if self.weights is None:
            self.weights = np.ones(self.features.shape[0])


def init_memory(
    features: np.ndarray,
    labels: np.ndarray,
    momentum: float = 0.2,
    temperature: float = 0.05,
) -> ClusterMemory:
    """One proxy per cluster: the l2-normalized centroid of its members."""
    features = np.atleast_2d(np.asarray(features, dtype=float))
    labels = np.asarray(labels, dtype=int)
    k = int(labels.max()) + 1
    empty = [kk for kk in range(k) if not np.any(labels == kk)]
    if empty:
        raise EmptyCluster(empty)
    proxies = np.empty((k, features.shape[1]))
    for kk in range(k):
        proxies[kk] = features[labels == kk].mean(axis=0)
    return ClusterMemory(l2_normalize_rows(proxies), momentum, temperature)


def batch_loss_and_grads(
    features: np.ndarray,
    memory: ClusterMemory,
    labels: np.ndarray,
    weights: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample weighted softmax losses and gradients w.r.t. the features.

    Logits are cosine scores over all proxies divided by tau, stabilised by
    max subtraction.  Proxies receive no gradient.
    """
    f = np.atleast_2d(np.asarray(features, dtype=float))
    y = np.atleast_1d(np.asarray(labels, dtype=int))
    w = np.atleast_1d(np.asarray(weights, dtype=float))
    if np.any(y < 0) or np.any(y >= memory.k):
        raise BadLabel(f"labels must lie in [0, {memory.k})")
    b = f.shape[0]
    logits = f @ memory.proxies.T / memory.temperature
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    denom = e.sum(axis=1, keepdims=True)
    probs = e / denom
    log_probs = z - np.log(denom)
    losses = -w * log_probs[np.arange(b), y]
    delta = probs.copy()
    delta[np.arange(b), y] -= 1.0
    grads = (w / memory.temperature)[:, None] * (delta @ memory.proxies)
    return losses, grads


def info_nce_loss_and_grad(
    f: np.ndarray, memory: ClusterMemory, y: int, w: float = 1.0
) -> tuple[float, np.ndarray]:
    """Single-sample view of batch_loss_and_grads."""
    losses, grads = batch_loss_and_grads(
        np.asarray(f, dtype=float)[None, :], memory, [y], [w]
    )
    return float(losses[0]), grads[0]


def camera_centre(batch: MiniBatch, label: int, camera: int) -> np.ndarray:
    """Normalized mean of batch features sharing the given label and camera."""
    mask = (batch.labels == label) & (batch.cameras == camera)
    if not mask.any():
        raise EmptyIntersection(f"no member with label {label} and camera {camera}")
    mean = batch.features[mask].mean(axis=0)
    norm = np.linalg.norm(mean)
    if norm < NORM_FLOOR:
        raise ZeroVector("camera centre has near-zero norm")
    return mean / norm


def chd(m: np.ndarray, f: np.ndarray, o: np.ndarray) -> float:
    """Harmonic mean of distance-to-proxy and affinity-to-camera-centre.

    Both cosines are rescaled affinely into [0, 1] and clamped away from 0,
    so the harmonic mean is well defined and lands in (0, 1].
    """
    d = np.clip((1.0 - float(np.dot(m, f))) / 2.0, CHD_CLAMP, 1.0)
    s = np.clip((1.0 + float(np.dot(f, o))) / 2.0, CHD_CLAMP, 1.0)
    return float(2.0 * d * s / (d + s))


def select_update_sample(
    strategy: str, batch: MiniBatch, label: int, memory: ClusterMemory
) -> np.ndarray:
    """Vector(s) the caller should feed to momentum_update, one per row.

    vanilla returns every member in sampled order; the hard variants return
    a single row.  Ties resolve to the lowest batch index (lowest camera id
    for tccl, whose candidates are camera centres).
    """
    members = np.flatnonzero(batch.labels == label)
    if members.size == 0:
        raise NoMembers(f"no batch member with label {label}")
    feats = batch.features[members]
    proxy = memory.proxies[label]

    if strategy == "vanilla":
        return feats.copy()
    if strategy == "hard":
        return feats[np.argmin(feats @ proxy)][None, :]
    if strategy == "tccl":
        centres = [
            camera_centre(batch, label, cam)
            for cam in np.unique(batch.cameras[members])
        ]
        centres = np.vstack(centres)
        return centres[np.argmin(centres @ proxy)][None, :]
    if strategy == "chd":
        scores = [
            chd(proxy, batch.features[i], camera_centre(batch, label, batch.cameras[i]))
            for i in members
        ]
        return batch.features[members[int(np.argmax(scores))]][None, :]
    raise ValueError(f"unknown strategy {strategy!r}")


def momentum_update(memory: ClusterMemory, label: int, f: np.ndarray) -> None:
    """Blend the proxy toward f and renormalize: m <- a*m + (1-a)*f.

    momentum 1 skips the update entirely (the proxy stays bitwise intact);
    momentum 0 replaces the proxy by the normalized f.
    """
    if memory.momentum == 1.0:
        return
    blend = memory.momentum * memory.proxies[label] + (1.0 - memory.momentum) * np.asarray(
        f, dtype=float
    )
    norm = np.linalg.norm(blend)
    if norm < NORM_FLOOR:
        raise ZeroVector("momentum blend has near-zero norm")
    memory.proxies[label] = blend / norm
