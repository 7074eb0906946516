"""The full learning loop: cluster, weight, contrast, update.

Each epoch re-clusters the current embeddings from scratch (density-based
during warm-up, the configured algorithm afterwards), rebuilds the proxy
memory from cluster centroids, then runs PK-sampled contrastive iterations:
forward pass, entropy-derived loss weights, Adam step, and a memory update
per sampled cluster under the configured strategy.
"""

from dataclasses import dataclass, field

import numpy as np

from .baselines import DbscanConfig, dbscan_fit, dissolve_small, kmeans_fit, relabel_compact
from .camera_entropy import batch_loss_weights, camera_histogram, cie
from .embedder import LinearEmbedder
from .errors import TooFewClusters
from .evaluation import evaluate_map_cmc
from .hdc import HdcConfig, hdc_fit
from .memory import (
    MiniBatch,
    batch_loss_and_grads,
    init_memory,
    momentum_update,
    select_update_sample,
)
from .metrics import DEFAULT_EULER_ALPHA, k_reciprocal_jaccard

CLUSTERING_CHOICES = ("hdc", "kmeans", "dbscan")


@dataclass
class TrainConfig:
    epochs: int = 20
    warmup_epochs: int = 3
    iters_per_epoch: int = 20
    p: int = 8
    k_inst: int = 4
    base_lr: float = 3.5e-4
    weight_decay: float = 5e-4
    momentum: float = 0.2
    tau: float = 0.05
    clustering: str = "hdc"
    use_cie: bool = True
    update_strategy: str = "chd"
    num_clusters: int = 50
    cluster_max_iters: int = 20
    min_cluster_size: int = 4
    k1: int = 30
    k2: int = 6
    alpha_euler: float = DEFAULT_EULER_ALPHA
    dbscan_eps: float = 0.6
    dbscan_min_samples: int = 4
    d_out: int = 16
    cross_camera_eval: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.warmup_epochs < 0 or self.warmup_epochs > self.epochs:
            raise ValueError("warmup_epochs must lie in [0, epochs]")
        if self.p * self.k_inst < 2:
            raise ValueError("batch needs p * k_inst >= 2")
        if self.clustering not in CLUSTERING_CHOICES:
            raise ValueError(f"clustering must be one of {CLUSTERING_CHOICES}")


@dataclass
class EpochRecord:
    epoch: int
    mean_loss: float
    num_clusters: int
    num_outliers: int
    mean_cie: float
    map: float
    rank1: float
    rank5: float
    rank10: float


@dataclass
class TrainReport:
    epochs: list[EpochRecord] = field(default_factory=list)
    embedder: LinearEmbedder | None = None


def lr_at(epoch: int, config: TrainConfig) -> float:
    """Warm-up ramp from base/10 to base, then base, base/10, base/100 over
    40%/40%/20% of the remaining epochs."""
    if not 1 <= epoch <= config.epochs:
        raise ValueError(f"epoch must lie in [1, {config.epochs}]")
    base = config.base_lr
    w = config.warmup_epochs
    if w > 0 and epoch <= w:
        if w == 1:
            return base
        return base * (0.1 + 0.9 * (epoch - 1) / (w - 1))
    remaining = config.epochs - w
    b2 = w + int(round(0.4 * remaining))
    b3 = w + int(round(0.8 * remaining))
    if epoch <= b2:
        return base
    if epoch <= b3:
        return base * 0.1
    return base * 0.01


def pk_sample(
    labels: np.ndarray, p: int, k_inst: int, rng: np.random.Generator
) -> np.ndarray:
    """Indices for a batch of p clusters with k_inst members each.

    Clusters are drawn uniformly without replacement; members are drawn
    without replacement unless the cluster is smaller than k_inst, in which
    case replacement kicks in.
    """
    labels = np.asarray(labels, dtype=int)
    surviving = np.unique(labels[labels >= 0])
    if surviving.size < p:
        raise TooFewClusters(f"{surviving.size} clusters < p={p}")
    picked = rng.choice(surviving, size=p, replace=False)
    out = []
    for lab in picked:
        members = np.flatnonzero(labels == lab)
        replace_draw = members.size < k_inst
        out.append(rng.choice(members, size=k_inst, replace=replace_draw))
    return np.concatenate(out)


def cluster_features(
    feats: np.ndarray, config: TrainConfig, algorithm: str, seed: int
) -> np.ndarray:
    """Dispatch one epoch's clustering and apply the small-cluster rule."""
    if algorithm == "hdc":
        return hdc_fit(
            feats,
            HdcConfig(
                k=config.num_clusters,
                max_iters=config.cluster_max_iters,
                min_cluster_size=config.min_cluster_size,
                alpha_euler=config.alpha_euler,
                k1=config.k1,
                k2=config.k2,
                seed=seed,
            ),
        )
    if algorithm == "kmeans":
        return kmeans_fit(
            feats,
            config.num_clusters,
            max_iters=config.cluster_max_iters,
            seed=seed,
            min_cluster_size=config.min_cluster_size,
        )
    if algorithm == "dbscan":
        jac = k_reciprocal_jaccard(feats, config.k1, config.k2)
        labels = dbscan_fit(jac, DbscanConfig(config.dbscan_eps, config.dbscan_min_samples))
        return relabel_compact(dissolve_small(labels, config.min_cluster_size))
    raise ValueError(f"unknown clustering {algorithm!r}")


def train(dataset, config: TrainConfig) -> TrainReport:
    """Run the complete loop and return per-epoch records plus the embedder.

    Fully deterministic given config.seed: one generator drives embedder
    initialization, per-epoch clustering seeds and batch sampling in a fixed
    order.
    """
    rng = np.random.default_rng(config.seed)
    train_mask = dataset.mask("train")
    x_train = dataset.features[train_mask]
    cams_train = dataset.camera[train_mask]
    embedder = LinearEmbedder.initialize(
        dataset.d, config.d_out, seed=int(rng.integers(2**31))
    )
    report = TrainReport(embedder=embedder)

    for epoch in range(1, config.epochs + 1):
        feats = embedder.transform(x_train)
        algorithm = "dbscan" if epoch <= config.warmup_epochs else config.clustering
        labels = cluster_features(feats, config, algorithm, int(rng.integers(2**31)))
        n_clusters = int(labels.max()) + 1 if (labels >= 0).any() else 0
        n_outliers = int((labels < 0).sum())
        if n_clusters < config.p:
            raise TooFewClusters(
                f"epoch {epoch}: {n_clusters} clusters < p={config.p}"
            )
        core = labels >= 0
        memory = init_memory(feats[core], labels[core], config.momentum, config.tau)
        cluster_cies = np.array(
            [cie(camera_histogram(cams_train, labels == kk)) for kk in range(n_clusters)]
        )

        lr = lr_at(epoch, config)
        losses = []
        for _ in range(config.iters_per_epoch):
            idx = pk_sample(labels, config.p, config.k_inst, rng)
            batch_labels = labels[idx]
            batch_cams = cams_train[idx]
            batch_feats, cache = embedder.forward(x_train[idx])

            if config.use_cie:
                sampled = batch_labels.reshape(config.p, config.k_inst)[:, 0]
                cluster_w = batch_loss_weights(cluster_cies[sampled])
                weights = np.repeat(cluster_w, config.k_inst)
            else:
                weights = np.ones(idx.size)

            sample_losses, grad_f = batch_loss_and_grads(
                batch_feats, memory, batch_labels, weights
            )
            losses.append(float(sample_losses.mean()))
            embedder.backward_step(
                cache, grad_f / idx.size, lr, config.weight_decay
            )

            batch = MiniBatch(idx, batch_feats, batch_labels, batch_cams, weights)
            for lab in np.unique(batch_labels):
                for vec in select_update_sample(
                    config.update_strategy, batch, int(lab), memory
                ):
                    momentum_update(memory, int(lab), vec)

        eval_report = evaluate_map_cmc(
            embedder, dataset, cross_camera_filter=config.cross_camera_eval
        )
        report.epochs.append(
            EpochRecord(
                epoch=epoch,
                mean_loss=float(np.mean(losses)) if losses else 0.0,
                num_clusters=n_clusters,
                num_outliers=n_outliers,
                mean_cie=float(cluster_cies.mean()) if n_clusters else 0.0,
                map=eval_report.map,
                rank1=eval_report.cmc[1],
                rank5=eval_report.cmc[5],
                rank10=eval_report.cmc[10],
            )
        )
    return report
