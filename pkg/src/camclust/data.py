"""Synthetic multi-camera datasets and the plain-text dataset file format.

Samples follow an additive model: identity latent + camera offset scaled by
a bias knob + isotropic noise.  Each identity contributes one query sample;
a slice of the rest forms the gallery and the remainder the training split.
A second generator builds the curved-strip layout (two solid and two dashed
thin arcs) used to compare partition-based clusterers.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, Malformed

SPLITS = ("train", "query", "gallery")


@dataclass
class SynthConfig:
    g: int = 50
    c: int = 4
    samples_per_id: int = 8
    d_in: int = 32
    camera_bias: float = 1.0
    noise_sigma: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.g < 2:
            raise ValueError("need at least 2 identities")
        if self.c < 1:
            raise ValueError("need at least 1 camera")
        if self.samples_per_id < 2:
            raise ValueError("need at least 2 samples per identity")
        if self.camera_bias < 0:
            raise ValueError("camera_bias must be >= 0")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


@dataclass
class CameraTaggedDataset:
    features: np.ndarray
    camera: np.ndarray
    true_id: np.ndarray
    split: np.ndarray

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, dtype=float))
        self.camera = np.asarray(self.camera, dtype=int)
        self.true_id = np.asarray(self.true_id, dtype=int)
        self.split = np.asarray(self.split, dtype=str)
        n = self.features.shape[0]
        if not (self.camera.shape[0] == self.true_id.shape[0] == self.split.shape[0] == n):
            raise DimensionMismatch("per-sample arrays disagree in length")
        if self.camera.size and self.camera.min() < 0:
            raise ValueError("camera ids must be non-negative")
        bad = set(self.split.tolist()) - set(SPLITS)
        if bad:
            raise ValueError(f"unknown split tags: {sorted(bad)}")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def mask(self, split: str) -> np.ndarray:
        return self.split == split


def generate_synthetic(cfg: SynthConfig) -> CameraTaggedDataset:
    """Seeded dataset: sample = id latent + bias * camera offset + noise.

    Sample j of an identity takes camera perm[j mod c] for a per-identity
    camera permutation, so every identity spans >= 2 cameras when c >= 2.
    Sample 0 is the query; the next max(1, (spi-1)//3) samples are gallery;
    the rest train.
    """
    rng = np.random.default_rng(cfg.seed)
    id_latents = rng.standard_normal((cfg.g, cfg.d_in))
    cam_offsets = rng.standard_normal((cfg.c, cfg.d_in))
    n_gallery = max(1, (cfg.samples_per_id - 1) // 3)

    features, cameras, ids, splits = [], [], [], []
    for ident in range(cfg.g):
        perm = rng.permutation(cfg.c)
        for j in range(cfg.samples_per_id):
            cam = int(perm[j % cfg.c])
            noise = rng.standard_normal(cfg.d_in)
            features.append(
                id_latents[ident] + cfg.camera_bias * cam_offsets[cam] + cfg.noise_sigma * noise
            )
            cameras.append(cam)
            ids.append(ident)
            if j == 0:
                splits.append("query")
            elif j <= n_gallery:
                splits.append("gallery")
            else:
                splits.append("train")
    return CameraTaggedDataset(
        np.vstack(features), np.array(cameras), np.array(ids), np.array(splits)
    )


def generate_road_lines(
    seed: int = 0,
    span_deg: float = 82.0,
    gap_deg: float = 8.0,
    solid_points: int = 40,
    dash_points: int = 4,
    n_dashes: int = 3,
    width_sigma: float = 0.005,
) -> tuple[np.ndarray, np.ndarray]:
    """Road-marking layout: four thin strips around a ring, two solid and
    two dashed.

    Strips are long arcs separated by small gaps; dashed strips keep
    n_dashes sparse fragments.  Solid strips are much denser than dashed
    ones, which is exactly the mass imbalance that tugs mean-based
    centroids off the strips.  Radius is constant, so the layout survives
    row normalization.  Returns (2-D points, strip labels).
    """
    rng = np.random.default_rng(seed)
    points, labels = [], []
    start = 0.0
    for strip in range(4):
        if strip % 2 == 0:
            t = (np.arange(solid_points) + 0.5) / solid_points
            t += rng.uniform(-0.3, 0.3, size=solid_points) / solid_points
        else:
            seg = span_deg / (2 * n_dashes - 1)
            parts = []
            for frag in range(n_dashes):
                tt = 2 * frag * seg + (np.arange(dash_points) + 0.5) / dash_points * seg
                tt += rng.uniform(-0.3, 0.3, size=dash_points) / dash_points * seg
                parts.append(tt / span_deg)
            t = np.concatenate(parts)
        theta = np.deg2rad(start + t * span_deg)
        radius = 1.0 + rng.normal(0.0, width_sigma, size=t.shape[0])
        points.append(np.column_stack([radius * np.cos(theta), radius * np.sin(theta)]))
        labels.append(np.full(t.shape[0], strip))
        start += span_deg + gap_deg
    return np.vstack(points), np.concatenate(labels)


def save_dataset(ds: CameraTaggedDataset, path) -> None:
    """Comma-separated text, one sample per row, floats at 17 significant
    digits so the round trip is bit-exact."""
    header = ["sample_id", "true_id", "camera_id", "split"] + [
        f"f_{j}" for j in range(ds.d)
    ]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(ds.n):
            row = [str(i), str(int(ds.true_id[i])), str(int(ds.camera[i])), str(ds.split[i])]
            row += [f"{v:.17g}" for v in ds.features[i]]
            fh.write(",".join(row) + "\n")


def load_dataset(path) -> CameraTaggedDataset:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise Malformed(0, "empty file")
    header = lines[0].split(",")
    fixed = ["sample_id", "true_id", "camera_id", "split"]
    if header[: len(fixed)] != fixed:
        raise Malformed(1, f"expected header starting with {','.join(fixed)}")
    feat_names = header[len(fixed) :]
    d = len(feat_names)
    if d < 1 or feat_names != [f"f_{j}" for j in range(d)]:
        raise Malformed(1, "feature columns must be f_0..f_{D-1}")

    features, cameras, ids, splits = [], [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != len(fixed) + d:
            raise DimensionMismatch(
                f"line {lineno}: expected {len(fixed) + d} fields, got {len(parts)}"
            )
        try:
            ids.append(int(parts[1]))
            cameras.append(int(parts[2]))
        except ValueError as exc:
            raise Malformed(lineno, f"bad integer field: {exc}") from None
        split = parts[3]
        if split not in SPLITS:
            raise Malformed(lineno, f"unknown split {split!r}")
        splits.append(split)
        try:
            features.append([float(v) for v in parts[4:]])
        except ValueError as exc:
            raise Malformed(lineno, f"bad float field: {exc}") from None
    if not features:
        raise Malformed(len(lines), "no sample rows")
    return CameraTaggedDataset(
        np.array(features), np.array(cameras), np.array(ids), np.array(splits)
    )
