"""Linear embedder with unit-norm outputs, trained by Adam.

Stands in for a deep feature extractor: f(x) = Wx / ||Wx||.  The backward
pass routes loss gradients through the normalization onto W; the optimiser
is classic Adam with L2 weight decay added to the gradient.
"""

import struct

import numpy as np

from .errors import BadModelFile, NonFinite, ZeroVector
from .metrics import NORM_FLOOR

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

MODEL_MAGIC = b"CAMCLEM1"


class LinearEmbedder:
    def __init__(self, weight: np.ndarray):
        self.weight = np.atleast_2d(np.asarray(weight, dtype=float)).copy()
        if not np.all(np.isfinite(self.weight)):
            raise NonFinite("weight entries must be finite")
        self._m = np.zeros_like(self.weight)
        self._v = np.zeros_like(self.weight)
        self._step = 0

    @classmethod
    def initialize(cls, d_in: int, d_out: int, seed: int = 0) -> "LinearEmbedder":
        """Seeded random projection with orthonormal rows (for d_out <= d_in),
        sign-fixed so the factorization is canonical."""
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((max(d_in, d_out), min(d_in, d_out)))
        q, r = np.linalg.qr(a)
        signs = np.sign(np.diag(r))
        signs[signs == 0] = 1.0
        q = q * signs[None, :]
        w = q.T if d_out <= d_in else q
        return cls(w)

    @property
    def d_in(self) -> int:
        return self.weight.shape[1]

    @property
    def d_out(self) -> int:
        return self.weight.shape[0]

    def forward(self, x: np.ndarray):
        """Embed rows of x; returns (unit-norm features, cache for backward)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        z = x @ self.weight.T
        norms = np.linalg.norm(z, axis=1)
        if np.any(norms < NORM_FLOOR):
            raise ZeroVector("projected feature has near-zero norm")
        f = z / norms[:, None]
        return f, (x, f, norms)

    def transform(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward_step(
        self, cache, grad_f: np.ndarray, lr: float, weight_decay: float = 0.0
    ) -> None:
        """Chain grad_f through the normalization, accumulate over the batch
        and take one Adam step."""
        x, f, norms = cache
        grad_f = np.atleast_2d(np.asarray(grad_f, dtype=float))
        if not np.all(np.isfinite(grad_f)):
            raise NonFinite("gradient entries must be finite")
        grad_z = (grad_f - f * (f * grad_f).sum(axis=1, keepdims=True)) / norms[:, None]
        self.adam_step(grad_z.T @ x, lr, weight_decay)

    def adam_step(self, grad_w: np.ndarray, lr: float, weight_decay: float = 0.0) -> None:
        if not np.all(np.isfinite(grad_w)):
            raise NonFinite("gradient entries must be finite")
        g = grad_w + weight_decay * self.weight
        self._step += 1
        self._m = ADAM_BETA1 * self._m + (1.0 - ADAM_BETA1) * g
        self._v = ADAM_BETA2 * self._v + (1.0 - ADAM_BETA2) * (g * g)
        m_hat = self._m / (1.0 - ADAM_BETA1**self._step)
        v_hat = self._v / (1.0 - ADAM_BETA2**self._step)
        self.weight -= lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)


def save_embedder(embedder: LinearEmbedder, path) -> None:
    """Binary layout: 8 magic bytes, two little-endian uint32 dims (rows,
    cols), then row-major little-endian float64 weights."""
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<II", embedder.d_out, embedder.d_in))
        fh.write(np.ascontiguousarray(embedder.weight, dtype="<f8").tobytes())


def load_embedder(path) -> LinearEmbedder:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MODEL_MAGIC) + 8 or blob[: len(MODEL_MAGIC)] != MODEL_MAGIC:
        raise BadModelFile(f"{path}: bad magic header")
    d_out, d_in = struct.unpack("<II", blob[len(MODEL_MAGIC) : len(MODEL_MAGIC) + 8])
    body = blob[len(MODEL_MAGIC) + 8 :]
    if len(body) != d_out * d_in * 8:
        raise BadModelFile(f"{path}: expected {d_out * d_in} float64 entries")
    weight = np.frombuffer(body, dtype="<f8").reshape(d_out, d_in)
    return LinearEmbedder(weight)
