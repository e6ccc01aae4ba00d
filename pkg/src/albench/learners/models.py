"""Desk-scale models with hand-written forward and backward passes.

Everything is plain float64 numpy so training is bit-reproducible from a seed
and analytic gradients can be audited against finite differences. Parameters
live in ``model.params``, a flat list of arrays updated in place by the
optimizer; ``backward`` returns gradients aligned with that list.
"""

from __future__ import annotations

import numpy as np

from ..errors import LearnerError


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stable under large logits."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class LinearSoftmax:
    """Multinomial logistic regression."""

    kind = "linear"

    def __init__(self, in_dim: int, num_classes: int, seed: int = 0) -> None:
        rng = np.random.default_rng(seed)
        self.in_dim = in_dim
        self.num_classes = num_classes
        self.params = [
            0.01 * rng.standard_normal((in_dim, num_classes)),
            np.zeros(num_classes),
        ]

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, dict]:
        w, b = self.params
        return x @ w + b, {"x": x}

    def backward(self, cache: dict, dlogits: np.ndarray) -> list[np.ndarray]:
        x = cache["x"]
        return [x.T @ dlogits, dlogits.sum(axis=0)]

    def penultimate(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=np.float64)

    def clone(self) -> "LinearSoftmax":
        other = LinearSoftmax(self.in_dim, self.num_classes)
        other.params = [p.copy() for p in self.params]
        return other


class ReluMLP:
    """Two hidden ReLU layers; penultimate features are the second layer."""

    kind = "mlp"

    def __init__(
        self,
        in_dim: int,
        num_classes: int,
        hidden: tuple[int, int] = (32, 32),
        seed: int = 0,
    ) -> None:
        rng = np.random.default_rng(seed)
        h1, h2 = hidden
        self.in_dim = in_dim
        self.num_classes = num_classes
        self.hidden = (h1, h2)

        def he(fan_in: int, shape: tuple[int, ...]) -> np.ndarray:
            return rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)

        self.params = [
            he(in_dim, (in_dim, h1)),
            np.zeros(h1),
            he(h1, (h1, h2)),
            np.zeros(h2),
            he(h2, (h2, num_classes)),
            np.zeros(num_classes),
        ]

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, dict]:
        w1, b1, w2, b2, w3, b3 = self.params
        a1 = np.maximum(x @ w1 + b1, 0.0)
        a2 = np.maximum(a1 @ w2 + b2, 0.0)
        logits = a2 @ w3 + b3
        return logits, {"x": x, "a1": a1, "a2": a2}

    def backward(self, cache: dict, dlogits: np.ndarray) -> list[np.ndarray]:
        w1, b1, w2, b2, w3, b3 = self.params
        x, a1, a2 = cache["x"], cache["a1"], cache["a2"]
        dw3 = a2.T @ dlogits
        db3 = dlogits.sum(axis=0)
        da2 = (dlogits @ w3.T) * (a2 > 0)
        dw2 = a1.T @ da2
        db2 = da2.sum(axis=0)
        da1 = (da2 @ w2.T) * (a1 > 0)
        dw1 = x.T @ da1
        db1 = da1.sum(axis=0)
        return [dw1, db1, dw2, db2, dw3, db3]

    def penultimate(self, x: np.ndarray) -> np.ndarray:
        _, cache = self.forward(np.asarray(x, dtype=np.float64))
        return cache["a2"]

    def clone(self) -> "ReluMLP":
        other = ReluMLP(self.in_dim, self.num_classes, self.hidden)
        other.params = [p.copy() for p in self.params]
        return other


class ConvSegmenter:
    """3x3 conv -> ReLU -> 1x1 conv, per-pixel class logits.

    Inputs are (B, H, W, C_in); logits come back as (B, H, W, K). The 3x3
    convolution uses same-padding, realized as nine shifted matmuls, which
    keeps the backward pass a mirror image of the forward one.
    """

    kind = "conv"

    def __init__(
        self, in_channels: int, num_classes: int, filters: int = 8, seed: int = 0
    ) -> None:
        rng = np.random.default_rng(seed)
        self.in_channels = in_channels
        self.num_classes = num_classes
        self.filters = filters
        self.params = [
            rng.standard_normal((3, 3, in_channels, filters)) * np.sqrt(2.0 / (9 * in_channels)),
            np.zeros(filters),
            rng.standard_normal((filters, num_classes)) * np.sqrt(2.0 / filters),
            np.zeros(num_classes),
        ]

    @staticmethod
    def _pad(x: np.ndarray) -> np.ndarray:
        return np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, dict]:
        k1, b1, k2, b2 = self.params
        b, h, w, _ = x.shape
        xp = self._pad(x)
        pre = np.zeros((b, h, w, self.filters))
        for di in range(3):
            for dj in range(3):
                pre += xp[:, di : di + h, dj : dj + w, :] @ k1[di, dj]
        pre += b1
        hidden = np.maximum(pre, 0.0)
        logits = hidden @ k2 + b2
        return logits, {"xp": xp, "hidden": hidden}

    def backward(self, cache: dict, dlogits: np.ndarray) -> list[np.ndarray]:
        k1, b1, k2, b2 = self.params
        xp, hidden = cache["xp"], cache["hidden"]
        b, h, w, _ = dlogits.shape
        flat_hidden = hidden.reshape(-1, self.filters)
        flat_dlogits = dlogits.reshape(-1, self.num_classes)
        dk2 = flat_hidden.T @ flat_dlogits
        db2 = flat_dlogits.sum(axis=0)
        dhidden = (dlogits @ k2.T) * (hidden > 0)
        dk1 = np.zeros_like(k1)
        flat_dhidden = dhidden.reshape(-1, self.filters)
        for di in range(3):
            for dj in range(3):
                patch = xp[:, di : di + h, dj : dj + w, :].reshape(-1, self.in_channels)
                dk1[di, dj] = patch.T @ flat_dhidden
        db1 = flat_dhidden.sum(axis=0)
        return [dk1, db1, dk2, db2]

    def penultimate(self, x: np.ndarray) -> np.ndarray:
        """Per-image feature: hidden activations averaged over pixels."""
        _, cache = self.forward(np.asarray(x, dtype=np.float64))
        return cache["hidden"].mean(axis=(1, 2))

    def clone(self) -> "ConvSegmenter":
        other = ConvSegmenter(self.in_channels, self.num_classes, self.filters)
        other.params = [p.copy() for p in self.params]
        return other


class LossHeadModel:
    """A base model plus a linear head predicting per-sample training loss.

    The head reads the base model's penultimate features. Its parameters sit
    at the end of ``params`` so the shared optimizer updates both jointly.
    """

    kind = "loss_head"

    def __init__(self, base, seed: int = 0) -> None:
        rng = np.random.default_rng(seed)
        self.base = base
        feat_dim = self._feature_dim(base)
        self.head_w = 0.01 * rng.standard_normal(feat_dim)
        self.head_b = np.zeros(1)

    @staticmethod
    def _feature_dim(base) -> int:
        if isinstance(base, ReluMLP):
            return base.hidden[1]
        if isinstance(base, LinearSoftmax):
            return base.in_dim
        if isinstance(base, ConvSegmenter):
            return base.filters
        raise LearnerError(f"no loss head support for {type(base).__name__}")

    @property
    def num_classes(self) -> int:
        return self.base.num_classes

    @property
    def params(self) -> list[np.ndarray]:
        return self.base.params + [self.head_w, self.head_b]

    @params.setter
    def params(self, values: list[np.ndarray]) -> None:
        self.base.params = values[:-2]
        self.head_w, self.head_b = values[-2], values[-1]

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, dict]:
        return self.base.forward(x)

    def backward(self, cache: dict, dlogits: np.ndarray) -> list[np.ndarray]:
        grads = self.base.backward(cache, dlogits)
        return grads + [np.zeros_like(self.head_w), np.zeros_like(self.head_b)]

    def penultimate(self, x: np.ndarray) -> np.ndarray:
        return self.base.penultimate(x)

    def predict_loss(self, x: np.ndarray) -> np.ndarray:
        feats = self.base.penultimate(x)
        return feats @ self.head_w + self.head_b[0]

    def head_backward(self, x: np.ndarray, dscores: np.ndarray) -> list[np.ndarray]:
        """Gradients of the head outputs w.r.t. head params only.

        The base network is treated as a fixed feature extractor for the
        ranking objective, mirroring a stop-gradient at the head input.
        """
        feats = self.base.penultimate(x)
        dw = feats.T @ dscores
        db = np.array([dscores.sum()])
        zeros = [np.zeros_like(p) for p in self.base.params]
        return zeros + [dw, db]

    def clone(self) -> "LossHeadModel":
        other = LossHeadModel(self.base.clone())
        other.head_w = self.head_w.copy()
        other.head_b = self.head_b.copy()
        return other
