"""Deterministic desk-scale synthetic datasets.

Hand-rolled rather than delegated to sklearn so byte-identical replay only
depends on numpy's Generator, and so the two-moons generator can expose the
geometry needed to score boundary proximity.
"""

from __future__ import annotations

import numpy as np

from ..annotation.mask import LabelMask
from .dataset import CLASSIFICATION, SEGMENTATION, Dataset


def make_blobs(
    n: int,
    num_classes: int = 3,
    dim: int = 2,
    spread: float = 0.6,
    seed: int = 0,
) -> Dataset:
    """Isotropic Gaussian blobs, one per class, centers on a circle."""
    rng = np.random.default_rng(seed)
    angles = 2 * np.pi * np.arange(num_classes) / num_classes
    centers = np.zeros((num_classes, dim))
    centers[:, 0] = 3.0 * np.cos(angles)
    centers[:, 1 % dim] = 3.0 * np.sin(angles)
    y = rng.integers(0, num_classes, size=n)
    x = centers[y] + spread * rng.standard_normal((n, dim))
    return Dataset(items=x, targets=y.astype(np.int64), num_classes=num_classes, task=CLASSIFICATION)


def make_two_moons(n: int, noise: float = 0.12, seed: int = 0) -> Dataset:
    """Two interleaved half-circles; class 0 is the upper arc."""
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, size=n)
    t = rng.uniform(0.0, np.pi, size=n)
    x = np.empty((n, 2))
    upper = y == 0
    x[upper, 0] = np.cos(t[upper])
    x[upper, 1] = np.sin(t[upper])
    x[~upper, 0] = 1.0 - np.cos(t[~upper])
    x[~upper, 1] = 0.5 - np.sin(t[~upper])
    x += noise * rng.standard_normal((n, 2))
    return Dataset(items=x, targets=y.astype(np.int64), num_classes=2, task=CLASSIFICATION)


def _dist_to_arc(points: np.ndarray, center: np.ndarray, flip: bool) -> np.ndarray:
    """Distance from each point to a unit half-circle arc.

    The upper arc spans angles [0, pi] around ``center``; ``flip`` selects the
    mirrored lower arc used by the second moon.
    """
    rel = points - center
    if flip:
        rel = -rel
    theta = np.arctan2(rel[:, 1], rel[:, 0])
    theta = np.clip(theta, 0.0, np.pi)
    nearest = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    if flip:
        nearest = -nearest
    return np.linalg.norm(points - (center + nearest), axis=1)


def moons_boundary_margin(points: np.ndarray) -> np.ndarray:
    """|distance to moon-0 arc - distance to moon-1 arc|; zero on the ideal
    decision boundary between the two generating arcs."""
    pts = np.asarray(points, dtype=np.float64)
    d0 = _dist_to_arc(pts, np.array([0.0, 0.0]), flip=False)
    d1 = _dist_to_arc(pts, np.array([1.0, 0.5]), flip=True)
    return np.abs(d0 - d1)


def make_blob_mask(
    height: int,
    width: int,
    num_classes: int = 3,
    n_blobs: int = 3,
    seed: int = 0,
) -> LabelMask:
    """Random elliptical blobs painted over a background of class 0."""
    rng = np.random.default_rng(seed)
    pixels = np.zeros((height, width), dtype=np.int64)
    yy, xx = np.mgrid[0:height, 0:width]
    for _ in range(n_blobs):
        cls = int(rng.integers(1, num_classes))
        cy = rng.uniform(0.2 * height, 0.8 * height)
        cx = rng.uniform(0.2 * width, 0.8 * width)
        ry = rng.uniform(0.08 * height, 0.25 * height)
        rx = rng.uniform(0.08 * width, 0.25 * width)
        angle = rng.uniform(0, np.pi)
        dy = (yy + 0.5 - cy) * np.cos(angle) - (xx + 0.5 - cx) * np.sin(angle)
        dx = (yy + 0.5 - cy) * np.sin(angle) + (xx + 0.5 - cx) * np.cos(angle)
        inside = (dy / ry) ** 2 + (dx / rx) ** 2 <= 1.0
        pixels[inside] = cls
    return LabelMask(pixels=pixels)


def make_seg_dataset(
    n: int,
    height: int = 24,
    width: int = 24,
    num_classes: int = 3,
    noise: float = 0.15,
    seed: int = 0,
) -> Dataset:
    """Toy segmentation corpus: blob masks plus noisy one-hot-ish images.

    Image channel c carries 1 where the mask is class c, corrupted with
    Gaussian noise, so a tiny convolutional model can actually learn it.
    """
    rng = np.random.default_rng(seed)
    items: list[np.ndarray] = []
    targets: list[LabelMask] = []
    for i in range(n):
        mask = make_blob_mask(
            height, width, num_classes=num_classes, n_blobs=int(rng.integers(1, 4)),
            seed=int(rng.integers(0, 2**31 - 1)),
        )
        img = np.zeros((height, width, num_classes))
        for c in range(num_classes):
            img[:, :, c] = (mask.pixels == c).astype(np.float64)
        img += noise * rng.standard_normal(img.shape)
        items.append(np.clip(img, 0.0, 1.0))
        targets.append(mask)
    return Dataset(items=items, targets=targets, num_classes=num_classes, task=SEGMENTATION)
