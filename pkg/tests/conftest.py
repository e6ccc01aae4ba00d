"""Shared fixtures and small builders for the test suite."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

from albench.annotation import LabelMask
from albench.core import Dataset, make_blobs, make_seg_dataset, make_two_moons

TESTS_DIR = Path(__file__).parent
DUMMY_ADAPTER_CMD = f"{sys.executable} {TESTS_DIR / 'dummy_adapter.py'}"


def small_mask(rows: list[list[int]], void_id: int = 255) -> LabelMask:
    return LabelMask(pixels=np.asarray(rows, dtype=np.int64), void_id=void_id)


def square_mask(height: int, width: int, top: int, left: int, side: int,
                class_id: int = 1, background: int | None = None,
                void_id: int = 255) -> LabelMask:
    """A solid square on a uniform background (void by default)."""
    fill = void_id if background is None else background
    pixels = np.full((height, width), fill, dtype=np.int64)
    pixels[top:top + side, left:left + side] = class_id
    return LabelMask(pixels=pixels, void_id=void_id)


@pytest.fixture(scope="session")
def moons_pool() -> Dataset:
    return make_two_moons(120, seed=5)


@pytest.fixture(scope="session")
def moons_test() -> Dataset:
    return make_two_moons(80, seed=6)


@pytest.fixture(scope="session")
def blobs_pool() -> Dataset:
    return make_blobs(90, num_classes=3, seed=2)


@pytest.fixture(scope="session")
def seg_pool() -> Dataset:
    return make_seg_dataset(6, height=16, width=16, num_classes=3, seed=4)
