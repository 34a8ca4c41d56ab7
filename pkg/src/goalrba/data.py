"""Dataset plumbing: synthetic class mixtures, non-iid splits, IDX files."""

from __future__ import annotations

import struct
from typing import List, Sequence, Tuple

import numpy as np

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


def make_gaussian_mixture(
    num_classes: int = 10,
    dim: int = 784,
    samples_per_class: int = 100,
    seed=0,
    mean_scale: float = 2.0,
    noise_scale: float = 1.0,
) -> Tuple[np.ndarray, np.ndarray]:
    """Synthetic classification data: one Gaussian blob per class.

    Returns (X, y) with X shaped (num_classes*samples_per_class, dim) and
    integer labels, shuffled. mean_scale controls class separation.
    """
    rng = np.random.default_rng(seed)
    means = rng.normal(scale=mean_scale / np.sqrt(dim), size=(num_classes, dim))
    X = np.repeat(means, samples_per_class, axis=0)
    X = X + rng.normal(scale=noise_scale / np.sqrt(dim), size=X.shape)
    y = np.repeat(np.arange(num_classes), samples_per_class)
    perm = rng.permutation(len(y))
    return X[perm], y[perm]


def split_non_iid(
    y: np.ndarray,
    num_eds: int,
    concentrated_classes: Sequence[int] = (6, 9),
    concentration: float = 0.95,
    seed=0,
) -> List[np.ndarray]:
    """Partition sample indices across EDs with two classes held by two EDs.

    Each class in concentrated_classes lands mostly (by `concentration`) on a
    single dedicated ED; everything else is spread uniformly.
    """
    rng = np.random.default_rng(seed)
    y = np.asarray(y)
    holders = {
        cls: num_eds - 1 - i for i, cls in enumerate(concentrated_classes)
    }
    shards: List[List[int]] = [[] for _ in range(num_eds)]
    for cls in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == cls))
        if int(cls) in holders:
            cut = int(round(concentration * len(idx)))
            shards[holders[int(cls)]].extend(idx[:cut])
            idx = idx[cut:]
        for i, sample in enumerate(idx):
            shards[i % num_eds].append(sample)
    return [rng.permutation(np.array(s, dtype=int)) for s in shards]


def read_idx_images(path) -> np.ndarray:
    """Parse a big-endian IDX image file into a (n, rows*cols) uint8 array."""
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, count, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != IDX_IMAGES_MAGIC:
        raise ValueError(f"bad IDX image magic 0x{magic:08x} in {path}")
    pixels = np.frombuffer(raw, dtype=np.uint8, offset=16)
    if len(pixels) != count * rows * cols:
        raise ValueError(f"IDX image payload size mismatch in {path}")
    return pixels.reshape(count, rows * cols)


def read_idx_labels(path) -> np.ndarray:
    """Parse a big-endian IDX label file into a (n,) uint8 array."""
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, count = struct.unpack(">II", raw[:8])
    if magic != IDX_LABELS_MAGIC:
        raise ValueError(f"bad IDX label magic 0x{magic:08x} in {path}")
    labels = np.frombuffer(raw, dtype=np.uint8, offset=8)
    if len(labels) != count:
        raise ValueError(f"IDX label payload size mismatch in {path}")
    return labels.copy()
