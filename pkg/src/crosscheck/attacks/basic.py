"""Untargeted attacks that need no knowledge of the defense."""

import numpy as np

from ..numerics.model import Dataset


def additive_noise(u: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """u + N(0, sigma^2 I)."""
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    return u + sigma * rng.standard_normal(u.shape)


def sign_flip(u: np.ndarray) -> np.ndarray:
    return -u


def label_flip(d: Dataset) -> Dataset:
    """Relabel l -> L - 1 - l on a copy of the training data."""
    return Dataset(d.features.copy(), d.num_classes - 1 - d.labels, d.num_classes)
