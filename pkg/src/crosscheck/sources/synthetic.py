"""
Synthetic Gaussian-cluster datasets with covariate shift.

Class l of distribution 0 is an isotropic Gaussian around a mean placed on a
circle of radius `separation` in the first two coordinates. Distribution k is
distribution 0 pushed through a fixed linear map applied k times: a rotation
by `rotation_deg` in the first coordinate plane followed by a scaling by
`scale`. Labels are untouched, so one linear classifier can still fit every
distribution while a model trained on distribution 0 alone degrades.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..numerics.model import Dataset, DimensionError

# Configure logging
logger = logging.getLogger(__name__)


def class_means(num_classes: int, dim: int, separation: float) -> np.ndarray:
    """Cluster centres of distribution 0, shape (num_classes, dim)."""
    means = np.zeros((num_classes, dim))
    if dim == 1:
        means[:, 0] = separation * (np.arange(num_classes) - (num_classes - 1) / 2.0)
        return means
    angles = 2.0 * math.pi * np.arange(num_classes) / num_classes
    means[:, 0] = separation * np.cos(angles)
    means[:, 1] = separation * np.sin(angles)
    return means


def shift_matrix(distribution: int, dim: int, rotation_deg: float, scale: float) -> np.ndarray:
    """Linear map taking distribution 0 to `distribution`."""
    matrix = np.eye(dim)
    if distribution == 0:
        return matrix
    theta = math.radians(rotation_deg * distribution)
    if dim >= 2:
        rot = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
        matrix[:2, :2] = rot
    return matrix * (scale ** distribution)


@dataclass
class SyntheticSource:
    """Gaussian mixture generator implementing the DatasetSource interface."""

    num_classes: int = 2
    dim: int = 2
    separation: float = 2.0
    noise: float = 1.0
    rotation_deg: float = 90.0
    scale: float = 3.0

    def __post_init__(self):
        if self.num_classes < 2 or self.dim < 1:
            raise DimensionError(
                f"need >= 2 classes and >= 1 dim, got {self.num_classes}, {self.dim}"
            )

    def means(self, distribution: int = 0) -> np.ndarray:
        base = class_means(self.num_classes, self.dim, self.separation)
        return base @ self.transform(distribution).T

    def transform(self, distribution: int) -> np.ndarray:
        return shift_matrix(distribution, self.dim, self.rotation_deg, self.scale)

    def sample(self, distribution: int, n: int, rng: np.random.Generator) -> Dataset:
        """Draw n rows with balanced labels from `distribution`."""
        if distribution < 0 or n < 0:
            raise ValueError(f"invalid draw: distribution={distribution}, n={n}")
        labels = rng.permutation(np.arange(n) % self.num_classes)
        base = class_means(self.num_classes, self.dim, self.separation)
        points = base[labels] + self.noise * rng.standard_normal((n, self.dim))
        features = points @ self.transform(distribution).T
        return Dataset(features, labels, self.num_classes)


def gen_synthetic(
    distribution: int,
    n: int,
    num_classes: int,
    rng: np.random.Generator,
    *,
    dim: int = 2,
    separation: float = 2.0,
    noise: float = 1.0,
    rotation_deg: float = 90.0,
    scale: float = 3.0,
) -> Dataset:
    """Convenience wrapper around SyntheticSource.sample."""
    source = SyntheticSource(num_classes, dim, separation, noise, rotation_deg, scale)
    return source.sample(distribution, n, rng)
