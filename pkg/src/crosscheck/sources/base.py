"""Common interface for dataset sources."""

from typing import Protocol

import numpy as np

from ..numerics.model import Dataset


class DatasetSourceError(Exception):
    """Custom exception for dataset download and parse errors."""
    pass


class DatasetSource(Protocol):
    """Anything that can draw labelled samples from a numbered distribution.

    Distribution 0 is the initial distribution; ids >= 1 are the shifted
    distributions clients evolve to or join from.
    """

    num_classes: int
    dim: int

    def sample(self, distribution: int, n: int, rng: np.random.Generator) -> Dataset:
        ...
