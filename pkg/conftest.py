"""Shared fixtures for the crosscheck test suite."""

import numpy as np
import pytest

from crosscheck.config import parse_config
from crosscheck.numerics.fixed import FixedParams
from crosscheck.numerics.model import Dataset
from crosscheck.sharing.session import MpcSession
from crosscheck.sources.synthetic import SyntheticSource


@pytest.fixture
def fx() -> FixedParams:
    return FixedParams(ring_bits=64, frac_bits=16)


@pytest.fixture
def fx128() -> FixedParams:
    return FixedParams(ring_bits=128, frac_bits=16)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def session(fx) -> MpcSession:
    return MpcSession(fx, seed=7, mode="protocol")


@pytest.fixture
def ideal_session(fx) -> MpcSession:
    return MpcSession(fx, seed=7, mode="ideal")


@pytest.fixture
def source() -> SyntheticSource:
    return SyntheticSource(num_classes=2, dim=2, separation=2.0, noise=1.0)


@pytest.fixture
def blobs(source, rng) -> Dataset:
    """Two well separated Gaussian classes in the plane."""
    return source.sample(0, 200, rng)


def small_config(**sections):
    """A validated config small enough for unit tests."""
    data = {
        "seed": 3,
        "population": {"clients": 6, "malicious": 1},
        "data": {"train_size": 240, "test_size": 120, "pubval_size": 40},
        "training": {"rounds": 2, "lr": 0.1},
        "validation": {"size": 8},
    }
    for key, value in sections.items():
        if isinstance(value, dict) and isinstance(data.get(key), dict):
            data[key] = {**data[key], **value}
        else:
            data[key] = value
    return parse_config(data)


@pytest.fixture
def make_config():
    return small_config
