"""Labelled random substreams derived from one master seed."""

import hashlib

import numpy as np


def label_key(label: object) -> int:
    """Stable 64-bit integer for a stream label."""
    digest = hashlib.blake2b(str(label).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def substream(master_seed: int, *labels: object) -> np.random.Generator:
    """Independent generator for (master_seed, *labels).

    The same labels always give the same stream, and adding a consumer with a
    new label never shifts the draws of existing ones.
    """
    if master_seed < 0:
        raise ValueError(f"seed must be non-negative, got {master_seed}")
    return np.random.default_rng([int(master_seed), *(label_key(lbl) for lbl in labels)])
