"""
Extreme manipulation of check scores by malicious validators.

A malicious validator reports the highest possible score for malicious
clients and the lowest for benign ones. Among all score reports available to
the malicious validators this one maximizes malicious trimmed means and
minimizes benign ones, so no other manipulation ranks malicious clients
higher under top-k.
"""

from typing import Optional, Sequence

import numpy as np

from ..aggregators.oracle import trimmed_mean_real
from ..aggregators.secure_check import CheckCommittee, ScoreOverride


def score_range(variant: str, num_classes: int) -> tuple[float, float]:
    """(lowest, highest) attainable score of a variant."""
    if variant == "acc":
        return -1.0, 1.0
    if variant == "prob":
        return 1.0 / num_classes, 1.0
    raise ValueError(f"unknown score variant {variant!r}")


def extreme_score(
    client: int, validator: int, honest: Sequence[bool], variant: str, num_classes: int
) -> Optional[float]:
    """The report of `validator` on `client`, or None when the validator is honest."""
    if honest[validator]:
        return None
    low, high = score_range(variant, num_classes)
    return low if honest[client] else high


def make_score_override(
    honest: Sequence[bool], variant: str, num_classes: int
) -> ScoreOverride:
    honest = tuple(bool(h) for h in honest)

    def override(client: int, validator: int) -> Optional[float]:
        return extreme_score(client, validator, honest, variant, num_classes)

    return override


def extreme_manipulation(
    score_matrix: np.ndarray, honest: Sequence[bool], variant: str, num_classes: int
) -> np.ndarray:
    """Copy of score_matrix with every malicious validator column set to extremes.

    Entries outside committees (NaN) stay NaN.
    """
    manipulated = np.array(score_matrix, dtype=np.float64, copy=True)
    low, high = score_range(variant, num_classes)
    for j, is_honest in enumerate(honest):
        if is_honest:
            continue
        for i in range(manipulated.shape[0]):
            if np.isnan(manipulated[i, j]):
                continue
            manipulated[i, j] = low if honest[i] else high
    return manipulated


def client_scores(score_matrix: np.ndarray, committees: CheckCommittee) -> np.ndarray:
    """Trimmed mean per client over its committee's column entries."""
    return np.array(
        [
            trimmed_mean_real([score_matrix[i, j] for j in committees[i]], committees.m_c)
            for i in range(len(committees))
        ]
    )


def manipulation_dominates(
    extreme_scores: np.ndarray, other_scores: np.ndarray, honest: Sequence[bool]
) -> bool:
    """True if extreme manipulation scores every malicious client at least as
    high and every benign client at least as low as another manipulation does."""
    for i, is_honest in enumerate(honest):
        if is_honest and extreme_scores[i] > other_scores[i] + 1e-12:
            return False
        if not is_honest and extreme_scores[i] < other_scores[i] - 1e-12:
            return False
    return True
