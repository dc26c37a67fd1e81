"""
Baseline robust-aggregation defenses, evaluated in plaintext.

Every defense returns one acceptance bit per update; accepted updates are
then averaged. The thresholds each defense compares against are public, and
`public_thresholds` reports them the way an adversary would see them.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

# Configure logging
logger = logging.getLogger(__name__)


def l2_norms(updates: Sequence[np.ndarray]) -> np.ndarray:
    return np.array([float(np.linalg.norm(u)) for u in updates])


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    """cos(u, v); 0 when either vector is zero."""
    nu, nv = float(np.linalg.norm(u)), float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def _check_lambda(lam: float) -> None:
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")


def norm_bound_adaptive(
    updates: Sequence[np.ndarray],
    prev_updates: Optional[Sequence[np.ndarray]],
    lam: float,
) -> np.ndarray:
    """
    Accept ||u_i|| < lam * median of last round's update norms.

    The first round has no history and uses the current round's median.
    """
    _check_lambda(lam)
    reference = prev_updates if prev_updates else updates
    tau = lam * float(np.median(l2_norms(reference)))
    return l2_norms(updates) < tau


def norm_bound_public(updates: Sequence[np.ndarray], u_pubval: np.ndarray) -> np.ndarray:
    """Accept ||u_i|| < ||u_pubval||, the norm of an update trained on public data."""
    return l2_norms(updates) < float(np.linalg.norm(u_pubval))


def norm_ball(updates: Sequence[np.ndarray], u_pubval: np.ndarray, lam: float) -> np.ndarray:
    """Accept ||u_i - u_pubval|| < lam * ||u_pubval||."""
    _check_lambda(lam)
    tau = lam * float(np.linalg.norm(u_pubval))
    return np.array([float(np.linalg.norm(u - u_pubval)) < tau for u in updates])


def cosine_reference(
    u_prev_global: Optional[np.ndarray], u_pubval: np.ndarray
) -> np.ndarray:
    """Direction updates are compared with: last global update, else u_pubval."""
    if u_prev_global is None or not np.any(u_prev_global):
        return u_pubval
    return u_prev_global


def cosine_threshold(
    u_prev_global: Optional[np.ndarray], u_pubval: np.ndarray, lam: float
) -> float:
    reference = cosine_reference(u_prev_global, u_pubval)
    return lam * cosine_similarity(u_pubval, reference)


def cosine_sim(
    updates: Sequence[np.ndarray],
    u_prev_global: Optional[np.ndarray],
    u_pubval: np.ndarray,
    lam: float,
) -> np.ndarray:
    """Accept cos(u_i, reference) >= lam * cos(u_pubval, reference)."""
    _check_lambda(lam)
    reference = cosine_reference(u_prev_global, u_pubval)
    tau = cosine_threshold(u_prev_global, u_pubval, lam)
    return np.array([cosine_similarity(u, reference) >= tau for u in updates])


def mean_of_accepted(updates: Sequence[np.ndarray], bits: np.ndarray) -> tuple[np.ndarray, int]:
    """Plain mean of accepted updates; a zero update when nothing is accepted."""
    count = int(np.count_nonzero(bits))
    if count == 0:
        logger.warning("No update accepted this round; keeping the global model")
        return np.zeros_like(updates[0]), 0
    return np.sum([u for u, b in zip(updates, bits) if b], axis=0) / count, count


@dataclass
class PublicState:
    """Public inputs of the baseline defenses for one round."""

    u_pubval: Optional[np.ndarray] = None
    prev_updates: Optional[list[np.ndarray]] = None
    u_prev_global: Optional[np.ndarray] = None


def public_thresholds(kind: str, lam: float, state: PublicState) -> dict:
    """
    Thresholds a defense broadcasts, as an adversary observes them.

    norm_bound_adaptive publishes its bound only after the round; the
    adversary uses last round's value, or omits it in the first round.

    WHY expose these: Baseline thresholds are computed from public data and
    public history, so a colluding adversary can always recompute them. The
    adaptive attacks read this dict instead of reaching into defense internals.
    """
    if kind == "norm_bound_adaptive":
        if state.prev_updates:
            return {"tau": lam * float(np.median(l2_norms(state.prev_updates)))}
        return {}
    if kind == "norm_bound_public":
        return {"tau": float(np.linalg.norm(state.u_pubval))}
    if kind == "norm_ball":
        return {"tau": lam * float(np.linalg.norm(state.u_pubval)), "center": state.u_pubval}
    if kind == "cosine_sim":
        return {
            "tau": cosine_threshold(state.u_prev_global, state.u_pubval, lam),
            "reference": cosine_reference(state.u_prev_global, state.u_pubval),
        }
    return {}


def filter_updates(
    kind: str, lam: float, updates: Sequence[np.ndarray], state: PublicState
) -> np.ndarray:
    """Acceptance bits of a baseline defense.

    Raises:
        ValueError: For shared-check kinds (they run on shares) or unknown kinds
    """
    if kind == "fedavg_plain":
        return np.ones(len(updates), dtype=bool)
    if kind == "norm_bound_adaptive":
        return norm_bound_adaptive(updates, state.prev_updates, lam)
    if kind == "norm_bound_public":
        return norm_bound_public(updates, state.u_pubval)
    if kind == "norm_ball":
        return norm_ball(updates, state.u_pubval, lam)
    if kind == "cosine_sim":
        return cosine_sim(updates, state.u_prev_global, state.u_pubval, lam)
    raise ValueError(f"{kind!r} is not a plaintext defense")
