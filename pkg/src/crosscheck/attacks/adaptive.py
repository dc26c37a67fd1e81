"""
Adaptive local-model poisoning under partial knowledge.

The colluding malicious clients know their own clean data D' and clean
updates, the public global model and whatever thresholds the defense
broadcasts. They estimate the benign direction s = sign(mean clean update)
and push the model against it as far as the defense appears to allow. All
malicious clients submit the same poisoned update.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..aggregators.defenses import cosine_similarity
from ..numerics.model import Dataset, MlpModel, accuracy

# Configure logging
logger = logging.getLogger(__name__)

EPSILON = 1e-6


@dataclass
class AdversaryView:
    """What the malicious clients jointly know in one round."""

    malicious_ids: tuple[int, ...]
    clean_data: Dataset
    clean_updates: list[np.ndarray]
    global_model: MlpModel
    defense_kind: str
    thresholds: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.clean_updates:
            raise ValueError("adversary view needs at least one clean update")

    @property
    def estimated_update(self) -> np.ndarray:
        return np.mean(self.clean_updates, axis=0)

    @property
    def direction(self) -> np.ndarray:
        return estimate_direction(self)

    @property
    def dim(self) -> int:
        return int(self.global_model.params.size)


def estimate_direction(view: AdversaryView) -> np.ndarray:
    """s = sign of the mean clean update of the malicious clients."""
    return np.sign(view.estimated_update)


@dataclass
class PoisonResult:
    updates: list[np.ndarray]
    lam: Optional[float] = None
    accepted: bool = True


def lambda_grid(lam_min: float = 1e-5, lam_max: float = 1e-1, points: int = 20) -> np.ndarray:
    """Geometric grid of candidate magnitudes, ascending."""
    if not 0 < lam_min <= lam_max or points < 1:
        raise ValueError(f"invalid grid [{lam_min}, {lam_max}] x {points}")
    if points == 1:
        return np.array([lam_max])
    return np.geomspace(lam_min, lam_max, points)


def _replicate(view: AdversaryView, update: np.ndarray) -> list[np.ndarray]:
    return [update.copy() for _ in view.malicious_ids]


def adaptive_normbound(view: AdversaryView, tau: float, eps: float = EPSILON) -> PoisonResult:
    """
    -s * (tau - eps) / sqrt(d): the longest reversed-sign update under the bound.

    Its norm is at most tau - eps, so it always passes ||u|| < tau.

    Raises:
        ValueError: If tau <= eps
    """
    if tau <= eps:
        raise ValueError(f"norm bound {tau} leaves no room below eps={eps}")
    update = -view.direction * (tau - eps) / np.sqrt(view.dim)
    return PoisonResult(_replicate(view, update), lam=None)


def adaptive_normball(
    view: AdversaryView, u_pubval: np.ndarray, tau: float, eps: float = EPSILON
) -> PoisonResult:
    """
    u_pubval - s * min(tau - eps, (tau - eps) / sqrt(d)).

    The offset from the centre has norm at most tau - eps, so the update
    always lies strictly inside the ball.
    """
    if tau <= eps:
        raise ValueError(f"ball radius {tau} leaves no room below eps={eps}")
    step = min(tau - eps, (tau - eps) / np.sqrt(view.dim))
    return PoisonResult(_replicate(view, u_pubval - view.direction * step), lam=None)


def adaptive_cosine(
    view: AdversaryView, reference: np.ndarray, tau: float, grid: Sequence[float]
) -> PoisonResult:
    """
    u_est - lam * s for the largest lam whose cosine with the reference
    still reaches tau; the smallest lam when none does.
    """
    u_est = view.estimated_update
    s = view.direction
    for lam in sorted(grid, reverse=True):
        candidate = u_est - lam * s
        if cosine_similarity(candidate, reference) >= tau:
            return PoisonResult(_replicate(view, candidate), lam=float(lam))
    lam = float(min(grid))
    logger.warning(f"No lambda passes the cosine threshold {tau:.4f}; using {lam:g}")
    return PoisonResult(_replicate(view, u_est - lam * s), lam=lam, accepted=False)


def clean_accuracies(view: AdversaryView) -> np.ndarray:
    """Accuracy on D' of each clean local model."""
    base = view.global_model.params
    return np.array(
        [accuracy(view.global_model.with_params(base + u), view.clean_data)
         for u in view.clean_updates]
    )


def adaptive_slvr(view: AdversaryView, grid: Sequence[float]) -> PoisonResult:
    """
    Largest lam whose model w_est - lam * s keeps accuracy on D' in the top
    half of the clean models (at least their median).

    Without any accepted lam the smallest one is used.
    """
    base = view.global_model.params
    w_est = base + view.estimated_update
    s = view.direction
    reference = float(np.median(clean_accuracies(view)))
    for lam in sorted(grid, reverse=True):
        w_poisoned = w_est - lam * s
        acc = accuracy(view.global_model.with_params(w_poisoned), view.clean_data)
        if acc >= reference:
            return PoisonResult(_replicate(view, w_poisoned - base), lam=float(lam))
    lam = float(min(grid))
    logger.warning(f"No lambda keeps accuracy >= {reference:.4f} on D'; using {lam:g}")
    return PoisonResult(_replicate(view, w_est - lam * s - base), lam=lam, accepted=False)


def craft_adaptive(view: AdversaryView, grid: Sequence[float]) -> PoisonResult:
    """Dispatch to the instantiation matching the defense in view.

    Against norm_bound_adaptive in its first round, where no bound has been
    published yet, the adversary uses its own clean updates' median norm.
    Without any defense the largest lam is used.
    """
    kind = view.defense_kind
    if kind in ("norm_bound_adaptive", "norm_bound_public"):
        tau = view.thresholds.get("tau")
        if tau is None:
            tau = float(np.median([np.linalg.norm(u) for u in view.clean_updates]))
        return adaptive_normbound(view, tau)
    if kind == "norm_ball":
        return adaptive_normball(view, view.thresholds["center"], view.thresholds["tau"])
    if kind == "cosine_sim":
        return adaptive_cosine(view, view.thresholds["reference"], view.thresholds["tau"], grid)
    if kind in ("slvr_acc", "slvr_prob"):
        return adaptive_slvr(view, grid)
    lam = float(max(grid))
    return PoisonResult(
        _replicate(view, view.estimated_update - lam * view.direction), lam=lam
    )
