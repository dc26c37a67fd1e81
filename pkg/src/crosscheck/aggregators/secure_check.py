"""
Cross-client validation on secret-shared updates.

Per round, every client i is scored by a committee of 2*m_c + 1 other clients
on their own validation sets. A trimmed mean of the committee's scores ranks
the clients, the top k are kept, and optionally a norm check drops updates
longer than lambda times the median update norm. Accepted updates are summed
under sharing; only the sum and the accepted count are opened.

Score variants:

- acc: accuracy(global + u_i) - accuracy(global) on the validator's data
- prob: mean maximum softmax probability of global + u_i
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Literal, Optional, Sequence

import numpy as np

from ..numerics.fixed import FixedVec
from ..sharing.functionalities import (
    comp_less,
    max_soft,
    sec_inf,
    sort_shared,
    sqrt_shared,
    zero_one,
)
from ..sharing.session import MpcSession, ShareVec, SharedDataset

# Configure logging
logger = logging.getLogger(__name__)

ScoreVariant = Literal["acc", "prob"]

# (client i, validator j) -> forced score, or None to compute it honestly
ScoreOverride = Callable[[int, int], Optional[float]]


class CommitteeError(ValueError):
    """Committee size and population are incompatible."""
    pass


@dataclass(frozen=True)
class CheckCommittee:
    """members[i] lists the validators of client i (never i itself)."""

    members: tuple[tuple[int, ...], ...]
    m_c: int

    def __len__(self) -> int:
        return len(self.members)

    def __getitem__(self, client: int) -> tuple[int, ...]:
        return self.members[client]

    @property
    def size(self) -> int:
        return 2 * self.m_c + 1


def sample_committees(m: int, m_c: int, kappa: int) -> CheckCommittee:
    """
    Draw a committee of 2*m_c + 1 validators for each of m clients.

    The draw is a function of the common random value kappa only, so every
    party derives the same committees.

    WHY 2*m_c + 1: With at most m_c malicious validators in a committee the
    honest ones always hold a majority of it, whichever clients are drawn.

    Raises:
        CommitteeError: If 2*m_c + 1 > m - 1
    """
    size = 2 * m_c + 1
    if m_c < 0 or size > m - 1:
        raise CommitteeError(
            f"committee of {size} validators needs at least {size + 1} clients, have {m}"
        )
    rng = np.random.default_rng([kappa, m, m_c])
    members = []
    for client in range(m):
        others = np.array([j for j in range(m) if j != client])
        chosen = rng.choice(others, size=size, replace=False)
        members.append(tuple(sorted(int(j) for j in chosen)))
    return CheckCommittee(tuple(members), m_c)


def accepted_count(k_frac: float, m: int) -> int:
    """Number of clients top-k keeps: round(k_frac * m), halves rounding up."""
    return max(0, min(m, int(math.floor(k_frac * m + 0.5))))


# ---------------------------------------------------------------------------
# Check scores
# ---------------------------------------------------------------------------

def score_acc(
    session: MpcSession,
    w_i: ShareVec,
    w_prev: ShareVec,
    d_j: SharedDataset,
    layer_dims: Sequence[int],
) -> ShareVec:
    """Accuracy increase of model w_i over the previous global model on d_j."""
    acc_new = sec_inf(session, w_i, layer_dims, d_j)
    acc_old = sec_inf(session, w_prev, layer_dims, d_j)
    return session.sub(acc_new, acc_old)


def score_prob(
    session: MpcSession, w_i: ShareVec, d_j: SharedDataset, layer_dims: Sequence[int]
) -> ShareVec:
    """Mean maximum softmax probability of w_i on d_j."""
    return max_soft(session, w_i, layer_dims, d_j)


def trimmed_mean(session: MpcSession, scores: Sequence[ShareVec], m_c: int) -> ShareVec:
    """
    Mean of 2*m_c + 1 scores after dropping floor(m_c/2) from each end.

    Raises:
        CommitteeError: If the number of scores is not 2*m_c + 1
    """
    if len(scores) != 2 * m_c + 1:
        raise CommitteeError(f"expected {2 * m_c + 1} scores, got {len(scores)}")
    ordered = [key for key, _ in sort_shared(session, scores)]
    trim = m_c // 2
    kept = ordered[trim:len(ordered) - trim]
    return session.div_public(session.sum_shares(kept), len(kept))


def select_top_k(
    session: MpcSession, scores: Sequence[ShareVec], k_frac: float
) -> list[ShareVec]:
    """
    Shared bits marking the round(k_frac * m) highest scores.

    Sort by descending score carrying shared client indices, assign ones to
    the first k positions, then sort back by index. Equal scores favour the
    lower client index.

    WHY two sorts: The parties never learn which client landed in which
    position. The bits leave the first sort in rank order and the second sort
    returns them to client order, so only the shared bit vector survives.
    """
    m = len(scores)
    k = accepted_count(k_frac, m)
    negated = [session.neg(s) for s in scores]
    indices = [session.public_real([float(i)]) for i in range(m)]
    by_score = sort_shared(session, negated, indices)
    ones = zero_one(session, k, m)
    by_index = sort_shared(session, [idx for _, idx in by_score], ones)
    return [bit for _, bit in by_index]


def update_norms(session: MpcSession, updates: Sequence[ShareVec]) -> list[ShareVec]:
    """L2 norm of each shared update."""
    norms = []
    for u in updates:
        squares = session.mult(u, u)
        norms.append(sqrt_shared(session, session.sum_elements(squares)))
    return norms


def shared_median(session: MpcSession, values: Sequence[ShareVec]) -> ShareVec:
    """Median of one-element sharings; mean of the two middle values for even counts."""
    ordered = [key for key, _ in sort_shared(session, values)]
    m = len(ordered)
    if m % 2 == 1:
        return ordered[m // 2]
    return session.div_public(session.add(ordered[m // 2 - 1], ordered[m // 2]), 2)


def norm_check(session: MpcSession, updates: Sequence[ShareVec], lam: float) -> list[ShareVec]:
    """Shared bits [||u_i|| < lam * median norm]."""
    if lam <= 0:
        raise ValueError(f"norm bound multiplier must be positive, got {lam}")
    norms = update_norms(session, updates)
    bound = session.mul_public(shared_median(session, norms), lam)
    return [comp_less(session, norm, bound) for norm in norms]


# ---------------------------------------------------------------------------
# Whole check
# ---------------------------------------------------------------------------

@dataclass
class CheckRound:
    """Inputs of one check: shared updates and validation sets plus public state."""

    updates: list[ShareVec]
    validation: list[SharedDataset]
    global_params: FixedVec
    layer_dims: tuple[int, ...]
    committees: CheckCommittee
    variant: ScoreVariant = "acc"
    norm_lambda: float = 1.5
    use_norm_check: bool = True
    k_frac: Optional[float] = None

    @property
    def m(self) -> int:
        return len(self.updates)

    @property
    def top_k_fraction(self) -> float:
        if self.k_frac is not None:
            return self.k_frac
        return 1.0 - self.committees.m_c / self.m


@dataclass
class CheckOutcome:
    """Plaintext view of a check, for tests and debug dumps only."""

    score_matrix: np.ndarray
    client_scores: np.ndarray
    norm_bits: np.ndarray
    topk_bits: np.ndarray
    accept_bits: np.ndarray

    @property
    def accepted_count(self) -> int:
        return int(np.count_nonzero(self.accept_bits))

    def to_csv(self, path: Path) -> None:
        """One row per client: score, bits, then the committee score row."""
        m = len(self.client_scores)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(
                ["client", "score", "norm_bit", "topk_bit", "accepted"]
                + [f"scr_{j}" for j in range(m)]
            )
            for i in range(m):
                row = self.score_matrix[i]
                writer.writerow(
                    [
                        i,
                        f"{self.client_scores[i]:.6f}",
                        int(self.norm_bits[i]),
                        int(self.topk_bits[i]),
                        int(self.accept_bits[i]),
                    ]
                    + ["" if np.isnan(v) else f"{v:.6f}" for v in row]
                )


@dataclass
class SecureCheckResult:
    """Shared outputs of run_check. Nothing here has been opened."""

    scores: dict[tuple[int, int], ShareVec]
    client_scores: list[ShareVec]
    norm_bits: Optional[list[ShareVec]]
    topk_bits: list[ShareVec]
    accept_bits: list[ShareVec]
    m: int = field(default=0)

    def reveal(self, session: MpcSession) -> CheckOutcome:
        """Open everything through the debug path (not a protocol reveal)."""
        matrix = np.full((self.m, self.m), np.nan)
        for (i, j), s in self.scores.items():
            matrix[i, j] = session.reveal_debug(s)[0]

        def bits(xs):
            return np.array([session.reveal_debug(x)[0] > 0.5 for x in xs], dtype=bool)

        norm_bits = bits(self.norm_bits) if self.norm_bits is not None else np.ones(self.m, bool)
        return CheckOutcome(
            score_matrix=matrix,
            client_scores=np.array([session.reveal_debug(s)[0] for s in self.client_scores]),
            norm_bits=norm_bits,
            topk_bits=bits(self.topk_bits),
            accept_bits=bits(self.accept_bits),
        )


def run_check(
    session: MpcSession,
    check: CheckRound,
    score_override: Optional[ScoreOverride] = None,
) -> SecureCheckResult:
    """
    Score, rank and norm-check all shared updates.

    Args:
        session: Parties running the check
        check: Shared updates, validation sets and public round state
        score_override: Simulation hook letting malicious validators submit
            chosen scores; returns None for honestly computed entries

    Returns:
        Shared acceptance bits with the intermediate shared values

    Raises:
        CommitteeError: If committees do not match the number of updates
    """
    m = check.m
    if len(check.committees) != m or len(check.validation) != m:
        raise CommitteeError(
            f"{m} updates, {len(check.committees)} committees, "
            f"{len(check.validation)} validation sets"
        )

    w_prev = session.public(check.global_params.data)
    models = [session.add_public(u, check.global_params.data) for u in check.updates]

    scores: dict[tuple[int, int], ShareVec] = {}
    for i in range(m):
        for j in check.committees[i]:
            forced = score_override(i, j) if score_override is not None else None
            if forced is not None:
                # the validator inputs a value of its choosing
                scores[(i, j)] = session.share_real([forced])
            elif check.variant == "acc":
                scores[(i, j)] = score_acc(
                    session, models[i], w_prev, check.validation[j], check.layer_dims
                )
            else:
                scores[(i, j)] = score_prob(
                    session, models[i], check.validation[j], check.layer_dims
                )

    client_scores = [
        trimmed_mean(session, [scores[(i, j)] for j in check.committees[i]], check.committees.m_c)
        for i in range(m)
    ]
    topk = select_top_k(session, client_scores, check.top_k_fraction)

    if check.use_norm_check:
        norm_bits = norm_check(session, check.updates, check.norm_lambda)
        accept = [session.mult(t, b) for t, b in zip(topk, norm_bits)]
    else:
        norm_bits = None
        accept = topk
    logger.debug(f"Check over {m} clients done, ledger at {session.ledger.total_bytes} bytes")
    return SecureCheckResult(scores, client_scores, norm_bits, topk, accept, m)


@dataclass
class AggregateResult:
    update: np.ndarray
    accepted: int

    @property
    def fallback(self) -> bool:
        return self.accepted == 0


def secure_aggregate(
    session: MpcSession, updates: Sequence[ShareVec], accept_bits: Sequence[ShareVec]
) -> AggregateResult:
    """
    Sum the accepted updates under sharing and open only the sum and the count.

    With no accepted update the result is a zero update (the global model
    stays as it is).
    """
    if len(updates) != len(accept_bits):
        raise ValueError(f"{len(updates)} updates but {len(accept_bits)} bits")
    masked = [session.mult(u, session.broadcast(b, u.size)) for u, b in zip(updates, accept_bits)]
    total = session.recon(session.sum_shares(masked), label="aggregate").to_real()
    count_value = session.recon(session.sum_shares(list(accept_bits)), label="accepted_count")
    count = int(round(float(count_value.to_real()[0])))
    if count == 0:
        logger.warning("No update accepted this round; keeping the global model")
        return AggregateResult(np.zeros_like(total), 0)
    return AggregateResult(total / count, count)

