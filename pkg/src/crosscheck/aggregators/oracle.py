"""
Plaintext reference for the shared check.

Runs the same decisions directly on fixed-point encodings without any
sharing: scores, trimmed means, top-k and the norm bound are computed on
signed integers with the same truncation and floor-division rules, so the
shared pipeline must agree with it bit for bit. The aggregate is a float mean
of the quantized accepted updates.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..numerics.fixed import FixedParams, decode_signed, encode_signed, fx_mul
from ..numerics.model import Dataset, MlpModel, max_softmax_mean, unflatten
from .secure_check import (
    CheckCommittee,
    CheckOutcome,
    CommitteeError,
    ScoreOverride,
    ScoreVariant,
    accepted_count,
)

# Configure logging
logger = logging.getLogger(__name__)


@dataclass
class PlainRound:
    updates: list[np.ndarray]
    validation: list[Dataset]
    global_params: np.ndarray
    layer_dims: tuple[int, ...]
    committees: CheckCommittee
    fixed: FixedParams
    variant: ScoreVariant = "acc"
    norm_lambda: float = 1.5
    use_norm_check: bool = True
    k_frac: Optional[float] = None


@dataclass
class OracleResult:
    outcome: CheckOutcome
    aggregate: np.ndarray
    accepted: int


def _wrap_signed(value: int, fx: FixedParams) -> int:
    half = 1 << (fx.ring_bits - 1)
    return (value + half) % (1 << fx.ring_bits) - half


def predict_row_int(layers: list, row: Sequence[int], fx: FixedParams) -> int:
    """
    Label of one encoded row: trunc(x @ W) + b per layer, ReLU between
    layers, first index of the largest logit.

    Products are summed as Python ints and wrapped to the signed ring before
    the floor shift, as the ring matmul does.
    """
    x = [int(v) for v in row]
    for idx, (w, b) in enumerate(layers):
        out = []
        for j in range(w.shape[1]):
            acc = _wrap_signed(sum(x[k] * int(w[k, j]) for k in range(len(x))), fx)
            value = acc // fx.scale + int(b[j])
            if idx < len(layers) - 1 and value < 0:
                value = 0
            out.append(value)
        x = out
    best = 0
    for c in range(1, len(x)):
        if x[c] > x[best]:
            best = c
    return best


def accuracy_int(
    param_ints: np.ndarray, layer_dims: Sequence[int], data: Dataset, fx: FixedParams
) -> int:
    """Encoded share of rows whose fixed-point prediction matches the label."""
    layers = unflatten(np.asarray(param_ints), layer_dims)
    features = encode_signed(data.features, fx)
    correct = sum(
        predict_row_int(layers, row, fx) == int(label)
        for row, label in zip(features, data.labels)
    )
    return int(encode_signed(correct / len(data), fx))


def _score_int(
    rnd: PlainRound, model_ints: np.ndarray, global_ints: np.ndarray, data: Dataset
) -> int:
    fx = rnd.fixed
    if rnd.variant == "acc":
        new = accuracy_int(model_ints, rnd.layer_dims, data, fx)
        old = accuracy_int(global_ints, rnd.layer_dims, data, fx)
        return new - old
    features = encode_signed(data.features, fx)
    model = MlpModel(rnd.layer_dims, decode_signed(model_ints, fx))
    quantized = Dataset(decode_signed(features, fx), data.labels, data.num_classes)
    return int(encode_signed(max_softmax_mean(model, quantized), fx))


def trimmed_mean_int(values: Sequence[int], m_c: int) -> int:
    """Integer trimmed mean with floor division, as the shared path computes it."""
    if len(values) != 2 * m_c + 1:
        raise CommitteeError(f"expected {2 * m_c + 1} scores, got {len(values)}")
    ordered = sorted(values)
    trim = m_c // 2
    kept = ordered[trim:len(ordered) - trim]
    return sum(kept) // len(kept)


def trimmed_mean_real(values: Sequence[float], m_c: int) -> float:
    """Real-valued trimmed mean over a committee."""
    if len(values) != 2 * m_c + 1:
        raise CommitteeError(f"expected {2 * m_c + 1} scores, got {len(values)}")
    ordered = np.sort(np.asarray(values, dtype=np.float64))
    trim = m_c // 2
    return float(np.mean(ordered[trim:len(ordered) - trim]))


def top_k_bits(scores: Sequence, k_frac: float) -> np.ndarray:
    """Keep the round(k_frac*m) highest scores; ties go to the lower index."""
    m = len(scores)
    k = accepted_count(k_frac, m)
    order = sorted(range(m), key=lambda i: (-scores[i], i))
    bits = np.zeros(m, dtype=bool)
    bits[order[:k]] = True
    return bits


def norm_bits_int(updates_int: Sequence[np.ndarray], lam: float, fx: FixedParams) -> np.ndarray:
    """[||u_i|| < lam * median] on fixed-point encodings."""
    norms = []
    for u in updates_int:
        sum_sq = int(np.sum(fx_mul(u, u, fx)))
        norms.append(int(encode_signed(np.sqrt(decode_signed(sum_sq, fx)), fx)))
    ordered = sorted(norms)
    m = len(ordered)
    median = ordered[m // 2] if m % 2 else (ordered[m // 2 - 1] + ordered[m // 2]) // 2
    bound = int(fx_mul(np.array(median), np.array(int(encode_signed(lam, fx))), fx))
    return np.array([n < bound for n in norms], dtype=bool)


def plaintext_oracle(
    rnd: PlainRound, score_override: Optional[ScoreOverride] = None
) -> OracleResult:
    """Evaluate one check round in plaintext fixed point."""
    fx = rnd.fixed
    m = len(rnd.updates)
    global_ints = encode_signed(rnd.global_params, fx)
    updates_int = [encode_signed(u, fx) for u in rnd.updates]

    matrix = np.full((m, m), np.nan)
    client_scores = []
    for i in range(m):
        model_ints = global_ints + updates_int[i]
        row = []
        for j in rnd.committees[i]:
            forced = score_override(i, j) if score_override is not None else None
            if forced is not None:
                value = int(encode_signed(forced, fx))
            else:
                value = _score_int(rnd, model_ints, global_ints, rnd.validation[j])
            matrix[i, j] = value / fx.scale
            row.append(value)
        client_scores.append(trimmed_mean_int(row, rnd.committees.m_c))

    k_frac = rnd.k_frac if rnd.k_frac is not None else 1.0 - rnd.committees.m_c / m
    topk = top_k_bits(client_scores, k_frac)
    if rnd.use_norm_check:
        norm_bits = norm_bits_int(updates_int, rnd.norm_lambda, fx)
    else:
        norm_bits = np.ones(m, dtype=bool)
    accept = topk & norm_bits

    count = int(np.count_nonzero(accept))
    quantized = [decode_signed(u, fx) for u in updates_int]
    if count:
        aggregate = np.sum([q for q, b in zip(quantized, accept) if b], axis=0) / count
    else:
        aggregate = np.zeros_like(rnd.global_params, dtype=np.float64)

    outcome = CheckOutcome(
        score_matrix=matrix,
        client_scores=np.array(client_scores, dtype=np.float64) / fx.scale,
        norm_bits=norm_bits,
        topk_bits=topk,
        accept_bits=accept,
    )
    return OracleResult(outcome, aggregate, count)
