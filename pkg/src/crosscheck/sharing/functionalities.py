"""
Ideal functionalities evaluated on sharings.

Each function opens its inputs inside the trusted boundary, computes in
plaintext fixed point, deals fresh sharings of the outputs and charges the
ledger the size of its inputs plus outputs. Nothing opened here is added to
the session's reveal log.
"""

import logging
from typing import Any, Optional, Sequence

import numpy as np

from ..numerics.fixed import FixedParams, decode_fixed, encode_fixed, to_signed
from ..numerics.model import (
    DimensionError,
    EmptyDatasetError,
    Dataset,
    MlpModel,
    max_softmax_mean,
    param_count,
    predict_fixed,
)
from .session import MpcSession, ShareVec, SharedDataset

# Configure logging
logger = logging.getLogger(__name__)


def _scalar_signed(session: MpcSession, x: ShareVec):
    return to_signed(session.ideal_open(x), session.params).ravel()


def comp_less(session: MpcSession, x: ShareVec, y: ShareVec) -> ShareVec:
    """Elementwise [x < y] as a sharing of fixed-point 0 or 1."""
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {y.shape}")
    a = to_signed(session.ideal_open(x), session.params)
    b = to_signed(session.ideal_open(y), session.params)
    bits = (a < b).astype(np.float64)
    session.charge_ideal("comp", [x.size, y.size], [x.size])
    return session.ideal_deal(encode_fixed(bits, session.params))


def sqrt_shared(session: MpcSession, x: ShareVec) -> ShareVec:
    """Elementwise square root, re-encoded to fixed point.

    Raises:
        ValueError: On a negative input
    """
    values = decode_fixed(session.ideal_open(x), session.params)
    if np.any(values < 0):
        raise ValueError("square root of a negative fixed-point value")
    session.charge_ideal("sqrt", [x.size], [x.size])
    return session.ideal_deal(encode_fixed(np.sqrt(values), session.params))


def sort_shared(
    session: MpcSession,
    keys: Sequence[ShareVec],
    payloads: Optional[Sequence[Any]] = None,
) -> list[tuple[ShareVec, Any]]:
    """
    Stable ascending sort of one-element sharings, carrying payloads along.

    Shared payloads are re-randomized on the way out so positions cannot be
    linked; other payloads are moved as-is.

    Args:
        session: Session whose parties run the sort
        keys: One-element sharings
        payloads: Items tied to each key (sharings or plain values)

    Returns:
        (key, payload) pairs in ascending key order, ties in input order
    """
    if payloads is None:
        payloads = [None] * len(keys)
    if len(payloads) != len(keys):
        raise ValueError(f"{len(keys)} keys but {len(payloads)} payloads")
    if not keys:
        return []
    values = [int(_scalar_signed(session, k)[0]) for k in keys]
    order = sorted(range(len(keys)), key=lambda i: values[i])

    shared_sizes = [p.size for p in payloads if isinstance(p, ShareVec)]
    total = len(keys) + sum(shared_sizes)
    session.charge_ideal("sort", [total], [total])

    result = []
    for i in order:
        key = session.ideal_deal(session.ideal_open(keys[i]))
        payload = payloads[i]
        if isinstance(payload, ShareVec):
            payload = session.ideal_deal(session.ideal_open(payload))
        result.append((key, payload))
    return result


def zero_one(session: MpcSession, k: int, m: int) -> list[ShareVec]:
    """m one-element sharings: the first k encode 1, the rest 0."""
    if not 0 <= k <= m:
        raise ValueError(f"need 0 <= k <= m, got k={k}, m={m}")
    session.charge_ideal("zero_one", [], [m])
    return [
        session.ideal_deal(encode_fixed([1.0 if i < k else 0.0], session.params))
        for i in range(m)
    ]


def share_dataset(
    session: MpcSession, data: Dataset, rng: Optional[np.random.Generator] = None
) -> SharedDataset:
    """The data owner shares a validation set (features and labels)."""
    features = session.share(encode_fixed(data.features, session.params), rng)
    labels = session.share(encode_fixed(data.labels.astype(np.float64), session.params), rng)
    return SharedDataset(features, labels, data.num_classes)


def _open_dataset(session: MpcSession, d: SharedDataset) -> tuple[np.ndarray, np.ndarray]:
    feature_ints = to_signed(session.ideal_open(d.features), session.params)
    label_ints = to_signed(session.ideal_open(d.labels), session.params)
    labels = np.rint(label_ints.astype(np.float64) / session.params.scale).astype(np.int64)
    return feature_ints, labels


def _check_inference_dims(w: ShareVec, layer_dims: Sequence[int], d: SharedDataset) -> None:
    if w.size != param_count(layer_dims):
        raise DimensionError(
            f"model sharing has {w.size} entries, layers {tuple(layer_dims)} "
            f"need {param_count(layer_dims)}"
        )
    if len(d) == 0:
        raise EmptyDatasetError("inference on an empty validation set")
    if d.features.shape[-1] != layer_dims[0]:
        raise DimensionError(
            f"model expects {layer_dims[0]} features, data has {d.features.shape[-1]}"
        )
    if d.num_classes != layer_dims[-1]:
        raise DimensionError(f"data has {d.num_classes} classes, model outputs {layer_dims[-1]}")


def fixed_accuracy_value(
    param_ints: np.ndarray,
    layer_dims: Sequence[int],
    feature_ints: np.ndarray,
    labels: np.ndarray,
    fixed: FixedParams,
) -> float:
    """Accuracy k/n of fixed-point inference."""
    preds = predict_fixed(param_ints, layer_dims, feature_ints, fixed)
    return float(np.count_nonzero(preds == labels)) / len(labels)


def sec_inf(
    session: MpcSession, w: ShareVec, layer_dims: Sequence[int], d: SharedDataset
) -> ShareVec:
    """
    Accuracy of the shared model on the shared dataset.

    Inference runs in fixed point (truncated dense layers, ReLU, argmax with
    ties to the lowest class), so the result is exactly k/n for some k.

    Raises:
        DimensionError: If the model, features or classes disagree
        EmptyDatasetError: If the dataset has no rows
    """
    _check_inference_dims(w, layer_dims, d)
    param_ints = to_signed(session.ideal_open(w), session.params)
    feature_ints, labels = _open_dataset(session, d)
    acc = fixed_accuracy_value(param_ints, layer_dims, feature_ints, labels, session.params)
    session.charge_ideal("sec_inf", [w.size, d.features.size, d.labels.size], [1])
    return session.ideal_deal(encode_fixed([acc], session.params))


def max_soft(
    session: MpcSession, w: ShareVec, layer_dims: Sequence[int], d: SharedDataset
) -> ShareVec:
    """
    Mean over validation rows of the largest softmax probability.

    Softmax is evaluated on the decoded model and features, then the mean is
    re-encoded; the result lies in [1/L, 1].
    """
    _check_inference_dims(w, layer_dims, d)
    params = decode_fixed(session.ideal_open(w), session.params)
    feature_ints, labels = _open_dataset(session, d)
    features = feature_ints.astype(np.float64) / session.params.scale
    model = MlpModel(tuple(layer_dims), params)
    value = max_softmax_mean(model, Dataset(features, labels, d.num_classes))
    session.charge_ideal("max_soft", [w.size, d.features.size], [1])
    return session.ideal_deal(encode_fixed([value], session.params))

