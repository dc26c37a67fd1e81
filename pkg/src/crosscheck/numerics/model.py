"""
Plaintext classifier: flat-parameter MLP, fixed-point inference and local SGD.

A model is a list of dense layers. Parameters are stored in one flat float
vector in canonical order: for each layer, the weight matrix W (in x out,
row-major) followed by the bias b. With no hidden layer this is the usual
multinomial logistic regression.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .fixed import FixedParams, encode_signed, to_signed

# Configure logging
logger = logging.getLogger(__name__)


class DimensionError(ValueError):
    """Raised when parameter, feature or class dimensions disagree."""
    pass


class EmptyDatasetError(ValueError):
    """Raised when a metric is requested on a dataset with no rows."""
    pass


@dataclass
class Dataset:
    """Labelled feature matrix."""

    features: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise DimensionError(f"features must be 2-D, got shape {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise DimensionError(
                f"{self.features.shape[0]} feature rows but labels shape {self.labels.shape}"
            )
        if self.num_classes < 2:
            raise DimensionError(f"need at least 2 classes, got {self.num_classes}")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise DimensionError(f"labels outside [0, {self.num_classes})")

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])

    def subset(self, indices: Sequence[int]) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.num_classes)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)

    @classmethod
    def empty(cls, dim: int, num_classes: int) -> "Dataset":
        return cls(np.zeros((0, dim)), np.zeros(0, dtype=np.int64), num_classes)

    @staticmethod
    def concat(parts: Sequence["Dataset"]) -> "Dataset":
        if not parts:
            raise EmptyDatasetError("nothing to concatenate")
        num_classes = parts[0].num_classes
        return Dataset(
            np.concatenate([p.features for p in parts], axis=0),
            np.concatenate([p.labels for p in parts]),
            num_classes,
        )


def param_count(layer_dims: Sequence[int]) -> int:
    """Number of flat parameters for the given layer widths."""
    if len(layer_dims) < 2:
        raise DimensionError(f"need input and output widths, got {tuple(layer_dims)}")
    return sum(a * b + b for a, b in zip(layer_dims[:-1], layer_dims[1:]))


def unflatten(
    params: np.ndarray, layer_dims: Sequence[int]
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Split a flat vector into (W, b) per layer. Works for float or integer vectors."""
    expected = param_count(layer_dims)
    if params.shape != (expected,):
        raise DimensionError(
            f"parameter vector has shape {params.shape}, layers {tuple(layer_dims)} "
            f"need ({expected},)"
        )
    layers = []
    offset = 0
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        w = params[offset:offset + fan_in * fan_out].reshape(fan_in, fan_out)
        offset += fan_in * fan_out
        b = params[offset:offset + fan_out]
        offset += fan_out
        layers.append((w, b))
    return layers


def flatten(layers: Sequence[tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    return np.concatenate([np.concatenate([w.ravel(), b.ravel()]) for w, b in layers])


@dataclass
class MlpModel:
    """Dense ReLU network with a flat float parameter vector."""

    layer_dims: tuple[int, ...]
    params: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        self.layer_dims = tuple(int(d) for d in self.layer_dims)
        if self.params is None:
            self.params = np.zeros(param_count(self.layer_dims))
        self.params = np.asarray(self.params, dtype=np.float64)
        if self.params.shape != (param_count(self.layer_dims),):
            raise DimensionError(
                f"{self.params.size} parameters for layers {self.layer_dims}"
            )

    @classmethod
    def init(
        cls,
        layer_dims: Sequence[int],
        rng: Optional[np.random.Generator] = None,
        scale: float = 0.0,
    ) -> "MlpModel":
        """Create a model; weights ~ N(0, scale^2), zeros when scale is 0."""
        n = param_count(layer_dims)
        if scale == 0.0 or rng is None:
            return cls(tuple(layer_dims), np.zeros(n))
        return cls(tuple(layer_dims), rng.normal(0.0, scale, size=n))

    @property
    def num_classes(self) -> int:
        return self.layer_dims[-1]

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    def with_params(self, params: np.ndarray) -> "MlpModel":
        return MlpModel(self.layer_dims, np.array(params, dtype=np.float64))

    def layers(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return unflatten(self.params, self.layer_dims)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / np.sum(exp, axis=-1, keepdims=True)


def _check_features(model: MlpModel, features: np.ndarray) -> None:
    if features.shape[-1] != model.input_dim:
        raise DimensionError(
            f"model expects {model.input_dim} features, data has {features.shape[-1]}"
        )


def forward(model: MlpModel, features: np.ndarray) -> np.ndarray:
    """Real-valued logits for a batch (or a single row)."""
    x = np.asarray(features, dtype=np.float64)
    _check_features(model, x)
    layers = model.layers()
    for idx, (w, b) in enumerate(layers):
        x = x @ w + b
        if idx < len(layers) - 1:
            x = np.maximum(x, 0.0)
    return x


def forward_fixed(
    param_ints: np.ndarray,
    layer_dims: Sequence[int],
    feature_ints: np.ndarray,
    fixed: FixedParams,
) -> np.ndarray:
    """Fixed-point logits from signed encodings of parameters and features.

    Each dense layer computes trunc(x @ W) + b; ReLU keeps the sign test on
    the signed view. Matches what the shared inference functionality computes.
    """
    layers = unflatten(np.asarray(param_ints), layer_dims)
    x = np.asarray(feature_ints)
    if x.shape[-1] != layer_dims[0]:
        raise DimensionError(f"model expects {layer_dims[0]} features, data has {x.shape[-1]}")
    for idx, (w, b) in enumerate(layers):
        if fixed.native:
            acc = x.astype(np.int64) @ w.astype(np.int64)
        else:
            acc = to_signed(x.astype(object) @ w.astype(object), fixed)
        x = (acc // fixed.scale) + b
        if idx < len(layers) - 1:
            x = np.where(x > 0, x, 0 * x)
    return x


def predict(model: MlpModel, features: np.ndarray) -> np.ndarray:
    """Predicted labels, ties to the lowest class index."""
    return np.argmax(forward(model, features), axis=-1)


def accuracy(model: MlpModel, data: Dataset, fixed: Optional[FixedParams] = None) -> float:
    """Fraction of rows classified correctly.

    Args:
        model: Classifier to evaluate
        data: Labelled rows
        fixed: When given, evaluate with fixed-point inference on the
            encoded model and features instead of float arithmetic

    Raises:
        EmptyDatasetError: If data has no rows
        DimensionError: If feature widths disagree
    """
    if len(data) == 0:
        raise EmptyDatasetError("accuracy of an empty dataset is undefined")
    _check_features(model, data.features)
    if fixed is None:
        preds = predict(model, data.features)
    else:
        preds = predict_fixed(
            encode_signed(model.params, fixed),
            model.layer_dims,
            encode_signed(data.features, fixed),
            fixed,
        )
    return float(np.count_nonzero(preds == data.labels)) / len(data)


def predict_fixed(
    param_ints: np.ndarray,
    layer_dims: Sequence[int],
    feature_ints: np.ndarray,
    fixed: FixedParams,
) -> np.ndarray:
    """Predicted labels under fixed-point inference, ties to the lowest class index."""
    logits = forward_fixed(param_ints, layer_dims, feature_ints, fixed)
    return np.argmax(logits, axis=-1)


def max_softmax_mean(model: MlpModel, data: Dataset) -> float:
    """Mean over rows of the largest softmax probability, in [1/L, 1]."""
    if len(data) == 0:
        raise EmptyDatasetError("max-softmax of an empty dataset is undefined")
    probs = softmax(forward(model, data.features))
    return float(np.mean(np.max(probs, axis=-1)))


def _gradient(model: MlpModel, features: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Cross-entropy gradient averaged over the batch."""
    layers = model.layers()
    activations = [features]
    pre_activations = []
    h = features
    for idx, (w, b) in enumerate(layers):
        z = h @ w + b
        pre_activations.append(z)
        h = np.maximum(z, 0.0) if idx < len(layers) - 1 else z
        activations.append(h)

    probs = softmax(activations[-1])
    onehot = np.zeros_like(probs)
    onehot[np.arange(len(labels)), labels] = 1.0
    delta = (probs - onehot) / len(labels)

    grads: list[tuple[np.ndarray, np.ndarray]] = []
    for idx in range(len(layers) - 1, -1, -1):
        w, _ = layers[idx]
        grads.append((activations[idx].T @ delta, delta.sum(axis=0)))
        if idx > 0:
            delta = (delta @ w.T) * (pre_activations[idx - 1] > 0)
    grads.reverse()
    return flatten(grads)


def local_train(
    model: MlpModel,
    data: Dataset,
    epochs: int,
    lr: float,
    rng: np.random.Generator,
    batch_size: int = 32,
    momentum: float = 0.0,
) -> np.ndarray:
    """Run minibatch SGD from model on data and return the update (w_new - w).

    An empty dataset produces a zero update.

    Raises:
        DimensionError: If data and model disagree on width or class count
    """
    if data.num_classes != model.num_classes:
        raise DimensionError(
            f"data has {data.num_classes} classes, model outputs {model.num_classes}"
        )
    if len(data) == 0:
        return np.zeros_like(model.params)
    _check_features(model, data.features)
    if epochs < 0 or lr <= 0 or batch_size <= 0:
        raise ValueError(f"invalid training params epochs={epochs} lr={lr} batch={batch_size}")

    current = model.with_params(model.params)
    velocity = np.zeros_like(current.params)
    for _ in range(epochs):
        order = rng.permutation(len(data))
        for start in range(0, len(data), batch_size):
            batch = order[start:start + batch_size]
            grad = _gradient(current, data.features[batch], data.labels[batch])
            velocity = momentum * velocity + grad
            current.params = current.params - lr * velocity
    return current.params - model.params
