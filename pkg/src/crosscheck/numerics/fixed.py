"""
Fixed-point encoding over the ring Z_{2^K}.

Every value that crosses the secret-sharing boundary is a fixed-point
integer: a real x is stored as round(x * 2^f) mod 2^K. Two ring sizes
are supported:

- K=64 uses numpy uint64 arrays, which wrap modulo 2^64 natively
- K=128 uses numpy object arrays of Python ints reduced with % 2^128

Signed views are the usual two's-complement reading of a ring element.
Products are truncated deterministically by an arithmetic shift (floor
division by 2^f) of the signed view.
"""

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

# Configure logging
logger = logging.getLogger(__name__)

SUPPORTED_RING_BITS = (64, 128)

ArrayLike = Union[np.ndarray, list, tuple, float, int]


class FixedPointOverflowError(ValueError):
    """Raised when a real value does not fit the signed fixed-point range."""
    pass


@dataclass(frozen=True)
class FixedParams:
    """Ring size K and fractional bits f."""

    ring_bits: int = 64
    frac_bits: int = 16

    def __post_init__(self):
        if self.ring_bits not in SUPPORTED_RING_BITS:
            raise ValueError(
                f"ring_bits must be one of {SUPPORTED_RING_BITS}, got {self.ring_bits}"
            )
        if not 0 < self.frac_bits < self.ring_bits - 1:
            raise ValueError(
                f"frac_bits must be in (0, {self.ring_bits - 1}), got {self.frac_bits}"
            )

    @property
    def modulus(self) -> int:
        return 1 << self.ring_bits

    @property
    def scale(self) -> int:
        return 1 << self.frac_bits

    @property
    def resolution(self) -> float:
        """Smallest representable step, 2^-f."""
        return 2.0 ** -self.frac_bits

    @property
    def limit(self) -> float:
        """Exclusive bound on |x| for encodable reals."""
        return float(2 ** (self.ring_bits - self.frac_bits - 1))

    @property
    def element_bytes(self) -> int:
        return self.ring_bits // 8

    @property
    def native(self) -> bool:
        """True when ring arithmetic maps onto numpy uint64."""
        return self.ring_bits == 64


# ---------------------------------------------------------------------------
# Signed <-> ring views
# ---------------------------------------------------------------------------

def to_ring(signed: ArrayLike, params: FixedParams) -> np.ndarray:
    """Reduce signed integers into the ring representation."""
    if params.native:
        arr = np.ascontiguousarray(np.asarray(signed, dtype=np.int64))
        return arr.view(np.uint64)
    arr = np.asarray(signed, dtype=object)
    return arr % params.modulus


def to_signed(ring: np.ndarray, params: FixedParams) -> np.ndarray:
    """Two's-complement view of ring elements (int64 or Python ints)."""
    if params.native:
        return np.ascontiguousarray(np.asarray(ring, dtype=np.uint64)).view(np.int64)
    arr = np.asarray(ring, dtype=object) % params.modulus
    half = params.modulus >> 1
    return np.where(arr >= half, arr - params.modulus, arr).astype(object)


def wrap(values: np.ndarray, params: FixedParams) -> np.ndarray:
    """Bring the result of ring arithmetic back to canonical form."""
    if params.native:
        return np.asarray(values, dtype=np.uint64)
    return np.asarray(values, dtype=object) % params.modulus


def ring_scalar(value: int, params: FixedParams):
    """A Python int (possibly negative) as a ring scalar usable in array ops."""
    reduced = int(value) % params.modulus
    if params.native:
        return np.uint64(reduced)
    return reduced


def ring_zeros(shape, params: FixedParams) -> np.ndarray:
    if params.native:
        return np.zeros(shape, dtype=np.uint64)
    return np.zeros(shape, dtype=np.int64).astype(object)


def random_ring(rng: np.random.Generator, shape, params: FixedParams) -> np.ndarray:
    """Uniform ring elements drawn from rng."""
    top = np.iinfo(np.uint64).max
    low = rng.integers(0, top, size=shape, dtype=np.uint64, endpoint=True)
    if params.native:
        return low
    high = rng.integers(0, top, size=shape, dtype=np.uint64, endpoint=True)
    return (high.astype(object) * (1 << 64) + low.astype(object)) % params.modulus


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------

def encode_signed(x: ArrayLike, params: FixedParams) -> np.ndarray:
    """Real values to signed fixed-point integers, round to nearest."""
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise FixedPointOverflowError("cannot encode non-finite values")
    if arr.size and np.max(np.abs(arr)) >= params.limit:
        raise FixedPointOverflowError(
            f"|x| = {float(np.max(np.abs(arr)))} exceeds fixed-point limit {params.limit}"
        )
    scaled = np.rint(arr * params.scale)
    if params.native:
        return scaled.astype(np.int64)
    flat = [int(v) for v in scaled.ravel()]
    return np.array(flat, dtype=object).reshape(arr.shape)


def decode_signed(signed: ArrayLike, params: FixedParams) -> np.ndarray:
    """Signed fixed-point integers back to float64."""
    arr = np.asarray(signed)
    return arr.astype(np.float64) / params.scale


def encode_fixed(x: ArrayLike, params: FixedParams) -> np.ndarray:
    """Encode reals into ring elements.

    Raises:
        FixedPointOverflowError: If any |x| >= 2^(K-f-1) or x is not finite
    """
    return to_ring(encode_signed(x, params), params)


def decode_fixed(ring: np.ndarray, params: FixedParams) -> np.ndarray:
    """Decode ring elements into reals."""
    return decode_signed(to_signed(ring, params), params)


def quantize(x: ArrayLike, params: FixedParams) -> np.ndarray:
    """The real value a fixed-point encoding actually represents."""
    return decode_signed(encode_signed(x, params), params)


# ---------------------------------------------------------------------------
# Plaintext fixed-point arithmetic on signed views
# ---------------------------------------------------------------------------

def truncate(signed: np.ndarray, params: FixedParams) -> np.ndarray:
    """Deterministic truncation: floor(x / 2^f)."""
    return np.asarray(signed) // params.scale


def fx_mul(a: np.ndarray, b: np.ndarray, params: FixedParams) -> np.ndarray:
    """Fixed-point product of signed encodings.

    For K=64 the int64 product wraps exactly like the ring product, so the
    result matches the shared multiplication bit for bit.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if params.native:
        with np.errstate(over="ignore"):
            product = a.astype(np.int64) * b.astype(np.int64)
        return truncate(product, params)
    product = to_signed(a.astype(object) * b.astype(object), params)
    return truncate(product, params)


def fx_div_int(signed: np.ndarray, divisor: int) -> np.ndarray:
    """Divide a fixed-point value by a public positive integer, flooring."""
    if divisor <= 0:
        raise ValueError(f"divisor must be positive, got {divisor}")
    return np.asarray(signed) // divisor


def ring_add(a: np.ndarray, b: np.ndarray, params: FixedParams) -> np.ndarray:
    return wrap(np.asarray(a) + np.asarray(b), params)


def ring_sub(a: np.ndarray, b: np.ndarray, params: FixedParams) -> np.ndarray:
    return wrap(np.asarray(a) - np.asarray(b), params)


def ring_mul(a: np.ndarray, b: np.ndarray, params: FixedParams) -> np.ndarray:
    return wrap(np.asarray(a) * np.asarray(b), params)


def ring_scale(a: np.ndarray, c: int, params: FixedParams) -> np.ndarray:
    """Multiply ring elements by a public integer (no truncation)."""
    return wrap(np.asarray(a) * ring_scalar(c, params), params)


@dataclass(frozen=True)
class FixedVec:
    """A plaintext vector of ring elements together with its encoding parameters."""

    data: np.ndarray
    params: FixedParams

    @classmethod
    def from_real(cls, values: ArrayLike, params: FixedParams) -> "FixedVec":
        return cls(encode_fixed(np.ravel(np.asarray(values, dtype=np.float64)), params), params)

    @classmethod
    def from_signed(cls, signed: ArrayLike, params: FixedParams) -> "FixedVec":
        return cls(to_ring(np.ravel(np.asarray(signed)), params), params)

    def signed(self) -> np.ndarray:
        return to_signed(self.data, self.params)

    def to_real(self) -> np.ndarray:
        return decode_fixed(self.data, self.params)

    def __len__(self) -> int:
        return int(self.data.size)

    def equals(self, other: "FixedVec") -> bool:
        if self.params != other.params or len(self) != len(other):
            return False
        return bool(np.all(self.signed() == other.signed()))
