"""
Replicated 3-party secret sharing over Z_{2^K}.

A secret x is split into three additive components x = s0 + s1 + s2; party i
keeps the pair (s_i, s_{i+1}). Any two parties together hold all three
components and can reconstruct, and every component is held twice, so a
reconstruction by all three parties doubles as a consistency check.

MpcSession owns the parties, the communication ledger and the bookkeeping of
what has been revealed. Linear operations are local and free. Multiplication
either runs the replicated protocol (cross terms, zero sharing from pairwise
keys, one resharing message per party) or, in ideal mode, reconstructs and
reshares inside the trusted boundary; the reconstructed results are identical.

Values that are opened inside the boundary (ideal functionalities, the
truncation after a product, debug reveals) never show up in `revealed`.
"""

import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from ..numerics.fixed import (
    FixedParams,
    FixedVec,
    decode_fixed,
    encode_fixed,
    encode_signed,
    random_ring,
    ring_add,
    ring_mul,
    ring_scale,
    ring_sub,
    ring_zeros,
    to_ring,
    to_signed,
    truncate,
)
from ..seeding import substream
from .ledger import CommLedger
from .party import NUM_PARTIES, Party, rand_common, setup_parties

# Configure logging
logger = logging.getLogger(__name__)

MODES = ("protocol", "ideal")


class IntegrityError(Exception):
    """Replicated components disagree; the honest parties abort."""
    pass


@dataclass(frozen=True)
class ShareVec:
    """Replicated sharing of a ring array: views[i] = (s_i, s_{i+1})."""

    views: tuple[tuple[np.ndarray, np.ndarray], ...]
    params: FixedParams

    @classmethod
    def from_components(
        cls, components: Sequence[np.ndarray], params: FixedParams
    ) -> "ShareVec":
        views = tuple(
            (np.array(components[i], copy=True), np.array(components[(i + 1) % 3], copy=True))
            for i in range(NUM_PARTIES)
        )
        return cls(views, params)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.views[0][0].shape)

    @property
    def size(self) -> int:
        return int(self.views[0][0].size)

    def __len__(self) -> int:
        return self.size

    def components(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(self.views[i][0] for i in range(NUM_PARTIES))

    def party_view(self, party_id: int) -> tuple[np.ndarray, np.ndarray]:
        return self.views[party_id]

    def is_consistent(self) -> bool:
        return all(
            np.array_equal(self.views[i][1], self.views[(i + 1) % 3][0])
            for i in range(NUM_PARTIES)
        )

    def map_local(self, fn) -> "ShareVec":
        """Apply the same local function to both components of every party."""
        return ShareVec(tuple((fn(a), fn(b)) for a, b in self.views), self.params)

    def reshape(self, shape) -> "ShareVec":
        return self.map_local(lambda c: np.reshape(c, shape))

    def element(self, index: int) -> "ShareVec":
        return self.map_local(lambda c: np.reshape(c.ravel()[index], (1,)))


@dataclass(frozen=True)
class SharedDataset:
    """A validation dataset held as sharings of features and labels."""

    features: ShareVec
    labels: ShareVec
    num_classes: int

    def __len__(self) -> int:
        return self.labels.size


class MpcSession:
    """Three simulated parties plus ledger and reveal bookkeeping."""

    def __init__(
        self,
        params: Optional[FixedParams] = None,
        *,
        seed: int = 0,
        mode: str = "protocol",
        ledger: Optional[CommLedger] = None,
    ):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
        self.params = params or FixedParams()
        self.mode = mode
        self.parties: tuple[Party, Party, Party] = setup_parties(seed)
        self.ledger = ledger if ledger is not None else CommLedger()
        self.revealed: list[str] = []
        self.debug_reveals = 0
        self._dealer_rng = substream(seed, "functionality-dealer")
        self._input_rng = substream(seed, "session-input")

    @property
    def element_bytes(self) -> int:
        return self.params.element_bytes

    def share_bytes(self, n: int) -> int:
        """Bytes of a replicated sharing of n elements across all parties."""
        return 2 * NUM_PARTIES * n * self.element_bytes

    # -- inside the trusted boundary -------------------------------------

    def ideal_open(self, x: ShareVec) -> np.ndarray:
        """Reconstruct inside an ideal functionality. Not a protocol reveal."""
        if not x.is_consistent():
            raise IntegrityError("inconsistent replicated components")
        s0, s1, s2 = x.components()
        return ring_add(ring_add(s0, s1, self.params), s2, self.params)

    def ideal_deal(self, values: np.ndarray) -> ShareVec:
        """Fresh sharing of ring values produced inside an ideal functionality."""
        values = np.asarray(values)
        if not self.params.native:
            values = values.astype(object)
        s0 = random_ring(self._dealer_rng, values.shape, self.params)
        s1 = random_ring(self._dealer_rng, values.shape, self.params)
        s2 = ring_sub(ring_sub(values, s0, self.params), s1, self.params)
        return ShareVec.from_components((s0, s1, s2), self.params)

    def charge_ideal(
        self, name: str, inputs: Iterable[int], outputs: Iterable[int], rounds: int = 1
    ) -> None:
        """Synthetic cost of an ideal functionality: its input and output sharings."""
        elements = sum(inputs) + sum(outputs)
        self.ledger.charge(
            name, nbytes=self.share_bytes(elements), messages=2 * NUM_PARTIES, rounds=rounds
        )

    def _truncate(self, x: ShareVec) -> ShareVec:
        """Deterministic truncation of a double-scaled sharing.

        Runs as an ideal functionality in both modes: the value is opened
        internally, floor-shifted by 2^f and re-dealt as fresh shares. It is
        neither logged as a reveal nor charged to the ledger.
        """
        signed = to_signed(self.ideal_open(x), self.params)
        return self.ideal_deal(to_ring(truncate(signed, self.params), self.params))

    # -- input and output ---------------------------------------------------

    def share(self, secret, rng: Optional[np.random.Generator] = None) -> ShareVec:
        """Π_Share: a dealer splits ring elements into replicated shares.

        Args:
            secret: Ring array or FixedVec
            rng: The dealer's randomness; the session's input stream when omitted
        """
        data = secret.data if isinstance(secret, FixedVec) else np.asarray(secret)
        rng = rng if rng is not None else self._input_rng
        s0 = random_ring(rng, data.shape, self.params)
        s1 = random_ring(rng, data.shape, self.params)
        s2 = ring_sub(ring_sub(data, s0, self.params), s1, self.params)
        self.ledger.charge("share", nbytes=self.share_bytes(data.size), messages=NUM_PARTIES)
        return ShareVec.from_components((s0, s1, s2), self.params)

    def share_real(self, values, rng: Optional[np.random.Generator] = None) -> ShareVec:
        return self.share(encode_fixed(values, self.params), rng)

    def public(self, values: np.ndarray) -> ShareVec:
        """Trivial sharing (v, 0, 0) of a value every party already knows."""
        values = np.asarray(values)
        zero = ring_zeros(values.shape, self.params)
        return ShareVec.from_components((values, zero, zero.copy()), self.params)

    def public_real(self, values) -> ShareVec:
        return self.public(encode_fixed(values, self.params))

    def recon(
        self, x: ShareVec, *, label: str = "recon", parties: Sequence[int] = (0, 1, 2)
    ) -> FixedVec:
        """Π_Recon: open a sharing to the listed parties' joint view.

        Raises:
            IntegrityError: If overlapping components disagree
            ValueError: If fewer than two parties take part
        """
        parties = sorted(set(parties))
        if len(parties) < 2 or any(p not in range(NUM_PARTIES) for p in parties):
            raise ValueError(f"reconstruction needs two distinct parties, got {parties}")
        held: dict[int, np.ndarray] = {}
        for pid in parties:
            for offset, component in enumerate(x.views[pid]):
                idx = (pid + offset) % NUM_PARTIES
                if idx in held and not np.array_equal(held[idx], component):
                    raise IntegrityError(f"component {idx} differs between parties ({label})")
                held[idx] = component
        total = ring_add(ring_add(held[0], held[1], self.params), held[2], self.params)

        self.ledger.charge(
            "recon",
            nbytes=len(parties) * x.size * self.element_bytes,
            messages=len(parties),
        )
        self.revealed.append(label)
        return FixedVec(np.asarray(total).ravel(), self.params)

    def reveal_debug(self, x: ShareVec) -> np.ndarray:
        """Decode a sharing for tests and debug dumps; not a protocol reveal."""
        self.debug_reveals += 1
        return decode_fixed(self.ideal_open(x), self.params)

    def rand_common(self, tag: str) -> int:
        """F_Rand: a public random value agreed by all parties."""
        return rand_common(self.parties, tag)

    # -- local operations ---------------------------------------------------

    def lin(self, a: int, x: ShareVec, b: int, y: ShareVec) -> ShareVec:
        """a*x + b*y for public integers a, b. Local, no communication."""
        if x.shape != y.shape:
            raise ValueError(f"shape mismatch {x.shape} vs {y.shape}")
        p = self.params
        views = tuple(
            (
                ring_add(ring_scale(xa, a, p), ring_scale(ya, b, p), p),
                ring_add(ring_scale(xb, a, p), ring_scale(yb, b, p), p),
            )
            for (xa, xb), (ya, yb) in zip(x.views, y.views)
        )
        self.ledger.charge("lin", nbytes=0, messages=0, rounds=0)
        return ShareVec(views, p)

    def add(self, x: ShareVec, y: ShareVec) -> ShareVec:
        return self.lin(1, x, 1, y)

    def sub(self, x: ShareVec, y: ShareVec) -> ShareVec:
        return self.lin(1, x, -1, y)

    def neg(self, x: ShareVec) -> ShareVec:
        return self.lin(-1, x, 0, x)

    def add_public(self, x: ShareVec, c: np.ndarray) -> ShareVec:
        """x + c for a public ring array c; only component s0 changes."""
        p = self.params
        (a0, b0), view1, (a2, b2) = x.views
        return ShareVec(((ring_add(a0, c, p), b0), view1, (a2, ring_add(b2, c, p))), p)

    def sum_shares(self, xs: Sequence[ShareVec]) -> ShareVec:
        if not xs:
            raise ValueError("cannot sum an empty list of sharings")
        p = self.params
        total = xs[0]
        for x in xs[1:]:
            if x.shape != total.shape:
                raise ValueError(f"shape mismatch {x.shape} vs {total.shape}")
            total = ShareVec(
                tuple(
                    (ring_add(ta, xa, p), ring_add(tb, xb, p))
                    for (ta, tb), (xa, xb) in zip(total.views, x.views)
                ),
                p,
            )
        return total

    def sum_elements(self, x: ShareVec) -> ShareVec:
        """Sum of all entries as a one-element sharing."""
        p = self.params
        if p.native:
            return x.map_local(lambda c: np.array([np.sum(c, dtype=np.uint64)], dtype=np.uint64))
        return x.map_local(lambda c: np.array([sum(c.ravel()) % p.modulus], dtype=object))

    def broadcast(self, x: ShareVec, n: int) -> ShareVec:
        """Repeat a one-element sharing n times."""
        if x.size != 1:
            raise ValueError(f"broadcast needs a scalar sharing, got size {x.size}")
        return x.map_local(lambda c: np.repeat(c.ravel(), n))

    def concat(self, xs: Sequence[ShareVec]) -> ShareVec:
        p = self.params
        return ShareVec(
            tuple(
                (
                    np.concatenate([x.views[i][0].ravel() for x in xs]),
                    np.concatenate([x.views[i][1].ravel() for x in xs]),
                )
                for i in range(NUM_PARTIES)
            ),
            p,
        )

    # -- multiplication -----------------------------------------------------

    def mult(self, x: ShareVec, y: ShareVec) -> ShareVec:
        """Fixed-point product of two sharings, truncated by 2^f.

        In protocol mode the ring product is computed from local cross terms
        and a zero sharing, with one message per party. Only the product runs
        as a protocol. The truncation that follows is the ideal `_truncate` in
        both modes, so results are exact floors and match the plaintext oracle
        bit for bit; a local share truncation would be off by one unit in the
        last place with small probability.
        """
        if x.shape != y.shape:
            raise ValueError(f"shape mismatch {x.shape} vs {y.shape}")
        nbytes = NUM_PARTIES * x.size * self.element_bytes
        if self.mode == "ideal":
            product = ring_mul(self.ideal_open(x), self.ideal_open(y), self.params)
            self.ledger.charge("mult", nbytes=nbytes, messages=NUM_PARTIES)
            return self._truncate(self.ideal_deal(product))

        p = self.params
        terms = []
        for party, (xa, xb), (ya, yb) in zip(self.parties, x.views, y.views):
            local = ring_add(
                ring_add(ring_mul(xa, ya, p), ring_mul(xa, yb, p), p), ring_mul(xb, ya, p), p
            )
            terms.append(ring_add(local, party.zero_share("mult", x.shape, p), p))
            # z_i goes to party i-1
            party.record_send(x.size * self.element_bytes)
        self.ledger.charge("mult", nbytes=nbytes, messages=NUM_PARTIES)
        product = ShareVec(
            tuple(
                (terms[i], np.array(terms[(i + 1) % NUM_PARTIES], copy=True))
                for i in range(NUM_PARTIES)
            ),
            p,
        )
        return self._truncate(product)

    def mul_public(self, x: ShareVec, c: float) -> ShareVec:
        """x * c for a public real c, truncated."""
        scaled = int(encode_signed(c, self.params))
        product = x.map_local(lambda comp: ring_scale(comp, scaled, self.params))
        self.charge_ideal("mul_public", [x.size], [x.size])
        return self._truncate(product)

    def div_public(self, x: ShareVec, n: int) -> ShareVec:
        """floor(x / n) on the signed value, for a public positive integer n."""
        if n <= 0:
            raise ValueError(f"divisor must be positive, got {n}")
        signed = to_signed(self.ideal_open(x), self.params)
        self.charge_ideal("div_public", [x.size], [x.size])
        return self.ideal_deal(to_ring(signed // n, self.params))
