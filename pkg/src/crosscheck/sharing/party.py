"""
The three computing parties and their correlated randomness.

Setup hands every pair of parties a shared PRF key and all three a common
key. PRF outputs are counter-mode: the stream for (key, tag, counter) is a
fixed function of those three values, so two parties holding the same key
and advancing the same counter draw identical elements without talking.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from ..numerics.fixed import FixedParams, random_ring, ring_sub
from ..seeding import label_key

# Configure logging
logger = logging.getLogger(__name__)

NUM_PARTIES = 3


def prf(key: int, tag: str, counter: int, shape, params: FixedParams) -> np.ndarray:
    """Ring elements for (key, tag, counter)."""
    rng = np.random.default_rng([key, label_key(tag), counter])
    return random_ring(rng, shape, params)


@dataclass
class Party:
    party_id: int
    pair_keys: dict[int, int]
    common_key: int
    counters: dict[tuple, int] = field(default_factory=dict)
    bytes_sent: int = 0
    messages_sent: int = 0

    @property
    def next_id(self) -> int:
        return (self.party_id + 1) % NUM_PARTIES

    @property
    def prev_id(self) -> int:
        return (self.party_id - 1) % NUM_PARTIES

    def _advance(self, stream: tuple) -> int:
        counter = self.counters.get(stream, 0)
        self.counters[stream] = counter + 1
        return counter

    def pair_draw(self, peer: int, tag: str, shape, params: FixedParams) -> np.ndarray:
        pair = tuple(sorted((self.party_id, peer)))
        counter = self._advance(("pair", pair, tag))
        return prf(self.pair_keys[peer], f"{pair}/{tag}", counter, shape, params)

    def common_draw(self, tag: str, shape, params: FixedParams) -> np.ndarray:
        counter = self._advance(("common", tag))
        return prf(self.common_key, tag, counter, shape, params)

    def zero_share(self, tag: str, shape, params: FixedParams) -> np.ndarray:
        """This party's term of a 3-out-of-3 sharing of zero."""
        ahead = self.pair_draw(self.next_id, tag, shape, params)
        behind = self.pair_draw(self.prev_id, tag, shape, params)
        return ring_sub(ahead, behind, params)

    def record_send(self, nbytes: int, messages: int = 1) -> None:
        self.bytes_sent += nbytes
        self.messages_sent += messages


def setup_parties(seed: int) -> tuple[Party, Party, Party]:
    """Correlated-randomness setup: pairwise keys and one common key."""
    rng = np.random.default_rng([seed, label_key("party-setup")])
    keys = {pair: int(rng.integers(0, 2**62)) for pair in ((0, 1), (1, 2), (0, 2))}
    common = int(rng.integers(0, 2**62))
    parties = []
    for pid in range(NUM_PARTIES):
        pair_keys = {
            other: keys[tuple(sorted((pid, other)))]
            for other in range(NUM_PARTIES) if other != pid
        }
        parties.append(Party(pid, pair_keys, common))
    return tuple(parties)


def rand_common(parties: tuple[Party, ...], tag: str) -> int:
    """A public 63-bit value all parties derive from the common key.

    Raises:
        RuntimeError: If the parties' common streams have diverged
    """
    params = FixedParams(ring_bits=64)
    draws = {int(p.common_draw(f"rand/{tag}", (), params)) >> 1 for p in parties}
    if len(draws) != 1:
        raise RuntimeError(f"common randomness diverged for tag {tag!r}")
    return draws.pop()
