"""
Client populations and distribution shifts.

A population starts with every client on distribution 0. Shift events either
move existing clients to a new distribution (evolve) or add new clients
drawn from it (join). Each affected group gets a fresh non-IID partition of
data sampled from the target distribution.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Literal, Sequence

import numpy as np

from ..config import ExperimentConfig, ShiftConfig
from ..numerics.model import Dataset
from ..sources.base import DatasetSource
from ..sources.partition import dirichlet_partition, split_sizes

# Configure logging
logger = logging.getLogger(__name__)


@dataclass
class ClientState:
    client_id: int
    data: Dataset
    honest: bool = True
    distribution: int = 0


@dataclass
class Population:
    clients: list[ClientState]
    m_c: int

    @property
    def m(self) -> int:
        return len(self.clients)

    @property
    def honest_flags(self) -> tuple[bool, ...]:
        return tuple(c.honest for c in self.clients)

    @property
    def malicious_ids(self) -> tuple[int, ...]:
        return tuple(c.client_id for c in self.clients if not c.honest)

    @property
    def distributions(self) -> tuple[int, ...]:
        return tuple(c.distribution for c in self.clients)

    def active_distributions(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.distributions)))


@dataclass(frozen=True)
class ShiftEvent:
    round: int
    kind: Literal["evolve", "join"]
    count: int
    distribution: int


@dataclass
class ShiftSchedule:
    events: tuple[ShiftEvent, ...] = field(default_factory=tuple)

    def events_at(self, round_index: int) -> list[ShiftEvent]:
        return [e for e in self.events if e.round == round_index]

    @classmethod
    def from_config(cls, shift: ShiftConfig, rounds: int) -> "ShiftSchedule":
        """Explicit events plus periodic ones, each moving to the next unused distribution."""
        events = [ShiftEvent(e.round, e.kind, e.count, e.distribution) for e in shift.events]
        if shift.every > 0 and shift.count > 0:
            next_dist = max((e.distribution for e in events), default=0) + 1
            for t in range(shift.every, rounds, shift.every):
                events.append(ShiftEvent(t, shift.kind, shift.count, next_dist))
                next_dist += 1
        return cls(tuple(sorted(events, key=lambda e: e.round)))


def build_population(
    config: ExperimentConfig, source: DatasetSource, rng: np.random.Generator
) -> tuple[Population, dict[int, Dataset], Dataset]:
    """
    Sample distribution-0 data and split it into clients, a test set and D_pubval.

    The first `malicious` client ids are malicious; their data is clean.

    Returns:
        (population, {0: test set}, public validation set)
    """
    data_cfg = config.data
    pool = source.sample(0, data_cfg.train_size + data_cfg.test_size + data_cfg.pubval_size, rng)
    train, test, pubval = split_sizes(
        pool, [data_cfg.train_size, data_cfg.test_size, data_cfg.pubval_size], rng
    )
    shards = dirichlet_partition(
        train, config.population.clients, data_cfg.alpha, rng, min_size=data_cfg.min_client_rows
    )
    clients = [
        ClientState(i, shard, honest=i >= config.population.malicious)
        for i, shard in enumerate(shards)
    ]
    logger.info(
        f"Population of {len(clients)} clients ({config.population.malicious} malicious), "
        f"{len(test)} test rows, {len(pubval)} public validation rows"
    )
    return Population(clients, config.population.malicious), {0: test}, pubval


def apply_shift(
    population: Population,
    event: ShiftEvent,
    source: DatasetSource,
    rng: np.random.Generator,
    *,
    samples_per_client: int,
    alpha: float,
    join_honest: bool = True,
    min_client_rows: int = 1,
) -> list[int]:
    """
    Apply one shift event in place.

    An event with count 0 is a no-op.

    Returns:
        Ids of the clients that moved or joined

    Raises:
        ValueError: If more clients should evolve than exist
    """
    if event.count == 0:
        logger.info(f"Round {event.round}: empty {event.kind} event skipped")
        return []
    if event.kind == "evolve" and event.count > population.m:
        raise ValueError(f"cannot evolve {event.count} of {population.m} clients")

    rows = event.count * max(samples_per_client, min_client_rows)
    pool = source.sample(event.distribution, rows, rng)
    shards = dirichlet_partition(pool, event.count, alpha, rng, min_size=min_client_rows)

    if event.kind == "evolve":
        chosen = sorted(int(i) for i in rng.choice(population.m, size=event.count, replace=False))
        for cid, shard in zip(chosen, shards):
            population.clients[cid] = replace(
                population.clients[cid], data=shard, distribution=event.distribution
            )
        affected = chosen
    else:
        start = population.m
        for offset, shard in enumerate(shards):
            population.clients.append(
                ClientState(start + offset, shard, honest=join_honest,
                            distribution=event.distribution)
            )
        affected = list(range(start, population.m))

    logger.info(
        f"Round {event.round}: {event.kind} {event.count} clients to distribution "
        f"{event.distribution}"
    )
    return affected


def samples_per_client(config: ExperimentConfig) -> int:
    return max(1, config.data.train_size // config.population.clients)


def union_test_set(test_sets: dict[int, Dataset], active: Sequence[int]) -> Dataset:
    """Concatenation of the test sets of the active distributions."""
    return Dataset.concat([test_sets[d] for d in sorted(active) if d in test_sets])
