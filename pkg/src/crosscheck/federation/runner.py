"""
Federated training loop.

One round:

1. apply the shift events scheduled for this round
2. every client trains locally from the global model; malicious clients
   apply the configured attack once it has started
3. the defense (plaintext baseline or the shared check) picks updates
4. w(t+1) = w(t) + mean of the accepted updates
5. the global model is evaluated on the test sets of all active distributions

All randomness comes from labelled substreams of the master seed, so the same
config always yields the same metrics.
"""

import asyncio
import csv
import io
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from ..aggregators.defenses import PublicState, filter_updates, mean_of_accepted, public_thresholds
from ..aggregators.secure_check import (
    CheckCommittee,
    CheckRound,
    run_check,
    sample_committees,
    secure_aggregate,
)
from ..attacks.adaptive import AdversaryView, craft_adaptive, lambda_grid
from ..attacks.basic import additive_noise, label_flip, sign_flip
from ..attacks.manipulation import make_score_override
from ..config import DATA_DIR, ConfigError, ExperimentConfig, validate_config
from ..numerics.fixed import FixedVec
from ..numerics.model import Dataset, MlpModel, accuracy, local_train
from ..seeding import substream
from ..sharing.functionalities import share_dataset
from ..sharing.ledger import CommLedger, LedgerEntry
from ..sharing.session import MpcSession
from ..sources.base import DatasetSource
from ..sources.idx import IdxSource
from ..sources.partition import sample_validation
from ..sources.synthetic import SyntheticSource
from .population import (
    Population,
    ShiftSchedule,
    apply_shift,
    build_population,
    samples_per_client,
    union_test_set,
)

# Configure logging
logger = logging.getLogger(__name__)

METRICS_COLUMNS = (
    "round", "accuracy", "accepted_count", "accepted", "attack", "defense", "bytes_total",
)


@dataclass
class RoundMetrics:
    round: int
    accuracy: float
    accepted_bits: tuple[bool, ...]
    attack: str
    defense: str
    bytes_total: int
    distributions: tuple[int, ...] = ()
    honest: tuple[bool, ...] = ()
    ledger: dict[str, LedgerEntry] = field(default_factory=dict)

    @property
    def accepted_count(self) -> int:
        return sum(self.accepted_bits)

    @property
    def accepted_bitstring(self) -> str:
        return "".join("1" if b else "0" for b in self.accepted_bits)

    def csv_row(self) -> list:
        return [
            self.round,
            f"{self.accuracy:.6f}",
            self.accepted_count,
            self.accepted_bitstring,
            self.attack,
            self.defense,
            self.bytes_total,
        ]


@dataclass
class ExperimentState:
    config: ExperimentConfig
    source: DatasetSource
    global_model: MlpModel
    population: Population
    test_sets: dict[int, Dataset]
    pubval: Dataset
    session: MpcSession
    schedule: ShiftSchedule
    committees: Optional[CheckCommittee] = None
    round: int = 0
    prev_updates: Optional[list[np.ndarray]] = None
    prev_global_update: Optional[np.ndarray] = None
    validation_cache: dict = field(default_factory=dict)
    output_dir: Optional[Path] = None

    def test_set(self) -> Dataset:
        return union_test_set(self.test_sets, self.population.active_distributions())


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    metrics: list[RoundMetrics]
    ledger: CommLedger
    final_model: MlpModel
    initial_accuracy: float

    @property
    def final_accuracy(self) -> float:
        return self.metrics[-1].accuracy if self.metrics else self.initial_accuracy


def make_source(config: ExperimentConfig) -> DatasetSource:
    data = config.data
    if data.source == "idx":
        source = IdxSource(data.idx_images, data.idx_labels, data.num_classes, Path(DATA_DIR))
        if source.dim != data.dim:
            raise ConfigError("data.dim", f"IDX files have {source.dim} features")
        return source
    return SyntheticSource(
        num_classes=data.num_classes,
        dim=data.dim,
        separation=data.separation,
        noise=data.noise,
        rotation_deg=data.shift_rotation_deg,
        scale=data.shift_scale,
    )


def init_experiment(
    config: ExperimentConfig,
    source: Optional[DatasetSource] = None,
    output_dir: Optional[Path] = None,
) -> ExperimentState:
    """Build the population, test sets, initial model and MPC session."""
    source = source if source is not None else make_source(config)
    population, test_sets, pubval = build_population(config, source, substream(config.seed, "data"))
    model = MlpModel.init(
        config.layer_dims, substream(config.seed, "model-init"), config.model.init_scale
    )
    session = MpcSession(config.fixed, seed=config.seed, mode=config.mpc.mode)
    return ExperimentState(
        config=config,
        source=source,
        global_model=model,
        population=population,
        test_sets=test_sets,
        pubval=pubval,
        session=session,
        schedule=ShiftSchedule.from_config(config.shift, config.training.rounds),
        output_dir=output_dir,
    )


def local_update(
    state: ExperimentState, data: Dataset, rng: np.random.Generator
) -> np.ndarray:
    """Client training from the current global model with the configured optimizer."""
    t = state.config.training
    return local_train(
        state.global_model, data, t.local_epochs, t.lr, rng, t.batch_size, t.momentum
    )


def _apply_shifts(state: ExperimentState, t: int) -> None:
    config = state.config
    for event in state.schedule.events_at(t):
        apply_shift(
            state.population,
            event,
            state.source,
            substream(config.seed, "shift", t, event.distribution),
            samples_per_client=samples_per_client(config),
            alpha=config.data.alpha,
            join_honest=config.population.join_honest,
            min_client_rows=config.data.min_client_rows,
        )
        if event.distribution not in state.test_sets:
            state.test_sets[event.distribution] = state.source.sample(
                event.distribution,
                config.data.test_size,
                substream(config.seed, "test", event.distribution),
            )
        if event.kind == "join":
            state.committees = None
            state.prev_updates = None


def _validation_set(state: ExperimentState, client_id: int, t: int) -> Dataset:
    client = state.population.clients[client_id]
    size = state.config.validation.size
    if not state.config.validation.freeze:
        rng = substream(state.config.seed, "val", t, client_id)
        return sample_validation(client.data, size, rng)
    key = (client_id, client.distribution)
    if key not in state.validation_cache:
        state.validation_cache[key] = sample_validation(
            client.data, size, substream(state.config.seed, "val-frozen", *key)
        )
    return state.validation_cache[key]


def _local_updates(state: ExperimentState, t: int, attack_active: bool) -> tuple[list, list]:
    """(submitted updates, clean updates) for every client."""
    config = state.config
    attack = config.attack
    submitted, clean = [], []
    for client in state.population.clients:
        rng_label = ("train", t, client.client_id)
        clean_u = local_update(state, client.data, substream(config.seed, *rng_label))
        clean.append(clean_u)
        if client.honest or not attack_active:
            submitted.append(clean_u)
        elif attack.kind == "additive_noise":
            rng = substream(config.seed, "attack", t, client.client_id)
            submitted.append(additive_noise(clean_u, attack.noise_sigma, rng))
        elif attack.kind == "sign_flip":
            submitted.append(sign_flip(clean_u))
        elif attack.kind == "label_flip":
            flipped = label_flip(client.data)
            submitted.append(local_update(state, flipped, substream(config.seed, *rng_label)))
        else:
            # adaptive updates are crafted jointly below
            submitted.append(clean_u)
    return submitted, clean


def _public_state(state: ExperimentState, t: int) -> PublicState:
    u_pubval = None
    if state.config.defense.uses_public_data:
        u_pubval = local_update(state, state.pubval, substream(state.config.seed, "pubval", t))
    return PublicState(u_pubval, state.prev_updates, state.prev_global_update)


def _craft_adaptive(
    state: ExperimentState, submitted: list, clean: list, public: PublicState
) -> None:
    config = state.config
    population = state.population
    malicious = list(population.malicious_ids)
    view = AdversaryView(
        malicious_ids=tuple(malicious),
        clean_data=Dataset.concat([population.clients[i].data for i in malicious]),
        clean_updates=[clean[i] for i in malicious],
        global_model=state.global_model,
        defense_kind=config.defense.kind,
        thresholds=public_thresholds(config.defense.kind, config.defense.lam, public),
    )
    grid = lambda_grid(
        config.attack.lambda_min, config.attack.lambda_max, config.attack.lambda_points
    )
    result = craft_adaptive(view, grid)
    if result.lam is not None:
        logger.debug(f"Adaptive attack chose lambda={result.lam:g} (accepted={result.accepted})")
    for i, poisoned in zip(malicious, result.updates):
        submitted[i] = poisoned


def _secure_round(
    state: ExperimentState, t: int, updates: list, attack_active: bool
) -> tuple[np.ndarray, np.ndarray, int]:
    config = state.config
    session = state.session
    population = state.population
    if state.committees is None or config.defense.resample_committees:
        kappa = session.rand_common(f"committee/{t}")
        state.committees = sample_committees(population.m, population.m_c, kappa)

    shared_updates = [
        session.share_real(u, substream(config.seed, "share", t, i)) for i, u in enumerate(updates)
    ]
    validation = [
        share_dataset(
            session, _validation_set(state, i, t), substream(config.seed, "share-val", t, i)
        )
        for i in range(population.m)
    ]
    check = CheckRound(
        updates=shared_updates,
        validation=validation,
        global_params=FixedVec.from_real(state.global_model.params, config.fixed),
        layer_dims=config.layer_dims,
        committees=state.committees,
        variant=config.defense.score_variant,
        norm_lambda=config.defense.slvr_norm_lambda,
        use_norm_check=config.norm_check_enabled,
        k_frac=config.defense.top_k_fraction,
    )
    override = None
    if attack_active and config.attack.kind == "adaptive" and config.attack.extreme_manipulation:
        override = make_score_override(
            population.honest_flags, check.variant, config.data.num_classes
        )

    result = run_check(session, check, override)
    aggregate = secure_aggregate(session, shared_updates, result.accept_bits)

    # Per-client bits are simulation bookkeeping read through the debug path.
    outcome = result.reveal(session)
    if config.output.debug_scores and state.output_dir is not None:
        state.output_dir.mkdir(parents=True, exist_ok=True)
        outcome.to_csv(state.output_dir / f"scores_round_{t:04d}.csv")
    return outcome.accept_bits, aggregate.update, aggregate.accepted


def run_round(
    state: ExperimentState, config: Optional[ExperimentConfig] = None
) -> tuple[MlpModel, RoundMetrics]:
    """Advance the experiment by one round.

    Args:
        state: Mutable experiment state; updated in place
        config: Overrides state.config for this round when given

    Returns:
        (new global model, metrics of the round)
    """
    if config is not None:
        state.config = config
    config = state.config
    t = state.round

    _apply_shifts(state, t)
    population = state.population
    attack_active = (
        config.attack.kind != "none"
        and t >= config.attack.start_round
        and bool(population.malicious_ids)
    )

    submitted, clean = _local_updates(state, t, attack_active)
    public = _public_state(state, t)
    if attack_active and config.attack.kind == "adaptive":
        _craft_adaptive(state, submitted, clean, public)

    if config.defense.is_shared_check:
        bits, aggregate, count = _secure_round(state, t, submitted, attack_active)
    else:
        bits = filter_updates(config.defense.kind, config.defense.lam, submitted, public)
        aggregate, count = mean_of_accepted(submitted, bits)

    if count:
        state.global_model = state.global_model.with_params(state.global_model.params + aggregate)
        state.prev_global_update = aggregate
    state.prev_updates = submitted
    state.round += 1

    acc = accuracy(state.global_model, state.test_set())
    metrics = RoundMetrics(
        round=t,
        accuracy=acc,
        accepted_bits=tuple(bool(b) for b in bits),
        attack=config.attack.kind if attack_active else "none",
        defense=config.defense.kind,
        bytes_total=state.session.ledger.total_bytes,
        distributions=population.distributions,
        honest=population.honest_flags,
        ledger=state.session.ledger.snapshot(),
    )
    logger.info(f"Round {t}: accuracy={acc:.4f} accepted={metrics.accepted_count}/{population.m}")
    return state.global_model, metrics


def run_experiment(
    config: ExperimentConfig,
    *,
    source: Optional[DatasetSource] = None,
    output_dir: Optional[Path] = None,
    on_round: Optional[Callable[[RoundMetrics], None]] = None,
) -> ExperimentResult:
    """Run config.training.rounds rounds and collect the metrics series."""
    validate_config(config)
    state = init_experiment(config, source, output_dir)
    initial = accuracy(state.global_model, state.test_set())
    metrics = []
    for _ in range(config.training.rounds):
        _, round_metrics = run_round(state)
        metrics.append(round_metrics)
        if on_round is not None:
            on_round(round_metrics)
    logger.info(
        f"Experiment {config.defense.kind}/{config.attack.kind} seed={config.seed} "
        f"finished at accuracy {metrics[-1].accuracy if metrics else initial:.4f}"
    )
    return ExperimentResult(config, metrics, state.session.ledger, state.global_model, initial)


def metrics_to_csv(metrics: list[RoundMetrics]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(METRICS_COLUMNS)
    for m in metrics:
        writer.writerow(m.csv_row())
    return buffer.getvalue()


def write_metrics_csv(metrics: list[RoundMetrics], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(metrics_to_csv(metrics))
    return path


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

@dataclass
class SweepResult:
    defenses: tuple[str, ...]
    attacks: tuple[str, ...]
    cells: dict[tuple[str, str], Optional[float]]

    def min_across_attacks(self, defense: str) -> Optional[float]:
        values = [self.cells.get((defense, a)) for a in self.attacks]
        if any(v is None for v in values) or not values:
            return None
        return min(values)

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["defense", *self.attacks, "min_across_attacks"])
        for d in self.defenses:
            row = [d]
            for a in self.attacks:
                value = self.cells.get((d, a))
                row.append("" if value is None else f"{value:.6f}")
            worst = self.min_across_attacks(d)
            row.append("" if worst is None else f"{worst:.6f}")
            writer.writerow(row)
        return buffer.getvalue()


def cell_config(config: ExperimentConfig, defense: str, attack: str, seed: int) -> ExperimentConfig:
    return validate_config(
        replace(
            config,
            seed=seed,
            defense=replace(config.defense, kind=defense),
            attack=replace(config.attack, kind=attack),
        )
    )


def run_cell(config: ExperimentConfig, defense: str, attack: str) -> float:
    """Final accuracy of (defense, attack) averaged over the sweep seeds."""
    finals = [
        run_experiment(cell_config(config, defense, attack, seed)).final_accuracy
        for seed in config.sweep.seeds
    ]
    return float(np.mean(finals))


async def run_sweep(config: ExperimentConfig) -> SweepResult:
    """Run every (defense, attack) cell concurrently; failed cells stay empty."""
    pairs = [(d, a) for d in config.sweep.defenses for a in config.sweep.attacks]
    results = await asyncio.gather(
        *[asyncio.to_thread(run_cell, config, d, a) for d, a in pairs],
        return_exceptions=True,
    )
    cells: dict[tuple[str, str], Optional[float]] = {}
    for (d, a), result in zip(pairs, results):
        if isinstance(result, Exception):
            logger.error(f"Sweep cell {d}/{a} failed: {result}")
            cells[(d, a)] = None
        else:
            cells[(d, a)] = result
    return SweepResult(config.sweep.defenses, config.sweep.attacks, cells)
