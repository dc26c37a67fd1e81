"""
Communication cost of one shared check, broken down by component.

Builds a population, trains one round of honest updates and runs the check
pieces one after another, reading the ledger delta of each. Grids over hidden
width and client count show how cost scales with model size and population.
"""

import csv
import io
import logging
from dataclasses import dataclass, replace
from pathlib import Path

from ..aggregators.secure_check import (
    norm_check,
    sample_committees,
    score_acc,
    score_prob,
    secure_aggregate,
    select_top_k,
    trimmed_mean,
)
from ..config import ExperimentConfig, validate_config
from ..numerics.fixed import FixedVec
from ..numerics.model import param_count
from ..seeding import substream
from ..sharing.functionalities import share_dataset
from ..sharing.ledger import CommLedger
from .runner import init_experiment, local_update

# Configure logging
logger = logging.getLogger(__name__)

BENCH_COLUMNS = (
    "model_params", "clients", "variant", "component",
    "subprotocol", "invocations", "bytes", "rounds",
)


@dataclass
class BenchRow:
    model_params: int
    clients: int
    variant: str
    component: str
    subprotocol: str
    invocations: int
    bytes: int
    rounds: int

    def as_list(self) -> list:
        return [
            self.model_params, self.clients, self.variant, self.component,
            self.subprotocol, self.invocations, self.bytes, self.rounds,
        ]


def _rows(config: ExperimentConfig, variant: str, component: str, delta: CommLedger):
    params = param_count(config.layer_dims)
    return [
        BenchRow(params, config.population.clients, variant, component, name, inv, nbytes, rnds)
        for name, inv, nbytes, rnds in delta.rows()
    ]


def bench_check(config: ExperimentConfig, variant: str) -> list[BenchRow]:
    """Ledger deltas of each check component for one configuration and variant."""
    state = init_experiment(config)
    session = state.session
    population = state.population
    layer_dims = config.layer_dims
    rows: list[BenchRow] = []

    def measure(component, fn):
        before = session.ledger.snapshot()
        out = fn()
        rows.extend(_rows(config, variant, component, session.ledger.diff(before)))
        return out

    updates = [
        local_update(state, c.data, substream(config.seed, "bench-train", c.client_id))
        for c in population.clients
    ]
    committees = sample_committees(
        population.m, population.m_c, session.rand_common("bench-committee")
    )

    def share_inputs():
        shared = [
            session.share_real(u, substream(config.seed, "bench-share", i))
            for i, u in enumerate(updates)
        ]
        validation = [
            share_dataset(session, c.data.subset(range(min(config.validation.size, len(c.data)))))
            for c in population.clients
        ]
        return shared, validation

    shared, validation = measure("share", share_inputs)
    global_fixed = FixedVec.from_real(state.global_model.params, config.fixed)
    w_prev = session.public(global_fixed.data)
    models = [session.add_public(u, global_fixed.data) for u in shared]

    def cross_check():
        scores = []
        for i in range(population.m):
            row = []
            for j in committees[i]:
                if variant == "acc":
                    row.append(score_acc(session, models[i], w_prev, validation[j], layer_dims))
                else:
                    row.append(score_prob(session, models[i], validation[j], layer_dims))
            scores.append(trimmed_mean(session, row, committees.m_c))
        return scores

    client_scores = measure("cross_check", cross_check)
    k_frac = config.defense.top_k_fraction or 1.0 - population.m_c / population.m
    topk = measure("top_k", lambda: select_top_k(session, client_scores, k_frac))
    norm_bits = measure(
        "norm_check", lambda: norm_check(session, shared, config.defense.slvr_norm_lambda)
    )

    def aggregate():
        accept = [session.mult(t, b) for t, b in zip(topk, norm_bits)]
        return secure_aggregate(session, shared, accept)

    measure("aggregate", aggregate)
    logger.info(
        f"Bench {variant}: {param_count(layer_dims)} params, {population.m} clients, "
        f"{session.ledger.total_bytes} bytes"
    )
    return rows


def bench_configs(config: ExperimentConfig) -> list[ExperimentConfig]:
    """The configuration grid: hidden widths x client counts."""
    widths = config.bench.hidden_widths or (None,)
    counts = config.bench.client_counts or (config.population.clients,)
    grid = []
    for width in widths:
        model = config.model if width is None else replace(config.model, hidden=(width,))
        for clients in counts:
            population = replace(config.population, clients=clients)
            data = replace(config.data, train_size=max(config.data.train_size, clients))
            cell = replace(
                config,
                model=model,
                population=population,
                data=data,
                training=replace(config.training, rounds=1),
            )
            grid.append(validate_config(cell))
    return grid


def run_bench(config: ExperimentConfig) -> list[BenchRow]:
    rows = []
    for cfg in bench_configs(config):
        for variant in ("acc", "prob"):
            rows.extend(bench_check(cfg, variant))
    return rows


def bench_to_csv(rows: list[BenchRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(BENCH_COLUMNS)
    for row in rows:
        writer.writerow(row.as_list())
    return buffer.getvalue()


def write_bench_csv(rows: list[BenchRow], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(bench_to_csv(rows))
    return path


def component_bytes(rows: list[BenchRow], component: str, variant: str) -> dict[tuple, int]:
    """Total bytes of one component per (model_params, clients)."""
    totals: dict[tuple, int] = {}
    for row in rows:
        if row.component == component and row.variant == variant:
            key = (row.model_params, row.clients)
            totals[key] = totals.get(key, 0) + row.bytes
    return totals
