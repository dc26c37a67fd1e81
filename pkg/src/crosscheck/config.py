"""
Configuration management for Crosscheck.

Two layers:

- Environment settings loaded from a .env file at import (output and data
  directories, log level, IDX download URL)
- ExperimentConfig, the declarative description of one run, read from YAML
"""

from __future__ import annotations

import dataclasses
import logging
import os
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Literal, Mapping, Optional, Union

import yaml

from .numerics.fixed import FixedParams
from .numerics.model import param_count

# Configure logging
logger = logging.getLogger(__name__)


def load_env():
    """
    Load environment variables from .env file if it exists.

    Reads KEY=VALUE pairs; values already present in the environment win.
    """
    env_file = Path(__file__).parent.parent.parent / ".env"

    if not env_file.exists():
        return

    with open(env_file) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith('#') or '=' not in line:
                continue

            key, value = line.split('=', 1)
            key = key.strip()
            value = value.strip()
            if len(value) >= 2 and value[0] == value[-1] and value[0] in ('"', "'"):
                value = value[1:-1]

            if key and not os.getenv(key):
                os.environ[key] = value


# Auto-load on import
load_env()


OUTPUT_DIR = os.getenv("CROSSCHECK_OUTPUT_DIR", "runs")
DATA_DIR = os.getenv("CROSSCHECK_DATA_DIR", "data")
LOG_LEVEL = os.getenv("CROSSCHECK_LOG_LEVEL", "WARNING")
IDX_BASE_URL = os.getenv("CROSSCHECK_IDX_BASE_URL")


class ConfigError(ValueError):
    """Invalid experiment configuration; the message starts with the dotted field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


DEFENSE_KINDS = (
    "norm_bound_adaptive",
    "norm_bound_public",
    "norm_ball",
    "cosine_sim",
    "slvr_acc",
    "slvr_prob",
    "fedavg_plain",
)
SHARED_CHECK_KINDS = ("slvr_acc", "slvr_prob")
PUBLIC_DATA_KINDS = ("norm_bound_public", "norm_ball", "cosine_sim")
ATTACK_KINDS = ("none", "additive_noise", "sign_flip", "label_flip", "adaptive")

DefenseKind = Literal[
    "norm_bound_adaptive",
    "norm_bound_public",
    "norm_ball",
    "cosine_sim",
    "slvr_acc",
    "slvr_prob",
    "fedavg_plain",
]
AttackKind = Literal["none", "additive_noise", "sign_flip", "label_flip", "adaptive"]


@dataclass(frozen=True)
class PopulationConfig:
    clients: int = 20
    malicious: int = 2
    join_honest: bool = True


@dataclass(frozen=True)
class DataConfig:
    source: Literal["synthetic", "idx"] = "synthetic"
    num_classes: int = 2
    dim: int = 2
    train_size: int = 2000
    test_size: int = 1000
    pubval_size: int = 8000
    # redraw the Dirichlet split until every client holds this many rows
    min_client_rows: int = 1
    separation: float = 2.0
    noise: float = 1.0
    alpha: float = 0.5
    shift_rotation_deg: float = 90.0
    shift_scale: float = 3.0
    # IDX files per distribution id
    idx_images: tuple[str, ...] = ()
    idx_labels: tuple[str, ...] = ()


@dataclass(frozen=True)
class ModelConfig:
    hidden: tuple[int, ...] = ()
    init_scale: float = 0.0


@dataclass(frozen=True)
class TrainingConfig:
    rounds: int = 150
    local_epochs: int = 1
    lr: float = 0.01
    batch_size: int = 32
    momentum: float = 0.0


@dataclass(frozen=True)
class ValidationConfig:
    size: int = 10
    freeze: bool = False


@dataclass(frozen=True)
class DefenseConfig:
    kind: DefenseKind = "slvr_acc"
    norm_bound_lambda: float = 1.5
    norm_ball_lambda: float = 1.0
    cosine_lambda: float = 0.5
    slvr_norm_lambda: float = 1.5
    # None: on for robustness runs, off when a shift schedule is configured
    norm_check: Optional[bool] = None
    resample_committees: bool = False
    top_k_fraction: Optional[float] = None

    @property
    def is_shared_check(self) -> bool:
        return self.kind in SHARED_CHECK_KINDS

    @property
    def uses_public_data(self) -> bool:
        return self.kind in PUBLIC_DATA_KINDS

    @property
    def score_variant(self) -> str:
        return "prob" if self.kind == "slvr_prob" else "acc"

    @property
    def lam(self) -> float:
        """Multiplier used by the configured kind."""
        return {
            "norm_bound_adaptive": self.norm_bound_lambda,
            "norm_ball": self.norm_ball_lambda,
            "cosine_sim": self.cosine_lambda,
            "slvr_acc": self.slvr_norm_lambda,
            "slvr_prob": self.slvr_norm_lambda,
        }.get(self.kind, 1.0)


@dataclass(frozen=True)
class AttackConfig:
    kind: AttackKind = "none"
    noise_sigma: float = 1.0
    lambda_min: float = 1e-5
    lambda_max: float = 1e-1
    lambda_points: int = 20
    extreme_manipulation: bool = True
    start_round: int = 0


@dataclass(frozen=True)
class MpcConfig:
    mode: Literal["protocol", "ideal"] = "protocol"


@dataclass(frozen=True)
class ShiftEventConfig:
    round: int
    kind: Literal["evolve", "join"] = "evolve"
    count: int = 1
    distribution: int = 1


@dataclass(frozen=True)
class ShiftConfig:
    events: tuple[ShiftEventConfig, ...] = ()
    # Periodic schedule: every `every` rounds, starting at `every`
    every: int = 0
    kind: Literal["evolve", "join"] = "evolve"
    count: int = 0

    @property
    def active(self) -> bool:
        return bool(self.events) or (self.every > 0 and self.count > 0)


@dataclass(frozen=True)
class OutputConfig:
    dir: str = OUTPUT_DIR
    metrics_file: str = "metrics.csv"
    ledger_file: str = "ledger.csv"
    sweep_file: str = "sweep.csv"
    bench_file: str = "bench.csv"
    debug_scores: bool = False


@dataclass(frozen=True)
class SweepConfig:
    defenses: tuple[DefenseKind, ...] = DEFENSE_KINDS
    attacks: tuple[AttackKind, ...] = ATTACK_KINDS
    seeds: tuple[int, ...] = (40,)


@dataclass(frozen=True)
class BenchConfig:
    hidden_widths: tuple[int, ...] = ()
    client_counts: tuple[int, ...] = ()


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 40
    population: PopulationConfig = field(default_factory=PopulationConfig)
    data: DataConfig = field(default_factory=DataConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    validation: ValidationConfig = field(default_factory=ValidationConfig)
    defense: DefenseConfig = field(default_factory=DefenseConfig)
    attack: AttackConfig = field(default_factory=AttackConfig)
    fixed: FixedParams = field(default_factory=FixedParams)
    mpc: MpcConfig = field(default_factory=MpcConfig)
    shift: ShiftConfig = field(default_factory=ShiftConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    bench: BenchConfig = field(default_factory=BenchConfig)

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return (self.data.dim, *self.model.hidden, self.data.num_classes)

    @property
    def num_params(self) -> int:
        return param_count(self.layer_dims)

    @property
    def norm_check_enabled(self) -> bool:
        if self.defense.norm_check is not None:
            return self.defense.norm_check
        return not self.shift.active


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _coerce(tp: Any, value: Any, path: str) -> Any:
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)

    if tp is Any:
        return value

    if origin is Union or (hasattr(types, "UnionType") and origin is types.UnionType):
        if value is None:
            if type(None) in args:
                return None
            raise ConfigError(path, "must not be null")
        inner = [a for a in args if a is not type(None)]
        return _coerce(inner[0], value, path)

    if origin is Literal:
        if value not in args:
            choices = ", ".join(str(a) for a in args)
            raise ConfigError(path, f"must be one of {{{choices}}}, got {value!r}")
        return value

    if origin in (tuple, list):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(path, f"expected a list, got {type(value).__name__}")
        item_type = args[0] if args else Any
        return tuple(_coerce(item_type, v, f"{path}[{i}]") for i, v in enumerate(value))

    if dataclasses.is_dataclass(tp):
        return _build(tp, value, path)

    if value is None:
        raise ConfigError(path, "must not be null")
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, str):
            # YAML 1.1 reads "1e-5" (no dot) as a string
            try:
                return float(value)
            except ValueError:
                raise ConfigError(path, f"expected a number, got {value!r}") from None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, f"expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    raise ConfigError(path, f"unsupported field type {tp!r}")


def _build(cls: type, data: Any, path: str) -> Any:
    if data is None:
        data = {}
    if not isinstance(data, Mapping):
        raise ConfigError(path, f"expected a mapping, got {type(data).__name__}")

    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(_join(path, str(unknown[0])), "unknown key")

    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name in data:
            kwargs[f.name] = _coerce(hints[f.name], data[f.name], _join(path, f.name))
        elif f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
            raise ConfigError(_join(path, f.name), "required")
    try:
        return cls(**kwargs)
    except ValueError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(path, str(e)) from e


def _require(condition: bool, path: str, message: str) -> None:
    if not condition:
        raise ConfigError(path, message)


def validate_config(config: ExperimentConfig) -> ExperimentConfig:
    """Range and cross-field checks.

    Raises:
        ConfigError: Naming the first offending field
    """
    pop, data, train, val = config.population, config.data, config.training, config.validation
    defense, attack = config.defense, config.attack

    _require(config.seed >= 0, "seed", "must be non-negative")
    _require(pop.clients >= 1, "population.clients", "must be at least 1")
    _require(0 <= pop.malicious <= pop.clients, "population.malicious", "must be in [0, clients]")
    _require(data.num_classes >= 2, "data.num_classes", "must be at least 2")
    _require(data.dim >= 1, "data.dim", "must be at least 1")
    _require(data.min_client_rows >= 1, "data.min_client_rows", "must be positive")
    _require(
        data.train_size >= pop.clients * data.min_client_rows,
        "data.train_size",
        "must give every client min_client_rows rows",
    )
    _require(data.test_size >= 1, "data.test_size", "must be positive")
    _require(data.pubval_size >= 0, "data.pubval_size", "must be non-negative")
    _require(data.alpha > 0, "data.alpha", "must be positive")
    _require(data.noise >= 0, "data.noise", "must be non-negative")
    _require(data.shift_scale > 0, "data.shift_scale", "must be positive")
    if data.source == "idx":
        _require(bool(data.idx_images), "data.idx_images", "required for the idx source")
        _require(
            len(data.idx_images) == len(data.idx_labels),
            "data.idx_labels",
            "must list one file per entry of data.idx_images",
        )
    _require(all(h >= 1 for h in config.model.hidden), "model.hidden", "widths must be positive")
    _require(config.model.init_scale >= 0, "model.init_scale", "must be non-negative")

    _require(train.rounds >= 0, "training.rounds", "must be non-negative")
    _require(train.local_epochs >= 0, "training.local_epochs", "must be non-negative")
    _require(train.lr > 0, "training.lr", "must be positive")
    _require(train.batch_size >= 1, "training.batch_size", "must be positive")
    _require(0 <= train.momentum < 1, "training.momentum", "must be in [0, 1)")
    _require(val.size >= 1, "validation.size", "must be positive")

    for name in ("norm_bound_lambda", "norm_ball_lambda", "cosine_lambda", "slvr_norm_lambda"):
        _require(getattr(defense, name) > 0, f"defense.{name}", "must be positive")
    if defense.top_k_fraction is not None:
        _require(0 < defense.top_k_fraction <= 1, "defense.top_k_fraction", "must be in (0, 1]")
    if defense.uses_public_data:
        _require(data.pubval_size > 0, "data.pubval_size", f"{defense.kind} needs public data")
    if defense.is_shared_check:
        m, m_c = pop.clients, pop.malicious
        _require(
            2 * m_c + 1 <= m - 1,
            "population.malicious",
            f"committee of 2*{m_c}+1 validators needs more than {m - 1} other clients",
        )
        _require(2 * m_c < m, "population.malicious", "an honest majority is required")

    _require(attack.noise_sigma >= 0, "attack.noise_sigma", "must be non-negative")
    _require(attack.lambda_min > 0, "attack.lambda_min", "must be positive")
    _require(
        attack.lambda_max >= attack.lambda_min, "attack.lambda_max", "must be >= lambda_min"
    )
    _require(attack.lambda_points >= 1, "attack.lambda_points", "must be positive")
    _require(attack.start_round >= 0, "attack.start_round", "must be non-negative")

    last = -1
    for i, event in enumerate(config.shift.events):
        path = f"shift.events[{i}]"
        _require(event.round >= 0, f"{path}.round", "must be non-negative")
        _require(event.round >= last, f"{path}.round", "events must be in round order")
        _require(event.count >= 1, f"{path}.count", "must be positive")
        _require(event.distribution >= 1, f"{path}.distribution", "must be at least 1")
        last = event.round
    _require(config.shift.every >= 0, "shift.every", "must be non-negative")
    _require(config.shift.count >= 0, "shift.count", "must be non-negative")

    _require(bool(config.sweep.seeds), "sweep.seeds", "must not be empty")
    _require(all(s >= 0 for s in config.sweep.seeds), "sweep.seeds", "must be non-negative")
    _require(all(w >= 1 for w in config.bench.hidden_widths), "bench.hidden_widths",
             "widths must be positive")
    _require(all(c >= 4 for c in config.bench.client_counts), "bench.client_counts",
             "need at least 4 clients for a committee")
    return config


def parse_config(data: Optional[Mapping[str, Any]]) -> ExperimentConfig:
    """Build and validate an ExperimentConfig from a plain mapping."""
    return validate_config(_build(ExperimentConfig, data, ""))


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read a YAML experiment config.

    Raises:
        FileNotFoundError: If path does not exist
        ConfigError: If the file is not valid YAML or fails validation
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as e:
        raise ConfigError("", f"{path}: invalid YAML ({e})") from e
    return parse_config(data)


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def config_to_dict(config: ExperimentConfig) -> dict[str, Any]:
    """Canonical plain-data form (every field present, lists not tuples)."""
    return _plain(dataclasses.asdict(config))


def dump_config(config: ExperimentConfig) -> str:
    return yaml.safe_dump(config_to_dict(config), sort_keys=False)
