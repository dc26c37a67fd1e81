"""
SQLite history of experiment runs.

Two tables:

- runs: one row per run (run id, seed, defense, attack, final accuracy,
  total bytes, canonical config YAML)
- rounds: one row per (run id, round) with the metrics CSV columns

The run id is derived from the canonical config, so re-running the same
config replaces its rows instead of duplicating them.
"""

import hashlib
import logging
from pathlib import Path
from typing import Optional, Union

import sqlite_utils

from ..config import ExperimentConfig, dump_config
from ..federation.runner import ExperimentResult

# Configure logging
logger = logging.getLogger(__name__)


def run_id_for(config: ExperimentConfig) -> str:
    return hashlib.sha256(dump_config(config).encode("utf-8")).hexdigest()[:16]


class MetricsStore:
    """Thin wrapper over a sqlite-utils database."""

    def __init__(self, path: Union[str, Path, None] = None):
        """
        Open (or create) the history database.

        Args:
            path: Database file; None keeps everything in memory
        """
        if path is None:
            self.db = sqlite_utils.Database(memory=True)
        else:
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            self.db = sqlite_utils.Database(path)

    def record_run(self, result: ExperimentResult, run_id: Optional[str] = None) -> str:
        config = result.config
        run_id = run_id or run_id_for(config)
        self.db["runs"].insert(
            {
                "run_id": run_id,
                "seed": config.seed,
                "defense": config.defense.kind,
                "attack": config.attack.kind,
                "rounds": len(result.metrics),
                "final_accuracy": result.final_accuracy,
                "bytes_total": result.ledger.total_bytes,
                "config": dump_config(config),
            },
            pk="run_id",
            replace=True,
        )
        if self.db["rounds"].exists():
            self.db["rounds"].delete_where("run_id = ?", [run_id])
        self.db["rounds"].insert_all(
            (
                {
                    "run_id": run_id,
                    "round": m.round,
                    "accuracy": m.accuracy,
                    "accepted_count": m.accepted_count,
                    "accepted": m.accepted_bitstring,
                    "attack": m.attack,
                    "defense": m.defense,
                    "bytes_total": m.bytes_total,
                }
                for m in result.metrics
            ),
            pk=("run_id", "round"),
            replace=True,
        )
        logger.info(f"Stored run {run_id} ({len(result.metrics)} rounds)")
        return run_id

    def runs(self) -> list[dict]:
        if not self.db["runs"].exists():
            return []
        return list(self.db["runs"].rows_where(order_by="run_id"))

    def rounds(self, run_id: str) -> list[dict]:
        if not self.db["rounds"].exists():
            return []
        return list(self.db["rounds"].rows_where("run_id = ?", [run_id], order_by="round"))

    def final_accuracies(self, defense: str, attack: str) -> list[float]:
        if not self.db["runs"].exists():
            return []
        rows = self.db["runs"].rows_where(
            "defense = ? and attack = ?", [defense, attack], order_by="seed"
        )
        return [row["final_accuracy"] for row in rows]
