"""
Command-line front end.

    crosscheck run configs/example.yaml --out runs/demo
    crosscheck sweep configs/example.yaml --seed 41
    crosscheck bench configs/example.yaml

Every subcommand reads one YAML experiment config. Output files land in
output.dir (or --out): metrics.csv and ledger.csv for run, sweep.csv for
sweep, bench.csv for bench. Diagnostics go to stderr.
"""

import argparse
import asyncio
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .config import (
    DATA_DIR,
    IDX_BASE_URL,
    LOG_LEVEL,
    ConfigError,
    ExperimentConfig,
    load_config,
    validate_config,
)
from .federation.bench import run_bench, write_bench_csv
from .federation.runner import run_experiment, run_sweep, write_metrics_csv
from .sources.idx import IdxSource
from .storage.metrics_store import MetricsStore

# Configure logging
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


def _apply_flags(config: ExperimentConfig, args: argparse.Namespace) -> ExperimentConfig:
    output = config.output
    if args.out is not None:
        output = replace(output, dir=str(args.out))
    if args.debug_scores:
        output = replace(output, debug_scores=True)
    config = replace(config, output=output)
    if args.seed is not None:
        config = replace(config, seed=args.seed, sweep=replace(config.sweep, seeds=(args.seed,)))
    return validate_config(config)


def _fetch_idx(config: ExperimentConfig) -> None:
    """Download missing IDX files when a base URL is configured."""
    data = config.data
    if data.source != "idx" or not IDX_BASE_URL:
        return
    source = IdxSource(data.idx_images, data.idx_labels, data.num_classes, Path(DATA_DIR))
    asyncio.run(source.ensure_files(IDX_BASE_URL))


def _load(args: argparse.Namespace) -> ExperimentConfig:
    config = _apply_flags(load_config(args.config), args)
    _fetch_idx(config)
    return config


def cmd_run(args: argparse.Namespace) -> int:
    """Run one experiment and write metrics.csv, ledger.csv and summary.json."""
    config = _load(args)
    out_dir = Path(config.output.dir)
    result = run_experiment(config, output_dir=out_dir)

    metrics_path = write_metrics_csv(result.metrics, out_dir / config.output.metrics_file)
    result.ledger.to_csv(out_dir / config.output.ledger_file)
    summary = {
        "defense": config.defense.kind,
        "attack": config.attack.kind,
        "seed": config.seed,
        "rounds": len(result.metrics),
        "initial_accuracy": round(result.initial_accuracy, 6),
        "final_accuracy": round(result.final_accuracy, 6),
        "bytes_total": result.ledger.total_bytes,
    }
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")

    if args.db:
        MetricsStore(args.db).record_run(result)

    print(f"final accuracy {result.final_accuracy:.4f} -> {metrics_path}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    """Run the defense x attack grid and write the final-accuracy matrix."""
    config = _load(args)
    result = asyncio.run(run_sweep(config))
    path = Path(config.output.dir) / config.output.sweep_file
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(result.to_csv())

    failed = [cell for cell, value in result.cells.items() if value is None]
    if failed:
        print(f"{len(failed)} sweep cells failed, see log", file=sys.stderr)
    print(f"sweep of {len(result.cells)} cells -> {path}")
    return EXIT_FAILURE if failed else EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    """Measure per-component communication of the shared check."""
    config = _load(args)
    rows = run_bench(config)
    path = write_bench_csv(rows, Path(config.output.dir) / config.output.bench_file)
    print(f"{len(rows)} ledger rows -> {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="YAML experiment config")
    common.add_argument("--out", type=Path, help="Output directory (overrides output.dir)")
    common.add_argument("--seed", type=int, help="Master seed (overrides seed and sweep.seeds)")
    common.add_argument(
        "--debug-scores",
        action="store_true",
        help="Dump per-round check score matrices (simulation only)",
    )
    common.add_argument("--db", type=Path, help="SQLite file for run history")
    common.add_argument(
        "--log-level", default=LOG_LEVEL, help="Logging level (default: %(default)s)"
    )

    parser = argparse.ArgumentParser(
        prog="crosscheck",
        description="Simulator for robust, privacy-preserving federated learning",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="Run one experiment").set_defaults(
        handler=cmd_run
    )
    sub.add_parser("sweep", parents=[common], help="Run a defense x attack grid").set_defaults(
        handler=cmd_sweep
    )
    sub.add_parser("bench", parents=[common], help="Communication cost table").set_defaults(
        handler=cmd_bench
    )
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=str(args.log_level).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    try:
        return args.handler(args)
    except FileNotFoundError as e:
        print(str(e), file=sys.stderr)
        return EXIT_FAILURE
    except ConfigError as e:
        print(f"invalid config: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:
        logger.exception(f"{args.command} failed")
        print(f"Error executing {args.command}: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
