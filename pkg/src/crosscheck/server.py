"""Crosscheck MCP Server - run experiments, sweeps and benches as tools."""

import asyncio
import logging
from dataclasses import replace
from datetime import datetime
from typing import Any, Optional

import yaml
from mcp.server import Server
from mcp.server.stdio import stdio_server
from mcp.types import TextContent, Tool

from .config import (
    ConfigError,
    ExperimentConfig,
    dump_config,
    load_config,
    parse_config,
    validate_config,
)
from .federation.bench import component_bytes, run_bench
from .federation.runner import ExperimentResult, SweepResult, run_experiment, run_sweep

# Configure logging
logger = logging.getLogger(__name__)

# Initialize the MCP server
server = Server("crosscheck")

_CONFIG_PROPERTIES = {
    "config_path": {
        "type": "string",
        "description": "Path to a YAML experiment config",
    },
    "config_yaml": {
        "type": "string",
        "description": "Inline YAML experiment config (used when config_path is absent)",
    },
}


@server.list_tools()
async def list_tools() -> list[Tool]:
    """List the simulator entry points as MCP tools."""
    return [
        Tool(
            name="run_experiment",
            description=(
                "Run one federated learning experiment from a YAML config and report the "
                "accuracy curve, accepted-client counts and total communication."
            ),
            inputSchema={
                "type": "object",
                "properties": {
                    **_CONFIG_PROPERTIES,
                    "seed": {"type": "number", "description": "Override the master seed"},
                    "rounds": {"type": "number", "description": "Override training.rounds"},
                },
                "required": [],
            },
        ),
        Tool(
            name="run_sweep",
            description=(
                "Run every (defense, attack) pair of the config's sweep section and report "
                "the final-accuracy matrix with the worst case per defense."
            ),
            inputSchema={
                "type": "object",
                "properties": dict(_CONFIG_PROPERTIES),
                "required": [],
            },
        ),
        Tool(
            name="run_bench",
            description=(
                "Measure bytes exchanged by each component of the shared check across the "
                "config's bench grid of hidden widths and client counts."
            ),
            inputSchema={
                "type": "object",
                "properties": dict(_CONFIG_PROPERTIES),
                "required": [],
            },
        ),
        Tool(
            name="describe_config",
            description=(
                "Validate a config and return its canonical form with every default filled in."
            ),
            inputSchema={
                "type": "object",
                "properties": dict(_CONFIG_PROPERTIES),
                "required": [],
            },
        ),
    ]


def resolve_config(arguments: dict[str, Any]) -> ExperimentConfig:
    """
    Build the experiment config named by tool arguments.

    Raises:
        ConfigError: If neither config_path nor config_yaml is usable
        FileNotFoundError: If config_path does not exist
    """
    if arguments.get("config_path"):
        config = load_config(arguments["config_path"])
    elif arguments.get("config_yaml") is not None:
        try:
            data = yaml.safe_load(arguments["config_yaml"])
        except yaml.YAMLError as e:
            raise ConfigError("", f"invalid YAML ({e})") from e
        config = parse_config(data)
    else:
        config = parse_config({})

    if arguments.get("seed") is not None:
        config = replace(config, seed=int(arguments["seed"]))
    if arguments.get("rounds") is not None:
        training = replace(config.training, rounds=int(arguments["rounds"]))
        config = replace(config, training=training)
    return validate_config(config)


def format_experiment(result: ExperimentResult) -> str:
    config = result.config
    report = f"# Experiment: {config.defense.kind} vs {config.attack.kind}\n\n"
    report += f"- Seed: {config.seed}\n"
    report += f"- Clients: {config.population.clients} ({config.population.malicious} malicious)\n"
    report += f"- Initial accuracy: {result.initial_accuracy:.4f}\n"
    report += f"- Final accuracy: {result.final_accuracy:.4f}\n"
    report += f"- Communication: {result.ledger.total_bytes:,} bytes\n\n"

    if result.metrics:
        report += "| round | accuracy | accepted |\n|---|---|---|\n"
        step = max(1, len(result.metrics) // 10)
        shown = result.metrics[::step]
        if shown[-1] is not result.metrics[-1]:
            shown.append(result.metrics[-1])
        for m in shown:
            report += f"| {m.round} | {m.accuracy:.4f} | {m.accepted_count} |\n"

    report += f"\n*Generated on {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}*"
    return report


def format_sweep(result: SweepResult) -> str:
    report = "# Sweep: final accuracy\n\n"
    report += "| defense | " + " | ".join(result.attacks) + " | min |\n"
    report += "|---" * (len(result.attacks) + 2) + "|\n"
    for defense in result.defenses:
        cells = [result.cells.get((defense, a)) for a in result.attacks]
        worst = result.min_across_attacks(defense)
        row = ["failed" if v is None else f"{v:.4f}" for v in cells]
        row.append("n/a" if worst is None else f"**{worst:.4f}**")
        report += f"| {defense} | " + " | ".join(row) + " |\n"
    return report


def format_bench(rows: list) -> str:
    report = "# Communication of the shared check\n\n"
    report += "| variant | model params | clients | cross-check bytes |\n|---|---|---|---|\n"
    for variant in ("acc", "prob"):
        totals = component_bytes(rows, "cross_check", variant)
        for (params, clients), nbytes in sorted(totals.items()):
            report += f"| {variant} | {params} | {clients} | {nbytes:,} |\n"
    return report


@server.call_tool()
async def call_tool(name: str, arguments: Optional[dict]) -> list[TextContent]:
    """
    Handle tool calls from MCP clients.

    Experiments are CPU bound and run in a worker thread. Failures come back as
    text instead of raising.
    """
    arguments = arguments or {}
    try:
        if name == "run_experiment":
            config = resolve_config(arguments)
            result = await asyncio.to_thread(run_experiment, config)
            return [TextContent(type="text", text=format_experiment(result))]

        elif name == "run_sweep":
            config = resolve_config(arguments)
            result = await run_sweep(config)
            return [TextContent(type="text", text=format_sweep(result))]

        elif name == "run_bench":
            config = resolve_config(arguments)
            rows = await asyncio.to_thread(run_bench, config)
            return [TextContent(type="text", text=format_bench(rows))]

        elif name == "describe_config":
            config = resolve_config(arguments)
            return [TextContent(type="text", text=f"```yaml\n{dump_config(config)}```")]

        else:
            return [TextContent(type="text", text=f"Error: Unknown tool '{name}'")]

    except ConfigError as e:
        return [TextContent(type="text", text=f"Invalid config: {e}")]
    except Exception as e:
        logger.exception(f"Tool {name} failed")
        return [TextContent(type="text", text=f"Error executing {name}: {str(e)}")]


async def main():
    """Serve over stdio."""
    async with stdio_server() as (read_stream, write_stream):
        await server.run(
            read_stream,
            write_stream,
            server.create_initialization_options()
        )


if __name__ == "__main__":
    asyncio.run(main())
