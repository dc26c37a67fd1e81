#!/usr/bin/env python3
"""
Example script demonstrating direct usage of the Crosscheck components.

This shows how to use the library without the CLI or MCP, useful for:
- Testing during development
- Understanding how the shared check works
- Creating custom experiments

Run with: uv run python example.py
"""

import asyncio
import sys
from dataclasses import replace

sys.path.insert(0, "src")

from crosscheck.config import parse_config  # noqa: E402
from crosscheck.federation.bench import component_bytes, run_bench  # noqa: E402
from crosscheck.federation.runner import run_experiment, run_sweep  # noqa: E402
from crosscheck.server import format_experiment, format_sweep  # noqa: E402


async def main():
    """Demonstrate a run, a small sweep and a communication bench."""

    config = parse_config({
        "seed": 40,
        "population": {"clients": 10, "malicious": 2},
        "data": {"train_size": 1000, "test_size": 400, "pubval_size": 100},
        "training": {"rounds": 20},
        "defense": {"kind": "slvr_acc"},
        "attack": {"kind": "adaptive"},
    })

    print("=" * 80)
    print("Crosscheck Example - Direct Library Usage")
    print("=" * 80)
    print()

    # Example 1: one experiment with the shared check under the adaptive attack
    print("🛡️  Example 1: shared check vs adaptive attack")
    print("-" * 80)
    result = run_experiment(config)
    print(format_experiment(result))
    print()

    # Example 2: the same attack against plaintext baselines
    print("\n" + "=" * 40)
    print("📊 Example 2: Defense x attack sweep")
    print("-" * 40)
    sweep_config = replace(
        config,
        sweep=replace(
            config.sweep,
            defenses=("fedavg_plain", "norm_bound_adaptive", "slvr_acc"),
            attacks=("sign_flip", "adaptive"),
        ),
    )
    sweep = await run_sweep(sweep_config)
    print(format_sweep(sweep))
    print()

    # Example 3: what the cross-check costs as the model grows
    print("\n" + "=" * 40)
    print("📡 Example 3: Cross-check communication")
    print("-" * 40)
    bench_config = replace(config, bench=replace(config.bench, hidden_widths=(4, 16)))
    rows = run_bench(bench_config)
    for variant in ("acc", "prob"):
        totals = component_bytes(rows, "cross_check", variant)
        for (params, clients), nbytes in sorted(totals.items()):
            print(f"   {variant}: {params} params, {clients} clients -> {nbytes:,} bytes")

    print("\n" + "=" * 80)
    print("✅ Examples completed!")
    print("=" * 80)
    print("\nNext steps:")
    print("1. Full experiments: uv run crosscheck run configs/example.yaml")
    print("2. Use via MCP: see QUICKSTART.md")


if __name__ == "__main__":
    asyncio.run(main())
