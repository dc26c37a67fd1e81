#!/usr/bin/env python3
"""
Quick setup verification script.

Run this to verify your environment is configured correctly
before running experiments or the MCP server.

Usage: uv run python test_setup.py
"""

import os
import sys


def check_python_version():
    """Check Python version is 3.10+"""
    version = sys.version_info
    if version.major >= 3 and version.minor >= 10:
        print(f"✅ Python version: {version.major}.{version.minor}.{version.micro}")
        return True
    else:
        print(f"❌ Python version: {version.major}.{version.minor}.{version.micro}")
        print("   Required: Python 3.10 or higher")
        return False


def check_imports():
    """Check all required modules can be imported"""
    required_modules = [
        ("numpy", "numpy"),
        ("yaml", "pyyaml"),
        ("httpx", "httpx"),
        ("sqlite_utils", "sqlite-utils"),
        ("mcp.server", "mcp"),
        ("mcp.types", "mcp"),
    ]

    all_good = True
    for module_name, package_name in required_modules:
        try:
            __import__(module_name)
            print(f"✅ {package_name} is installed")
        except ImportError:
            print(f"❌ {package_name} is NOT installed")
            print("   Run: uv sync")
            all_good = False

    return all_good


def check_project_structure():
    """Check project files exist"""
    required_files = [
        "src/crosscheck/__init__.py",
        "src/crosscheck/cli.py",
        "src/crosscheck/server.py",
        "src/crosscheck/sharing/session.py",
        "src/crosscheck/aggregators/secure_check.py",
        "src/crosscheck/federation/runner.py",
        "configs/example.yaml",
    ]

    all_good = True
    for filepath in required_files:
        if os.path.exists(filepath):
            print(f"✅ {filepath}")
        else:
            print(f"❌ {filepath} NOT FOUND")
            all_good = False

    return all_good


def check_example_config():
    """Check the shipped example config parses"""
    try:
        sys.path.insert(0, "src")
        from crosscheck.config import load_config

        config = load_config("configs/example.yaml")
        print(f"✅ configs/example.yaml: {config.defense.kind} vs {config.attack.kind}, "
              f"{config.population.clients} clients, {config.training.rounds} rounds")
        return True
    except Exception as e:
        print("❌ configs/example.yaml does not load")
        print(f"   Error: {e}")
        return False


def check_output_dir():
    """Check where results will be written"""
    try:
        from crosscheck.config import IDX_BASE_URL, OUTPUT_DIR
    except ImportError:
        OUTPUT_DIR = os.getenv("CROSSCHECK_OUTPUT_DIR", "runs")
        IDX_BASE_URL = os.getenv("CROSSCHECK_IDX_BASE_URL")

    print(f"✅ Output directory: {OUTPUT_DIR}")
    if IDX_BASE_URL:
        print(f"✅ IDX files download from {IDX_BASE_URL}")
        return True
    print("⚠️  CROSSCHECK_IDX_BASE_URL not set (optional)")
    print("   Only needed for data.source: idx when the files are not on disk")
    return None  # Warning, not error


def check_tiny_round():
    """Run one shared round on a tiny population"""
    try:
        from crosscheck.config import parse_config
        from crosscheck.federation.runner import run_experiment

        config = parse_config({
            "population": {"clients": 4, "malicious": 1},
            "data": {"train_size": 80, "test_size": 40, "pubval_size": 10},
            "training": {"rounds": 1},
        })
        result = run_experiment(config)
        print(f"✅ One shared round: accuracy {result.final_accuracy:.4f}, "
              f"{result.ledger.total_bytes:,} bytes")
        return True
    except Exception as e:
        print("❌ Tiny experiment failed")
        print(f"   Error: {e}")
        return False


def main():
    """Run all checks"""
    print("=" * 70)
    print("Crosscheck - Setup Verification")
    print("=" * 70)
    print()

    checks = [
        ("Python Version", check_python_version),
        ("Dependencies", check_imports),
        ("Project Structure", check_project_structure),
        ("Example Config", check_example_config),
        ("Output", check_output_dir),
        ("Tiny Round", check_tiny_round),
    ]

    results = {}
    for check_name, check_func in checks:
        print(f"\n{check_name}")
        print("-" * 70)
        results[check_name] = check_func()

    # Summary
    print("\n" + "=" * 70)
    print("SUMMARY")
    print("=" * 70)

    passed = sum(1 for v in results.values() if v is True)
    warnings = sum(1 for v in results.values() if v is None)
    failed = sum(1 for v in results.values() if v is False)

    print(f"✅ Passed: {passed}")
    if warnings:
        print(f"⚠️  Warnings: {warnings}")
    if failed:
        print(f"❌ Failed: {failed}")

    print()

    if failed == 0:
        print("🎉 All critical checks passed! Ready to run.")
        print()
        print("Next steps:")
        print("1. Run example: uv run python example.py")
        print("2. Full run: uv run crosscheck run configs/example.yaml")
        print("3. Set up an MCP client: see QUICKSTART.md")
        return 0
    else:
        print("❌ Some checks failed. Fix the issues above before proceeding.")
        print()
        print("Common fixes:")
        print("- Install dependencies: uv sync")
        print("- Check Python version: python --version")
        return 1


if __name__ == "__main__":
    try:
        exit_code = main()
        sys.exit(exit_code)
    except KeyboardInterrupt:
        print("\n\nInterrupted by user")
        sys.exit(1)
    except Exception as e:
        print(f"\n\n❌ Unexpected error: {e}")
        import traceback
        traceback.print_exc()
        sys.exit(1)
