"""MCP tool handlers, called directly."""

import pytest
import yaml

from crosscheck.server import call_tool, list_tools, resolve_config

TINY_YAML = yaml.safe_dump(
    {
        "seed": 5,
        "population": {"clients": 4, "malicious": 1},
        "data": {"train_size": 120, "test_size": 60, "pubval_size": 20},
        "training": {"rounds": 3},
        "validation": {"size": 6},
        "defense": {"kind": "fedavg_plain"},
        "sweep": {"defenses": ["fedavg_plain"], "attacks": ["none", "sign_flip"]},
    }
)


async def test_list_tools():
    names = [tool.name for tool in await list_tools()]
    assert names == ["run_experiment", "run_sweep", "run_bench", "describe_config"]


async def test_unknown_tool():
    (content,) = await call_tool("train_everything", {})
    assert content.text == "Error: Unknown tool 'train_everything'"


async def test_describe_defaults():
    (content,) = await call_tool("describe_config", None)
    assert content.text.startswith("```yaml\n")
    assert "kind: slvr_acc" in content.text


async def test_invalid_config_is_reported():
    (content,) = await call_tool("describe_config", {"config_yaml": "attack: {kind: ddos}"})
    assert content.text.startswith("Invalid config: attack.kind")


async def test_missing_path_is_reported(tmp_path):
    (content,) = await call_tool("run_experiment", {"config_path": str(tmp_path / "x.yaml")})
    assert content.text.startswith("Error executing run_experiment: config not found")


async def test_run_experiment():
    (content,) = await call_tool("run_experiment", {"config_yaml": TINY_YAML, "rounds": 2})
    text = content.text
    assert text.startswith("# Experiment: fedavg_plain vs none")
    assert "| round | accuracy | accepted |" in text
    assert "| 1 |" in text
    assert "| 2 |" not in text


async def test_run_sweep():
    (content,) = await call_tool("run_sweep", {"config_yaml": TINY_YAML})
    lines = content.text.splitlines()
    assert "| defense | none | sign_flip | min |" in lines
    assert any(line.startswith("| fedavg_plain | ") for line in lines)


async def test_run_bench():
    tiny = TINY_YAML.replace("fedavg_plain", "slvr_acc")
    (content,) = await call_tool("run_bench", {"config_yaml": tiny})
    assert "| acc | 6 | 4 |" in content.text
    assert "| prob | 6 | 4 |" in content.text


def test_resolve_overrides():
    config = resolve_config({"config_yaml": TINY_YAML, "seed": 9, "rounds": 1})
    assert config.seed == 9
    assert config.training.rounds == 1


def test_resolve_rejects_bad_override():
    with pytest.raises(ValueError):
        resolve_config({"config_yaml": TINY_YAML, "rounds": -1})
