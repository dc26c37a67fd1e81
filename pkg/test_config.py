"""Experiment config parsing, validation and the canonical YAML form."""

from pathlib import Path

import pytest
import yaml

from crosscheck.config import (
    ConfigError,
    ExperimentConfig,
    config_to_dict,
    dump_config,
    load_config,
    parse_config,
)

CONFIG_DIR = Path(__file__).parent / "configs"


def test_defaults():
    config = parse_config(None)
    assert config == ExperimentConfig()
    assert config.layer_dims == (2, 2)
    assert config.num_params == 6
    assert config.norm_check_enabled


@pytest.mark.parametrize("name", ["example.yaml", "shift.yaml"])
def test_shipped_configs_round_trip(name):
    config = load_config(CONFIG_DIR / name)
    again = parse_config(yaml.safe_load(dump_config(config)))
    assert again == config


def test_shift_config_disables_norm_check():
    config = load_config(CONFIG_DIR / "shift.yaml")
    assert config.shift.active
    assert not config.norm_check_enabled
    assert config.validation.freeze


def test_norm_check_can_be_forced():
    config = parse_config({"shift": {"every": 10, "count": 1}, "defense": {"norm_check": True}})
    assert config.norm_check_enabled


def test_canonical_dict_has_every_section():
    data = config_to_dict(ExperimentConfig())
    assert set(data) >= {"seed", "population", "data", "defense", "attack", "fixed", "shift"}
    assert data["sweep"]["seeds"] == [40]


def test_unknown_key_names_path():
    with pytest.raises(ConfigError, match=r"^attack\.sigma: unknown key"):
        parse_config({"attack": {"sigma": 1.0}})


def test_wrong_type_names_path():
    with pytest.raises(ConfigError) as info:
        parse_config({"training": {"rounds": "many"}})
    assert info.value.path == "training.rounds"


def test_literal_choices():
    with pytest.raises(ConfigError, match=r"^defense\.kind: must be one of"):
        parse_config({"defense": {"kind": "krum"}})


def test_range_check_names_path():
    with pytest.raises(ConfigError, match=r"^attack\.noise_sigma"):
        parse_config({"attack": {"noise_sigma": -0.5}})


def test_exponent_without_dot_is_a_number():
    config = parse_config({"attack": {"lambda_min": "1e-4"}})
    assert config.attack.lambda_min == pytest.approx(1e-4)


def test_bool_is_not_an_int():
    with pytest.raises(ConfigError):
        parse_config({"seed": True})


def test_ring_size_checked():
    with pytest.raises(ConfigError, match=r"^fixed: ring_bits"):
        parse_config({"fixed": {"ring_bits": 96}})


def test_shared_check_needs_committee_room():
    # 2*2 + 1 validators need 5 other clients
    with pytest.raises(ConfigError, match=r"^population\.malicious"):
        parse_config({"population": {"clients": 5, "malicious": 2}})
    parse_config({"population": {"clients": 6, "malicious": 2}})


def test_committee_room_only_matters_for_shared_check():
    config = parse_config(
        {"population": {"clients": 5, "malicious": 2}, "defense": {"kind": "fedavg_plain"}}
    )
    assert config.population.malicious == 2


def test_public_defense_needs_public_data():
    with pytest.raises(ConfigError, match=r"^data\.pubval_size"):
        parse_config({"defense": {"kind": "cosine_sim"}, "data": {"pubval_size": 0}})


def test_min_client_rows_must_fit_training_data():
    with pytest.raises(ConfigError, match=r"^data\.train_size"):
        parse_config({"data": {"train_size": 100, "min_client_rows": 10}})
    with pytest.raises(ConfigError, match=r"^data\.min_client_rows"):
        parse_config({"data": {"min_client_rows": 0}})


def test_lambda_grid_must_ascend():
    with pytest.raises(ConfigError, match=r"^attack\.lambda_max"):
        parse_config({"attack": {"lambda_min": 0.1, "lambda_max": 0.01}})


def test_shift_events_in_order():
    events = [{"round": 5}, {"round": 2}]
    with pytest.raises(ConfigError, match=r"^shift\.events\[1\]\.round"):
        parse_config({"shift": {"events": events}})


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError, match="config not found"):
        load_config(tmp_path / "absent.yaml")


def test_invalid_yaml(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("seed: [1, 2\n")
    with pytest.raises(ConfigError, match="invalid YAML"):
        load_config(path)


def test_top_level_must_be_mapping(tmp_path):
    path = tmp_path / "list.yaml"
    path.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError, match="expected a mapping"):
        load_config(path)
