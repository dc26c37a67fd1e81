"""SQLite run history."""

import pytest

from crosscheck.federation.runner import run_experiment
from crosscheck.storage.metrics_store import MetricsStore, run_id_for


@pytest.fixture
def result(make_config):
    return run_experiment(make_config(defense={"kind": "fedavg_plain"}))


def test_empty_store():
    store = MetricsStore()
    assert store.runs() == []
    assert store.rounds("missing") == []
    assert store.final_accuracies("fedavg_plain", "none") == []


def test_record_and_read_back(result):
    store = MetricsStore()
    run_id = store.record_run(result)
    assert run_id == run_id_for(result.config)

    (run,) = store.runs()
    assert run["defense"] == "fedavg_plain"
    assert run["final_accuracy"] == pytest.approx(result.final_accuracy)
    assert run["rounds"] == 2

    rounds = store.rounds(run_id)
    assert [r["round"] for r in rounds] == [0, 1]
    assert rounds[0]["accepted"] == result.metrics[0].accepted_bitstring


def test_rerun_replaces_rows(result):
    store = MetricsStore()
    store.record_run(result)
    store.record_run(result)
    assert len(store.runs()) == 1
    assert len(store.rounds(run_id_for(result.config))) == 2


def test_run_id_tracks_config(make_config):
    assert run_id_for(make_config()) == run_id_for(make_config())
    assert run_id_for(make_config()) != run_id_for(make_config(seed=4))


def test_final_accuracies_by_cell(make_config):
    store = MetricsStore()
    for seed in (5, 4):
        config = make_config(seed=seed, defense={"kind": "fedavg_plain"}, training={"rounds": 1})
        store.record_run(run_experiment(config))
    assert len(store.final_accuracies("fedavg_plain", "none")) == 2
    assert store.final_accuracies("slvr_acc", "none") == []


def test_file_database(tmp_path, result):
    path = tmp_path / "nested" / "history.db"
    MetricsStore(path).record_run(result, run_id="manual")
    assert [r["run_id"] for r in MetricsStore(path).runs()] == ["manual"]
