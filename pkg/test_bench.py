"""Communication benchmark of the shared check."""

import pytest

from crosscheck.federation.bench import (
    BENCH_COLUMNS,
    bench_configs,
    bench_to_csv,
    component_bytes,
    run_bench,
)


@pytest.fixture
def bench_rows(make_config):
    config = make_config(
        data={"alpha": 100.0},
        mpc={"mode": "ideal"},
        bench={"hidden_widths": [2, 8], "client_counts": [4, 12]},
    )
    return run_bench(config)


def test_grid(make_config):
    config = make_config(bench={"hidden_widths": [2, 8], "client_counts": [4, 12]})
    grid = bench_configs(config)
    assert [(c.model.hidden, c.population.clients) for c in grid] == [
        ((2,), 4), ((2,), 12), ((8,), 4), ((8,), 12),
    ]
    assert all(c.training.rounds == 1 for c in grid)


def test_grid_defaults_to_config(make_config):
    (only,) = bench_configs(make_config())
    assert only.population.clients == 6
    assert only.model.hidden == ()


def test_cross_check_grows_with_model_and_clients(bench_rows):
    for variant in ("acc", "prob"):
        totals = component_bytes(bench_rows, "cross_check", variant)
        small, large = 2 * 2 + 2 + 2 * 2 + 2, 2 * 8 + 8 + 8 * 2 + 2
        assert totals[(large, 4)] > totals[(small, 4)]
        assert totals[(large, 12)] > totals[(small, 12)]
        assert totals[(small, 12)] > totals[(small, 4)]
        assert totals[(large, 12)] > totals[(large, 4)]


def test_probability_score_is_cheaper(bench_rows):
    acc = component_bytes(bench_rows, "cross_check", "acc")
    prob = component_bytes(bench_rows, "cross_check", "prob")
    assert set(acc) == set(prob)
    assert all(prob[key] < acc[key] for key in acc)


def test_aggregate_opens_two_values(bench_rows):
    recon = [r for r in bench_rows if r.component == "aggregate" and r.subprotocol == "recon"]
    assert recon
    assert all(r.invocations == 2 for r in recon)


def test_csv(bench_rows):
    lines = bench_to_csv(bench_rows).splitlines()
    assert lines[0] == ",".join(BENCH_COLUMNS)
    assert len(lines) == len(bench_rows) + 1
