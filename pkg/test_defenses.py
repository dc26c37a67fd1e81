"""Plaintext baseline defenses."""

import math
import statistics

import numpy as np
import pytest

from crosscheck.aggregators.defenses import (
    PublicState,
    cosine_reference,
    cosine_sim,
    cosine_similarity,
    filter_updates,
    mean_of_accepted,
    norm_ball,
    norm_bound_adaptive,
    norm_bound_public,
    public_thresholds,
)


@pytest.fixture
def updates():
    return [np.array([1.0, 0.0]), np.array([0.0, 2.0]), np.array([3.0, 4.0])]


def test_cosine_similarity_zero_vector():
    assert cosine_similarity(np.zeros(3), np.ones(3)) == 0.0
    assert cosine_similarity(np.array([1.0, 0.0]), np.array([2.0, 0.0])) == pytest.approx(1.0)


def test_norm_bound_adaptive_uses_previous_round(updates):
    prev = [np.array([1.0, 0.0])] * 3
    assert list(norm_bound_adaptive(updates, prev, lam=1.5)) == [True, False, False]


def test_norm_bound_adaptive_first_round(updates):
    # median of 1, 2, 5 is 2
    assert list(norm_bound_adaptive(updates, None, lam=1.5)) == [True, True, False]


def test_norm_bound_public(updates):
    assert list(norm_bound_public(updates, np.array([0.0, 2.5]))) == [True, True, False]


def test_norm_ball(updates):
    center = np.array([0.0, 2.0])
    # radius 0.8 * 2 = 1.6
    assert list(norm_ball(updates, center, lam=0.8)) == [False, True, False]


def test_cosine_sim_against_previous_global(updates):
    reference = np.array([0.0, 1.0])
    u_pubval = np.array([1.0, 1.0])
    bits = cosine_sim(updates, reference, u_pubval, lam=1.0)
    # tau = cos(u_pubval, reference) ~ 0.707
    assert list(bits) == [False, True, True]


def test_cosine_reference_falls_back_to_pubval():
    u_pubval = np.array([1.0, 2.0])
    assert cosine_reference(None, u_pubval) is u_pubval
    assert cosine_reference(np.zeros(2), u_pubval) is u_pubval


def test_lambda_must_be_positive(updates):
    with pytest.raises(ValueError):
        norm_ball(updates, np.ones(2), lam=0.0)


def test_mean_of_accepted(updates):
    mean, count = mean_of_accepted(updates, np.array([True, True, False]))
    assert count == 2
    np.testing.assert_allclose(mean, [0.5, 1.0])


def test_mean_of_nothing_keeps_model(updates):
    mean, count = mean_of_accepted(updates, np.zeros(3, dtype=bool))
    assert count == 0
    assert np.array_equal(mean, np.zeros(2))


def test_fedavg_accepts_everything(updates):
    assert filter_updates("fedavg_plain", 1.0, updates, PublicState()).all()


def test_filter_rejects_shared_kinds(updates):
    with pytest.raises(ValueError):
        filter_updates("slvr_acc", 1.0, updates, PublicState())


def test_public_thresholds(updates):
    state = PublicState(u_pubval=np.array([3.0, 4.0]), prev_updates=updates)
    assert public_thresholds("norm_bound_public", 1.0, state)["tau"] == pytest.approx(5.0)
    assert public_thresholds("norm_ball", 0.5, state)["tau"] == pytest.approx(2.5)
    assert public_thresholds("norm_bound_adaptive", 1.0, state)["tau"] == pytest.approx(2.0)
    assert public_thresholds("norm_bound_adaptive", 1.0, PublicState()) == {}
    cosine = public_thresholds("cosine_sim", 0.5, state)
    assert cosine["tau"] == pytest.approx(0.5)
    assert cosine["reference"] is state.u_pubval


def test_filter_dispatch_matches_direct_calls(updates):
    state = PublicState(u_pubval=np.array([0.0, 2.5]))
    direct = norm_bound_public(updates, state.u_pubval)
    assert np.array_equal(filter_updates("norm_bound_public", 1.0, updates, state), direct)


def test_norm_bound_adaptive_example():
    updates = [
        np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.array([0.6, 0.8]), np.array([10.0, 0.0]),
    ]
    prev = [np.array([1.0, 0.0])] * 4
    assert list(norm_bound_adaptive(updates, prev, lam=2.0)) == [True, True, True, False]


def _norm(v):
    return math.sqrt(sum(float(x) ** 2 for x in v))


def _cos(u, v):
    nu, nv = _norm(u), _norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return sum(float(a) * float(b) for a, b in zip(u, v)) / (nu * nv)


def _random_state(rng, m=10, d=5):
    scales = rng.uniform(0.1, 3.0, size=m)
    updates = [rng.normal(size=d) * s for s in scales]
    prev = [rng.normal(size=d) * s for s in rng.uniform(0.1, 3.0, size=m)]
    return updates, PublicState(rng.normal(size=d), prev, rng.normal(size=d))


class TestPredicatesOnRandomRounds:
    ROUNDS = 100

    def test_norm_bound_adaptive(self, rng):
        for _ in range(self.ROUNDS):
            updates, state = _random_state(rng)
            lam = float(rng.uniform(0.5, 2.0))
            tau = lam * statistics.median(_norm(u) for u in state.prev_updates)
            expected = [_norm(u) < tau for u in updates]
            assert list(filter_updates("norm_bound_adaptive", lam, updates, state)) == expected

    def test_norm_bound_public(self, rng):
        for _ in range(self.ROUNDS):
            updates, state = _random_state(rng)
            expected = [_norm(u) < _norm(state.u_pubval) for u in updates]
            assert list(filter_updates("norm_bound_public", 1.0, updates, state)) == expected

    def test_norm_ball(self, rng):
        for _ in range(self.ROUNDS):
            updates, state = _random_state(rng)
            lam = float(rng.uniform(0.5, 2.0))
            tau = lam * _norm(state.u_pubval)
            expected = [_norm(u - state.u_pubval) < tau for u in updates]
            assert list(filter_updates("norm_ball", lam, updates, state)) == expected

    def test_cosine_sim(self, rng):
        for _ in range(self.ROUNDS):
            updates, state = _random_state(rng)
            lam = float(rng.uniform(0.1, 1.0))
            tau = lam * _cos(state.u_pubval, state.u_prev_global)
            expected = [_cos(u, state.u_prev_global) >= tau for u in updates]
            assert list(filter_updates("cosine_sim", lam, updates, state)) == expected


def test_cosine_sim_ignores_positive_rescaling(rng):
    for _ in range(50):
        updates, state = _random_state(rng)
        scaled = [u * c for u, c in zip(updates, rng.uniform(0.01, 100.0, size=len(updates)))]
        before = cosine_sim(updates, state.u_prev_global, state.u_pubval, 0.5)
        after = cosine_sim(scaled, state.u_prev_global, state.u_pubval, 0.5)
        assert np.array_equal(before, after)


def test_norm_ball_ignores_common_translation_at_fixed_radius(rng):
    for _ in range(50):
        updates, state = _random_state(rng)
        shift = rng.normal(size=5) * 10
        tau = 1.3 * _norm(state.u_pubval)
        before = norm_ball(updates, state.u_pubval, tau / _norm(state.u_pubval))
        moved_center = state.u_pubval + shift
        after = norm_ball([u + shift for u in updates], moved_center, tau / _norm(moved_center))
        assert np.array_equal(before, after)
