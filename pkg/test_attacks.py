"""Untargeted and adaptive attacks, and extreme score manipulation."""

import numpy as np
import pytest

from crosscheck.aggregators.defenses import cosine_similarity, norm_ball, norm_bound_public
from crosscheck.aggregators.secure_check import sample_committees
from crosscheck.attacks.adaptive import (
    AdversaryView,
    adaptive_cosine,
    adaptive_normball,
    adaptive_normbound,
    adaptive_slvr,
    clean_accuracies,
    craft_adaptive,
    estimate_direction,
    lambda_grid,
)
from crosscheck.attacks.basic import additive_noise, label_flip, sign_flip
from crosscheck.attacks.manipulation import (
    client_scores,
    extreme_manipulation,
    extreme_score,
    manipulation_dominates,
    score_range,
)
from crosscheck.numerics.model import Dataset, MlpModel, accuracy, local_train


def _view(rng, source, defense="norm_bound_public", thresholds=None, dims=(2, 2)):
    model = MlpModel(dims, rng.normal(size=6) * 0.1)
    data = source.sample(0, 80, rng)
    updates = [local_train(model, data.subset(range(i * 40, (i + 1) * 40)), 1, 0.3, rng)
               for i in range(2)]
    return AdversaryView((0, 1), data, updates, model, defense, thresholds or {})


class TestBasic:
    def test_sign_flip_is_involution(self, rng):
        u = rng.normal(size=10)
        assert np.array_equal(sign_flip(sign_flip(u)), u)

    def test_label_flip_is_involution(self, blobs):
        twice = label_flip(label_flip(blobs))
        assert np.array_equal(twice.labels, blobs.labels)
        assert np.array_equal(twice.features, blobs.features)

    def test_label_flip_multiclass(self):
        d = Dataset(np.zeros((4, 1)), np.array([0, 1, 2, 3]), 4)
        assert list(label_flip(d).labels) == [3, 2, 1, 0]

    def test_label_flip_does_not_mutate(self, blobs):
        original = blobs.labels.copy()
        label_flip(blobs)
        assert np.array_equal(blobs.labels, original)

    def test_additive_noise(self):
        u = np.zeros(10000)
        noisy = additive_noise(u, 2.0, np.random.default_rng(0))
        assert np.std(noisy) == pytest.approx(2.0, rel=0.05)
        assert np.array_equal(additive_noise(u, 0.0, np.random.default_rng(0)), u)

    def test_noise_sigma_must_be_non_negative(self):
        with pytest.raises(ValueError):
            additive_noise(np.zeros(2), -1.0, np.random.default_rng(0))


class TestAdaptiveConstruction:
    def test_lambda_grid(self):
        grid = lambda_grid(1e-5, 1e-1, 20)
        assert len(grid) == 20
        assert grid[0] == pytest.approx(1e-5)
        assert grid[-1] == pytest.approx(1e-1)
        assert np.all(np.diff(grid) > 0)

    def test_direction_is_sign_of_mean_clean_update(self, source, rng):
        view = _view(rng, source)
        expected = np.sign(view.clean_updates[0] + view.clean_updates[1])
        assert np.array_equal(estimate_direction(view), expected)

    def test_normbound_always_passes(self, source):
        rng = np.random.default_rng(10)
        for _ in range(100):
            view = _view(rng, source)
            u_pubval = rng.normal(size=6) * rng.uniform(0.01, 2.0)
            tau = float(np.linalg.norm(u_pubval))
            poisoned = adaptive_normbound(view, tau).updates
            assert norm_bound_public(poisoned, u_pubval).all()

    def test_normbound_reverses_direction(self, source, rng):
        view = _view(rng, source)
        poisoned = adaptive_normbound(view, 1.0).updates[0]
        assert np.array_equal(np.sign(poisoned), -view.direction)

    def test_normball_always_inside(self, source):
        rng = np.random.default_rng(11)
        for _ in range(100):
            view = _view(rng, source)
            center = rng.normal(size=6)
            lam = rng.uniform(0.05, 2.0)
            tau = lam * float(np.linalg.norm(center))
            poisoned = adaptive_normball(view, center, tau).updates
            assert norm_ball(poisoned, center, lam).all()

    def test_tau_below_eps_rejected(self, source, rng):
        with pytest.raises(ValueError):
            adaptive_normbound(_view(rng, source), 1e-9)

    def test_all_malicious_submit_the_same_update(self, source, rng):
        view = _view(rng, source)
        updates = adaptive_normbound(view, 1.0).updates
        assert len(updates) == 2
        assert np.array_equal(updates[0], updates[1])

    def test_cosine_picks_largest_passing_lambda(self, source, rng):
        view = _view(rng, source)
        reference = view.estimated_update
        grid = lambda_grid(1e-4, 10.0, 30)
        result = adaptive_cosine(view, reference, 0.9, grid)
        assert result.accepted
        assert cosine_similarity(result.updates[0], reference) >= 0.9
        larger = [g for g in grid if g > result.lam]
        for lam in larger:
            candidate = view.estimated_update - lam * view.direction
            assert cosine_similarity(candidate, reference) < 0.9

    def test_cosine_fallback(self, source, rng):
        view = _view(rng, source)
        result = adaptive_cosine(view, -view.estimated_update, 0.99, [0.1, 0.2])
        assert not result.accepted
        assert result.lam == 0.1

    def test_slvr_matches_brute_force(self, source):
        rng = np.random.default_rng(12)
        for _ in range(5):
            view = _view(rng, source, defense="slvr_acc")
            grid = lambda_grid(1e-3, 3.0, 15)
            result = adaptive_slvr(view, grid)
            reference = float(np.median(clean_accuracies(view)))
            base = view.global_model.params
            w_est = base + view.estimated_update
            passing = [
                lam for lam in grid
                if accuracy(view.global_model.with_params(w_est - lam * view.direction),
                            view.clean_data) >= reference
            ]
            if passing:
                assert result.lam == pytest.approx(max(passing))
                assert result.accepted
            else:
                assert result.lam == pytest.approx(min(grid))
                assert not result.accepted

    def test_craft_dispatch_without_published_bound(self, source, rng):
        view = _view(rng, source, defense="norm_bound_adaptive")
        result = craft_adaptive(view, lambda_grid())
        tau = float(np.median([np.linalg.norm(u) for u in view.clean_updates]))
        assert np.linalg.norm(result.updates[0]) < tau

    def test_craft_dispatch_normball(self, source, rng):
        center = rng.normal(size=6)
        view = _view(rng, source, "norm_ball", {"tau": 0.5, "center": center})
        poisoned = craft_adaptive(view, lambda_grid()).updates[0]
        assert np.linalg.norm(poisoned - center) < 0.5

    def test_view_needs_updates(self, source, rng):
        with pytest.raises(ValueError):
            AdversaryView((0,), source.sample(0, 4, rng), [], MlpModel((2, 2)), "fedavg_plain")


class TestManipulation:
    def test_score_ranges(self):
        assert score_range("acc", 2) == (-1.0, 1.0)
        assert score_range("prob", 4) == (0.25, 1.0)
        with pytest.raises(ValueError):
            score_range("median", 2)

    def test_extreme_score(self):
        honest = [False, True, True]
        assert extreme_score(0, 1, honest, "acc", 2) is None
        assert extreme_score(0, 0, honest, "acc", 2) == 1.0
        assert extreme_score(1, 0, honest, "acc", 2) == -1.0

    def test_no_malicious_leaves_matrix(self, rng):
        matrix = rng.uniform(-1, 1, size=(5, 5))
        assert np.array_equal(extreme_manipulation(matrix, [True] * 5, "acc", 2), matrix)

    def test_all_malicious_committee_scores_one(self):
        committees = sample_committees(6, 1, 3)
        honest = [True] * 6
        for j in committees[0]:
            honest[j] = False
        honest[0] = False
        matrix = np.zeros((6, 6))
        manipulated = extreme_manipulation(matrix, honest, "acc", 2)
        assert client_scores(manipulated, committees)[0] == pytest.approx(1.0)

    def test_extreme_manipulation_dominates(self):
        rng = np.random.default_rng(13)
        m, m_c = 10, 2
        for _ in range(1000):
            committees = sample_committees(m, m_c, int(rng.integers(0, 2**62)))
            malicious = rng.choice(m, size=m_c, replace=False)
            honest = [i not in malicious for i in range(m)]
            variant = "acc" if rng.random() < 0.5 else "prob"
            low, high = score_range(variant, 2)
            benign = rng.uniform(low, high, size=(m, m))
            other = benign.copy()
            for j in malicious:
                other[:, j] = rng.uniform(low, high, size=m)
            extreme = extreme_manipulation(benign, honest, variant, 2)

            extreme_scores = client_scores(extreme, committees)
            other_scores = client_scores(other, committees)
            assert manipulation_dominates(extreme_scores, other_scores, honest)

            # no more benign clients outrank a malicious one
            benign_ids = np.flatnonzero(honest)
            for i in malicious:
                above_extreme = int(np.sum(extreme_scores[benign_ids] > extreme_scores[i]))
                above_other = int(np.sum(other_scores[benign_ids] > other_scores[i]))
                assert above_extreme <= above_other
