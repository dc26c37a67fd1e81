"""Ideal functionalities compared with their plaintext counterparts."""

import numpy as np
import pytest

from crosscheck.numerics.fixed import decode_signed, encode_signed
from crosscheck.numerics.model import (
    Dataset,
    DimensionError,
    EmptyDatasetError,
    MlpModel,
    accuracy,
    max_softmax_mean,
    param_count,
)
from crosscheck.sharing.functionalities import (
    comp_less,
    max_soft,
    sec_inf,
    share_dataset,
    sort_shared,
    sqrt_shared,
    zero_one,
)

MLP_DIMS = (2, 8, 2)


def _real(session, x):
    return session.reveal_debug(x)


class TestCompare:
    def test_comp_less_matches_plaintext(self, session, rng):
        a = rng.normal(size=200)
        b = rng.normal(size=200)
        bits = _real(session, comp_less(session, session.share_real(a), session.share_real(b)))
        qa, qb = encode_signed(a, session.params), encode_signed(b, session.params)
        assert np.array_equal(bits, (qa < qb).astype(float))

    def test_comp_less_equal_values(self, session):
        x = session.share_real([1.0])
        assert _real(session, comp_less(session, x, x))[0] == 0.0

    def test_sqrt(self, session):
        root = _real(session, sqrt_shared(session, session.share_real([4.0, 2.25, 0.0])))
        np.testing.assert_allclose(root, [2.0, 1.5, 0.0], atol=session.params.resolution)

    def test_sqrt_negative(self, session):
        with pytest.raises(ValueError):
            sqrt_shared(session, session.share_real([-1.0]))

    def test_functionalities_are_not_reveals(self, session, rng):
        x = session.share_real(rng.normal(size=4))
        comp_less(session, x, x)
        sort_shared(session, [x.element(i) for i in range(4)])
        assert session.revealed == []


class TestSort:
    @pytest.mark.parametrize("trials", [20, pytest.param(200, marks=pytest.mark.slow)])
    def test_matches_stable_sort(self, session, rng, trials):
        for _ in range(trials):
            values = np.round(rng.normal(size=9), 1)
            keys = [session.share_real([v]) for v in values]
            ordered = sort_shared(session, keys, list(range(9)))
            got = [p for _, p in ordered]
            assert got == sorted(range(9), key=lambda i: values[i])

    def test_ties_keep_input_order(self, session):
        keys = [session.share_real([1.0]) for _ in range(5)]
        ordered = sort_shared(session, keys, ["a", "b", "c", "d", "e"])
        assert [p for _, p in ordered] == ["a", "b", "c", "d", "e"]

    def test_shared_payloads_are_reshared(self, session):
        keys = [session.share_real([2.0]), session.share_real([1.0])]
        payloads = [session.share_real([20.0]), session.share_real([10.0])]
        ordered = sort_shared(session, keys, payloads)
        moved = ordered[0][1]
        assert moved is not payloads[1]
        assert not np.array_equal(moved.components()[0], payloads[1].components()[0])
        assert _real(session, moved)[0] == 10.0

    def test_payload_count_mismatch(self, session):
        with pytest.raises(ValueError):
            sort_shared(session, [session.share_real([1.0])], [1, 2])

    def test_empty(self, session):
        assert sort_shared(session, []) == []


class TestZeroOne:
    def test_prefix_of_ones(self, session):
        bits = [_real(session, b)[0] for b in zero_one(session, 3, 5)]
        assert bits == [1.0, 1.0, 1.0, 0.0, 0.0]

    def test_bounds(self, session):
        with pytest.raises(ValueError):
            zero_one(session, 6, 5)


class TestInference:
    @pytest.mark.parametrize("trials", [10, pytest.param(100, marks=pytest.mark.slow)])
    def test_sec_inf_matches_fixed_point_accuracy(self, session, source, rng, trials):
        for _ in range(trials):
            model = MlpModel.init(MLP_DIMS, rng, scale=1.0)
            data = source.sample(0, 5, rng)
            shared_model = session.share_real(model.params)
            shared_data = share_dataset(session, data)
            acc = _real(session, sec_inf(session, shared_model, MLP_DIMS, shared_data))
            expected = accuracy(model, data, session.params)
            assert acc[0] == pytest.approx(expected, abs=session.params.resolution)

    def test_sec_inf_is_k_over_n(self, session, source, rng):
        model = MlpModel.init((2, 2), rng, scale=1.0)
        data = source.sample(0, 7, rng)
        value = _real(session, sec_inf(session, session.share_real(model.params), (2, 2),
                                       share_dataset(session, data)))[0]
        assert min(abs(value - k / 7) for k in range(8)) <= session.params.resolution

    @pytest.mark.parametrize("trials", [10, pytest.param(100, marks=pytest.mark.slow)])
    def test_max_soft_matches_plaintext(self, session, source, rng, trials):
        for _ in range(trials):
            model = MlpModel.init(MLP_DIMS, rng, scale=1.0)
            data = source.sample(0, 5, rng)
            shared = share_dataset(session, data)
            shared_model = session.share_real(model.params)
            value = _real(session, max_soft(session, shared_model, MLP_DIMS, shared))
            quantized = MlpModel(
                MLP_DIMS, decode_signed(encode_signed(model.params, session.params), session.params)
            )
            qdata = Dataset(
                decode_signed(encode_signed(data.features, session.params), session.params),
                data.labels,
                2,
            )
            assert value[0] == pytest.approx(
                max_softmax_mean(quantized, qdata), abs=session.params.resolution
            )

    def test_max_soft_range(self, session, source, rng):
        data = share_dataset(session, source.sample(0, 10, rng))
        zero = session.share_real(np.zeros(param_count((2, 2))))
        assert _real(session, max_soft(session, zero, (2, 2), data))[0] == pytest.approx(0.5)

    def test_dimension_mismatch(self, session, source, rng):
        data = share_dataset(session, source.sample(0, 4, rng))
        with pytest.raises(DimensionError):
            sec_inf(session, session.share_real(np.zeros(5)), (2, 2), data)

    def test_class_mismatch(self, session, source, rng):
        data = share_dataset(session, source.sample(0, 4, rng))
        with pytest.raises(DimensionError):
            sec_inf(session, session.share_real(np.zeros(param_count((2, 3)))), (2, 3), data)

    def test_empty_dataset(self, session):
        data = share_dataset(session, Dataset.empty(2, 2))
        with pytest.raises(EmptyDatasetError):
            sec_inf(session, session.share_real(np.zeros(6)), (2, 2), data)

    def test_inference_charges_ledger(self, session, source, rng):
        data = share_dataset(session, source.sample(0, 4, rng))
        before = session.ledger.total_bytes
        sec_inf(session, session.share_real(np.zeros(6)), (2, 2), data)
        assert session.ledger.entry("sec_inf").invocations == 1
        assert session.ledger.total_bytes > before
