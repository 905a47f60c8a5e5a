"""Padding, group actions, projections, and population moments.

The moment oracles here are independent of the implementation: small cases
are worked out by hand (L = 2 support arithmetic), the L = 1 case reduces
to scalar identities, and the Gaussian corrections are cross-checked by
Monte Carlo with per-entry standard errors.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtdmra.core import (
    EmptyInput,
    NoiseSpec,
    PaddingViolation,
    ShapeError,
    Signal1D,
    Signal2D,
    UnsupportedOrder,
)
from mtdmra.mra import (
    InducedModelSpec,
    MomentTensor,
    act_1d,
    act_2d,
    clean_moment,
    forward_1d,
    forward_clean_1d,
    forward_clean_2d,
    noisy_population_moment,
    pad_1d,
    pad_2d,
    project_1d,
    project_2d,
    sample_iid,
    support_patches,
)

# stationary pair law for L = 2, lambda = 0.5 (worked out from the five-case
# closed form, D = 1 + lambda = 1.5)
PI_L2 = {(0, 0): 1 / 3, (0, 1): 1 / 6, (0, 2): 1 / 6, (1, 1): 1 / 6, (1, 2): 1 / 6}


class TestPadding:
    def test_pad_1d_layout(self):
        p = pad_1d(Signal1D([1.0, 2.0]))
        assert np.array_equal(p.values, [1.0, 2.0, 0.0, 0.0])
        assert p.L == 2

    def test_pad_2d_layout(self):
        p = pad_2d(Signal2D([[1.0, 2.0], [3.0, 4.0]]))
        expected = np.zeros((4, 4))
        expected[:2, :2] = [[1.0, 2.0], [3.0, 4.0]]
        assert np.array_equal(p.values, expected)

    def test_padding_validation_rejects_leak(self):
        with pytest.raises(PaddingViolation):
            from mtdmra.core import PaddedSignal1D

            PaddedSignal1D([1.0, 2.0, 0.0, 5.0])


class TestAction:
    def test_act_1d_shift_one(self):
        assert np.array_equal(act_1d(1, np.array([1.0, 2.0, 0.0, 0.0])), [0.0, 1.0, 2.0, 0.0])

    def test_act_1d_wraps(self):
        assert np.array_equal(act_1d(3, np.array([1.0, 2.0, 0.0, 0.0])), [2.0, 0.0, 0.0, 1.0])

    def test_act_2d_diagonal_shift(self):
        p = pad_2d(Signal2D([[1.0, 2.0], [3.0, 4.0]])).values
        out = act_2d((1, 1), p)
        expected = np.zeros((4, 4))
        expected[1:3, 1:3] = [[1.0, 2.0], [3.0, 4.0]]
        assert np.array_equal(out, expected)

    @given(
        shift_a=st.integers(min_value=0, max_value=7),
        shift_b=st.integers(min_value=0, max_value=7),
    )
    @settings(max_examples=50, deadline=None)
    def test_act_1d_composes_additively(self, shift_a, shift_b):
        v = np.arange(8.0)
        lhs = act_1d(shift_b, act_1d(shift_a, v))
        rhs = act_1d((shift_a + shift_b) % 8, v)
        assert np.array_equal(lhs, rhs)

    def test_act_identity(self):
        v = np.arange(6.0)
        assert np.array_equal(act_1d(0, v), v)
        img = np.arange(16.0).reshape(4, 4)
        assert np.array_equal(act_2d((0, 0), img), img)


class TestProjection:
    def test_project_1d_example(self):
        a = np.array([1.0, 2.0, 3.0, 4.0])
        b = np.array([5.0, 6.0, 7.0, 8.0])
        assert np.array_equal(project_1d(a, b), [8.0, 10.0])

    def test_project_2d_block_sum(self):
        def block(v):
            return np.full((4, 4), float(v))

        out = project_2d(block(1), block(2), block(3), block(4))
        # top-left of a, top-right of b, bottom-left of c, bottom-right of d
        assert np.array_equal(out, np.full((2, 2), 1.0 + 2.0 + 3.0 + 4.0))

    def test_project_2d_distinct_blocks(self):
        a = np.arange(16.0).reshape(4, 4)
        out = project_2d(a, np.zeros((4, 4)), np.zeros((4, 4)), np.zeros((4, 4)))
        assert np.array_equal(out, a[:2, :2])


class TestForward:
    def test_forward_clean_1d_example(self):
        # both halves come from a shift-1 copy: tail [2, 0] plus head [0, 1]
        padded = pad_1d(Signal1D([1.0, 2.0]))
        assert np.array_equal(forward_clean_1d((1, 1), padded), [2.0, 1.0])

    def test_forward_clean_1d_empty_patch(self):
        padded = pad_1d(Signal1D([1.0, 2.0]))
        assert np.array_equal(forward_clean_1d((0, 2), padded), [0.0, 0.0])

    def test_forward_clean_1d_fresh_anchor(self):
        padded = pad_1d(Signal1D([1.0, 2.0]))
        assert np.array_equal(forward_clean_1d((0, 0), padded), [1.0, 2.0])
        assert np.array_equal(forward_clean_1d((0, 1), padded), [0.0, 1.0])

    def test_forward_noisy_sigma_zero_is_bitwise_clean(self):
        x = Signal1D([0.3, -1.2, 2.2])
        clean = forward_clean_1d((2, 1), pad_1d(x))
        noisy = forward_1d((2, 1), x, NoiseSpec(0.0), np.random.default_rng(0))
        assert np.array_equal(clean, noisy)

    def test_forward_clean_2d_single_anchor(self):
        x = Signal2D([[1.0, 2.0], [3.0, 4.0]])
        padded = pad_2d(x)
        g = ((1, 1), (2, 2), (2, 2), (0, 0))
        out = forward_clean_2d(g, padded)
        assert np.array_equal(out, [[0.0, 0.0], [0.0, 1.0]])

    def test_forward_clean_2d_empty_everywhere(self):
        padded = pad_2d(Signal2D([[1.0, 2.0], [3.0, 4.0]]))
        g = ((2, 2), (2, 2), (2, 2), (0, 0))
        assert np.array_equal(forward_clean_2d(g, padded), np.zeros((2, 2)))

    def test_forward_clean_2d_diagonal_neighbor(self):
        x = Signal2D([[1.0, 2.0], [3.0, 4.0]])
        padded = pad_2d(x)
        # diagonal copy anchored at offset (1, 1) of the upper-left neighbor
        g = ((2, 2), (2, 2), (2, 2), (1, 1))
        out = forward_clean_2d(g, padded)
        assert np.array_equal(out, [[4.0, 0.0], [0.0, 0.0]])


class TestInducedModel:
    def test_pi_must_normalize(self):
        x = Signal1D([1.0, 2.0])
        with pytest.raises(ShapeError):
            InducedModelSpec(signal=x, pi={(0, 0): 0.7, (0, 1): 0.7})

    def test_pi_empty_rejected(self):
        with pytest.raises(EmptyInput):
            InducedModelSpec(signal=Signal1D([1.0]), pi={})

    def test_zero_mass_support_dropped(self):
        spec = InducedModelSpec(signal=Signal1D([1.0, 2.0]), pi={(0, 0): 1.0, (0, 1): 0.0})
        assert (0, 1) not in spec.pi

    def test_support_patches_l2(self):
        spec = InducedModelSpec(signal=Signal1D([1.0, 2.0]), pi=PI_L2)
        elements, probs, rows = support_patches(spec)
        table = dict(zip(elements, [tuple(r) for r in rows]))
        assert table[(0, 0)] == (1.0, 2.0)
        assert table[(0, 1)] == (0.0, 1.0)
        assert table[(0, 2)] == (0.0, 0.0)
        assert table[(1, 1)] == (2.0, 1.0)
        assert table[(1, 2)] == (2.0, 0.0)
        assert probs.sum() == pytest.approx(1.0)

    def test_sample_iid_latent_matches_patch(self):
        spec = InducedModelSpec(signal=Signal1D([1.0, 2.0]), pi=PI_L2)
        ps = sample_iid(spec, 64, np.random.default_rng(3))
        padded = pad_1d(spec.signal)
        for k in range(64):
            assert np.array_equal(ps.patches[k], forward_clean_1d(ps.latent[k], padded))


class TestMoments:
    def test_first_moment_hand_value(self):
        spec = InducedModelSpec(signal=Signal1D([1.0, 2.0]), pi=PI_L2)
        m1 = clean_moment(spec, 1)
        assert np.allclose(m1.entries, [1.0, 1.0], atol=1e-15)

    def test_second_moment_hand_value(self):
        spec = InducedModelSpec(signal=Signal1D([1.0, 2.0]), pi=PI_L2)
        m2 = clean_moment(spec, 2)
        assert np.allclose(m2.entries, [[5 / 3, 1.0], [1.0, 5 / 3]], atol=1e-15)

    def test_noisy_second_moment_adds_isotropic_term(self):
        spec = InducedModelSpec(signal=Signal1D([1.0, 2.0]), pi=PI_L2, noise=NoiseSpec(0.5))
        m2 = noisy_population_moment(spec, 2)
        assert np.allclose(m2.entries, np.array([[5 / 3, 1.0], [1.0, 5 / 3]]) + 0.25 * np.eye(2))

    def test_first_moment_unchanged_by_noise(self):
        spec = InducedModelSpec(signal=Signal1D([1.0, 2.0]), pi=PI_L2, noise=NoiseSpec(2.0))
        assert np.array_equal(noisy_population_moment(spec, 1).entries, clean_moment(spec, 1).entries)

    def test_scalar_case_matches_gaussian_identities(self):
        # L = 1 reduces to scalars: E[(v + s g)^2] = E[v^2] + s^2 and
        # E[(v + s g)^3] = E[v^3] + 3 s^2 E[v]
        x, p, s = 1.7, 0.3, 0.8
        spec = InducedModelSpec(
            signal=Signal1D([x]), pi={(0, 0): p, (0, 1): 1 - p}, noise=NoiseSpec(s)
        )
        assert clean_moment(spec, 1).entries[0] == pytest.approx(p * x)
        assert noisy_population_moment(spec, 2).entries[0, 0] == pytest.approx(p * x * x + s * s)
        assert noisy_population_moment(spec, 3).entries[0, 0, 0] == pytest.approx(
            p * x**3 + 3 * s * s * p * x
        )

    def test_third_moment_against_monte_carlo(self):
        spec = InducedModelSpec(signal=Signal1D([1.0, 2.0]), pi=PI_L2, noise=NoiseSpec(1.0))
        target = noisy_population_moment(spec, 3).entries
        gen = np.random.default_rng(2024)
        _, probs, rows = support_patches(spec)
        idx = gen.choice(len(probs), size=400_000, p=probs)
        v = rows[idx] + gen.standard_normal((400_000, 2))
        prods = np.einsum("ki,kj,kl->kijl", v, v, v)
        mc = prods.mean(axis=0)
        se = prods.std(axis=0, ddof=1) / np.sqrt(400_000)
        assert np.all(np.abs(mc - target) <= 5 * se + 1e-12)

    def test_zero_signal_second_moment_is_noise_only(self):
        spec = InducedModelSpec(signal=Signal1D([0.0, 0.0]), pi=PI_L2, noise=NoiseSpec(1.5))
        assert np.allclose(noisy_population_moment(spec, 2).entries, 2.25 * np.eye(2))

    def test_order_out_of_range(self):
        spec = InducedModelSpec(signal=Signal1D([1.0, 2.0]), pi=PI_L2)
        with pytest.raises(UnsupportedOrder):
            clean_moment(spec, 4)
        with pytest.raises(UnsupportedOrder):
            clean_moment(spec, 0)

    def test_2d_moment_dims(self):
        pi = {((1, 1), (2, 2), (2, 2), (0, 0)): 0.5, ((2, 2), (2, 2), (2, 2), (0, 0)): 0.5}
        spec = InducedModelSpec(signal=Signal2D([[1.0, 2.0], [3.0, 4.0]]), pi=pi)
        m2 = clean_moment(spec, 2)
        assert m2.entries.shape == (4, 4)


class TestMomentTensor:
    def test_json_round_trip(self):
        t = MomentTensor(order=2, dims=2, entries=[[1.0, 2.0], [3.0, 4.0]])
        back = MomentTensor.from_json_dict(t.to_json_dict())
        assert back.order == 2 and back.dims == 2
        assert np.array_equal(back.entries, t.entries)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ShapeError):
            MomentTensor(order=2, dims=3, entries=np.zeros((2, 2)))

    def test_order_cap(self):
        with pytest.raises(UnsupportedOrder):
            MomentTensor(order=4, dims=2, entries=np.zeros((2, 2, 2, 2)))
