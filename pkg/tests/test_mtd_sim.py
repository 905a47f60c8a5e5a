"""Measurement synthesis, patch extraction, and latent group recovery.

The load-bearing oracle is the patch identity: with zero noise every
extracted patch must equal, bit for bit, the projected shifted padded
signal for the latent element read off the placements.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtdmra import mtd_sim
from mtdmra.core import NoiseSpec, OverlapViolation, ShapeError, Signal1D, Signal2D, tv_distance
from mtdmra.markov1d import group_pair_histogram, stationary_closed_form
from mtdmra.mra import forward_clean_1d, forward_clean_2d, pad_1d, pad_2d


def make_placements_1d(anchors, L, M, lam=0.5):
    return mtd_sim.PlacementConfig1D(anchors=np.array(anchors, dtype=np.int64), lam=lam, L=L, M=M)


def make_placements_2d(anchors, L, M, lam=0.5):
    return mtd_sim.PlacementConfig2D(
        anchors=np.array(anchors, dtype=np.int64).reshape(-1, 2), lam=lam, L=L, M=M
    )


class TestPlacements1D:
    def test_overlap_rejected(self):
        with pytest.raises(OverlapViolation):
            make_placements_1d([0, 1], L=2, M=3)

    def test_out_of_range_rejected(self):
        with pytest.raises(OverlapViolation):
            make_placements_1d([5], L=2, M=3)  # anchors live in [0, 4]

    def test_boundary_anchor_allowed(self):
        p = make_placements_1d([4], L=2, M=3)
        assert p.q == 1

    def test_sampler_admissible(self):
        p = mtd_sim.sample_placements_1d(3, 500, 0.6, np.random.default_rng(0))
        assert p.anchors.min() >= 0 and p.anchors.max() <= 3 * 499
        assert np.diff(p.anchors).min() >= 3

    def test_sampler_reproducible(self):
        a = mtd_sim.sample_placements_1d(2, 100, 0.3, np.random.default_rng(9)).anchors
        b = mtd_sim.sample_placements_1d(2, 100, 0.3, np.random.default_rng(9)).anchors
        assert np.array_equal(a, b)


class TestSynthesize1D:
    def test_anchor_at_zero(self):
        z = mtd_sim.measurement_from_anchors_1d(Signal1D([1.0, 2.0]), [0], M=2)
        assert np.array_equal(z.values, [1.0, 2.0, 0.0, 0.0])

    def test_anchor_straddles_patches(self):
        z = mtd_sim.measurement_from_anchors_1d(Signal1D([1.0, 2.0]), [1], M=2)
        assert np.array_equal(z.values, [0.0, 1.0, 2.0, 0.0])

    def test_two_anchors(self):
        z = mtd_sim.measurement_from_anchors_1d(Signal1D([1.0, 2.0]), [0, 2], M=2)
        assert np.array_equal(z.values, [1.0, 2.0, 1.0, 2.0])

    def test_empty_configuration(self):
        z = mtd_sim.measurement_from_anchors_1d(Signal1D([1.0, 2.0]), [], M=3)
        assert np.array_equal(z.values, np.zeros(6))

    def test_sigma_zero_adds_no_noise(self):
        x = Signal1D([0.5, -0.5, 1.5])
        p = mtd_sim.sample_placements_1d(3, 20, 0.4, np.random.default_rng(1))
        a = mtd_sim.synthesize_1d(x, p, NoiseSpec(0.0), np.random.default_rng(2))
        b = mtd_sim.synthesize_1d(x, p, NoiseSpec(0.0), np.random.default_rng(3))
        assert np.array_equal(a.values, b.values)

    def test_noise_changes_values(self):
        x = Signal1D([0.5, -0.5])
        p = make_placements_1d([0], L=2, M=2)
        a = mtd_sim.synthesize_1d(x, p, NoiseSpec(1.0), np.random.default_rng(2))
        assert not np.array_equal(a.values, [0.5, -0.5, 0.0, 0.0])


class TestLatentGroups1D:
    def test_anchor_at_zero(self):
        p = make_placements_1d([0], L=2, M=2)
        assert mtd_sim.latent_groups_1d(p).tolist() == [[0, 0], [0, 2]]

    def test_straddling_anchor(self):
        p = make_placements_1d([1], L=2, M=2)
        assert mtd_sim.latent_groups_1d(p).tolist() == [[0, 1], [1, 2]]

    def test_two_anchors(self):
        p = make_placements_1d([0, 2], L=2, M=2)
        assert mtd_sim.latent_groups_1d(p).tolist() == [[0, 0], [0, 0]]

    def test_empty_measurement(self):
        p = make_placements_1d([], L=2, M=3)
        assert mtd_sim.latent_groups_1d(p).tolist() == [[0, 2], [0, 2], [0, 2]]

    def test_patch_identity_bitwise(self):
        x = Signal1D([0.3, -1.1, 0.7, 2.0])
        p = mtd_sim.sample_placements_1d(4, 200, 0.5, np.random.default_rng(5))
        z = mtd_sim.synthesize_1d(x, p, NoiseSpec(0.0), np.random.default_rng(6))
        patches = mtd_sim.extract_patches_1d(z)
        latents = mtd_sim.latent_groups_1d(p)
        padded = pad_1d(x)
        for k in range(200):
            expected = forward_clean_1d(tuple(latents[k]), padded)
            assert np.array_equal(patches.patches[k], expected)

    @given(seed=st.integers(0, 2**32 - 1), L=st.integers(1, 5), lam=st.floats(0.05, 0.95))
    @settings(max_examples=40, deadline=None)
    def test_patch_identity_property(self, seed, L, lam):
        gen = np.random.default_rng(seed)
        x = Signal1D(gen.standard_normal(L))
        p = mtd_sim.sample_placements_1d(L, 30, lam, gen)
        z = mtd_sim.synthesize_1d(x, p, NoiseSpec(0.0), gen)
        patches = mtd_sim.extract_patches_1d(z)
        latents = mtd_sim.latent_groups_1d(p)
        padded = pad_1d(x)
        for k in range(30):
            assert np.array_equal(patches.patches[k], forward_clean_1d(tuple(latents[k]), padded))

    def test_pair_frequencies_near_stationary(self):
        L, lam, M = 3, 0.4, 100_000
        p = mtd_sim.sample_placements_1d(L, M, lam, np.random.default_rng(11))
        hist = group_pair_histogram(mtd_sim.latent_groups_1d(p), L)
        target = stationary_closed_form(L, lam).probabilities
        assert tv_distance(hist, target) < 0.02


class TestPlacements2D:
    def test_sup_norm_violation_rejected(self):
        with pytest.raises(OverlapViolation):
            make_placements_2d([(0, 0), (1, 1)], L=2, M=3)

    def test_axis_separation_enough(self):
        p = make_placements_2d([(0, 0), (0, 2)], L=2, M=3)
        assert p.q == 2

    def test_sampler_admissible(self):
        p = mtd_sim.sample_placements_2d(2, 8, 0.6, np.random.default_rng(3))
        a = p.anchors
        assert a.min() >= 0 and a.max() <= 2 * 7
        for i in range(a.shape[0]):
            for j in range(i + 1, a.shape[0]):
                assert np.abs(a[i] - a[j]).max() >= 2


class TestPatches2D:
    def test_single_anchor_measurement(self):
        x = Signal2D([[1.0, 2.0], [3.0, 4.0]])
        p = make_placements_2d([(1, 1)], L=2, M=2)
        z = mtd_sim.synthesize_2d(x, p, NoiseSpec(0.0), np.random.default_rng(0))
        expected = np.zeros((4, 4))
        expected[1:3, 1:3] = x.values
        assert np.array_equal(z.values, expected)
        patches = mtd_sim.extract_patches_2d(z)
        assert patches.patches.shape == (2, 2, 2, 2)
        assert np.array_equal(patches.patches[0, 0], [[0.0, 0.0], [0.0, 1.0]])
        assert np.array_equal(patches.patches[0, 1], [[0.0, 0.0], [2.0, 0.0]])
        assert np.array_equal(patches.patches[1, 0], [[0.0, 3.0], [0.0, 0.0]])
        assert np.array_equal(patches.patches[1, 1], [[4.0, 0.0], [0.0, 0.0]])

    def test_single_anchor_latents(self):
        p = make_placements_2d([(1, 1)], L=2, M=2)
        lat = mtd_sim.latent_groups_2d(p)
        as_tuples = lambda g: tuple(tuple(int(v) for v in row) for row in g)
        assert as_tuples(lat[0, 0]) == ((1, 1), (2, 2), (2, 2), (0, 0))
        assert as_tuples(lat[0, 1]) == ((2, 2), (1, 1), (2, 2), (0, 0))
        assert as_tuples(lat[1, 0]) == ((2, 2), (2, 2), (1, 1), (0, 0))
        assert as_tuples(lat[1, 1]) == ((2, 2), (2, 2), (2, 2), (1, 1))

    def test_empty_measurement_latents(self):
        p = make_placements_2d(np.empty((0, 2)), L=2, M=2)
        lat = mtd_sim.latent_groups_2d(p)
        for i in range(2):
            for j in range(2):
                assert tuple(map(tuple, lat[i, j])) == ((2, 2), (2, 2), (2, 2), (0, 0))

    def test_patch_identity_bitwise(self):
        gen = np.random.default_rng(8)
        x = Signal2D(gen.standard_normal((3, 3)))
        p = mtd_sim.sample_placements_2d(3, 5, 0.7, gen)
        z = mtd_sim.synthesize_2d(x, p, NoiseSpec(0.0), gen)
        patches = mtd_sim.extract_patches_2d(z)
        latents = mtd_sim.latent_groups_2d(p)
        padded = pad_2d(x)
        for i in range(5):
            for j in range(5):
                g = tuple(tuple(int(v) for v in row) for row in latents[i, j])
                assert np.array_equal(patches.patches[i, j], forward_clean_2d(g, padded))

    @given(seed=st.integers(0, 2**32 - 1), L=st.integers(1, 3))
    @settings(max_examples=20, deadline=None)
    def test_patch_identity_property_2d(self, seed, L):
        gen = np.random.default_rng(seed)
        x = Signal2D(gen.standard_normal((L, L)))
        p = mtd_sim.sample_placements_2d(L, 4, 0.5, gen)
        z = mtd_sim.synthesize_2d(x, p, NoiseSpec(0.0), gen)
        patches = mtd_sim.extract_patches_2d(z)
        latents = mtd_sim.latent_groups_2d(p)
        padded = pad_2d(x)
        for i in range(4):
            for j in range(4):
                g = tuple(tuple(int(v) for v in row) for row in latents[i, j])
                assert np.array_equal(patches.patches[i, j], forward_clean_2d(g, padded))


class TestPatchSet:
    def test_shapes_1d(self):
        ps = mtd_sim.PatchSet(patches=np.zeros((7, 3)), L=3)
        assert ps.n_patches == 7 and ps.grid_shape is None
        assert ps.as_vectors().shape == (7, 3)

    def test_shapes_2d_grid(self):
        ps = mtd_sim.PatchSet(patches=np.zeros((4, 5, 2, 2)), L=2, two_d=True)
        assert ps.n_patches == 20 and ps.grid_shape == (4, 5)
        assert ps.as_vectors().shape == (20, 4)

    def test_as_vectors_row_major(self):
        grid = np.arange(16.0).reshape(2, 2, 2, 2)
        ps = mtd_sim.PatchSet(patches=grid, L=2, two_d=True)
        v = ps.as_vectors()
        assert np.array_equal(v[0], grid[0, 0].ravel())
        assert np.array_equal(v[1], grid[0, 1].ravel())
        assert np.array_equal(v[2], grid[1, 0].ravel())

    def test_shape_validation(self):
        with pytest.raises(ShapeError):
            mtd_sim.PatchSet(patches=np.zeros((4, 3)), L=2)
