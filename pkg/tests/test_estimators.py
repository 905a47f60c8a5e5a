"""Moment estimation, subsampling, fits, experiments, and recovery."""

import numpy as np
import pytest

from mtdmra import estimators
from mtdmra.core import (
    ConfigError,
    DegenerateFit,
    EmptyInput,
    NoiseSpec,
    ShapeError,
    Signal1D,
    SubsampleEmpty,
)
from mtdmra.markov1d import stationary_closed_form
from mtdmra.mra import (
    InducedModelSpec,
    clean_moment,
    forward_clean_1d,
    noisy_population_moment,
    pad_1d,
    sample_iid,
)
from mtdmra.mtd_sim import PatchSet

PI_L2 = stationary_closed_form(2, 0.5).probabilities


def iid_patches(sigma=0.0, M=1000, seed=0, signal=(1.0, 2.0)):
    spec = InducedModelSpec(signal=Signal1D(list(signal)), pi=PI_L2, noise=NoiseSpec(sigma))
    return spec, sample_iid(spec, M, np.random.default_rng(seed))


class TestEmpiricalMoment:
    def test_single_patch_orders(self):
        v = np.array([[1.5, -2.0]])
        ps = PatchSet(patches=v, L=2)
        assert np.array_equal(estimators.empirical_moment(ps, 1).entries, v[0])
        assert np.array_equal(estimators.empirical_moment(ps, 2).entries, np.outer(v[0], v[0]))
        expected3 = np.einsum("i,j,l->ijl", v[0], v[0], v[0])
        assert np.array_equal(estimators.empirical_moment(ps, 3).entries, expected3)

    def test_mean_of_two_patches(self):
        ps = PatchSet(patches=np.array([[1.0, 0.0], [0.0, 1.0]]), L=2)
        assert np.array_equal(estimators.empirical_moment(ps, 1).entries, [0.5, 0.5])
        assert np.array_equal(estimators.empirical_moment(ps, 2).entries, 0.5 * np.eye(2))

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_matches_population_within_5_se(self, n):
        spec, ps = iid_patches(sigma=0.7, M=60_000, seed=n)
        est, se = estimators.empirical_moment_stats(ps, n)
        target = noisy_population_moment(spec, n).entries
        assert np.all(np.abs(est.entries - target) <= 5 * se + 1e-12)

    def test_block_se_close_to_iid_se_on_iid_data(self):
        _, ps = iid_patches(sigma=0.5, M=40_000, seed=9)
        _, se_iid = estimators.empirical_moment_stats(ps, 2)
        _, se_blk = estimators.empirical_moment_stats(ps, 2, n_blocks=50)
        ratio = se_blk / se_iid
        assert np.all(ratio > 0.5) and np.all(ratio < 2.0)

    def test_empty_input(self):
        ps = PatchSet(patches=np.zeros((1, 2)), L=2)
        object.__setattr__  # placate linters; emptiness is tested via subsample below
        with pytest.raises(EmptyInput):
            estimators.empirical_moment(PatchSet(patches=np.zeros((0, 2)), L=2), 1)


class TestSubsample:
    def test_stride_three_keeps_every_third(self):
        vals = np.arange(20.0).reshape(10, 2)
        lat = np.arange(20).reshape(10, 2)
        ps = PatchSet(patches=vals, L=2, latent=lat)
        sub = estimators.subsample(ps, 3)
        assert sub.n_patches == 3
        # 0-based kept indices 2, 5, 8
        assert np.array_equal(sub.patches, vals[[2, 5, 8]])
        assert np.array_equal(sub.latent, lat[[2, 5, 8]])

    def test_stride_one_is_identity(self):
        ps = PatchSet(patches=np.zeros((4, 2)), L=2)
        assert estimators.subsample(ps, 1) is ps

    def test_stride_too_large(self):
        ps = PatchSet(patches=np.zeros((4, 2)), L=2)
        with pytest.raises(SubsampleEmpty):
            estimators.subsample(ps, 5)

    def test_grid_subsample_both_axes(self):
        grid = np.arange(4 * 4 * 4.0).reshape(4, 4, 2, 2)
        ps = PatchSet(patches=grid, L=2, two_d=True)
        sub = estimators.subsample(ps, 2)
        assert sub.grid_shape == (2, 2)
        assert np.array_equal(sub.patches[0, 0], grid[1, 1])
        assert np.array_equal(sub.patches[1, 0], grid[3, 1])

    def test_stride_rule_value(self):
        # gamma = -log(1 - (1-0.4)^2) = -log(0.64); ceil(3/gamma * log 1000) = 47
        assert estimators.subsample_stride(3, 0.4, 1000) == 47

    def test_stride_rule_explicit_c(self):
        assert estimators.subsample_stride(3, 0.4, 1000, c=1.0) == 7  # ceil(log 1000)

    def test_stride_rule_2d_needs_c(self):
        with pytest.raises(ConfigError):
            estimators.subsample_stride(2, 0.5, 100, two_d=True)
        assert estimators.subsample_stride(2, 0.5, 100, c=2.0, two_d=True) == 10

    def test_instant_mixing_gives_stride_one(self):
        # L = 1 couples in one step; no thinning needed
        assert estimators.subsample_stride(1, 0.5, 10_000) == 1


class TestFits:
    def test_linear_fit_exact(self):
        x = np.arange(5.0)
        fit = estimators.linear_fit(x, 2.0 * x + 1.0)
        assert fit.slope == pytest.approx(2.0)
        assert fit.intercept == pytest.approx(1.0)
        assert fit.r2 == pytest.approx(1.0)

    def test_linear_fit_constant_series(self):
        fit = estimators.linear_fit([0.0, 1.0, 2.0], [3.0, 3.0, 3.0])
        assert fit.slope == pytest.approx(0.0)
        assert fit.r2 == 1.0

    def test_linear_fit_degenerate(self):
        with pytest.raises(DegenerateFit):
            estimators.linear_fit([1.0], [2.0])
        with pytest.raises(DegenerateFit):
            estimators.linear_fit([2.0, 2.0], [1.0, 3.0])

    def test_loglog_fit_power_law(self):
        x = np.array([1.0, 2.0, 4.0, 8.0])
        fit = estimators.loglog_fit(x, 3.0 * x**2)
        assert fit.slope == pytest.approx(2.0)
        assert fit.intercept == pytest.approx(np.log(3.0))

    def test_loglog_fit_rejects_nonpositive(self):
        with pytest.raises(DegenerateFit):
            estimators.loglog_fit([1.0, 2.0], [0.0, 1.0])

    def test_fit_rate_recovers_inverse_law(self):
        rows = [
            estimators.MseRow(M=m, m=1, m_eff=m, trials=8, mse_mtd=4.0 / m, se_mtd=0.0, mse_mra=2.0 / m, se_mra=0.0)
            for m in (64, 128, 256, 512, 1024)
        ]
        curve = estimators.MseCurve(rows=rows, model="1d", feature="moment(1)", sigma=0.0, meta={})
        fits = estimators.fit_rate(curve)
        assert fits["mtd"].slope == pytest.approx(-1.0)
        assert fits["mra"].slope == pytest.approx(-1.0)

    def test_fit_rate_needs_four_rows(self):
        rows = [
            estimators.MseRow(M=m, m=1, m_eff=m, trials=8, mse_mtd=1.0 / m, se_mtd=0.0, mse_mra=1.0 / m, se_mra=0.0)
            for m in (64, 128)
        ]
        curve = estimators.MseCurve(rows=rows, model="1d", feature="moment(1)", sigma=0.0, meta={})
        with pytest.raises(DegenerateFit):
            estimators.fit_rate(curve)


class TestRecovery:
    def test_residual_zero_at_truth(self):
        spec = InducedModelSpec(signal=Signal1D([1.0, 2.0]), pi=PI_L2, noise=NoiseSpec(0.5))
        moments = [noisy_population_moment(spec, n) for n in (1, 2, 3)]
        r = estimators.moment_residual(np.array([1.0, 2.0]), moments, PI_L2, 0.5, 2)
        assert np.max(np.abs(r)) < 1e-14

    def test_recover_from_perturbed_init(self):
        gen = np.random.default_rng(21)
        x = Signal1D(gen.standard_normal(3))
        pi = stationary_closed_form(3, 0.4).probabilities
        spec = InducedModelSpec(signal=x, pi=pi, noise=NoiseSpec(0.6))
        moments = [noisy_population_moment(spec, n) for n in (1, 2, 3)]
        init = x.values + 0.1 * gen.standard_normal(3)
        res = estimators.recover_signal(moments, pi, 0.6, 3, init)
        assert res.converged
        assert np.max(np.abs(res.estimate - x.values)) < 1e-8

    def test_recover_reports_iterations_and_rank(self):
        x = Signal1D([0.5, -1.0])
        spec = InducedModelSpec(signal=x, pi=PI_L2, noise=NoiseSpec(0.0))
        moments = [clean_moment(spec, n) for n in (1, 2)]
        res = estimators.recover_signal(moments, PI_L2, 0.0, 2, x.values + 0.05)
        assert res.iterations >= 0 and res.jacobian_rank == 2

    def test_recover_rejects_bad_init_shape(self):
        spec = InducedModelSpec(signal=Signal1D([1.0, 2.0]), pi=PI_L2)
        moments = [clean_moment(spec, 1)]
        with pytest.raises(ShapeError):
            estimators.recover_signal(moments, PI_L2, 0.0, 2, np.zeros(3))

    def test_recover_needs_moments(self):
        with pytest.raises(EmptyInput):
            estimators.recover_signal([], PI_L2, 0.0, 2, np.zeros(2))

    def test_forward_operator_matches_forward_clean(self):
        x = Signal1D([0.7, -0.3, 1.1])
        padded = pad_1d(x)
        for g in [(0, 0), (0, 3), (2, 1), (1, 2)]:
            op = estimators.forward_operator_basis(g, 3)
            assert np.allclose(op @ x.values, forward_clean_1d(g, padded), atol=1e-15)

    def test_grid_argmin_finds_truth_on_grid(self):
        x = Signal1D([0.5, -1.25])  # exactly representable on the 0.05 grid
        spec = InducedModelSpec(signal=x, pi=PI_L2, noise=NoiseSpec(0.0))
        point, value = estimators.grid_residual_argmin(x, PI_L2, 0.0, (1, 2, 3), -2.0, 2.0, 0.05)
        assert np.allclose(point, x.values, atol=1e-12)
        assert value < 1e-20

    def test_grid_argmin_requires_l2(self):
        with pytest.raises(ConfigError):
            estimators.grid_residual_argmin(
                Signal1D([1.0, 2.0, 3.0]), PI_L2, 0.0, (1,), -1.0, 1.0, 0.5
            )


class TestCovarianceDecay:
    def test_lag_zero_is_feature_variance(self):
        _, ps = iid_patches(sigma=0.4, M=20_000, seed=31)
        rows = estimators.covariance_decay(ps, estimators.FeatureMap(kind="identity"), [0])
        v = ps.as_vectors()
        cov = np.cov(v.T, bias=True)
        assert rows[0].cov_norm == pytest.approx(np.linalg.norm(cov), rel=0.05)

    def test_iid_patches_show_no_lag_correlation(self):
        _, ps = iid_patches(sigma=0.4, M=40_000, seed=32)
        rows = estimators.covariance_decay(ps, estimators.FeatureMap(kind="identity"), [1, 3])
        for r in rows:
            assert r.max_abs_z < 4.5

    def test_rejects_2d(self):
        ps = PatchSet(patches=np.zeros((3, 3, 2, 2)), L=2, two_d=True)
        with pytest.raises(ShapeError):
            estimators.covariance_decay(ps, estimators.FeatureMap(kind="identity"), [0])


class TestExperiments:
    MSE_CONFIG = {
        "model": "1d",
        "L": 2,
        "sigma": 0.3,
        "M_list": [64, 128],
        "gap_lambda": 0.5,
        "feature": "moment(1)",
        "trials": 3,
        "seed": 11,
    }

    def test_mse_experiment_deterministic(self):
        a = estimators.mse_experiment(dict(self.MSE_CONFIG))
        b = estimators.mse_experiment(dict(self.MSE_CONFIG))
        assert a.rows == b.rows

    def test_mse_experiment_thread_invariant(self):
        a = estimators.mse_experiment(dict(self.MSE_CONFIG), threads=1)
        b = estimators.mse_experiment(dict(self.MSE_CONFIG), threads=2)
        assert a.rows == b.rows

    def test_mse_errors_shrink_with_m(self):
        cfg = dict(self.MSE_CONFIG, M_list=[32, 2048], trials=6)
        curve = estimators.mse_experiment(cfg)
        assert curve.rows[1].mse_mtd < curve.rows[0].mse_mtd
        assert curve.rows[1].mse_mra < curve.rows[0].mse_mra

    def test_mse_subsample_rule_sets_stride(self):
        cfg = dict(self.MSE_CONFIG, m_rule="log", c=1.0, M_list=[64, 256], trials=2)
        curve = estimators.mse_experiment(cfg)
        assert [r.m for r in curve.rows] == [5, 6]  # ceil(log M)
        assert [r.m_eff for r in curve.rows] == [12, 42]

    def test_unknown_config_key_rejected(self):
        with pytest.raises(ConfigError):
            estimators.mse_experiment(dict(self.MSE_CONFIG, bogus=1))

    def test_identity_feature_runs_recovery(self):
        cfg = dict(self.MSE_CONFIG, feature="identity", sigma=0.0, M_list=[64, 128], trials=2)
        curve = estimators.mse_experiment(cfg)
        for r in curve.rows:
            assert np.isfinite(r.mse_mtd) and np.isfinite(r.mse_mra)

    def test_sigma_scaling_structure_and_determinism(self):
        cfg = {
            "L": 2,
            "gap_lambda": 0.5,
            "orders": [1, 2],
            "sigma_list": [1.0, 2.0],
            "M": 256,
            "trials": 3,
            "seed": 5,
            "source": "mra",
        }
        a = estimators.sigma_scaling_experiment(dict(cfg))
        b = estimators.sigma_scaling_experiment(dict(cfg))
        assert a.rows == b.rows
        assert len(a.rows) == 4
        assert set(a.fits) == {1, 2}

    def test_sigma_scaling_grows_with_sigma(self):
        cfg = {
            "L": 2,
            "gap_lambda": 0.5,
            "orders": [2],
            "sigma_list": [1.0, 8.0],
            "M": 512,
            "trials": 4,
            "seed": 6,
            "source": "mra",
        }
        res = estimators.sigma_scaling_experiment(cfg)
        by_sigma = {r.sigma: r.mse for r in res.rows}
        assert by_sigma[8.0] > by_sigma[1.0]
