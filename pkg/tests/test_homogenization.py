import numpy as np
import pytest
from scipy.integrate import quad

from wz_she_lab import homogenization as hg
from wz_she_lab import rng
from wz_she_lab.functionals import c_star_quadrature
from wz_she_lab.noise import GridSpec, WhiteNoiseRealization, mollify, sample_white_noise
from wz_she_lab.solver import constant_one, gaussian_bump
from wz_she_lab.stats import EstimateWithCI


@pytest.fixture(scope="module")
def grid():
    return GridSpec(t_max=0.75, x_min=-8.0, x_max=8.0, dt=1e-3, dx=0.02, t_min=-0.25)


@pytest.fixture(scope="module")
def c_star():
    return c_star_quadrature()


class TestScaleConfig:
    def test_alpha_bounds(self):
        with pytest.raises(ValueError):
            hg.ScaleConfig(alpha=0.9, eps=0.1)
        with pytest.raises(ValueError):
            hg.ScaleConfig(alpha=2.1, eps=0.1)
        with pytest.raises(ValueError):
            hg.ScaleConfig(alpha=1.0, eps=0.0)

    def test_alpha_two_matches_main_scaling(self):
        cfg = hg.ScaleConfig(alpha=2.0, eps=0.1)
        assert cfg.kernel_scale == 0.1
        assert cfg.noise_prefactor == pytest.approx(1.0)
        assert cfg.fluctuation_order == pytest.approx(1.0)

    def test_alpha_one_scales(self):
        cfg = hg.ScaleConfig(alpha=1.0, eps=0.04)
        assert cfg.kernel_scale == pytest.approx(0.2)
        assert cfg.noise_prefactor == pytest.approx(0.04**0.25)
        assert cfg.fluctuation_order == pytest.approx(0.04**0.25)

    def test_drift_correction_linear_in_t(self):
        cfg = hg.ScaleConfig(alpha=1.5, eps=0.1)
        assert cfg.drift_correction(2.0) == pytest.approx(2 * cfg.drift_correction(1.0))


class TestScaleCoincidence:
    def test_alpha_two_field_bit_identical(self, grid):
        wn = sample_white_noise(grid, 31)
        cfg = hg.ScaleConfig(alpha=2.0, eps=0.2)
        a = mollify(wn, cfg.kernel_scale)
        b = mollify(wn, 0.2)
        assert np.array_equal(a.values, b.values)


class TestDriftCorrectionExactness:
    def test_zero_noise_constant(self, grid, c_star):
        wn = WhiteNoiseRealization.zeros(grid)
        cfg = hg.ScaleConfig(alpha=1.5, eps=0.1)
        v, corrected = hg.solve_v(cfg, wn, constant_one(), c_star, t_max=0.5, store_every=100)
        assert np.abs(v.values - 1.0).max() < 1e-12
        expected = np.exp(-c_star * cfg.drift_correction(corrected.times))
        assert np.allclose(corrected.values, expected[:, None], rtol=1e-12)

    def test_zero_noise_heat_semigroup(self, grid, c_star):
        wn = WhiteNoiseRealization.zeros(grid)
        cfg = hg.ScaleConfig(alpha=1.0, eps=0.1)
        v, corrected = hg.solve_v(cfg, wn, gaussian_bump(), c_star, t_max=0.5, store_every=500)
        xs = v.xs
        exact = (1 + 0.5) ** -0.5 * np.exp(-(xs**2) / (2 * 1.5))
        mask = np.abs(xs) < 3
        factor = float(np.exp(-c_star * cfg.drift_correction(0.5)))
        assert np.abs(corrected.values[-1][mask] - factor * exact[mask]).max() < 1e-4


class TestEWTarget:
    def test_zero_at_t_zero(self):
        assert hg.ew_variance_target(0.0) == 0.0

    def test_quadrature(self):
        for t in (0.25, 0.5, 1.0):
            val, _ = quad(lambda r: (4 * np.pi * (t - r)) ** -0.5, 0, t)
            assert hg.ew_variance_target(t) == pytest.approx(val, rel=1e-9)


class TestEWFluctuation:
    def test_rejects_few_realizations(self):
        cfg = hg.ScaleConfig(alpha=1.0, eps=0.1)
        with pytest.raises(ValueError):
            hg.ew_fluctuation(cfg, np.ones((50, 3)), 0.5)

    def test_synthetic_variance(self):
        cfg = hg.ScaleConfig(alpha=1.0, eps=0.1)
        g = rng.generator(32)
        sigma = cfg.fluctuation_order * np.sqrt(hg.ew_variance_target(0.5))
        samples = 1.0 + sigma * g.standard_normal((20_000, 4))
        res = hg.ew_fluctuation(cfg, samples, 0.5)
        assert res["rel_error"] < 0.05


class TestFluctuationSize:
    def test_synthetic_normal(self):
        g = rng.generator(33)
        samples = 2.0 + 0.3 * g.standard_normal((2_000, 5))
        est = hg.fluctuation_size(samples)
        assert isinstance(est, EstimateWithCI)
        assert est.value == pytest.approx(0.3, rel=0.05)
        assert 0 < est.se < 0.02


class TestLogLogSlope:
    def test_exact_power_law(self):
        rows = [
            {"alpha": 1.0, "eps": e, "fluct_size": 0.7 * e**0.25}
            for e in (0.4, 0.2, 0.1)
        ]
        assert hg.loglog_slope(rows, 1.0) == pytest.approx(0.25)

    def test_requires_two_points(self):
        rows = [{"alpha": 1.0, "eps": 0.1, "fluct_size": 0.5}]
        with pytest.raises(ValueError):
            hg.loglog_slope(rows, 1.0)


class TestCorrectedFieldMC:
    def test_alpha_15_homogenizes(self, grid, c_star):
        cfg = hg.ScaleConfig(alpha=1.5, eps=0.1)
        probes = np.arange(-3.0, 3.5, 0.5)
        samples = hg.corrected_field_samples(
            cfg, grid, constant_one(), c_star, 0.5, probes, 100, seed=34
        )
        l1 = float(np.mean(np.abs(samples.mean(axis=0) - 1.0)))
        assert l1 <= 0.08
