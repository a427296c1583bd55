import numpy as np
import pytest

from wz_she_lab.mollifier import default_mollifier
from wz_she_lab.noise import (
    GridSpec,
    MollifiedField,
    WhiteNoiseRealization,
    couple_across_scales,
    mollify,
    sample_white_noise,
)


@pytest.fixture(scope="module")
def grid():
    return GridSpec(t_max=0.3, x_min=-3.0, x_max=3.0, dt=0.004, dx=0.02, t_min=-0.1)


class TestGridSpec:
    def test_rejects_degenerate(self):
        with pytest.raises(ValueError):
            GridSpec(t_max=1.0, x_min=0.0, x_max=1.0, dt=-0.1, dx=0.1)
        with pytest.raises(ValueError):
            GridSpec(t_max=0.05, x_min=0.0, x_max=1.0, dt=0.1, dx=0.1)

    def test_counts(self, grid):
        assert grid.n_t == 100
        assert grid.n_x == 300

    def test_interior_buffer(self, grid):
        lo, hi = grid.interior(0.1)
        assert lo == pytest.approx(-3.0 + 6 * np.sqrt(0.1))
        with pytest.raises(ValueError):
            grid.interior(0.3)


class TestWhiteNoise:
    def test_deterministic(self, grid):
        a = sample_white_noise(grid, 42)
        b = sample_white_noise(grid, 42)
        np.testing.assert_array_equal(a.values, b.values)

    def test_cell_variance(self):
        g = GridSpec(t_max=1.0, x_min=0.0, x_max=10.0, dt=0.001, dx=0.01)
        wn = sample_white_noise(g, 7)
        n = wn.values.size
        assert n >= 10**6
        scaled = wn.values * np.sqrt(g.dt * g.dx)
        assert abs(scaled.var() - 1.0) < 0.01
        assert abs(scaled.mean()) < 4.0 / np.sqrt(n)

    def test_independent_seeds_uncorrelated(self, grid):
        a = sample_white_noise(grid, 1).values.ravel()
        b = sample_white_noise(grid, 2).values.ravel()
        corr = np.mean(a * b) / (np.std(a) * np.std(b))
        assert abs(corr) < 4.0 / np.sqrt(a.size)

    def test_binary_roundtrip(self, grid, tmp_path):
        wn = sample_white_noise(grid, 11)
        path = tmp_path / "field.bin"
        wn.write_binary(path)
        back = WhiteNoiseRealization.read_binary(path)
        assert back.seed == 11
        assert back.grid == grid
        np.testing.assert_array_equal(back.values, wn.values)


class TestMollify:
    def test_zero_field(self, grid):
        z = WhiteNoiseRealization.zeros(grid)
        f = mollify(z, 0.2)
        assert np.all(f.values == 0.0)

    def test_resolution_preconditions(self, grid):
        with pytest.raises(ValueError, match="time resolution"):
            mollify(sample_white_noise(grid, 1), 0.05)
        wide = GridSpec(t_max=0.05, x_min=-2.0, x_max=2.0, dt=1e-4, dx=0.05)
        with pytest.raises(ValueError, match="space resolution"):
            mollify(sample_white_noise(wide, 1), 0.06)

    def test_linearity(self, grid):
        a = sample_white_noise(grid, 5)
        b = sample_white_noise(grid, 6)
        combo = WhiteNoiseRealization(0, grid, 2.0 * a.values - 3.0 * b.values)
        lhs = mollify(combo, 0.2).values
        rhs = 2.0 * mollify(a, 0.2).values - 3.0 * mollify(b, 0.2).values
        np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-8 * np.abs(rhs).max())

    def test_variance_matches_kernel(self, grid):
        # E[xi_eps(t,x)^2] = R_eps(0,0), averaged over realizations and
        # well-separated probe points
        moll = default_mollifier()
        eps = 0.2
        probes_x = np.arange(-2.0, 2.1, 1.0)
        samples = []
        for r in range(200):
            f = mollify(sample_white_noise(grid, 300 + r), eps)
            samples.append(np.mean(f.at(np.full(5, 0.1), probes_x) ** 2))
        m = np.mean(samples)
        assert abs(m - moll.covariance_R_eps(0, 0, eps)) < 0.1 * moll.covariance_R_eps(
            0, 0, eps
        )

    def test_decorrelation_beyond_time_support(self, grid):
        eps = 0.2
        probes_x = np.arange(-2.0, 2.1, 1.0)
        samples = []
        for r in range(200):
            f = mollify(sample_white_noise(grid, 500 + r), eps)
            a = f.at(np.full(5, 0.05), probes_x)
            b = f.at(np.full(5, 0.05 + 1.5 * eps**2), probes_x)
            samples.append(np.mean(a * b))
        samples = np.asarray(samples)
        se = samples.std() / np.sqrt(len(samples))
        assert abs(samples.mean()) < 4 * se


class TestCoupling:
    def test_single_scale_equals_mollify(self, grid):
        wn = sample_white_noise(grid, 9)
        (coupled,) = couple_across_scales(wn, [0.2])
        np.testing.assert_array_equal(coupled.values, mollify(wn, 0.2).values)

    def test_cross_scale_correlation(self, grid):
        moll = default_mollifier()
        e1, e2 = 0.2, 0.3
        probes_x = np.arange(-2.0, 2.1, 1.0)
        probes_t = np.full(5, 0.1)
        samples = []
        for r in range(800):
            f1, f2 = couple_across_scales(sample_white_noise(grid, 700 + r), [e1, e2])
            samples.append(np.mean(f1.at(probes_t, probes_x) * f2.at(probes_t, probes_x)))
        target = moll.covariance_R_eps12(0.0, 0.0, e1, e2)
        assert abs(np.mean(samples) - target) < 0.1 * target

    def test_different_seeds_uncorrelated(self, grid):
        probes_x = np.arange(-2.0, 2.1, 1.0)
        probes_t = np.full(5, 0.1)
        samples = []
        for r in range(200):
            f1 = mollify(sample_white_noise(grid, 900 + r), 0.2)
            f2 = mollify(sample_white_noise(grid, 5900 + r), 0.2)
            samples.append(np.mean(f1.at(probes_t, probes_x) * f2.at(probes_t, probes_x)))
        samples = np.asarray(samples)
        se = samples.std() / np.sqrt(len(samples))
        assert abs(samples.mean()) < 4 * se


class TestCovarianceStencil:
    def test_two_point_function_on_lag_stencil(self, grid):
        # empirical two-point function vs the kernel on a 5x5 lag stencil
        moll = default_mollifier()
        eps = 0.25
        tlags = np.linspace(0, 0.8 * eps**2, 5)
        xlags = np.linspace(0, 0.8 * eps, 5)
        base_x = np.arange(-2.0, 2.1, 1.0)
        acc = np.zeros((5, 5))
        samples = np.zeros((250, 5, 5))
        for r in range(250):
            f = mollify(sample_white_noise(grid, 1300 + r), eps)
            a = f.at(np.full(5, 0.05), base_x)
            for i, tl in enumerate(tlags):
                for j, xl in enumerate(xlags):
                    b = f.at(np.full(5, 0.05 + tl), base_x + xl)
                    samples[r, i, j] = np.mean(a * b)
        mean = samples.mean(axis=0)
        se = samples.std(axis=0) / np.sqrt(samples.shape[0])
        for i, tl in enumerate(tlags):
            for j, xl in enumerate(xlags):
                target = moll.covariance_R_eps(tl, xl, eps)
                assert abs(mean[i, j] - target) < 4 * se[i, j] + 0.02 * moll.covariance_R_eps(0, 0, eps)
