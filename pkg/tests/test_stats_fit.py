"""Tests for gain segmentation, the Rician density and the MSE fit."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from uwsounder.errors import InsufficientDataError, RangeError
from uwsounder.estimator import TVFR
from uwsounder.stats_fit import (DomainError, GainSamples, fit_cells, fit_rician,
                                 gain_histogram, normalize_gains, rician_mse, rician_pdf,
                                 rician_samples, segment_gains)


def _rice(K, n, seed):
    """Unit mean-square Rician amplitudes from scipy's parametrization."""
    sigma = math.sqrt(1 / (2 * (K + 1)))
    nu = math.sqrt(K / (K + 1))
    return stats.rice.rvs(nu / sigma, scale=sigma, size=n, random_state=seed)


class TestRicianPdf:
    def test_rayleigh_limit(self):
        x = np.linspace(0, 4, 50)
        np.testing.assert_allclose(rician_pdf(x, 0.0), 2 * x * np.exp(-x * x), atol=1e-15)

    @pytest.mark.parametrize("K", [0.0, 1.0, 10.0])
    def test_normalization_and_power(self, K):
        one, _ = integrate.quad(lambda x: rician_pdf(x, K), 0, np.inf, epsabs=1e-12)
        ms, _ = integrate.quad(lambda x: x * x * rician_pdf(x, K), 0, np.inf, epsabs=1e-12)
        assert one == pytest.approx(1.0, abs=1e-6)
        assert ms == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("K", [0.3, 2.5, 40.0, 900.0])
    def test_matches_scipy_rice(self, K):
        sigma = math.sqrt(1 / (2 * (K + 1)))
        x = np.linspace(0.01, 2.5, 200)
        ref = stats.rice.pdf(x, math.sqrt(K / (K + 1)) / sigma, scale=sigma)
        np.testing.assert_allclose(rician_pdf(x, K), ref, rtol=1e-8, atol=1e-12)

    def test_large_k_is_finite(self):
        v = rician_pdf(np.linspace(0, 3, 301), 1e3)
        assert np.all(np.isfinite(v)) and v.max() > 10

    def test_domain(self):
        with pytest.raises(DomainError):
            rician_pdf([0.5], -1.0)
        with pytest.raises(DomainError):
            rician_pdf([-0.5], 1.0)


class TestFit:
    @pytest.mark.parametrize("K", [0.0, 1.0, 2.5, 6.4, 20.0])
    def test_recovery(self, K):
        fit = fit_rician(_rice(K, 100_000, seed=int(10 * K)))
        if K == 0:
            assert fit.K <= 0.05
        else:
            assert fit.K == pytest.approx(K, rel=0.1)
        assert fit.epsilon < 0.03
        assert fit.n_samples == 100_000

    def test_matches_brute_force_scan(self):
        x = _rice(2.5, 50_000, seed=3)
        fit = fit_rician(x)
        xn = x / math.sqrt(np.mean(x * x))
        density, edges = np.histogram(xn, bins=50, range=(0, xn.max()), density=True)
        centers = (edges[:-1] + edges[1:]) / 2
        grid = np.arange(0, 50.0001, 0.01)
        mse = [np.mean((density - rician_pdf(centers, k)) ** 2) for k in grid]
        assert abs(fit.K - grid[int(np.argmin(mse))]) <= 0.01 + 1e-9

    def test_scale_invariance(self):
        x = _rice(1.0, 20_000, seed=5)
        base = fit_rician(x)
        assert fit_rician(4.0 * x).K == base.K
        assert fit_rician(3.7 * x).K == pytest.approx(base.K, rel=1e-9)

    def test_zero_error_for_exact_density(self):
        centers = np.linspace(0.01, 2.5, 50)
        assert rician_mse(rician_pdf(centers, 3.0), centers, 3.0) == 0.0

    def test_reported_pdf(self):
        fit = fit_rician(_rice(6.4, 10_000, seed=1))
        np.testing.assert_allclose(fit.pdf(), rician_pdf(fit.centers, fit.K))
        assert fit.edges.size == 51 and fit.density.size == 50

    def test_pooling_and_cells(self):
        a, b = _rice(1.0, 3000, 1), _rice(1.0, 3000, 2)
        cells = [GainSamples(normalize_gains(a)), GainSamples(normalize_gains(b))]
        pooled = fit_rician(cells)
        assert pooled.n_samples == 6000
        each = fit_cells(cells)
        assert [f.n_samples for f in each] == [3000, 3000]

    def test_too_few_samples(self):
        with pytest.raises(InsufficientDataError):
            fit_rician(np.ones(499))
        assert fit_rician(_rice(1.0, 100, 0), min_samples=50).n_samples == 100

    def test_negative_gains(self):
        with pytest.raises(DomainError):
            fit_rician(-np.ones(600))
        with pytest.raises(DomainError):
            GainSamples(np.array([1.0, -1.0]))

    def test_constant_gains_push_k_to_the_limit(self):
        fit = fit_rician(np.ones(1000))
        assert fit.K == pytest.approx(1e3)


class TestSegmentation:
    def _grid(self, n_t, n_f, dt=0.1, df=1000.0, values=None):
        v = np.ones((n_t, n_f), complex) if values is None else values
        return TVFR(np.arange(n_t) * dt, 32e3 + np.arange(n_f) * df, v)

    def test_cell_count(self):
        cells = segment_gains(self._grid(600, 96), 2.0, 2000.0)
        assert len(cells) == 30 * 48
        assert cells[0].values.size == 40
        assert cells[1].t_span == cells[0].t_span  # time-major order
        assert cells[48].t_span[0] == pytest.approx(2.0)
        assert cells[1].f_band == (34e3, 35e3)

    def test_constant_magnitude_normalizes_to_one(self):
        cells = segment_gains(self._grid(40, 8, values=np.full((40, 8), 3 - 4j)), 1.0, 4000.0)
        for c in cells:
            np.testing.assert_allclose(c.values, 1.0)

    def test_unit_mean_square(self, rng):
        v = rng.normal(size=(50, 20)) + 1j * rng.normal(size=(50, 20))
        for c in segment_gains(self._grid(50, 20, values=v), 1.0, 5000.0):
            assert np.mean(c.values ** 2) == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("t_seg,f_seg", [(61.0, 2000.0), (2.0, 97_000.0), (0.0, 1.0),
                                             (0.01, 1000.0)])
    def test_range_errors(self, t_seg, f_seg):
        with pytest.raises(RangeError):
            segment_gains(self._grid(600, 96), t_seg, f_seg)

    def test_zero_power(self):
        with pytest.raises(InsufficientDataError):
            normalize_gains(np.zeros(5))
        with pytest.raises(InsufficientDataError):
            gain_histogram(np.zeros(5))


class TestSampler:
    @settings(max_examples=15, deadline=None)
    @given(st.floats(0, 30))
    def test_unit_mean_square(self, K):
        x = rician_samples(K, 40_000, np.random.default_rng(0))
        assert np.mean(x * x) == pytest.approx(1.0, rel=0.05)

    def test_domain(self):
        with pytest.raises(DomainError):
            rician_samples(-1.0, 10, np.random.default_rng(0))
