"""Tests for correlations, spectra, spreads, coherence measures and received-signal predictions."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uwsounder.characterize import (CorrelationFunction, SpectrumProfile, ToneCorrelations,
                                    ToneSpectra, characterize_channel, coherence_bandwidth,
                                    coherence_time, delay_profile,
                                    delay_profile_from_correlation, doppler_spectrum,
                                    doppler_spectrum_from_correlation, freq_autocorrelation,
                                    peak_width_3db, predicted_rx_autocorrelation,
                                    predicted_rx_psd, rms_width, scattering_function,
                                    time_autocorrelation, tone_doppler_spectra,
                                    tone_time_autocorrelation, waveform_autocorrelation)
from uwsounder.errors import (CoverageError, EmptyProfileError, InsufficientDataError,
                              RangeError)
from uwsounder.estimator import TVFR, TVIR, tvir_from_tvfr
from uwsounder.signal_gen import SoundingConfig

DT = 1e-3
DF = 1000.0


def _tvir(values, dt=DT, d_tau=1e-5):
    values = np.asarray(values, dtype=complex)
    n, m = values.shape
    return TVIR(np.arange(n) * dt, np.arange(m) * d_tau, values)


def _tvfr(values, k1=32):
    values = np.asarray(values, dtype=complex)
    n, m = values.shape
    return TVFR(np.arange(n) * DT, (k1 + np.arange(m)) * DF, values)


def _random(rng, shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def _loop_acf(x, max_lag):
    """Unbiased autocorrelation along axis 0 averaged over axis 1, by explicit sums."""
    n = x.shape[0]
    out = []
    for d in range(max_lag + 1):
        out.append(np.mean([np.sum(x[d:, c] * np.conj(x[:n - d, c])) / (n - d)
                            for c in range(x.shape[1])]))
    return np.array(out)


class TestCorrelations:
    def test_time_acf_against_loop(self, rng):
        x = _random(rng, (40, 7))
        c = time_autocorrelation(_tvir(x), max_lag=15)
        np.testing.assert_allclose(c.positive, _loop_acf(x, 15), atol=1e-12)
        np.testing.assert_allclose(c.positive_lags, np.arange(16) * DT)

    def test_freq_acf_against_loop(self, rng):
        x = _random(rng, (6, 30))
        c = freq_autocorrelation(_tvfr(x))
        np.testing.assert_allclose(c.positive, _loop_acf(x.T, 29), atol=1e-12)
        assert c.step == DF

    def test_hermitian_and_peak_at_zero(self, rng):
        c = time_autocorrelation(_tvir(_random(rng, (64, 5))))
        assert np.array_equal(c.values[::-1], np.conj(c.values))
        assert c.values[c.lags.size // 2].imag == 0
        assert c.zero >= np.max(np.abs(c.values)) - 1e-12

    def test_constant_response(self):
        c = time_autocorrelation(_tvir(np.full((50, 3), 2.0)))
        np.testing.assert_allclose(np.abs(c.values), 4.0, rtol=1e-12)

    def test_modulated_path_phase_slope(self):
        nu = 7.0
        t = np.arange(200) * DT
        c = time_autocorrelation(_tvir(np.exp(2j * np.pi * nu * t)[:, None]), max_lag=50)
        np.testing.assert_allclose(np.abs(c.positive), 1.0, rtol=1e-12)
        np.testing.assert_allclose(np.angle(c.positive), 2 * np.pi * nu * c.positive_lags, atol=1e-9)

    def test_single_path_frequency_correlation(self):
        g, tau = 0.6 - 0.3j, 2.3e-4
        f = (32 + np.arange(97)) * DF
        c = freq_autocorrelation(_tvfr(np.tile(g * np.exp(-2j * np.pi * f * tau), (4, 1))))
        np.testing.assert_allclose(np.abs(c.values), abs(g) ** 2, rtol=1e-12)

    def test_two_path_frequency_correlation_closed_form(self):
        dtau = 0.25e-3
        f = (32 + np.arange(97)) * DF
        H = 1 + np.exp(-2j * np.pi * f * dtau)
        c = freq_autocorrelation(_tvfr(H[None, :]))
        d = np.arange(97)
        # pairwise product of the two-tap response averaged over the overlap
        ref = [np.mean(H[k:] * np.conj(H[:97 - k])) for k in d]
        np.testing.assert_allclose(c.positive, ref, atol=1e-12)

    def test_tone_correlations(self, rng):
        x = _random(rng, (30, 4))
        tc = tone_time_autocorrelation(_tvfr(x), max_lag=10)
        for i in range(4):
            np.testing.assert_allclose(tc.values[:, i], _loop_acf(x[:, i:i + 1], 10), atol=1e-12)

    def test_waveform_autocorrelation(self, rng):
        x = rng.normal(size=500)
        c = waveform_autocorrelation(x, 20, fs=100.0)
        np.testing.assert_allclose(c.positive, _loop_acf(x[:, None], 20).real, atol=1e-12)
        assert c.lags[-1] == pytest.approx(0.2)
        with pytest.raises(RangeError):
            waveform_autocorrelation(x, 20)

    def test_errors(self):
        with pytest.raises(InsufficientDataError):
            time_autocorrelation(_tvir(np.ones((1, 3))))
        with pytest.raises(InsufficientDataError):
            freq_autocorrelation(TVFR([0.0, 1.0], [1000.0], np.ones((2, 1))))
        with pytest.raises(RangeError):
            time_autocorrelation(_tvir(np.ones((10, 3))), max_lag=10)

    def test_correlation_type_validation(self):
        with pytest.raises(RangeError):
            CorrelationFunction([-1.0, 0.0, 2.0], [1.0, 2.0, 1.0])
        with pytest.raises(RangeError):
            CorrelationFunction([-1.0, 0.0, 1.0], [1j, 2.0, 1j])
        with pytest.raises(RangeError):
            CorrelationFunction([0.0, 1.0], [1.0, 1.0])
        c = CorrelationFunction.from_positive(0.5, np.array([2.0 + 1e-9j, 1 + 1j]))
        assert c.values.tolist() == [1 - 1j, 2.0, 1 + 1j]


class TestSpectra:
    def test_static_all_energy_in_zero_bin(self):
        h = _tvir(np.tile([1.0, 0.5, 0.0], (64, 1)))
        p = doppler_spectrum(h, window="boxcar", nfft=64)
        k = int(np.argmax(p.values))
        assert p.axis[k] == 0
        assert np.sum(np.delete(p.values, k)) < 1e-20 * p.values[k]

    def test_modulated_path_peak(self):
        n = 128
        nu0 = 10 / (n * DT)
        h = _tvir(np.exp(2j * np.pi * nu0 * np.arange(n) * DT)[:, None])
        for w in ("hann", "boxcar"):
            p = doppler_spectrum(h, window=w)
            assert p.axis[np.argmax(p.values)] == pytest.approx(nu0)

    def test_non_negative(self, rng):
        assert np.all(doppler_spectrum(_tvir(_random(rng, (40, 6)))).values >= 0)

    def test_correlation_route_exact_for_boxcar(self, rng):
        h = _tvir(_random(rng, (80, 9)))
        a = doppler_spectrum(h, window="boxcar")
        b = doppler_spectrum_from_correlation(h, window="boxcar")
        np.testing.assert_allclose(b.values, a.values, atol=1e-12 * a.values.max())

    def test_correlation_route_single_component_exact(self):
        t = np.arange(300) * DT
        h = _tvir(np.exp(2j * np.pi * 3.3 * t)[:, None])
        a, b = doppler_spectrum(h), doppler_spectrum_from_correlation(h)
        np.testing.assert_allclose(b.values, a.values, atol=1e-12 * a.values.max())

    def test_correlation_route_resolved_components(self):
        """Components many resolution cells apart agree within 2% under the Hann window."""
        t = np.arange(1000) * DT
        x = (np.exp(2j * np.pi * 3.1 * t) + 0.5 * np.exp(-2j * np.pi * 40.3 * t))[:, None]
        h = _tvir(x)
        a, b = doppler_spectrum(h), doppler_spectrum_from_correlation(h)
        assert np.linalg.norm(a.values - b.values) / np.linalg.norm(a.values) < 0.02

    def test_correlation_route_nfft_bound(self, rng):
        with pytest.raises(RangeError):
            doppler_spectrum_from_correlation(_tvir(_random(rng, (10, 2))), nfft=10)

    def test_scattering_marginals_exact(self, rng):
        h = _tvir(_random(rng, (50, 12)))
        S = scattering_function(h)
        assert np.all(S.values >= 0)
        np.testing.assert_allclose(S.doppler_marginal().values, doppler_spectrum(h).values,
                                   rtol=1e-12)
        np.testing.assert_allclose(S.delay_marginal().values,
                                   delay_profile(h, window="hann").values, rtol=1e-12)

    def test_parseval_delay_route(self, rng):
        H = _tvfr(_random(rng, (20, 48)))
        h = tvir_from_tvfr(H, 4)
        a = delay_profile(h)
        b = delay_profile_from_correlation(H, h.delays)
        assert np.linalg.norm(a.values - b.values) / np.linalg.norm(a.values) < 1e-6

    def test_unit_path_delay_profile(self):
        f = (32 + np.arange(97)) * DF
        tau0 = 13 / (97 * DF)
        H = _tvfr(np.tile(np.exp(-2j * np.pi * f * tau0), (5, 1)))
        p = delay_profile(tvir_from_tvfr(H))
        assert p.values[13] == pytest.approx(1.0)
        assert np.delete(p.values, 13).max() < 1e-20

    def test_two_path_power_ratio(self):
        h = _tvir(np.tile([0, 1.0, 0, 0, 0.5j, 0], (10, 1)))
        p = delay_profile(h)
        assert p.values[1] / p.values[4] == pytest.approx(4.0)

    def test_tone_spectra(self, rng):
        H = _tvfr(_random(rng, (32, 3)))
        R = tone_doppler_spectra(H)
        h = _tvir(H.values[:, 1:2])
        np.testing.assert_allclose(R.values[:, 1], doppler_spectrum(h).values, rtol=1e-12)
        np.testing.assert_allclose(R.mean().values, R.values.mean(axis=1))

    def test_profile_validation(self):
        with pytest.raises(RangeError):
            SpectrumProfile([0.0, 1.0], [1.0])
        with pytest.raises(RangeError):
            SpectrumProfile([0.0, 1.0], [1.0, np.inf])


class TestRmsWidth:
    def test_two_impulses(self):
        axis = np.arange(100) * 1e-5
        v = np.zeros(100)
        v[[10, 60]] = 1.0
        assert rms_width(SpectrumProfile(axis, v)) == pytest.approx(0.25e-3)

    def test_single_impulse(self):
        v = np.zeros(20)
        v[5] = 3.0
        assert rms_width(SpectrumProfile(np.arange(20.0), v)) == 0.0

    def test_floor_clipping(self):
        v = np.zeros(50)
        v[10] = 1.0
        v[40] = 1e-4  # 40 dB down
        p = SpectrumProfile(np.arange(50.0), v)
        assert rms_width(p, 30) == 0.0
        assert rms_width(p, 50) > 0.0

    def test_empty(self):
        with pytest.raises(EmptyProfileError):
            rms_width(SpectrumProfile(np.arange(4.0), np.zeros(4)))

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(0, 10), min_size=3, max_size=30).filter(lambda v: max(v) > 0),
           st.floats(1e-6, 1e6))
    def test_scale_invariance(self, vals, alpha):
        axis = np.arange(len(vals), dtype=float)
        v = np.array(vals)
        assert rms_width(SpectrumProfile(axis, alpha * v)) == pytest.approx(
            rms_width(SpectrumProfile(axis, v)), rel=1e-9, abs=1e-12)

    def test_peak_width_triangle(self):
        axis = np.linspace(-1, 1, 201)
        assert peak_width_3db(SpectrumProfile(axis, 1 - np.abs(axis))) == pytest.approx(1.0)


def _from_magnitude(step, r):
    return CorrelationFunction.from_positive(step, np.asarray(r, dtype=float))


class TestCoherence:
    def test_triangular_decay(self):
        lags = np.arange(0, 201) * 1e-3
        r = np.clip(1 - 0.1 * lags / 52.4e-3, 0, None)
        tc = coherence_time(_from_magnitude(1e-3, r))
        assert tc.value == pytest.approx(52.4e-3, abs=1e-9)
        assert not tc.censored
        assert tc.format(1e3) == "52.4"

    def test_constant_is_censored(self):
        tc = coherence_time(_from_magnitude(0.01, np.ones(100)))
        assert tc.censored and tc.value == pytest.approx(0.99)
        assert tc.format(1.0, 2) == ">0.99"

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(0, 1), min_size=3, max_size=40), st.floats(0.05, 0.95),
           st.floats(0.05, 0.95))
    def test_monotone_in_threshold(self, tail, a, b):
        r = np.concatenate([[1.0], np.minimum.accumulate(tail)])
        lo, hi = sorted((a, b))
        c = _from_magnitude(1.0, r)
        assert coherence_time(c, hi).value <= coherence_time(c, lo).value + 1e-12

    def test_bandwidth_two_equal_paths(self):
        dtau = 0.5e-3
        f = (32 + np.arange(97)) * DF
        H = _tvfr((1 + np.exp(-2j * np.pi * f * dtau))[None, :])
        bc = coherence_bandwidth(freq_autocorrelation(H))
        assert abs(bc.value - 1 / dtau) <= DF

    def test_bandwidth_monotone_is_no_sidelobe(self):
        bc = coherence_bandwidth(_from_magnitude(DF, np.linspace(1, 0, 30)))
        assert math.isnan(bc.value) and bc.note == "no-sidelobe"
        assert bc.format() == "no-sidelobe"

    def test_bandwidth_ignores_ripple(self):
        r = np.ones(40) + 1e-7 * np.sin(np.arange(40))
        assert coherence_bandwidth(_from_magnitude(DF, r)).note == "no-sidelobe"

    def test_bandwidth_needs_three_lags(self):
        with pytest.raises(InsufficientDataError):
            coherence_bandwidth(_from_magnitude(DF, [1.0, 0.5]))

    def test_zero_power(self):
        with pytest.raises(EmptyProfileError):
            coherence_time(_from_magnitude(1.0, np.zeros(5)))


class TestChannelReport:
    def test_identity_response(self):
        H = _tvfr(np.ones((60, 97)))
        rep = characterize_channel(tvir_from_tvfr(H), H)
        assert rep.params.sigma_tau == 0.0
        assert rep.params.t_c.censored
        assert rep.params.b_c.note == "no-sidelobe"

    def test_without_tvfr(self, rng):
        H = _tvfr(_random(rng, (20, 16)))
        rep = characterize_channel(tvir_from_tvfr(H))
        np.testing.assert_allclose(rep.freq_corr.values, freq_autocorrelation(H).values, atol=1e-12)


class TestPredictions:
    cfg = SoundingConfig(k1=32, kn=40, n_zc=11)

    def _ones(self, n_lags=11):
        return ToneCorrelations(np.arange(n_lags) * 1e-3, self.cfg.tone_freqs,
                                np.ones((n_lags, self.cfg.n_tones), complex))

    def test_static_unit_response(self):
        lags = np.arange(-50, 51) * 1e-6
        p = predicted_rx_autocorrelation(self._ones(), self.cfg, lags)
        ref = 0.5 * np.cos(2 * np.pi * np.outer(lags, self.cfg.tone_freqs)).sum(axis=1)
        np.testing.assert_allclose(p.values, ref, atol=1e-12)
        assert p.zero == pytest.approx(0.5 * self.cfg.n_tones)

    def test_zero_lag_is_power(self, rng):
        vals = _random(rng, (5, self.cfg.n_tones))
        vals[0] = np.abs(vals[0])
        phi = ToneCorrelations(np.arange(5) * 1e-3, self.cfg.tone_freqs, vals)
        p = predicted_rx_autocorrelation(phi, self.cfg, np.array([-1e-6, 0.0, 1e-6]))
        assert p.zero == pytest.approx(0.5 * vals[0].real.sum())

    def test_coverage_and_range(self):
        phi = self._ones()
        short = ToneCorrelations(phi.lags, phi.freqs[:-1], phi.values[:, :-1])
        with pytest.raises(CoverageError):
            predicted_rx_autocorrelation(short, self.cfg, np.array([0.0]))
        with pytest.raises(RangeError):
            predicted_rx_autocorrelation(phi, self.cfg, np.array([-1.0, 0.0, 1.0]))

    def test_psd_lines(self):
        nu = np.arange(-8, 8) * 10.0
        vals = np.zeros((16, self.cfg.n_tones))
        vals[8] = 1.0
        R = ToneSpectra(nu, self.cfg.tone_freqs, vals)
        p = predicted_rx_psd(R, self.cfg)
        np.testing.assert_allclose(p.axis[p.values > 0], self.cfg.tone_freqs)
        np.testing.assert_allclose(p.values[p.values > 0], 0.25)
        shifted = ToneSpectra(nu, self.cfg.tone_freqs, np.roll(vals, 2, axis=0))
        p = predicted_rx_psd(shifted, self.cfg)
        np.testing.assert_allclose(p.axis[p.values > 0], self.cfg.tone_freqs + 20.0)

    def test_psd_span_check(self):
        nu = np.linspace(-600, 600, 11)
        R = ToneSpectra(nu, self.cfg.tone_freqs, np.ones((11, self.cfg.n_tones)))
        with pytest.raises(RangeError):
            predicted_rx_psd(R, self.cfg)
