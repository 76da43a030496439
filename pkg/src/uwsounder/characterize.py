"""Correlation functions, spectra and scalar spreads of a time-variant channel.

Conventions: ``Phi(d) = <x(u + d) x*(u)>_u`` for every autocorrelation,
``P_Doppler = FT_dt{Phi_t}`` with kernel ``exp(-j 2 pi nu dt)`` and
``P_delay = FT^-1_df{Phi_f}`` with kernel ``exp(+j 2 pi df tau)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks, get_window

from .errors import CoverageError, EmptyProfileError, InsufficientDataError, RangeError
from .estimator import TVFR, TVIR, tvfr_from_tvir
from .signal_gen import SoundingConfig, Waveform

DEFAULT_FLOOR_DB = 30.0
DEFAULT_TC_THRESHOLD = 0.9
SIDELOBE_PROMINENCE = 0.01


@dataclass
class CorrelationFunction:
    """Autocorrelation on a symmetric lag grid ``-K..K`` (lag unit s or Hz)."""

    lags: np.ndarray
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.lags = np.asarray(self.lags, dtype=float)
        self.values = np.asarray(self.values)
        n = self.lags.size
        if self.values.shape != (n,) or n % 2 == 0:
            raise RangeError("correlation needs an odd, symmetric lag grid matching its values")
        k = n // 2
        if self.lags[k] != 0 or not np.allclose(self.lags, -self.lags[::-1], rtol=0,
                                                atol=1e-12 * max(1.0, abs(self.lags[-1]))):
            raise RangeError("lag grid must be symmetric about zero")
        if np.iscomplexobj(self.values):
            if not np.array_equal(self.values[::-1], np.conj(self.values)):
                raise RangeError("correlation must be Hermitian")
        elif not np.array_equal(self.values[::-1], self.values):
            raise RangeError("real correlation must be even")

    @classmethod
    def from_positive(cls, step: float, positive: np.ndarray) -> "CorrelationFunction":
        """Build from lags ``0..K`` by Hermitian extension; lag 0 is forced real."""
        positive = np.array(positive)
        if np.iscomplexobj(positive):
            positive[0] = positive[0].real
        vals = np.concatenate([np.conj(positive[:0:-1]), positive])
        k = positive.size - 1
        return cls(lags=np.arange(-k, k + 1) * step, values=vals)

    @property
    def step(self) -> float:
        return float(self.lags[1] - self.lags[0]) if self.lags.size > 1 else 0.0

    @property
    def zero(self) -> float:
        return float(np.real(self.values[self.lags.size // 2]))

    @property
    def positive_lags(self) -> np.ndarray:
        return self.lags[self.lags.size // 2:]

    @property
    def positive(self) -> np.ndarray:
        return self.values[self.lags.size // 2:]

    def normalized_magnitude(self) -> np.ndarray:
        """``|c(d)| / c(0)`` on the non-negative lags."""
        if self.zero <= 0:
            raise EmptyProfileError("correlation has no power at lag zero")
        return np.abs(self.positive) / self.zero


@dataclass
class SpectrumProfile:
    """Non-negative power profile over a Doppler (Hz) or delay (s) axis."""

    axis: np.ndarray
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.axis = np.asarray(self.axis, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.axis.ndim != 1 or self.values.shape != self.axis.shape:
            raise RangeError("profile axis and values must be 1-D and of equal length")
        if not np.all(np.isfinite(self.values)):
            raise RangeError("profile values must be finite")


@dataclass
class ScatteringFunction:
    """``S(nu, tau) = |FT_t{w(t) h(t, tau)}|^2 / sum(w^2)``."""

    doppler: np.ndarray
    delay: np.ndarray
    values: np.ndarray = field(repr=False)

    def doppler_marginal(self) -> SpectrumProfile:
        return SpectrumProfile(self.doppler, self.values.mean(axis=1))

    def delay_marginal(self) -> SpectrumProfile:
        return SpectrumProfile(self.delay, self.values.mean(axis=0))


@dataclass(frozen=True)
class Coherence:
    """A coherence measure that may be censored (never crossed) or undefined."""

    value: float
    censored: bool = False
    note: str = ""

    def format(self, scale: float = 1.0, digits: int = 1) -> str:
        if not math.isfinite(self.value):
            return self.note or "n/a"
        s = f"{self.value * scale:.{digits}f}"
        return f">{s}" if self.censored else s


@dataclass(frozen=True)
class ChannelParams:
    t_c: Coherence
    b_c: Coherence
    sigma_tau: float
    sigma_nu: float


@dataclass
class ChannelReport:
    """Characterization functions and scalar parameters of one response."""

    time_corr: CorrelationFunction
    freq_corr: CorrelationFunction
    doppler: SpectrumProfile
    delay: SpectrumProfile
    params: ChannelParams


@dataclass
class ToneCorrelations:
    """Per-tone time autocorrelations ``values[lag, tone]`` on non-negative lags."""

    lags: np.ndarray
    freqs: np.ndarray
    values: np.ndarray = field(repr=False)


@dataclass
class ToneSpectra:
    """Per-tone Doppler spectra ``values[nu, tone]``."""

    doppler: np.ndarray
    freqs: np.ndarray
    values: np.ndarray = field(repr=False)

    def mean(self) -> SpectrumProfile:
        return SpectrumProfile(self.doppler, self.values.mean(axis=1))


# -- correlations ---------------------------------------------------------------

def _summed_raw_acf(x: np.ndarray, max_lag: int) -> np.ndarray:
    """``sum_cols sum_n x[n + k, col] x*[n, col]`` for ``k = 0..max_lag`` (axis 0 is n)."""
    n = x.shape[0]
    nfft = 1 << int(math.ceil(math.log2(2 * n)))
    acc = np.zeros(nfft)
    step = max(1, int(2 ** 22 // nfft))
    for s in range(0, x.shape[1], step):
        X = np.fft.fft(x[:, s:s + step], nfft, axis=0)
        acc += (X.real ** 2 + X.imag ** 2).sum(axis=1)
    return np.fft.ifft(acc)[:max_lag + 1]


def _unbiased(x: np.ndarray, max_lag: int | None) -> np.ndarray:
    """Unbiased autocorrelation along axis 0, averaged over axis 1, lags ``0..max_lag``."""
    n = x.shape[0]
    if n < 2:
        raise InsufficientDataError("need at least two samples along the correlation axis")
    max_lag = n // 2 if max_lag is None else int(max_lag)
    if not 1 <= max_lag <= n - 1:
        raise RangeError(f"max_lag must lie in [1, {n - 1}]")
    raw = _summed_raw_acf(x, max_lag)
    return raw / (n - np.arange(max_lag + 1)) / x.shape[1]


def time_autocorrelation(h: TVIR, max_lag: int | None = None) -> CorrelationFunction:
    """Per-delay unbiased time autocorrelation averaged over the delay bins.

    `max_lag` is in frames and defaults to half the record.
    """
    if h.times.size < 2:
        raise InsufficientDataError("time autocorrelation needs at least two frames")
    return CorrelationFunction.from_positive(h.dt, _unbiased(h.values, max_lag))


def freq_autocorrelation(H: TVFR, max_lag: int | None = None) -> CorrelationFunction:
    """Per-frame unbiased frequency autocorrelation averaged over the frames.

    `max_lag` is in tones and defaults to all ``N - 1`` lags.
    """
    if H.freqs.size < 2:
        raise InsufficientDataError("frequency autocorrelation needs at least two tones")
    max_lag = H.freqs.size - 1 if max_lag is None else max_lag
    return CorrelationFunction.from_positive(H.df, _unbiased(H.values.T, max_lag))


def tone_time_autocorrelation(H: TVFR, max_lag: int | None = None) -> ToneCorrelations:
    """Unbiased ``<H(t + d, f) H*(t, f)>_t`` for every tone separately."""
    n = H.times.size
    if n < 2:
        raise InsufficientDataError("need at least two frames")
    max_lag = n // 2 if max_lag is None else int(max_lag)
    if not 1 <= max_lag <= n - 1:
        raise RangeError(f"max_lag must lie in [1, {n - 1}]")
    nfft = 1 << int(math.ceil(math.log2(2 * n)))
    X = np.fft.fft(H.values, nfft, axis=0)
    raw = np.fft.ifft(X.real ** 2 + X.imag ** 2, axis=0)[:max_lag + 1]
    raw[0] = raw[0].real
    vals = raw / (n - np.arange(max_lag + 1))[:, None]
    return ToneCorrelations(lags=np.arange(max_lag + 1) * H.dt, freqs=H.freqs.copy(), values=vals)


def waveform_autocorrelation(y: Waveform | np.ndarray, max_lag: int, fs: float | None = None
                             ) -> CorrelationFunction:
    """Unbiased ``<y(t + d) y(t)>_t`` of a real signal for ``|d| <= max_lag`` samples."""
    if isinstance(y, Waveform):
        x, fs = y.samples, y.fs
    else:
        x = np.asarray(y, dtype=float)
        if fs is None:
            raise RangeError("fs is required for a bare array")
    r = _unbiased(x[:, None], max_lag).real
    return CorrelationFunction(lags=np.arange(-max_lag, max_lag + 1) / fs,
                               values=np.concatenate([r[:0:-1], r]))


# -- spectra --------------------------------------------------------------------

def _window(name: str, n: int) -> np.ndarray:
    return np.ones(n) if name in ("boxcar", "rect", None) else get_window(name, n, fftbins=False)


def _doppler_axis(nfft: int, dt: float) -> np.ndarray:
    return np.fft.fftshift(np.fft.fftfreq(nfft, dt))


def scattering_function(h: TVIR, window: str = "hann", nfft: int | None = None
                        ) -> ScatteringFunction:
    """Squared magnitude of the windowed Fourier transform over t at every delay."""
    n = h.times.size
    if n < 2:
        raise InsufficientDataError("scattering function needs at least two frames")
    nfft = 2 * n if nfft is None else int(nfft)
    w = _window(window, n)
    X = np.fft.fft(h.values * w[:, None], nfft, axis=0)
    S = np.fft.fftshift(X.real ** 2 + X.imag ** 2, axes=0) / np.sum(w * w)
    return ScatteringFunction(doppler=_doppler_axis(nfft, h.dt), delay=h.delays.copy(), values=S)


def doppler_spectrum(h: TVIR, window: str = "hann", nfft: int | None = None) -> SpectrumProfile:
    """Delay-averaged scattering function; non-negative by construction."""
    n = h.times.size
    if n < 2:
        raise InsufficientDataError("Doppler spectrum needs at least two frames")
    nfft = 2 * n if nfft is None else int(nfft)
    w = _window(window, n)
    acc = np.zeros(nfft)
    step = max(1, int(2 ** 22 // nfft))
    for s in range(0, h.delays.size, step):
        X = np.fft.fft(h.values[:, s:s + step] * w[:, None], nfft, axis=0)
        acc += (X.real ** 2 + X.imag ** 2).sum(axis=1)
    vals = np.fft.fftshift(acc) / (np.sum(w * w) * h.delays.size)
    return SpectrumProfile(_doppler_axis(nfft, h.dt), vals)


def doppler_spectrum_from_correlation(h: TVIR, window: str = "hann", nfft: int | None = None
                                      ) -> SpectrumProfile:
    """Fourier transform of the delay-averaged time autocorrelation.

    The full-lag unbiased correlation is tapered by the window's own
    autocorrelation so the result sits on the same scale and grid as
    :func:`doppler_spectrum`; with a boxcar window both agree exactly.
    """
    n = h.times.size
    if n < 2:
        raise InsufficientDataError("need at least two frames")
    nfft = 2 * n if nfft is None else int(nfft)
    if nfft < 2 * n - 1:
        raise RangeError("nfft must hold every lag (>= 2 * frames - 1)")
    w = _window(window, n)
    phi = _unbiased(h.values, n - 1)
    cw = np.correlate(w, w, mode="full")[n - 1:]
    seq = np.zeros(nfft, dtype=complex)
    seq[:n] = phi * cw
    seq[nfft - n + 1:] = np.conj(seq[1:n][::-1])
    vals = np.fft.fftshift(np.fft.fft(seq).real) / np.sum(w * w)
    return SpectrumProfile(_doppler_axis(nfft, h.dt), vals)


def delay_profile(h: TVIR, window: str | None = None) -> SpectrumProfile:
    """Time-averaged ``|h(t, tau)|^2``, optionally weighted by a normalized window."""
    if h.values.size == 0:
        raise InsufficientDataError("empty response")
    p = np.abs(h.values) ** 2
    if window is None:
        return SpectrumProfile(h.delays.copy(), p.mean(axis=0))
    w = _window(window, h.times.size) ** 2
    return SpectrumProfile(h.delays.copy(), (w @ p) / w.sum())


def delay_profile_from_correlation(H: TVFR, delays: np.ndarray) -> SpectrumProfile:
    """Inverse transform of the full-lag frequency autocorrelation onto `delays`.

    Weighting lag ``d`` by its overlap ``N - |d|`` matches the response
    normalization ``h = (1/N) sum_i H_i exp(j 2 pi f_i tau)``, which makes
    this identical to the time-averaged ``|h|^2``.
    """
    n = H.freqs.size
    phi = freq_autocorrelation(H, n - 1)
    d = np.arange(n)
    coef = phi.positive * (n - d)
    kern = np.exp(2j * np.pi * np.outer(np.asarray(delays, dtype=float), d * H.df))
    vals = (2 * (kern[:, 1:] @ coef[1:]).real + coef[0].real) / n ** 2
    return SpectrumProfile(np.asarray(delays, dtype=float).copy(), vals)


def tone_doppler_spectra(H: TVFR, window: str = "hann", nfft: int | None = None) -> ToneSpectra:
    """Doppler spectrum of every tone, ``|FT_t{w H(t, f_i)}|^2 / sum(w^2)``."""
    n = H.times.size
    if n < 2:
        raise InsufficientDataError("need at least two frames")
    nfft = 2 * n if nfft is None else int(nfft)
    w = _window(window, n)
    X = np.fft.fft(H.values * w[:, None], nfft, axis=0)
    vals = np.fft.fftshift(X.real ** 2 + X.imag ** 2, axes=0) / np.sum(w * w)
    return ToneSpectra(_doppler_axis(nfft, H.dt), H.freqs.copy(), vals)


# -- scalar parameters ----------------------------------------------------------

def rms_width(p: SpectrumProfile, noise_floor_db: float = DEFAULT_FLOOR_DB) -> float:
    """Standard deviation of the profile taken as a pdf, bins below the floor zeroed."""
    v = np.asarray(p.values, dtype=float)
    peak = v.max() if v.size else 0.0
    if not peak > 0:
        raise EmptyProfileError("profile has no positive mass")
    v = np.where(v >= peak * 10 ** (-noise_floor_db / 10), v, 0.0)
    total = v.sum()
    mu = (p.axis * v).sum() / total
    return float(math.sqrt(max(((p.axis - mu) ** 2 * v).sum() / total, 0.0)))


def peak_width_3db(p: SpectrumProfile) -> float:
    """Width of the contiguous region around the maximum that stays above half of it."""
    v, a = p.values, p.axis
    k = int(np.argmax(v))
    half = v[k] / 2
    if not v[k] > 0:
        raise EmptyProfileError("profile has no positive mass")
    lo = k
    while lo > 0 and v[lo - 1] >= half:
        lo -= 1
    hi = k
    while hi < v.size - 1 and v[hi + 1] >= half:
        hi += 1
    left = a[lo] if lo == 0 else a[lo - 1] + (half - v[lo - 1]) / (v[lo] - v[lo - 1]) * (a[lo] - a[lo - 1])
    right = a[hi] if hi == v.size - 1 else \
        a[hi] + (v[hi] - half) / (v[hi] - v[hi + 1]) * (a[hi + 1] - a[hi])
    return float(right - left)


def coherence_time(c: CorrelationFunction, threshold: float = DEFAULT_TC_THRESHOLD) -> Coherence:
    """First lag where ``|c| / c(0)`` drops below `threshold` (linear interpolation).

    If it never does, the largest computed lag is returned, flagged censored.
    """
    r = c.normalized_magnitude()
    lags = c.positive_lags
    below = np.nonzero(r < threshold)[0]
    if below.size == 0:
        return Coherence(float(lags[-1]), censored=True, note="> span")
    i = int(below[0])
    if i == 0:
        return Coherence(0.0)
    t = lags[i - 1] + (r[i - 1] - threshold) / (r[i - 1] - r[i]) * (lags[i] - lags[i - 1])
    return Coherence(float(t))


def coherence_bandwidth(c: CorrelationFunction, min_prominence: float = SIDELOBE_PROMINENCE
                        ) -> Coherence:
    """Lag of the first local maximum of ``|c|`` after its first local minimum.

    Extrema whose prominence is below `min_prominence` times ``c(0)`` are
    ripple (noise, quantization) and are ignored.
    """
    r = np.abs(c.positive)
    lags = c.positive_lags
    if r.size < 3:
        raise InsufficientDataError("coherence bandwidth needs at least three lags")
    prom = min_prominence * abs(c.zero)
    mins, _ = find_peaks(-r, prominence=prom)
    if mins.size:
        maxs, _ = find_peaks(r, prominence=prom)
        maxs = maxs[maxs > mins[0]]
        if maxs.size:
            return Coherence(float(lags[maxs[0]]))
    return Coherence(float("nan"), note="no-sidelobe")


def characterize_channel(h: TVIR, H: TVFR | None = None,
                         noise_floor_db: float = DEFAULT_FLOOR_DB,
                         tc_threshold: float = DEFAULT_TC_THRESHOLD,
                         window: str = "hann") -> ChannelReport:
    """All global characterization functions and parameters of a response."""
    H = tvfr_from_tvir(h) if H is None else H
    tcorr = time_autocorrelation(h)
    fcorr = freq_autocorrelation(H)
    dop = doppler_spectrum(h, window=window)
    dly = delay_profile(h)
    params = ChannelParams(
        t_c=coherence_time(tcorr, tc_threshold),
        b_c=coherence_bandwidth(fcorr),
        sigma_tau=rms_width(dly, noise_floor_db),
        sigma_nu=rms_width(dop, noise_floor_db),
    )
    return ChannelReport(tcorr, fcorr, dop, dly, params)


# -- received-signal predictions ------------------------------------------------

def _tone_columns(freqs_have: np.ndarray, config: SoundingConfig) -> np.ndarray:
    want = config.tone_freqs
    idx = np.searchsorted(freqs_have, want)
    idx = np.clip(idx, 0, freqs_have.size - 1)
    tol = 1e-6 * config.delta_f
    ok = np.abs(freqs_have[idx] - want) <= tol
    if not np.all(ok):
        missing = want[~ok]
        raise CoverageError(f"{missing.size} tones lack data, first at {missing[0]:g} Hz")
    return idx


def predicted_rx_autocorrelation(phi_H: ToneCorrelations, config: SoundingConfig,
                                 lags: np.ndarray) -> CorrelationFunction:
    """``1/2 sum_k Re{Phi_H(d, k delta_f) exp(j 2 pi k delta_f d)}`` on symmetric `lags`.

    Per-tone correlations are linearly interpolated from their frame-lag grid.
    """
    lags = np.asarray(lags, dtype=float)
    cols = _tone_columns(phi_H.freqs, config)
    a = np.abs(lags)
    if a.max() > phi_H.lags[-1] + 1e-12:
        raise RangeError("requested lags exceed the per-tone correlation span")
    vals = np.zeros(lags.size)
    for c in cols:
        p = phi_H.values[:, c]
        re = np.interp(a, phi_H.lags, p.real)
        im = np.interp(a, phi_H.lags, p.imag) * np.sign(lags)
        vals += 0.5 * np.real((re + 1j * im) * np.exp(2j * np.pi * phi_H.freqs[c] * lags))
    # the prediction is real and even; enforce it exactly
    vals = 0.5 * (vals + vals[::-1])
    return CorrelationFunction(lags=lags, values=vals)


def predicted_rx_psd(R: ToneSpectra, config: SoundingConfig) -> SpectrumProfile:
    """Positive-frequency received PSD: each tone's Doppler spectrum at ``k delta_f`` with weight 1/4."""
    cols = _tone_columns(R.freqs, config)
    if R.doppler[-1] - R.doppler[0] >= config.delta_f:
        raise RangeError("per-tone Doppler span must be narrower than delta_f")
    axis = np.concatenate([R.freqs[c] + R.doppler for c in cols])
    vals = np.concatenate([0.25 * R.values[:, c] for c in cols])
    return SpectrumProfile(axis, vals)
