"""Filter-bank estimation of the time-variant frequency response.

Tone ``i`` is isolated by the complex band-pass ``g[n] exp(j 2 pi k_i delta_f n / fs)``,
decimated by ``M`` and demodulated with the tone's own carrier and phase code.
When ``fs/delta_f`` is an integer the whole bank reduces to "window by g, fold
into one period, FFT", which is what :func:`filterbank_estimate` does.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import signal as sps

from .errors import (AliasingError, CalibrationError, DesignError, InsufficientDataError,
                     RangeError)
from .signal_gen import SoundingConfig, Waveform

log = logging.getLogger(__name__)

DEFAULT_PERIODS = 4
_DESIGN_RATE = 32          # samples per period used for the low-rate equiripple design
_MIN_STOPBAND_DB = 60.0
_SELECT_RATE = 200
_CUTOFF_TOLERANCE = 0.10   # -3 dB point must be within 10% of delta_f / 2


def _uniform(x: np.ndarray, name: str) -> None:
    if x.ndim != 1:
        raise RangeError(f"{name} must be 1-D")
    if x.size >= 2:
        d = np.diff(x)
        if np.any(d <= 0):
            raise RangeError(f"{name} must be strictly increasing")
        if not np.allclose(d, d[0], rtol=1e-6, atol=0):
            raise RangeError(f"{name} must be uniform")


@dataclass
class TVFR:
    """Time-variant frequency response ``values[m, i] = H(times[m], freqs[i])``."""

    times: np.ndarray
    freqs: np.ndarray
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.freqs = np.asarray(self.freqs, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        _uniform(self.times, "times")
        _uniform(self.freqs, "freqs")
        if self.values.shape != (self.times.size, self.freqs.size):
            raise RangeError(f"values shape {self.values.shape} does not match grids "
                             f"({self.times.size}, {self.freqs.size})")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0

    @property
    def df(self) -> float:
        return float(self.freqs[1] - self.freqs[0]) if self.freqs.size > 1 else 0.0


@dataclass
class TVIR:
    """Time-variant impulse response ``values[m, l] = h(times[m], delays[l])``.

    `freqs` is the tone grid the response was synthesized from; it is what
    makes the transform back to a :class:`TVFR` possible.
    """

    times: np.ndarray
    delays: np.ndarray
    values: np.ndarray = field(repr=False)
    freqs: np.ndarray | None = None
    zero_pad_factor: int = 1

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.delays = np.asarray(self.delays, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.freqs is not None:
            self.freqs = np.asarray(self.freqs, dtype=float)
        _uniform(self.times, "times")
        _uniform(self.delays, "delays")
        if self.values.shape != (self.times.size, self.delays.size):
            raise RangeError(f"values shape {self.values.shape} does not match grids")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0

    @property
    def d_tau(self) -> float:
        return float(self.delays[1] - self.delays[0]) if self.delays.size > 1 else 0.0

    @property
    def span(self) -> float:
        return self.delays.size * self.d_tau


@dataclass(frozen=True)
class CalibrationCurve:
    """Combined transducer response, gain in dB versus frequency in Hz."""

    freqs: tuple[float, ...]
    gains_db: tuple[float, ...]

    def __post_init__(self):
        f = np.asarray(self.freqs, dtype=float)
        g = np.asarray(self.gains_db, dtype=float)
        if f.ndim != 1 or f.shape != g.shape or f.size < 1:
            raise CalibrationError("calibration needs matching 1-D frequency and gain columns")
        if f.size > 1 and np.any(np.diff(f) <= 0):
            raise CalibrationError("calibration frequencies must be strictly increasing")
        object.__setattr__(self, "freqs", tuple(f))
        object.__setattr__(self, "gains_db", tuple(g))

    def magnitude(self, f) -> np.ndarray:
        """Linear magnitude at `f`, interpolating the dB curve linearly in frequency."""
        f = np.asarray(f, dtype=float)
        lo, hi = self.freqs[0], self.freqs[-1]
        if np.any(f < lo - 1e-9) or np.any(f > hi + 1e-9):
            raise CalibrationError(
                f"calibration covers {lo:g}-{hi:g} Hz, requested {f.min():g}-{f.max():g} Hz")
        return 10 ** (np.interp(f, self.freqs, self.gains_db) / 20)


# -- prototype filter -----------------------------------------------------------

def _response_db(g: np.ndarray, per_period: float, oversample: int = 16):
    """Magnitude response in dB and frequency axis in units of delta_f."""
    nfft = int(2 ** np.ceil(np.log2(g.size * oversample)))
    h = np.abs(np.fft.rfft(g, nfft))
    f = np.arange(h.size) * per_period / nfft
    with np.errstate(divide="ignore"):
        return f, 20 * np.log10(h / h[0])


def _cutoff_and_stopband(g: np.ndarray, per_period: float) -> tuple[float, float]:
    f, hdb = _response_db(g, per_period)
    below = np.nonzero(hdb < -10 * np.log10(2))[0]
    f3 = f[below[0]] if below.size else np.inf
    stop = np.max(hdb[f >= 1.0]) if np.any(f >= 1.0) else -np.inf
    return float(f3), float(stop)


@functools.lru_cache(maxsize=8)
def _low_rate_candidates(n_periods: int) -> tuple[np.ndarray, ...]:
    """Equiripple low-pass designs of ``n_periods * _DESIGN_RATE`` taps, stop edge at delta_f,
    one per pass edge of a sweep."""
    n = n_periods * _DESIGN_RATE
    out = []
    for edge in np.linspace(0.10, 0.48, 39):
        try:
            g = sps.remez(n, [0, edge / _DESIGN_RATE, 1.0 / _DESIGN_RATE, 0.5], [1, 0],
                          weight=[1, 30], fs=1.0, maxiter=100)
        except Exception:  # remez may fail to converge for some edges
            continue
        if np.all(np.isfinite(g)):
            out.append(g)
    return tuple(out)


def _to_target_rate(g0: np.ndarray, per: int, n_periods: int) -> np.ndarray:
    """Band-limited interpolation onto ``per`` samples/period, then polyphase normalization."""
    length = n_periods * per
    src = np.arange(g0.size) - (g0.size - 1) / 2
    dst = (np.arange(length) - (length - 1) / 2) * _DESIGN_RATE / per
    g = np.empty(length)
    for s in range(0, length, 8192):
        g[s:s + 8192] = np.sinc(dst[s:s + 8192, None] - src[None, :]) @ g0
    # equal polyphase sums <=> zero response at k*fs/per, k != 0
    phase_sum = g.reshape(n_periods, per).sum(axis=0)
    g = g / phase_sum[np.arange(length) % per]
    return g / g.sum()


@functools.lru_cache(maxsize=8)
def _best_candidate(n_periods: int) -> np.ndarray:
    """Pass edge chosen on a reference grid; the response barely depends on the rate."""
    best = None
    for g0 in _low_rate_candidates(n_periods):
        f3, stop = _cutoff_and_stopband(_to_target_rate(g0, _SELECT_RATE, n_periods), _SELECT_RATE)
        key = (abs(f3 - 0.5) <= 0.4 * _CUTOFF_TOLERANCE, -stop)
        if best is None or key > best[0]:
            best = (key, g0)
    if best is None:
        raise DesignError(f"equiripple design failed for {n_periods} periods")
    return best[1]


@functools.lru_cache(maxsize=16)
def _design(per: int, n_periods: int) -> tuple[np.ndarray, float, float]:
    g = _to_target_rate(_best_candidate(n_periods), per, n_periods)
    f3, stop = _cutoff_and_stopband(g, per)
    return g, f3, stop


def design_prototype_filter(delta_f: float, fs: float, n_periods: int = DEFAULT_PERIODS,
                            strict: bool = True) -> np.ndarray:
    """Real symmetric low-pass FIR with cut-off ``delta_f / 2``.

    Length is ``n_periods * round(fs / delta_f)`` and DC gain is 1. The taps are
    normalized per polyphase branch so the response is exactly zero at every
    non-zero multiple of `delta_f`, where the neighbouring tones sit.

    Raises :class:`DesignError` when the -3 dB point cannot be placed within
    10% of ``delta_f / 2`` with at least 60 dB of attenuation beyond `delta_f`
    (unless ``strict=False``, in which case the best effort is returned).
    """
    if not fs > 2 * delta_f:
        raise DesignError(f"need fs > 2*delta_f, got fs={fs:g}, delta_f={delta_f:g}")
    n_periods = int(n_periods)
    if n_periods < 1:
        raise DesignError("n_periods must be >= 1")
    per = int(round(fs / delta_f))
    if per < 4:
        raise DesignError(f"fs/delta_f = {fs / delta_f:g} too small for a prototype")
    g, f3, stop = _design(per, n_periods)
    ok = abs(f3 - 0.5) <= 0.5 * _CUTOFF_TOLERANCE and stop <= -_MIN_STOPBAND_DB
    if not ok:
        msg = (f"prototype with {n_periods} periods: -3 dB at {f3:.3f} delta_f, "
               f"stopband {stop:.1f} dB")
        if strict:
            raise DesignError(msg)
        log.warning("%s (accepted, strict=False)", msg)
    return g.copy()


# -- filter bank ------------------------------------------------------------------

def default_decimation(config: SoundingConfig) -> int:
    return max(1, int(np.floor(0.9 * config.fs / config.delta_f)))


def filterbank_estimate(y: Waveform, config: SoundingConfig, M: int | None = None,
                        n_periods: int = DEFAULT_PERIODS, drop_transient: bool = True,
                        prototype: np.ndarray | None = None) -> TVFR:
    """Estimate ``H(m M / fs, k_i delta_f)`` from the received sounding signal.

    Frame ``m`` uses the samples ``[m M, m M + L)`` (``L`` = prototype length)
    and is time-stamped at the window centre. With `drop_transient` the first
    and last `n_periods` frames are discarded.
    """
    fs = y.fs
    if abs(fs - config.fs) > 1e-9 * fs:
        raise RangeError(f"waveform fs {fs:g} differs from sounding fs {config.fs:g}")
    M = default_decimation(config) if M is None else int(M)
    if M < 1 or M >= fs / config.delta_f:
        raise AliasingError(f"decimation M={M} must satisfy 1 <= M < fs/delta_f = "
                            f"{fs / config.delta_f:g}")
    g = design_prototype_filter(config.delta_f, fs, n_periods) if prototype is None \
        else np.asarray(prototype, dtype=float)
    L = g.size
    x = y.samples
    if x.size < L:
        raise InsufficientDataError(f"record of {x.size} samples shorter than the {L}-tap prototype")

    starts = np.arange(0, x.size - L + 1, M)
    skip = n_periods if drop_transient else 0
    if starts.size <= 2 * skip:
        raise InsufficientDataError(f"only {starts.size} frames, {2 * skip} are transient")
    if skip:
        starts = starts[skip:-skip]

    freqs = config.tone_freqs
    psi = config.phases()
    frames = sliding_window_view(x, L)
    per = config.integer_period
    out = np.empty((starts.size, freqs.size), dtype=complex)
    chunk = max(1, int(4e6 // L))
    if per is not None and L % per == 0:
        k = config.tone_indices
        for s in range(0, starts.size, chunk):
            st = starts[s:s + chunk]
            seg = frames[st] * g
            folded = seg.reshape(st.size, L // per, per).sum(axis=1)
            spec = np.fft.rfft(folded, axis=1)[:, k]
            rot = np.exp(-2j * np.pi * np.outer(st % per, k) / per)
            out[s:s + chunk] = spec * rot
    else:
        demod = np.exp(-2j * np.pi * np.outer(np.arange(L), freqs) / fs) * g[:, None]
        for s in range(0, starts.size, chunk):
            st = starts[s:s + chunk]
            rot = np.exp(-2j * np.pi * np.outer(st, freqs) / fs)
            out[s:s + chunk] = (frames[st] @ demod) * rot
    # a real cosine puts half its amplitude on the positive-frequency tone
    out *= 2 * np.exp(-1j * psi)[None, :]
    times = (starts + (L - 1) / 2) / fs
    return TVFR(times=times, freqs=freqs, values=out)


def compensate_transducer(H: TVFR, cal: CalibrationCurve) -> TVFR:
    """Divide out the projector/hydrophone magnitude response at each tone."""
    mag = cal.magnitude(H.freqs)
    return TVFR(times=H.times.copy(), freqs=H.freqs.copy(), values=H.values / mag[None, :])


def tvir_from_tvfr(H: TVFR, zero_pad_factor: int = 1) -> TVIR:
    """Impulse response per frame by inverse DFT over the tone grid.

    ``h(t, tau_l) = (1/N) sum_i H(t, f_i) exp(j 2 pi f_i tau_l)`` on the delay
    grid ``tau_l = l / (delta_f N zero_pad_factor)`` spanning one probe period.
    """
    zp = int(zero_pad_factor)
    if zp < 1:
        raise RangeError("zero_pad_factor must be >= 1")
    n = H.freqs.size
    if n < 2:
        raise InsufficientDataError("need at least two tones")
    df = H.df
    npad = n * zp
    l = np.arange(npad)
    delays = l / (df * npad)
    k1 = H.freqs[0] / df
    vals = np.fft.ifft(H.values, n=npad, axis=1) * (npad / n)
    vals *= np.exp(2j * np.pi * k1 * l / npad)[None, :]
    return TVIR(times=H.times.copy(), delays=delays, values=vals, freqs=H.freqs.copy(),
                zero_pad_factor=zp)


def tvfr_from_tvir(h: TVIR, freqs=None, delay_offset: float = 0.0) -> TVFR:
    """Forward transform of a TVIR back onto a tone grid.

    ``H(t, f_i) = (1/zp) sum_l h(t, tau_l) exp(-j 2 pi f_i (tau_l - delay_offset))``.
    """
    freqs = h.freqs if freqs is None else np.asarray(freqs, dtype=float)
    if freqs is None:
        raise RangeError("TVIR carries no tone grid; pass freqs explicitly")
    kernel = np.exp(-2j * np.pi * np.outer(h.delays - delay_offset, freqs))
    return TVFR(times=h.times.copy(), freqs=np.asarray(freqs, dtype=float).copy(),
                values=(h.values @ kernel) / h.zero_pad_factor)
