"""Initial-delay tracking and time-varying resampling.

The common arrival drift (clock offset, platform motion) smears every path
over many delay bins and widens the Doppler spectra. It is estimated from a
zero-padded first-pass impulse response, smoothed, and removed by resampling
the received signal before a second estimation pass.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import median_filter

from ._interp import TableInterpolator
from .errors import RangeError, UndetectablePathError
from .estimator import (DEFAULT_PERIODS, TVFR, TVIR, filterbank_estimate, tvfr_from_tvir,
                        tvir_from_tvfr)
from .signal_gen import SoundingConfig, Waveform

log = logging.getLogger(__name__)

RESAMPLER_TAPS = 32
DETECTION_DB = 10.0
SMOOTHING_FRAMES = 5
LEADING_FRACTION = 0.25
TRACKING_FRACTION = 0.02
TRACKING_MIN_BINS = 8


@dataclass
class DelayTrack:
    """Initial delay ``tau0`` and resampling ratio ``1 + d tau0/dt`` per frame."""

    times: np.ndarray
    tau0: np.ndarray
    ratio: np.ndarray = field(default=None)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.tau0 = np.asarray(self.tau0, dtype=float)
        if self.times.shape != self.tau0.shape:
            raise RangeError("times and tau0 must have equal length")
        if self.ratio is None:
            self.ratio = (1.0 + np.gradient(self.tau0, self.times) if self.times.size > 1
                          else np.ones_like(self.tau0))
        self.ratio = np.asarray(self.ratio, dtype=float)
        if not (self.times.shape == self.tau0.shape == self.ratio.shape) or self.times.ndim != 1:
            raise RangeError("times, tau0 and ratio must be 1-D arrays of equal length")
        if self.times.size < 1:
            raise RangeError("empty delay track")
        if not (np.all(np.isfinite(self.tau0)) and np.all(np.isfinite(self.ratio))):
            raise RangeError("delay track contains non-finite values")
        if np.any(self.ratio <= 0):
            raise RangeError("resampling ratio must be positive")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise RangeError("track times must be strictly increasing")

    def tau_at(self, t) -> np.ndarray:
        """tau0 at arbitrary times; linear inside, straight-line extrapolation outside."""
        t = np.asarray(t, dtype=float)
        if self.times.size == 1:
            return np.full_like(t, self.tau0[0])
        out = np.interp(t, self.times, self.tau0)
        n = min(SMOOTHING_FRAMES, self.times.size)
        lo, hi = t < self.times[0], t > self.times[-1]
        if np.any(lo):
            a, b = np.polyfit(self.times[:n], self.tau0[:n], 1)
            out[lo] = self.tau0[0] + a * (t[lo] - self.times[0])
        if np.any(hi):
            a, b = np.polyfit(self.times[-n:], self.tau0[-n:], 1)
            out[hi] = self.tau0[-1] + a * (t[hi] - self.times[-1])
        return out


def _refined(h: TVIR, zero_pad_factor: int) -> TVIR:
    if h.zero_pad_factor == zero_pad_factor:
        return h
    if h.freqs is None:
        raise RangeError("cannot refine a TVIR without its tone grid")
    return tvir_from_tvfr(tvfr_from_tvir(h), zero_pad_factor)


def _parabolic(p_m1: float, p0: float, p1: float) -> float:
    den = p_m1 - 2 * p0 + p1
    if den >= 0:
        return 0.0
    return float(np.clip(0.5 * (p_m1 - p1) / den, -0.5, 0.5))


def _leading_peak(profile: np.ndarray, threshold_db: float) -> int:
    """Index of the first significant arrival in a (circular) power profile.

    The strongest bin anchors the search; the earliest local maximum within
    the preceding quarter of the span that is within `threshold_db` of it wins.
    """
    nb = profile.size
    g = int(np.argmax(profile))
    lead = int(LEADING_FRACTION * nb)
    idx = (g - lead + np.arange(lead + 1)) % nb
    seg = profile[idx]
    floor = profile[g] * 10 ** (-threshold_db / 10)
    left = profile[(idx - 1) % nb]
    right = profile[(idx + 1) % nb]
    cand = np.nonzero((seg >= floor) & (seg >= left) & (seg >= right))[0]
    return int(idx[cand[0]]) if cand.size else g


def estimate_initial_delay(h: TVIR, zero_pad_factor: int = 16,
                           threshold_db: float = DETECTION_DB,
                           smoothing: int = SMOOTHING_FRAMES) -> DelayTrack:
    """Track the first-arrival delay frame by frame on a zero-padded delay grid.

    Each frame is searched within +-2% of the span (at least 8 bins) around the previous
    estimate, the peak refined by a parabola through the three top bins,
    unwrapped modulo the span and median-smoothed over `smoothing` frames.
    """
    hr = _refined(h, int(zero_pad_factor))
    power = np.abs(hr.values) ** 2
    n_frames, nb = power.shape
    d_tau = hr.d_tau
    span = nb * d_tau

    head = power[:min(SMOOTHING_FRAMES, n_frames)].mean(axis=0)
    med = np.median(head)
    if not head.max() >= med * 10 ** (threshold_db / 10) or head.max() == 0:
        raise UndetectablePathError(
            f"no arrival {threshold_db:g} dB above the median delay-bin power")

    half = max(TRACKING_MIN_BINS, int(TRACKING_FRACTION * nb))
    offs = np.arange(-half, half + 1)
    pos = np.empty(n_frames)
    prev = _leading_peak(head, threshold_db)
    lost = 0
    for m in range(n_frames):
        row = power[m]
        idx = (prev + offs) % nb
        k = int(idx[np.argmax(row[idx])])
        if row[k] < np.median(row) * 10 ** (threshold_db / 10):
            lost += 1  # keep the previous position through a fade
            pos[m] = pos[m - 1] if m else prev
            continue
        frac = _parabolic(row[(k - 1) % nb], row[k], row[(k + 1) % nb])
        pos[m] = k + frac
        prev = k
    if lost:
        log.info("leading path below threshold in %d of %d frames", lost, n_frames)

    tau = np.unwrap(pos * d_tau, period=span)
    if smoothing > 1 and n_frames >= smoothing:
        tau = median_filter(tau, size=int(smoothing), mode="nearest")
    return DelayTrack(times=hr.times.copy(), tau0=tau)


def drift_rate(track: DelayTrack) -> float:
    """Least-squares slope of tau0 versus time (s/s)."""
    if track.times.size < 2:
        raise RangeError("need at least two frames to estimate a drift")
    return float(np.polyfit(track.times, track.tau0, 1)[0])


def _bh_sinc(x: np.ndarray) -> np.ndarray:
    half = RESAMPLER_TAPS / 2
    # continuous 4-term Blackman-Harris window over |x| <= half
    a = (0.35875, 0.48829, 0.14128, 0.01168)
    ph = np.pi * (x + half) / half
    w = a[0] - a[1] * np.cos(ph) + a[2] * np.cos(2 * ph) - a[3] * np.cos(3 * ph)
    return np.where(np.abs(x) < half, np.sinc(x) * w, 0.0)


_BH_INTERP = TableInterpolator(_bh_sinc, np.arange(-RESAMPLER_TAPS // 2 + 1, RESAMPLER_TAPS // 2 + 1),
                               normalize=True)


def fractional_interpolate(x: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """Band-limited values of `x` at fractional sample `positions` (zeros outside)."""
    return _BH_INTERP(x, positions)


def resample(y: Waveform, track: DelayTrack, max_extrapolation: float = 0.1) -> Waveform:
    """Output sample at ``t`` is the input at ``t + tau0(t) - tau0(0)``.

    The track is extrapolated linearly at both ends; more than
    `max_extrapolation` of the record duration on either side is a range error.
    """
    dur = y.duration
    gap_lo = track.times[0]
    gap_hi = dur - track.times[-1]
    if gap_lo > max_extrapolation * dur or gap_hi > max_extrapolation * dur \
            or track.times[0] > dur or track.times[-1] < 0:
        raise RangeError(f"track {track.times[0]:.4g}-{track.times[-1]:.4g} s does not cover "
                         f"the {dur:.4g} s waveform")
    n = y.samples.size
    t = np.arange(n) / y.fs
    shift = track.tau_at(t) - track.tau_at(np.array([0.0]))[0]
    if np.all(shift == 0):
        return Waveform(y.fs, y.samples.copy())
    return Waveform(y.fs, fractional_interpolate(y.samples, np.arange(n) + shift * y.fs))


def compensate(y: Waveform, config: SoundingConfig, M: int | None = None,
               zero_pad_factor: int = 16, n_periods: int = DEFAULT_PERIODS,
               ) -> tuple[TVFR, TVIR, DelayTrack]:
    """Estimate, track the initial delay, resample and estimate again."""
    H = filterbank_estimate(y, config, M=M, n_periods=n_periods)
    track = estimate_initial_delay(tvir_from_tvfr(H), zero_pad_factor)
    H2 = filterbank_estimate(resample(y, track), config, M=M, n_periods=n_periods)
    return H2, tvir_from_tvfr(H2), track
