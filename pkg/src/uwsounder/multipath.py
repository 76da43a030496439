"""Path detection, per-path response extraction and per-path reports."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from .characterize import (ChannelParams, Coherence, DEFAULT_FLOOR_DB, DEFAULT_TC_THRESHOLD,
                           SpectrumProfile, coherence_bandwidth, coherence_time, delay_profile,
                           doppler_spectrum, freq_autocorrelation, rms_width,
                           time_autocorrelation)
from .errors import EmptyProfileError, NoPathError, RangeError, WindowError
from .estimator import TVFR, TVIR, tvfr_from_tvir
from .stats_fit import (DEFAULT_BINS, DEFAULT_F_SEG, DEFAULT_T_SEG, RicianFit, fit_rician,
                        segment_gains)

DEFAULT_MAX_PATHS = 4
DEFAULT_GUARD = 0.1e-3
DEFAULT_LAST_EXTENT = 2e-3
DEFAULT_MIN_SEPARATION = 0.1e-3
DEFAULT_PROMINENCE_DB = 6.0
BC_FALLBACK_THRESHOLD = 0.5


@dataclass
class PathResponse:
    """One extracted path; `tvir` delays are relative to `tau`."""

    tau: float
    tvir: TVIR = field(repr=False)
    tvfr: TVFR = field(repr=False)
    window: tuple[float, float] = (0.0, 0.0)

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.tvir.values) ** 2))


@dataclass
class PathDecomposition:
    paths: list[PathResponse]

    def __post_init__(self):
        taus = [p.tau for p in self.paths]
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise WindowError("paths must be ordered by strictly increasing delay")
        for a, b in zip(self.paths, self.paths[1:]):
            if b.window[0] < a.window[1]:
                raise WindowError(f"windows of paths at {a.tau:g} s and {b.tau:g} s overlap")

    @property
    def taus(self) -> list[float]:
        return [p.tau for p in self.paths]

    @property
    def window_bounds(self) -> list[tuple[float, float]]:
        return [p.window for p in self.paths]

    def __len__(self):
        return len(self.paths)


@dataclass
class PathReport:
    tau: float
    params: ChannelParams
    fit: RicianFit | None
    energy: float


def detect_paths(p: SpectrumProfile, max_paths: int = DEFAULT_MAX_PATHS,
                 min_separation: float = DEFAULT_MIN_SEPARATION,
                 min_prominence_db: float = DEFAULT_PROMINENCE_DB,
                 floor_db: float = DEFAULT_FLOOR_DB) -> list[float]:
    """Delays of the strongest peaks of a delay profile, returned in delay order.

    The profile is clipped `floor_db` below its maximum before prominences are
    measured, so sidelobes and noise under the floor cannot qualify.
    """
    if max_paths < 1:
        raise RangeError("max_paths must be >= 1")
    v = np.asarray(p.values, dtype=float)
    if v.size == 0 or not v.max() > 0:
        raise NoPathError("empty delay profile")
    step = float(p.axis[1] - p.axis[0]) if p.axis.size > 1 else 1.0
    db = 10 * np.log10(np.maximum(v, v.max() * 1e-30) / v.max())
    db = np.maximum(db, -floor_db)
    dist = max(1, int(round(min_separation / step)))
    # the delay axis is one period of a periodic response: pad circularly so a
    # peak straddling the ends is seen once, with its true neighbours
    w = min(v.size, 2 * dist + 2)
    ext = np.concatenate([db[-w:], db, db[:w]])
    idx, props = find_peaks(ext, height=-floor_db + 1e-9, distance=dist,
                            prominence=min_prominence_db)
    keep = (idx >= w) & (idx < w + v.size)
    idx = idx[keep] - w
    heights = props["peak_heights"][keep]
    if idx.size == 0:
        raise NoPathError("no peak clears the floor and prominence thresholds")
    # find_peaks' distance rule does not see across the wrap; enforce it here
    order = np.argsort(-heights, kind="stable")
    chosen: list[int] = []
    for i in order:
        if all(min(abs(idx[i] - j), v.size - abs(idx[i] - j)) >= dist for j in chosen):
            chosen.append(int(idx[i]))
    heights = np.array([db[i] for i in chosen])
    idx = np.array(chosen)
    strongest = idx[np.argsort(-heights, kind="stable")[:max_paths]]
    return [float(p.axis[i]) for i in np.sort(strongest)]


def extract_path(h: TVIR, tau_p: float, half_width: float, guard: float = DEFAULT_GUARD
                 ) -> PathResponse:
    """Rectangular delay window ``[tau_p - guard, tau_p + half_width)`` re-referenced to `tau_p`."""
    lo, hi = tau_p - guard, tau_p + half_width
    d = h.d_tau
    tol = 1e-9 * max(d, 1e-12)
    if lo < h.delays[0] - tol or hi > h.delays[-1] + d + tol or hi <= lo:
        raise WindowError(f"window [{lo:g}, {hi:g}) s outside the delay span "
                          f"[{h.delays[0]:g}, {h.delays[-1] + d:g})")
    mask = (h.delays >= lo - tol) & (h.delays < hi - tol)
    if not np.any(mask):
        raise WindowError("window contains no delay bins")
    sub = TVIR(times=h.times.copy(), delays=h.delays[mask] - tau_p, values=h.values[:, mask],
               freqs=h.freqs, zero_pad_factor=h.zero_pad_factor)
    H = tvfr_from_tvir(sub) if h.freqs is not None else None
    return PathResponse(tau=float(tau_p), tvir=sub, tvfr=H, window=(float(lo), float(hi)))


def decompose(h: TVIR, taus, guard: float = DEFAULT_GUARD,
              last_extent: float = DEFAULT_LAST_EXTENT) -> PathDecomposition:
    """Split `h` into disjoint per-path windows.

    Each window runs from ``tau_p - guard`` to the midpoint toward the next
    path; the last one extends `last_extent`, clipped to the delay span and
    kept one guard short of the first path's periodic image.
    """
    taus = sorted(float(t) for t in taus)
    if not taus:
        raise NoPathError("no path delays given")
    short = guard - (taus[0] - h.delays[0])
    if short > 0:
        # the delay axis is periodic: rotate so the first guard lies inside it
        n = int(np.ceil(short / h.d_tau - 1e-9))
        h = TVIR(times=h.times, delays=h.delays - n * h.d_tau,
                 values=np.roll(h.values, n, axis=1), freqs=h.freqs,
                 zero_pad_factor=h.zero_pad_factor)
    end = h.delays[-1] + h.d_tau
    wrap = taus[0] + h.span - guard
    out = []
    for i, tau in enumerate(taus):
        if i + 1 < len(taus):
            stop = 0.5 * (tau + taus[i + 1])
            if taus[i + 1] - guard < stop - 1e-12:
                raise WindowError(f"paths at {tau:g} s and {taus[i + 1]:g} s are closer than "
                                  f"twice the {guard:g} s guard")
        else:
            stop = min(tau + last_extent, end, wrap)
        out.append(extract_path(h, tau, stop - tau, guard))
    return PathDecomposition(out)


def _path_bandwidth(H: TVFR) -> Coherence:
    fc = freq_autocorrelation(H)
    bc = coherence_bandwidth(fc)
    if np.isfinite(bc.value):
        return bc
    alt = coherence_time(fc, BC_FALLBACK_THRESHOLD)
    note = f"threshold {BC_FALLBACK_THRESHOLD:g}"
    return Coherence(alt.value, censored=alt.censored, note=note)


def per_path_report(d: PathDecomposition, tc_threshold: float = DEFAULT_TC_THRESHOLD,
                    t_seg: float = DEFAULT_T_SEG, f_seg: float = DEFAULT_F_SEG,
                    bins: int = DEFAULT_BINS, noise_floor_db: float = DEFAULT_FLOOR_DB,
                    min_samples: int = 500) -> list[PathReport]:
    """Coherence time/bandwidth, spreads and pooled Rician fit for every path.

    Segment sizes larger than the record or band are clipped to it.
    """
    reports = []
    for p in d.paths:
        h, H = p.tvir, p.tvfr
        tc = coherence_time(time_autocorrelation(h), tc_threshold)
        bc = _path_bandwidth(H)
        try:
            s_tau = rms_width(delay_profile(h), noise_floor_db)
            s_nu = rms_width(doppler_spectrum(h), noise_floor_db)
        except EmptyProfileError:
            s_tau = s_nu = float("nan")
        ts = min(t_seg, H.times.size * H.dt)
        fs_ = min(f_seg, H.freqs.size * H.df)
        try:
            fit = fit_rician(segment_gains(H, ts, fs_), bins, min_samples)
        except (RangeError, EmptyProfileError):
            fit = None
        reports.append(PathReport(tau=p.tau, params=ChannelParams(tc, bc, s_tau, s_nu),
                                  fit=fit, energy=p.energy))
    return reports
