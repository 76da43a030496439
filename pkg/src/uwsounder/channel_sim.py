"""Linear time-variant multipath channel used as a ground-truth oracle.

A path ``p`` maps the transmitted passband signal ``x`` to
``Re{ gain_p * a_p(t) * (s_p * x_a)(t - tau_p(t)) }`` where ``x_a`` is the
analytic signal, ``s_p`` an optional shaping FIR and ``a_p`` the Doppler
modulator. With that convention the time-variant frequency response seen by a
tone at ``f > 0`` is ``H(t, f) = sum_p gain_p S_p(f) a_p(t) exp(-j 2 pi f tau_p(t))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy import signal as sps
from scipy.special import i0

from ._interp import TableInterpolator
from .errors import ConfigError, RangeError
from .signal_gen import Waveform

KAISER_TAPS = 31
KAISER_BETA = 9.0
_FADING_SINUSOIDS = 64


@dataclass(frozen=True)
class GeometrySpec:
    """Iso-velocity shallow-water link; depths measured down from the surface."""

    range_m: float
    sea_depth: float
    tx_depth: float = 6.0
    rx_depth: float = 6.0
    sound_speed: float = 1525.0

    def __post_init__(self):
        if not (math.isfinite(self.range_m) and self.range_m >= 0):
            raise RangeError(f"range must be finite and non-negative, got {self.range_m}")
        if not 0 < self.tx_depth < self.sea_depth or not 0 < self.rx_depth < self.sea_depth:
            raise RangeError("transmitter and receiver must sit strictly inside the water column")
        if not self.sound_speed > 0:
            raise RangeError("sound speed must be positive")


@dataclass(frozen=True)
class Static:
    """Time-invariant path."""


@dataclass(frozen=True)
class DopplerShift:
    """Constant Doppler shift ``nu`` Hz: ``a(t) = exp(j 2 pi nu t)``."""

    nu: float


@dataclass(frozen=True)
class RicianFading:
    """Rician fading with unit mean-square modulator.

    The diffuse part is a sum of sinusoids whose Doppler frequencies are drawn
    from a zero-mean Gaussian with standard deviation `doppler_spread` Hz.
    """

    k_factor: float
    doppler_spread: float
    seed: int | None = None

    def __post_init__(self):
        if self.k_factor < 0:
            raise ConfigError("Rician K must be non-negative")
        if not self.doppler_spread > 0:
            raise ConfigError("doppler_spread must be positive")


@dataclass(frozen=True)
class DelaySway:
    """Sinusoidal path-length oscillation: ``tau(t) = tau + amplitude*sin(2 pi rate t)``.

    Gives every tone a Doppler spread proportional to its frequency, as platform
    or surface motion does.
    """

    amplitude: float
    rate: float


DopplerModel = Union[Static, DopplerShift, RicianFading, DelaySway]


@dataclass(frozen=True)
class PathSpec:
    delay: float
    gain: complex = 1.0
    doppler: DopplerModel = field(default_factory=Static)
    shape_filter: tuple[float, ...] | None = None
    label: str = ""

    def __post_init__(self):
        if not self.delay >= 0:
            raise ConfigError(f"path delay must be >= 0, got {self.delay}")
        if self.shape_filter is not None:
            if isinstance(self.shape_filter, str):
                raise ConfigError("shape_filter must be a sequence of tap values")
            try:
                taps = tuple(float(c) for c in self.shape_filter)
            except (TypeError, ValueError):
                raise ConfigError(f"bad shape_filter taps: {self.shape_filter!r}") from None
            if not taps:
                raise ConfigError("shape_filter needs at least one tap")
            object.__setattr__(self, "shape_filter", taps)


@dataclass(frozen=True)
class ChannelSpec:
    paths: tuple[PathSpec, ...]
    clock_offset_ppm: float = 0.0
    snr_db: float | None = None
    seed: int = 0

    def __post_init__(self):
        paths = tuple(self.paths)
        if not paths:
            raise ConfigError("channel needs at least one path")
        if any(b.delay < a.delay for a, b in zip(paths, paths[1:])):
            raise ConfigError("paths must be sorted by delay")
        object.__setattr__(self, "paths", paths)


def geometry_paths(g: GeometrySpec, n_paths: int = 4) -> list[PathSpec]:
    """Image-method arrivals: direct, surface, bottom and surface-bottom paths.

    Delays are absolute travel times; gains are unity.
    """
    if not 1 <= n_paths <= 4:
        raise RangeError(f"n_paths must be in 1..4, got {n_paths}")
    zs, zr, d = g.tx_depth, g.rx_depth, g.sea_depth
    vertical = [
        ("direct", abs(zs - zr)),
        ("surface", zs + zr),
        ("bottom", 2 * d - zs - zr),
        ("surface-bottom", 2 * d + zs - zr),
    ]
    out = []
    for label, dz in vertical[:n_paths]:
        length = math.hypot(g.range_m, dz)
        out.append(PathSpec(delay=length / g.sound_speed, gain=1.0, label=label))
    return out


# -- modulators -------------------------------------------------------------

class _Modulator:
    """Complex multiplicative modulator a(t) and delay law tau(t) of one path."""

    def __init__(self, path: PathSpec, seed: int, index: int):
        self.path = path
        model = path.doppler
        self._sos = None
        if isinstance(model, RicianFading):
            ss = np.random.SeedSequence([model.seed if model.seed is not None else seed, index])
            rng = np.random.default_rng(ss)
            self._sos = (
                rng.normal(0.0, model.doppler_spread, _FADING_SINUSOIDS),
                rng.uniform(0, 2 * np.pi, _FADING_SINUSOIDS),
            )

    @property
    def is_constant(self) -> bool:
        return isinstance(self.path.doppler, (Static, DelaySway))

    @property
    def bandwidth(self) -> float:
        m = self.path.doppler
        if isinstance(m, DopplerShift):
            return abs(m.nu)
        if isinstance(m, RicianFading):
            return float(np.max(np.abs(self._sos[0])))
        return 0.0

    def a(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        m = self.path.doppler
        if isinstance(m, (Static, DelaySway)):
            return np.ones(t.shape, dtype=complex)
        if isinstance(m, DopplerShift):
            return np.exp(2j * np.pi * m.nu * t)
        freqs, phases = self._sos
        k = m.k_factor
        diffuse = np.zeros(t.shape, dtype=complex)
        for f, ph in zip(freqs, phases):
            diffuse += np.exp(1j * (2 * np.pi * f * t + ph))
        diffuse /= math.sqrt(_FADING_SINUSOIDS)
        return math.sqrt(k / (k + 1)) + math.sqrt(1 / (k + 1)) * diffuse

    def tau(self, t: np.ndarray) -> np.ndarray:
        m = self.path.doppler
        t = np.asarray(t, dtype=float)
        if isinstance(m, DelaySway):
            return self.path.delay + m.amplitude * np.sin(2 * np.pi * m.rate * t)
        return np.full(t.shape, self.path.delay)

    def a_dense(self, n: int, fs: float) -> np.ndarray:
        """a(t) on the sampling grid; fading is evaluated coarsely and interpolated."""
        if not isinstance(self.path.doppler, RicianFading):
            return self.a(np.arange(n) / fs)
        step = max(1, int(fs // 20000))
        coarse_t = np.arange(0, n + step, step) / fs
        coarse = self.a(coarse_t)
        t = np.arange(n) / fs
        return np.interp(t, coarse_t, coarse.real) + 1j * np.interp(t, coarse_t, coarse.imag)


def modulators(spec: ChannelSpec) -> list[_Modulator]:
    return [_Modulator(p, spec.seed, i) for i, p in enumerate(spec.paths)]


# -- interpolation ------------------------------------------------------------

def _kaiser_kernel(t: np.ndarray) -> np.ndarray:
    half = KAISER_TAPS // 2 + 1
    r = np.clip(1.0 - (t / half) ** 2, 0.0, None)
    w = np.where(np.abs(t) <= half, i0(KAISER_BETA * np.sqrt(r)) / i0(KAISER_BETA), 0.0)
    return np.sinc(t) * w


def _fractional_delay(x: np.ndarray, d: float) -> np.ndarray:
    """x(n - d) for a constant delay of `d` samples, same length as x, zero history."""
    n = x.size
    if abs(d - round(d)) < 1e-9:  # delays given in seconds rarely land exactly on a sample
        d = float(round(d))
    whole = int(math.floor(d))
    mu = d - whole
    out = np.zeros(n, dtype=x.dtype)
    if whole >= n:
        return out
    if mu == 0.0:
        out[whole:] = x[: n - whole]
        return out
    half = KAISER_TAPS // 2
    j = np.arange(-half, KAISER_TAPS - half)
    h = _kaiser_kernel(j - mu)
    # y[m] = sum_j x[m - whole - j] h[j]
    full = sps.oaconvolve(x, h) if x.size > 4 * h.size else np.convolve(x, h)
    start = -j[0]
    shifted = full[start: start + n]
    out[whole:] = shifted[: n - whole]
    return out


_KAISER_INTERP = TableInterpolator(_kaiser_kernel,
                                   np.arange(-(KAISER_TAPS // 2), KAISER_TAPS - KAISER_TAPS // 2))


def interpolate_at(x: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """Band-limited evaluation of `x` at fractional sample `positions` (zero outside)."""
    return _KAISER_INTERP(x, positions)


# -- channel application ------------------------------------------------------

def _analytic(x: np.ndarray) -> np.ndarray:
    return sps.hilbert(x)


def apply_channel(x: Waveform, spec: ChannelSpec, return_noiseless: bool = False):
    """Pass `x` through the channel described by `spec`.

    Returns the received :class:`Waveform` (same length as the input); with
    ``return_noiseless`` also the output before noise is added.
    """
    if not spec.paths:
        raise ConfigError("channel needs at least one path")
    fs = x.fs
    n = len(x)
    src = x.samples
    y = np.zeros(n)
    analytic = None
    for mod in modulators(spec):
        p = mod.path
        s = src if p.shape_filter is None else sps.lfilter(np.asarray(p.shape_filter), [1.0], src)
        real_static = isinstance(p.doppler, Static) and complex(p.gain).imag == 0
        if real_static:
            y += complex(p.gain).real * _fractional_delay(s, p.delay * fs)
            continue
        if p.shape_filter is None:
            if analytic is None:
                analytic = _analytic(src)
            sa = analytic
        else:
            sa = _analytic(s)
        if isinstance(p.doppler, DelaySway):
            t = np.arange(n) / fs
            delayed = interpolate_at(sa, np.arange(n) - mod.tau(t) * fs)
        else:
            delayed = _fractional_delay(sa, p.delay * fs)
        y += (complex(p.gain) * mod.a_dense(n, fs) * delayed).real

    if spec.clock_offset_ppm:
        # receiver clock runs (1 + eps) faster: rx sample n is taken at tx time n / (fs (1 + eps))
        eps = spec.clock_offset_ppm * 1e-6
        y = interpolate_at(y, np.arange(n) / (1.0 + eps))

    noiseless = y
    if spec.snr_db is not None:
        rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 0x6E6F6973]))
        power = np.mean(y * y)
        sigma = math.sqrt(power / 10 ** (spec.snr_db / 10))
        y = y + rng.normal(0.0, sigma, n)
    out = Waveform(fs, y)
    if return_noiseless:
        return out, Waveform(fs, noiseless)
    return out


def analytic_tvfr(spec: ChannelSpec, times, freqs, fs: float | None = None):
    """Exact time-variant frequency response on a ``times x freqs`` grid.

    Times are receiver-clock times. `fs` is needed only when some path carries
    a shaping filter.
    """
    from .estimator import TVFR

    times = np.asarray(times, dtype=float)
    freqs = np.asarray(freqs, dtype=float)
    eps = spec.clock_offset_ppm * 1e-6
    t_tx = times / (1.0 + eps)
    h = np.zeros((times.size, freqs.size), dtype=complex)
    for mod in modulators(spec):
        p = mod.path
        shape = np.ones(freqs.size, dtype=complex)
        if p.shape_filter is not None:
            if fs is None:
                raise ConfigError("fs is required to evaluate path shaping filters")
            _, shape = sps.freqz(np.asarray(p.shape_filter), worN=freqs, fs=fs)
        a = complex(p.gain) * mod.a(t_tx)
        tau = mod.tau(t_tx)
        h += a[:, None] * shape[None, :] * np.exp(-2j * np.pi * np.outer(tau, freqs))
    if eps:
        h *= np.exp(-2j * np.pi * np.outer(times * eps / (1.0 + eps), freqs))
    return TVFR(times=times, freqs=freqs, values=h)
