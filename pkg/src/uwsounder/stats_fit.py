"""Short-term gain statistics and single-parameter Rician fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import i0e

from .errors import InsufficientDataError, RangeError, SoundingError
from .estimator import TVFR

DEFAULT_T_SEG = 2.0
DEFAULT_F_SEG = 2000.0
DEFAULT_BINS = 50
MIN_SAMPLES = 500
K_MAX = 1e3
_K_GRID = np.concatenate([[0.0], np.logspace(-3, 3, 121)])
_GOLDEN = (math.sqrt(5) - 1) / 2


class DomainError(SoundingError):
    """Negative gain or K factor."""


@dataclass
class GainSamples:
    """Gains of one cell normalized to unit mean square."""

    values: np.ndarray = field(repr=False)
    t_span: tuple[float, float] = (0.0, 0.0)
    f_band: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        if np.any(self.values < 0):
            raise DomainError("gains must be non-negative")


@dataclass
class RicianFit:
    K: float
    epsilon: float
    edges: np.ndarray = field(repr=False)
    density: np.ndarray = field(repr=False)
    mse: float = 0.0
    n_samples: int = 0

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    def pdf(self, x=None) -> np.ndarray:
        return rician_pdf(self.centers if x is None else x, self.K)


def normalize_gains(x) -> np.ndarray:
    x = np.abs(np.asarray(x, dtype=complex if np.iscomplexobj(x) else float)).ravel()
    ms = np.mean(x * x) if x.size else 0.0
    if not ms > 0:
        raise InsufficientDataError("gains have zero power")
    return x / math.sqrt(ms)


def segment_gains(H: TVFR, t_seg: float = DEFAULT_T_SEG, f_seg: float = DEFAULT_F_SEG
                  ) -> list[GainSamples]:
    """Split ``|H|`` into time x frequency cells, each normalized to unit mean square.

    Cells are whole numbers of frames and tones; trailing remainders are dropped.
    Order is time-major.
    """
    n_t, n_f = H.values.shape
    dt = H.dt if n_t > 1 else 0.0
    df = H.df if n_f > 1 else 0.0
    span_t = n_t * dt
    span_f = n_f * df
    if not (t_seg > 0 and f_seg > 0):
        raise RangeError("segment sizes must be positive")
    if t_seg > span_t * (1 + 1e-9) or f_seg > span_f * (1 + 1e-9):
        raise RangeError(f"segment {t_seg:g} s x {f_seg:g} Hz exceeds the {span_t:g} s x "
                         f"{span_f:g} Hz grid")
    per_t = int(round(t_seg / dt))
    per_f = int(round(f_seg / df))
    if per_t < 1 or per_f < 1:
        raise RangeError("segment smaller than one grid step")
    mag = np.abs(H.values)
    cells = []
    for a in range(n_t // per_t):
        rows = slice(a * per_t, (a + 1) * per_t)
        for b in range(n_f // per_f):
            cols = slice(b * per_f, (b + 1) * per_f)
            block = mag[rows, cols]
            cells.append(GainSamples(
                values=normalize_gains(block),
                t_span=(float(H.times[rows.start]), float(H.times[rows.stop - 1])),
                f_band=(float(H.freqs[cols.start]), float(H.freqs[cols.stop - 1]))))
    return cells


def rician_pdf(x, K: float) -> np.ndarray:
    """Unit mean-square Rician density with factor `K`.

    ``2 (1+K) x exp(-K - (1+K) x^2) I0(2 x sqrt(K (1+K)))``, evaluated with the
    exponentially scaled Bessel function so large K cannot overflow.
    """
    x = np.asarray(x, dtype=float)
    if K < 0 or np.any(x < 0):
        raise DomainError("rician_pdf needs x >= 0 and K >= 0")
    z = 2 * x * math.sqrt(K * (1 + K))
    return 2 * (1 + K) * x * i0e(z) * np.exp(-(math.sqrt(1 + K) * x - math.sqrt(K)) ** 2)


def gain_histogram(x: np.ndarray, bins: int = DEFAULT_BINS) -> tuple[np.ndarray, np.ndarray]:
    """Density histogram with `bins` equal bins over ``[0, max(x)]``."""
    top = float(np.max(x))
    if not top > 0:
        raise InsufficientDataError("all gains are zero")
    return np.histogram(x, bins=int(bins), range=(0.0, top), density=True)


def rician_mse(density: np.ndarray, centers: np.ndarray, K: float) -> float:
    """Mean squared difference between a histogram and the Rician density."""
    return float(np.mean((density - rician_pdf(centers, K)) ** 2))


def _golden(f, a: float, b: float, rtol: float = 1e-3) -> float:
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > rtol * max(abs(c), 1e-9) and (b - a) > 1e-12:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return c if fc < fd else d


def _pooled(samples) -> np.ndarray:
    if isinstance(samples, GainSamples):
        return samples.values
    if isinstance(samples, (list, tuple)) and samples and isinstance(samples[0], GainSamples):
        return np.concatenate([s.values for s in samples])
    return np.asarray(samples, dtype=float).ravel()


def fit_rician(samples, bins: int = DEFAULT_BINS, min_samples: int = MIN_SAMPLES) -> RicianFit:
    """Rician factor minimizing the MSE between histogram and density.

    `samples` may be a :class:`GainSamples`, a list of them (pooled) or a plain
    array of gains. Samples are renormalized to unit mean square. The search
    scans ``{0} U logspace(-3, 3, 121)`` and refines the best bracket by
    golden-section search to 1e-3 relative.
    """
    x = _pooled(samples)
    if x.size < min_samples:
        raise InsufficientDataError(f"{x.size} samples, at least {min_samples} required")
    if np.any(x < 0):
        raise DomainError("gains must be non-negative")
    x = normalize_gains(x)
    density, edges = gain_histogram(x, bins)
    centers = 0.5 * (edges[1:] + edges[:-1])

    def obj(k):
        return rician_mse(density, centers, k)

    scores = np.array([obj(k) for k in _K_GRID])
    i = int(np.argmin(scores))
    lo = _K_GRID[max(i - 1, 0)]
    hi = _K_GRID[min(i + 1, _K_GRID.size - 1)]
    k = _golden(obj, lo, hi)
    best = min((obj(k), k), (scores[i], _K_GRID[i]))
    mse, k = best
    eps = math.sqrt(mse / float(np.mean(density ** 2)))
    return RicianFit(K=float(k), epsilon=eps, edges=edges, density=density, mse=mse,
                     n_samples=int(x.size))


def fit_cells(cells: list[GainSamples], bins: int = DEFAULT_BINS,
              min_samples: int = MIN_SAMPLES) -> list[RicianFit]:
    """Independent fit per cell, in cell order."""
    return [fit_rician(c, bins, min_samples) for c in cells]


def rician_samples(K: float, n: int, rng: np.random.Generator) -> np.ndarray:
    """Unit mean-square Rician amplitudes (specular part on the real axis)."""
    if K < 0:
        raise DomainError("K must be non-negative")
    los = math.sqrt(K / (K + 1))
    sc = math.sqrt(1 / (2 * (K + 1)))
    return np.abs(los + sc * (rng.standard_normal(n) + 1j * rng.standard_normal(n)))
