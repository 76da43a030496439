"""Periodic multitone sounding signals with Zadoff-Chu tone phases."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InvalidRootError, UndefinedPAPRError


@dataclass(frozen=True)
class SoundingConfig:
    """Tone grid and phase code of a periodic multitone probe.

    Tone ``k`` (``k1 <= k <= kn``) sits at ``k * delta_f`` Hz; the probe
    period is ``1 / delta_f``.
    """

    delta_f: float = 1000.0
    k1: int = 32
    kn: int = 128
    n_zc: int = 97
    u: int = 3
    fs: float = 1e6
    duration: float = 1.0

    def __post_init__(self):
        if not self.delta_f > 0:
            raise ConfigError(f"delta_f must be positive, got {self.delta_f}")
        if not self.fs > 0:
            raise ConfigError(f"fs must be positive, got {self.fs}")
        if self.k1 < 1 or self.k1 > self.kn:
            raise ConfigError(f"need 1 <= k1 <= kn, got k1={self.k1}, kn={self.kn}")
        if self.n_tones > self.n_zc:
            raise ConfigError(
                f"{self.n_tones} tones need a Zadoff-Chu sequence of at least that length "
                f"(n_zc={self.n_zc})")
        if math.gcd(self.u, self.n_zc) != 1:
            raise InvalidRootError(f"gcd(u={self.u}, n_zc={self.n_zc}) != 1")
        if self.kn * self.delta_f >= self.fs / 2:
            raise ConfigError(
                f"highest tone {self.kn * self.delta_f:g} Hz violates Nyquist for fs={self.fs:g}")
        if self.duration <= 0:
            raise ConfigError("duration must be positive")

    @property
    def n_tones(self) -> int:
        return self.kn - self.k1 + 1

    @property
    def tone_indices(self) -> np.ndarray:
        return np.arange(self.k1, self.kn + 1)

    @property
    def tone_freqs(self) -> np.ndarray:
        return self.tone_indices * self.delta_f

    @property
    def period(self) -> float:
        return 1.0 / self.delta_f

    @property
    def samples_per_period(self) -> float:
        return self.fs / self.delta_f

    @property
    def integer_period(self) -> int | None:
        """``fs/delta_f`` when it is an integer (to 1e-9), else None."""
        p = self.fs / self.delta_f
        q = round(p)
        return q if abs(p - q) < 1e-9 * max(p, 1.0) else None

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.fs))

    def phases(self) -> np.ndarray:
        """Tone phases Psi_k, tone ``k`` taking sequence element ``(k - k1) mod n_zc``."""
        zc = zadoff_chu(self.n_zc, self.u)
        return np.angle(zc[(self.tone_indices - self.k1) % self.n_zc])

    def replace(self, **changes) -> "SoundingConfig":
        from dataclasses import replace
        return replace(self, **changes)


@dataclass
class Waveform:
    """Uniformly sampled real signal."""

    fs: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1 or self.samples.size < 1:
            raise ConfigError("waveform must be a non-empty 1-D array")
        if not self.fs > 0:
            raise ConfigError(f"fs must be positive, got {self.fs}")

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.fs

    @property
    def time(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.fs


def zadoff_chu(n_zc: int, u: int) -> np.ndarray:
    """Zadoff-Chu sequence of length `n_zc` and root `u`.

    Uses ``exp(-j*pi*u*k*(k+1)/N)`` for odd ``N`` and ``exp(-j*pi*u*k**2/N)``
    for even ``N``; only these keep the DFT constant-envelope for every length.

    >>> z = zadoff_chu(97, 3)
    >>> complex(z[0])
    (1+0j)
    """
    n_zc, u = int(n_zc), int(u)
    if n_zc < 1 or u < 1:
        raise InvalidRootError("n_zc and u must be positive")
    if math.gcd(u, n_zc) != 1:
        raise InvalidRootError(f"gcd(u={u}, n_zc={n_zc}) != 1")
    k = np.arange(n_zc, dtype=np.int64)
    # exact integer arithmetic before scaling keeps the phase accurate for long sequences
    q = k * (k + 1) if n_zc % 2 else k * k
    q = (u * q) % (2 * n_zc)
    return np.exp(-1j * np.pi * q / n_zc)


def synthesize_multitone(config: SoundingConfig, phases: np.ndarray | None = None) -> Waveform:
    """Sum of unit-amplitude cosines at the sounding tones.

    ``samples[n] = sum_k cos(2*pi*k*delta_f*n/fs + Psi_k)``. `phases` overrides
    the Zadoff-Chu phases (e.g. all zeros for a reference multitone).
    """
    psi = config.phases() if phases is None else np.broadcast_to(
        np.asarray(phases, dtype=float), (config.n_tones,))
    n = config.n_samples
    p = config.integer_period
    if p is not None:
        spectrum = np.zeros(p // 2 + 1, dtype=complex)
        spectrum[config.tone_indices] = 0.5 * p * np.exp(1j * psi)
        one_period = np.fft.irfft(spectrum, p)
        reps = -(-n // p)
        return Waveform(config.fs, np.tile(one_period, reps)[:n])

    # non-integer period: blockwise phasor evaluation
    w = 2 * np.pi * config.tone_freqs / config.fs
    x = np.empty(n)
    block = 4096
    m = np.arange(block)
    base = np.exp(1j * np.outer(m, w))
    for start in range(0, n, block):
        stop = min(start + block, n)
        coef = np.exp(1j * (w * start + psi))
        x[start:stop] = (base[: stop - start] @ coef).real
    return Waveform(config.fs, x)


def papr(w: Waveform | np.ndarray) -> float:
    """Peak-to-average power ratio in dB."""
    x = np.asarray(w.samples if isinstance(w, Waveform) else w, dtype=float)
    if x.size == 0:
        raise UndefinedPAPRError("empty waveform")
    mean_power = np.mean(x * x)
    if mean_power == 0:
        raise UndefinedPAPRError("all-zero waveform has no PAPR")
    return float(10 * np.log10(np.max(x * x) / mean_power))
