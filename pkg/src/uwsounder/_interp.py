"""Table-driven fractional-sample interpolation shared by the simulator and the resampler."""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class TableInterpolator:
    """FIR interpolation with coefficients tabulated over the fractional offset.

    `kernel(d)` is evaluated at ``mu - taps`` for ``mu`` on a grid of
    `phases` + 1 points in [0, 1] and the nearest row is used. With 2**15
    phases the quantization error stays below -90 dB for signals up to
    0.15 fs.
    """

    def __init__(self, kernel, taps: np.ndarray, phases: int = 1 << 15, normalize: bool = False):
        taps = np.asarray(taps, dtype=np.int64)
        if np.any(np.diff(taps) != 1):
            raise ValueError("taps must be consecutive integers")
        self.taps = taps
        self.phases = int(phases)
        mu = np.arange(self.phases + 1) / self.phases
        table = kernel(mu[:, None] - taps[None, :])
        if normalize:
            table /= table.sum(axis=1, keepdims=True)
        self.table = np.ascontiguousarray(table)
        self._pad = int(np.abs(taps).max()) + 1

    def __call__(self, x: np.ndarray, positions: np.ndarray, chunk: int = 1 << 16) -> np.ndarray:
        """Values of `x` at fractional sample `positions`; zero outside the record."""
        x = np.asarray(x)
        positions = np.asarray(positions, dtype=float)
        pad = self._pad
        xp = np.concatenate([np.zeros(pad, x.dtype), x, np.zeros(pad, x.dtype)])
        windows = sliding_window_view(xp, self.taps.size)
        first = self.taps[0] + pad
        last = windows.shape[0] - 1
        out = np.zeros(positions.size, dtype=np.result_type(x.dtype, float))
        for s in range(0, positions.size, chunk):
            p = positions[s:s + chunk]
            base = np.floor(p)
            row = np.rint((p - base) * self.phases).astype(np.int64)
            start = base.astype(np.int64) + first
            ok = (start >= 0) & (start <= last)
            start = np.clip(start, 0, last)
            val = np.einsum("ij,ij->i", windows[start], self.table[row])
            out[s:s + chunk] = np.where(ok, val, 0)
        return out
