"""On-disk formats: recording bundles, response archives and CSV tables.

Recording bundle
    ``<name>.wav`` (mono, 32-bit IEEE float, little endian) plus
    ``<name>.json`` with the sample rate and the run configuration.
Response archive
    ``<name>.bin``: 64-byte header followed by complex64 little-endian values,
    row-major ``[time, axis]``; ``<name>.json`` manifest repeats the header.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .characterize import CorrelationFunction, SpectrumProfile
from .delay_comp import DelayTrack
from .errors import CalibrationError, SoundingError
from .estimator import TVFR, TVIR, CalibrationCurve
from .signal_gen import Waveform


class DataError(SoundingError):
    """Malformed or inconsistent file contents."""


_MAGIC = b"UWSA"
# magic, version, kind, n_t, n_x, t0, dt, x0, dx, zero_pad, n_f, f0, df
_HEADER = struct.Struct("<4sHHIIddddIIdd")
_KINDS = {"tvfr": 1, "tvir": 2}


def _json_dump(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n")


def _stem(path) -> Path:
    p = Path(path)
    return p.with_suffix("") if p.suffix in (".wav", ".json", ".bin") else p


# -- recording bundles ----------------------------------------------------------

def write_bundle(path, waveform: Waveform, meta: dict | None = None) -> tuple[Path, Path]:
    """Write ``<path>.wav`` and its ``<path>.json`` sidecar; returns both paths."""
    stem = _stem(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    fs = float(waveform.fs)
    if fs != int(fs):
        raise DataError("WAV headers need an integer sample rate")
    wav, side = stem.with_suffix(".wav"), stem.with_suffix(".json")
    wavfile.write(wav, int(fs), waveform.samples.astype("<f4"))
    sidecar = {"fs": fs, "n_samples": int(waveform.samples.size), "format": "float32le"}
    sidecar.update(meta or {})
    _json_dump(sidecar, side)
    return wav, side


def read_bundle(path) -> tuple[Waveform, dict]:
    stem = _stem(path)
    wav, side = stem.with_suffix(".wav"), stem.with_suffix(".json")
    try:
        meta = json.loads(side.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"cannot read sidecar {side}: {e}") from None
    try:
        rate, data = wavfile.read(wav)
    except (OSError, ValueError) as e:
        raise DataError(f"cannot read {wav}: {e}") from None
    if data.ndim != 1:
        raise DataError(f"{wav} must be mono")
    if data.dtype != np.float32:
        raise DataError(f"{wav} must hold 32-bit float samples, found {data.dtype}")
    if float(meta.get("fs", -1)) != float(rate):
        raise DataError(f"sidecar fs {meta.get('fs')} differs from WAV header fs {rate}")
    return Waveform(float(rate), data.astype(float)), meta


# -- response archives ----------------------------------------------------------

def write_archive(path, resp: TVFR | TVIR, extra: dict | None = None) -> tuple[Path, Path]:
    stem = _stem(path)
    stem.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(resp, TVFR):
        kind, axis, zp, freqs = "tvfr", resp.freqs, 1, resp.freqs
    elif isinstance(resp, TVIR):
        kind, axis, zp, freqs = "tvir", resp.delays, resp.zero_pad_factor, resp.freqs
    else:
        raise TypeError("archive expects a TVFR or TVIR")
    t = resp.times
    dt = float(t[1] - t[0]) if t.size > 1 else 0.0
    dx = float(axis[1] - axis[0]) if axis.size > 1 else 0.0
    nf = 0 if freqs is None else freqs.size
    f0 = float(freqs[0]) if nf else 0.0
    df = float(freqs[1] - freqs[0]) if nf > 1 else 0.0
    head = _HEADER.pack(_MAGIC, 1, _KINDS[kind], t.size, axis.size, float(t[0]), dt,
                        float(axis[0]), dx, zp, nf, f0, df)
    binp, man = stem.with_suffix(".bin"), stem.with_suffix(".json")
    with open(binp, "wb") as fh:
        fh.write(head)
        fh.write(np.ascontiguousarray(resp.values, dtype="<c8").tobytes())
    manifest = {"kind": kind, "n_times": int(t.size), "n_axis": int(axis.size), "t0": float(t[0]),
                "dt": dt, "axis0": float(axis[0]), "d_axis": dx, "zero_pad_factor": int(zp),
                "n_freqs": int(nf), "f0": f0, "df": df, "dtype": "complex64le",
                "axis_unit": "Hz" if kind == "tvfr" else "s"}
    manifest.update(extra or {})
    _json_dump(manifest, man)
    return binp, man


def read_archive(path) -> TVFR | TVIR:
    binp = _stem(path).with_suffix(".bin")
    try:
        raw = binp.read_bytes()
    except OSError as e:
        raise DataError(f"cannot read {binp}: {e}") from None
    if len(raw) < _HEADER.size:
        raise DataError(f"{binp} is truncated")
    (magic, version, kind, nt, nx, t0, dt, x0, dx, zp, nf, f0, df) = _HEADER.unpack_from(raw)
    if magic != _MAGIC or version != 1:
        raise DataError(f"{binp} is not a response archive")
    body = raw[_HEADER.size:]
    if len(body) != nt * nx * 8:
        raise DataError(f"{binp}: expected {nt * nx} complex64 values, found {len(body) // 8}")
    vals = np.frombuffer(body, dtype="<c8").reshape(nt, nx).astype(complex)
    times = t0 + dt * np.arange(nt)
    axis = x0 + dx * np.arange(nx)
    freqs = f0 + df * np.arange(nf) if nf else None
    if kind == _KINDS["tvfr"]:
        return TVFR(times, axis, vals)
    if kind == _KINDS["tvir"]:
        return TVIR(times, axis, vals, freqs=freqs, zero_pad_factor=int(zp))
    raise DataError(f"{binp}: unknown archive kind {kind}")


# -- CSV ------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(path, header, rows) -> Path:
    """Comma-separated, '.' decimals, header row; floats written round-trip exact."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from None
    if not rows:
        raise DataError(f"{path} is empty")
    return rows[0], rows[1:]


def read_calibration(path) -> CalibrationCurve:
    """Two-column ``freq_hz,gain_db`` table with a header row."""
    header, rows = read_csv(path)
    if [h.strip() for h in header] != ["freq_hz", "gain_db"]:
        raise CalibrationError(f"{path}: header must be 'freq_hz,gain_db'")
    try:
        pts = [(float(a), float(b)) for a, b in rows]
    except ValueError as e:
        raise CalibrationError(f"{path}: {e}") from None
    return CalibrationCurve(tuple(p[0] for p in pts), tuple(p[1] for p in pts))


def write_delay_track(path, track: DelayTrack) -> Path:
    return write_csv(path, ["t_s", "tau0_s", "ratio"],
                     zip(track.times, track.tau0, track.ratio))


def read_delay_track(path) -> DelayTrack:
    header, rows = read_csv(path)
    if header != ["t_s", "tau0_s", "ratio"]:
        raise DataError(f"{path}: header must be 't_s,tau0_s,ratio'")
    a = np.array(rows, dtype=float).reshape(-1, 3)
    return DelayTrack(a[:, 0], a[:, 1], a[:, 2])


def write_profile(path, p: SpectrumProfile, axis_name: str = "axis") -> Path:
    return write_csv(path, [axis_name, "value"], zip(p.axis, p.values))


def write_correlation(path, c: CorrelationFunction, lag_name: str = "lag") -> Path:
    v = np.asarray(c.values, dtype=complex)
    return write_csv(path, [lag_name, "real", "imag", "abs"],
                     zip(c.lags, v.real, v.imag, np.abs(v)))
