"""Run configuration, presets and the JSON config file format.

A config file is a JSON object with flat scalar keys (``delta_f``, ``k1``,
``duration``, ``snr_db``, ``zero_pad_factor``...). Only the multipath list
(``paths``) is nested. A ``preset`` key selects a base that the remaining
keys override.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .channel_sim import (ChannelSpec, DelaySway, DopplerShift, GeometrySpec, PathSpec,
                          RicianFading, Static, geometry_paths)
from .errors import ConfigError
from .signal_gen import SoundingConfig

DEFAULT_SOUNDING = SoundingConfig()
# 4 ms delay span: room for paths 2-3 ms apart
FINE_SOUNDING = SoundingConfig(delta_f=250.0, k1=128, kn=512, n_zc=389, u=3)
# 16 ms delay span: holds every image arrival of the shallow-water geometries below
WIDE_SOUNDING = SoundingConfig(delta_f=62.5, k1=512, kn=2048, n_zc=1543, u=3)
# tone grid as used at sea: 97 tones at 1/(3 ms) from k = 98
TRIAL_SOUNDING = SoundingConfig(delta_f=1e6 / 3000, k1=98, kn=194, n_zc=97, u=3)

SOUNDINGS = {"default": DEFAULT_SOUNDING, "fine": FINE_SOUNDING, "wide": WIDE_SOUNDING,
             "trial": TRIAL_SOUNDING}

# (separation m, sea depth m); tx and rx at 6 m
SEA_TRIAL_GEOMETRIES = {
    1: (47, 24), 2: (51, 19), 3: (98, 20), 4: (100, 20), 5: (134, 22), 6: (168, 24),
    7: (197, 20), 8: (216, 28), 9: (236, 29), 10: (242, 34), 11: (248, 25), 12: (260, 28),
    13: (387, 31),
}

FIRST_ARRIVAL = 0.5e-3
_PATH_MODELS = {
    # label: (reflection coefficient, fading K, Doppler spread Hz)
    "direct": (1.0, 100.0, 0.5),
    "surface": (-0.9, 0.0, 6.0),
    "bottom": (0.5, 1.0, 3.0),
    "surface-bottom": (-0.45, 0.0, 6.0),
}

_SOUNDING_KEYS = {f.name for f in dataclasses.fields(SoundingConfig)}
_PROCESSING_KEYS = {"decimation", "n_periods", "zero_pad_factor", "t_seg", "f_seg", "bins",
                    "max_paths", "noise_floor_db", "tc_threshold", "compensate",
                    "min_separation", "min_prominence_db"}
_CHANNEL_KEYS = {"snr_db", "clock_offset_ppm", "paths"}
_GEOMETRY_KEYS = {"range_m", "sea_depth", "tx_depth", "rx_depth", "sound_speed"}
_ALL_KEYS = _SOUNDING_KEYS | _PROCESSING_KEYS | _CHANNEL_KEYS | _GEOMETRY_KEYS | {
    "preset", "seed", "sounding", "name"}


@dataclass(frozen=True)
class Processing:
    decimation: int | None = None
    n_periods: int = 4
    zero_pad_factor: int = 16
    t_seg: float = 2.0
    f_seg: float = 2000.0
    bins: int = 50
    max_paths: int = 4
    noise_floor_db: float = 30.0
    tc_threshold: float = 0.9
    compensate: bool = True
    min_separation: float = 0.1e-3
    min_prominence_db: float = 6.0


@dataclass(frozen=True)
class RunConfig:
    name: str
    sounding: SoundingConfig
    channel: ChannelSpec | None = None
    geometry: GeometrySpec | None = None
    seed: int = 0
    processing: Processing = field(default_factory=Processing)

    def with_seed(self, seed: int) -> "RunConfig":
        ch = dataclasses.replace(self.channel, seed=int(seed)) if self.channel else None
        return dataclasses.replace(self, seed=int(seed), channel=ch)

    def to_dict(self) -> dict:
        d = {"name": self.name, "seed": self.seed}
        d.update(dataclasses.asdict(self.sounding))
        d.update(dataclasses.asdict(self.processing))
        if self.geometry is not None:
            d.update(dataclasses.asdict(self.geometry))
        if self.channel is not None:
            d["snr_db"] = self.channel.snr_db
            d["clock_offset_ppm"] = self.channel.clock_offset_ppm
            d["paths"] = [path_to_dict(p) for p in self.channel.paths]
        return d


def _num(v):
    """Complex gains are stored as [re, im]."""
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def path_to_dict(p: PathSpec) -> dict:
    m = p.doppler
    if isinstance(m, RicianFading):
        model = {"model": "rician", "k_factor": m.k_factor, "doppler_spread": m.doppler_spread}
        if m.seed is not None:
            model["seed"] = m.seed
    elif isinstance(m, DopplerShift):
        model = {"model": "shift", "nu": m.nu}
    elif isinstance(m, DelaySway):
        model = {"model": "sway", "amplitude": m.amplitude, "rate": m.rate}
    else:
        model = {"model": "static"}
    d = {"delay": p.delay, "gain": _num(p.gain), "doppler": model, "label": p.label}
    if p.shape_filter is not None:
        d["shape_filter"] = list(p.shape_filter)
    return d


def path_from_dict(d: dict) -> PathSpec:
    if not isinstance(d, dict) or "delay" not in d:
        raise ConfigError(f"path entry needs a delay: {d!r}")
    m = dict(d.get("doppler", {"model": "static"}))
    kind = m.pop("model", "static")
    try:
        model = {"static": Static, "shift": DopplerShift, "rician": RicianFading,
                 "sway": DelaySway}[kind](**m)
    except KeyError:
        raise ConfigError(f"unknown Doppler model {kind!r}") from None
    except TypeError as e:
        raise ConfigError(f"bad parameters for Doppler model {kind!r}: {e}") from None
    gain = d.get("gain", 1.0)
    if isinstance(gain, (list, tuple)):
        if len(gain) != 2:
            raise ConfigError("complex gain must be [re, im]")
        gain = complex(gain[0], gain[1])
    extra = set(d) - {"delay", "gain", "doppler", "label", "shape_filter"}
    if extra:
        raise ConfigError(f"unknown path keys: {sorted(extra)}")
    return PathSpec(delay=float(d["delay"]), gain=gain, doppler=model,
                    shape_filter=d.get("shape_filter"), label=str(d.get("label", "")))


# -- presets ----------------------------------------------------------------------

def sea_trial_channel(g: GeometrySpec, seed: int = 0, snr_db: float = 30.0,
                      clock_offset_ppm: float = 5.0) -> ChannelSpec:
    """Four image arrivals with spherical spreading, boundary losses and fading.

    Delays are relative to the direct arrival, which is placed at 0.5 ms.
    """
    arrivals = geometry_paths(g, 4)
    t0 = arrivals[0].delay
    paths = []
    for p in arrivals:
        refl, k, b = _PATH_MODELS[p.label]
        spreading = t0 / p.delay
        paths.append(PathSpec(delay=FIRST_ARRIVAL + p.delay - t0, gain=refl * spreading,
                              doppler=RicianFading(k, b), label=p.label))
    return ChannelSpec(paths=tuple(paths), clock_offset_ppm=clock_offset_ppm, snr_db=snr_db,
                       seed=seed)


def _identity(seed: int) -> RunConfig:
    ch = ChannelSpec(paths=(PathSpec(0.0, 1.0, label="direct"),), seed=seed)
    return RunConfig("identity", DEFAULT_SOUNDING, ch, seed=seed)


def _default(seed: int) -> RunConfig:
    ch = ChannelSpec(paths=(PathSpec(50e-6, 1.0, RicianFading(20.0, 0.5), label="direct"),
                            PathSpec(300e-6, -0.6, RicianFading(0.0, 4.0), label="surface")),
                     clock_offset_ppm=5.0, snr_db=30.0, seed=seed)
    return RunConfig("default", DEFAULT_SOUNDING, ch, seed=seed)


def _two_path(seed: int) -> RunConfig:
    ch = ChannelSpec(paths=(PathSpec(2e-3, 1.0), PathSpec(3e-3, 0.5)), seed=seed)
    return RunConfig("two-path", FINE_SOUNDING, ch, seed=seed)


def preset_names() -> list[str]:
    return ["default", "identity", "two-path", "trial"] + \
        [f"trial-ch{i}" for i in SEA_TRIAL_GEOMETRIES]


def preset(name: str, seed: int = 0) -> RunConfig:
    """Named run configuration. ``trial-chN`` builds the N-th sea-trial geometry."""
    if name == "identity":
        return _identity(seed)
    if name == "default":
        return _default(seed)
    if name == "two-path":
        return _two_path(seed)
    if name == "trial":
        base = _default(seed)
        return dataclasses.replace(base, name="trial", sounding=TRIAL_SOUNDING)
    if name.startswith("trial-ch"):
        try:
            idx = int(name[len("trial-ch"):])
            sep, depth = SEA_TRIAL_GEOMETRIES[idx]
        except (ValueError, KeyError):
            raise ConfigError(f"unknown preset {name!r}") from None
        g = GeometrySpec(range_m=float(sep), sea_depth=float(depth))
        # distinct default seed per channel so presets do not share fading draws
        ch = sea_trial_channel(g, seed=seed * 1000 + idx)
        return RunConfig(name, WIDE_SOUNDING.replace(duration=10.0), ch, g, seed=seed)
    raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(preset_names())}")


def config_from_dict(d: dict) -> RunConfig:
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(d) - _ALL_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    seed = int(d.get("seed", 0))
    base = preset(d["preset"], seed) if "preset" in d else RunConfig("custom", DEFAULT_SOUNDING,
                                                                     seed=seed)
    snd = base.sounding
    if "sounding" in d:
        if d["sounding"] not in SOUNDINGS:
            raise ConfigError(f"unknown sounding {d['sounding']!r}")
        snd = SOUNDINGS[d["sounding"]].replace(duration=snd.duration)
    s_over = {k: d[k] for k in _SOUNDING_KEYS if k in d}
    snd = snd.replace(**s_over) if s_over else snd

    proc = dataclasses.replace(base.processing, **{k: d[k] for k in _PROCESSING_KEYS if k in d})

    geom = base.geometry
    g_over = {k: float(d[k]) for k in _GEOMETRY_KEYS if k in d}
    if g_over:
        gd = dataclasses.asdict(geom) if geom else {}
        gd.update(g_over)
        if "range_m" not in gd or "sea_depth" not in gd:
            raise ConfigError("geometry needs range_m and sea_depth")
        geom = GeometrySpec(**gd)

    ch = base.channel
    if "paths" in d:
        paths = tuple(sorted((path_from_dict(p) for p in d["paths"]), key=lambda p: p.delay))
        ch = ChannelSpec(paths=paths, seed=seed,
                         clock_offset_ppm=float(d.get("clock_offset_ppm", 0.0)),
                         snr_db=d.get("snr_db"))
    elif g_over:
        ch = sea_trial_channel(geom, seed=seed)
    if ch is not None:
        c_over = {}
        if "snr_db" in d:
            c_over["snr_db"] = None if d["snr_db"] is None else float(d["snr_db"])
        if "clock_offset_ppm" in d:
            c_over["clock_offset_ppm"] = float(d["clock_offset_ppm"])
        ch = dataclasses.replace(ch, seed=ch.seed if "seed" not in d and ch else seed, **c_over)
    for k, v in d.items():
        if isinstance(v, float) and not math.isfinite(v):
            raise ConfigError(f"{k} must be finite")
    return RunConfig(str(d.get("name", base.name)), snd, ch, geom, seed, proc)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from None
    try:
        return config_from_dict(d)
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e)) from None
