"""End-to-end helpers: simulate, estimate, characterize and tabulate one run."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .channel_sim import apply_channel
from .characterize import ChannelReport, characterize_channel, delay_profile
from .config import RunConfig
from .delay_comp import DelayTrack, compensate
from .errors import ConfigError, InsufficientDataError, RangeError
from .estimator import TVFR, TVIR, filterbank_estimate, tvir_from_tvfr
from .multipath import PathReport, decompose, detect_paths, per_path_report
from .signal_gen import Waveform, synthesize_multitone
from .stats_fit import RicianFit, fit_rician, segment_gains


@dataclass
class Estimate:
    tvfr: TVFR
    tvir: TVIR
    track: DelayTrack | None


@dataclass
class Analysis:
    report: ChannelReport
    fit: RicianFit | None
    paths: list[PathReport]


def transmit(cfg: RunConfig) -> Waveform:
    return synthesize_multitone(cfg.sounding)


def simulate(cfg: RunConfig, x: Waveform | None = None) -> Waveform:
    if cfg.channel is None:
        raise ConfigError(f"configuration {cfg.name!r} has no channel")
    return apply_channel(transmit(cfg) if x is None else x, cfg.channel)


def estimate(y: Waveform, cfg: RunConfig) -> Estimate:
    pr = cfg.processing
    if pr.compensate:
        H, h, track = compensate(y, cfg.sounding, M=pr.decimation,
                                 zero_pad_factor=pr.zero_pad_factor, n_periods=pr.n_periods)
        return Estimate(H, h, track)
    H = filterbank_estimate(y, cfg.sounding, M=pr.decimation, n_periods=pr.n_periods)
    return Estimate(H, tvir_from_tvfr(H), None)


def _segments(H: TVFR, cfg: RunConfig):
    pr = cfg.processing
    return segment_gains(H, min(pr.t_seg, H.times.size * H.dt), min(pr.f_seg, H.freqs.size * H.df))


def global_fit(H: TVFR, cfg: RunConfig) -> RicianFit | None:
    try:
        return fit_rician(_segments(H, cfg), cfg.processing.bins)
    except (InsufficientDataError, RangeError):
        return None


def analyze(est: Estimate, cfg: RunConfig, with_paths: bool = True) -> Analysis:
    pr = cfg.processing
    rep = characterize_channel(est.tvir, est.tvfr, noise_floor_db=pr.noise_floor_db,
                               tc_threshold=pr.tc_threshold)
    fit = global_fit(est.tvfr, cfg)
    paths: list[PathReport] = []
    if with_paths:
        hr = tvir_from_tvfr(est.tvfr, pr.zero_pad_factor)
        taus = detect_paths(delay_profile(hr), pr.max_paths, pr.min_separation,
                            pr.min_prominence_db, pr.noise_floor_db)
        paths = per_path_report(decompose(hr, taus), pr.tc_threshold, pr.t_seg, pr.f_seg,
                                pr.bins, pr.noise_floor_db)
    return Analysis(rep, fit, paths)


def _coh(c, scale):
    return c.format(scale, 1)


def global_row(name: str, a: Analysis) -> list:
    """Channel, t_c ms, b_c kHz, sigma_tau ms, K, epsilon %."""
    p = a.report.params
    k = f"{a.fit.K:.1f}" if a.fit else "n/a"
    e = f"{100 * a.fit.epsilon:.1f}" if a.fit else "n/a"
    return [name, _coh(p.t_c, 1e3), _coh(p.b_c, 1e-3), f"{p.sigma_tau * 1e3:.2f}", k, e]


def path_rows(name: str, a: Analysis, n: int = 4) -> tuple[list, list, list]:
    """Per-path t_c (s), b_c (kHz) and K rows padded to `n` paths."""
    tc, bc, kk = [name], [name], [name]
    for i in range(n):
        if i < len(a.paths):
            r = a.paths[i]
            tc.append(r.params.t_c.format(1.0, 3))
            bc.append(r.params.b_c.format(1e-3, 2) + ("*" if r.params.b_c.note else ""))
            kk.append(f"{r.fit.K:.1f}" if r.fit else "n/a")
        else:
            tc.append("")
            bc.append("")
            kk.append("")
    return tc, bc, kk


GLOBAL_HEADER = ["channel", "t_c_ms", "b_c_khz", "sigma_tau_ms", "K", "epsilon_pct"]


def tables_header(prefix: str, unit: str, n: int = 4) -> list[str]:
    return ["channel"] + [f"{prefix}{i + 1}_{unit}" if unit else f"{prefix}{i + 1}"
                          for i in range(n)]


def run_channel(cfg: RunConfig) -> tuple[list, list, list, list]:
    """Simulate, estimate and analyze one configuration; returns the four table rows."""
    y = simulate(cfg)
    a = analyze(estimate(y, cfg), cfg)
    return (global_row(cfg.name, a),) + path_rows(cfg.name, a, cfg.processing.max_paths)


def finite_or_nan(v: float) -> float:
    return v if math.isfinite(v) else float("nan")


def summary_params(a: Analysis) -> dict:
    p = a.report.params
    return {
        "t_c_s": p.t_c.value, "t_c_censored": p.t_c.censored,
        "b_c_hz": finite_or_nan(p.b_c.value), "b_c_note": p.b_c.note,
        "sigma_tau_s": p.sigma_tau, "sigma_nu_hz": p.sigma_nu,
        "K": a.fit.K if a.fit else float("nan"),
        "epsilon": a.fit.epsilon if a.fit else float("nan"),
    }
