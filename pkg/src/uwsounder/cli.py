"""Command-line entry point.

Exit status: 0 on success, 1 for malformed input or data errors, 2 for usage errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import io as uio
from . import pipeline
from .characterize import characterize_channel, delay_profile
from .config import SEA_TRIAL_GEOMETRIES, RunConfig, config_from_dict, load_config, preset
from .errors import SoundingError
from .estimator import compensate_transducer, tvir_from_tvfr
from .multipath import decompose, detect_paths, per_path_report
from .stats_fit import rician_pdf

log = logging.getLogger("uwsounder")

SOUNDING = "sounding"
RECEIVED = "received"


def _resolve(args, fallback: dict | None = None) -> RunConfig:
    """Config from --config, else --preset, else the input's metadata, else the default preset."""
    if args.config:
        cfg = load_config(args.config)
        return cfg.with_seed(args.seed) if args.seed is not None else cfg
    if args.preset:
        return preset(args.preset, args.seed or 0)
    if fallback:
        cfg = config_from_dict(fallback)
        return cfg.with_seed(args.seed) if args.seed is not None else cfg
    return preset("default", args.seed or 0)


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _meta(cfg: RunConfig, stage: str) -> dict:
    return {"stage": stage, "config": cfg.to_dict()}


def cmd_generate(args) -> int:
    cfg = _resolve(args)
    out = _out(args)
    uio.write_bundle(out / SOUNDING, pipeline.transmit(cfg), _meta(cfg, "generate"))
    return 0


def cmd_simulate(args) -> int:
    src = Path(args.input) if args.input else None
    fallback = None
    x = None
    if src is not None:
        x, meta = uio.read_bundle(src)
        fallback = meta.get("config")
    cfg = _resolve(args, fallback)
    if x is not None and x.fs != cfg.sounding.fs:
        raise uio.DataError("input sample rate differs from the configuration")
    out = _out(args)
    uio.write_bundle(out / RECEIVED, pipeline.simulate(cfg, x), _meta(cfg, "simulate"))
    return 0


def _archive_meta(cfg: RunConfig) -> dict:
    return {"config": cfg.to_dict()}


def cmd_estimate(args) -> int:
    src = Path(args.input) if args.input else Path(args.out) / RECEIVED
    y, meta = uio.read_bundle(src)
    cfg = _resolve(args, meta.get("config"))
    if args.no_compensation:
        cfg = dataclasses.replace(cfg, processing=dataclasses.replace(cfg.processing,
                                                                      compensate=False))
    est = pipeline.estimate(y, cfg)
    H, h = est.tvfr, est.tvir
    if args.calibration:
        H = compensate_transducer(H, uio.read_calibration(args.calibration))
        h = tvir_from_tvfr(H)
    out = _out(args)
    uio.write_archive(out / "tvfr", H, _archive_meta(cfg))
    uio.write_archive(out / "tvir", h, _archive_meta(cfg))
    if est.track is not None:
        uio.write_delay_track(out / "delay_track.csv", est.track)
    return 0


def _load_responses(args):
    src = Path(args.input) if args.input else Path(args.out)
    H = uio.read_archive(src / "tvfr")
    h = uio.read_archive(src / "tvir")
    try:
        meta = json.loads((src / "tvfr.json").read_text()).get("config")
    except (OSError, ValueError):
        meta = None
    return H, h, _resolve(args, meta)


def cmd_characterize(args) -> int:
    H, h, cfg = _load_responses(args)
    out = _out(args)
    pr = cfg.processing
    rep = characterize_channel(h, H, noise_floor_db=pr.noise_floor_db, tc_threshold=pr.tc_threshold)
    uio.write_correlation(out / "time_autocorrelation.csv", rep.time_corr, "lag_s")
    uio.write_correlation(out / "freq_autocorrelation.csv", rep.freq_corr, "lag_hz")
    uio.write_profile(out / "doppler_spectrum.csv", rep.doppler, "doppler_hz")
    uio.write_profile(out / "delay_profile.csv", rep.delay, "delay_s")
    fit = pipeline.global_fit(H, cfg)
    p = rep.params
    uio.write_csv(out / "params.csv",
                  ["t_c", "b_c_khz", "sigma_tau_ms", "sigma_nu_hz", "K", "epsilon_pct"],
                  [[p.t_c.format(1e3, 1) + " ms", p.b_c.format(1e-3, 2),
                    f"{p.sigma_tau * 1e3:.4f}", f"{p.sigma_nu:.4f}",
                    f"{fit.K:.3f}" if fit else "n/a",
                    f"{100 * fit.epsilon:.2f}" if fit else "n/a"]])
    return 0


def cmd_paths(args) -> int:
    H, h, cfg = _load_responses(args)
    pr = cfg.processing
    hr = tvir_from_tvfr(H, pr.zero_pad_factor)
    taus = detect_paths(delay_profile(hr), pr.max_paths, pr.min_separation,
                        pr.min_prominence_db, pr.noise_floor_db)
    d = decompose(hr, taus)
    reps = per_path_report(d, pr.tc_threshold, pr.t_seg, pr.f_seg, pr.bins, pr.noise_floor_db)
    rows = []
    for i, (r, win) in enumerate(zip(reps, d.window_bounds), 1):
        rows.append([i, f"{r.tau * 1e3:.5f}", f"{win[0] * 1e3:.5f}", f"{win[1] * 1e3:.5f}",
                     r.params.t_c.format(1.0, 3), r.params.b_c.format(1e-3, 3),
                     r.params.b_c.note, f"{r.params.sigma_tau * 1e3:.5f}",
                     f"{r.fit.K:.3f}" if r.fit else "n/a",
                     f"{100 * r.fit.epsilon:.2f}" if r.fit else "n/a", f"{r.energy:.6g}"])
    out = _out(args)
    uio.write_csv(out / "paths.csv",
                  ["path", "tau_ms", "window_start_ms", "window_end_ms", "t_c_s", "b_c_khz",
                   "b_c_note", "sigma_tau_ms", "K", "epsilon_pct", "energy"], rows)
    return 0


def cmd_fit_rician(args) -> int:
    H, _, cfg = _load_responses(args)
    fit = pipeline.global_fit(H, cfg)
    if fit is None:
        raise uio.DataError("not enough gain samples for a Rician fit")
    out = _out(args)
    uio.write_csv(out / "rician_fit.csv", ["K", "epsilon", "n_samples"],
                  [[fit.K, fit.epsilon, fit.n_samples]])
    c = fit.centers
    uio.write_csv(out / "rician_histogram.csv", ["x", "density", "pdf"],
                  zip(c, fit.density, rician_pdf(c, fit.K)))
    return 0


def _report_job(item):
    name, seed, duration = item
    cfg = preset(name, seed)
    if duration is not None:
        cfg = dataclasses.replace(cfg, sounding=cfg.sounding.replace(duration=duration))
    return pipeline.run_channel(cfg)


def cmd_report(args) -> int:
    names = args.presets or [f"trial-ch{i}" for i in SEA_TRIAL_GEOMETRIES]
    items = [(n, args.seed or 0, args.duration) for n in names]
    for n in names:  # fail fast on typos before spending minutes simulating
        preset(n)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            rows = list(ex.map(_report_job, items))
    else:
        rows = [_report_job(i) for i in items]
    out = _out(args)
    uio.write_csv(out / "global.csv", pipeline.GLOBAL_HEADER, [r[0] for r in rows])
    uio.write_csv(out / "path_coherence_time.csv", pipeline.tables_header("t_c", "s"),
                  [r[1] for r in rows])
    uio.write_csv(out / "path_coherence_bandwidth.csv", pipeline.tables_header("b_c", "khz"),
                  [r[2] for r in rows])
    uio.write_csv(out / "path_rician_k.csv", pipeline.tables_header("K", ""),
                  [r[3] for r in rows])
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--preset", metavar="NAME", help="named configuration (e.g. trial-ch8)")
    common.add_argument("--seed", type=int, default=None, metavar="N")
    common.add_argument("--out", metavar="DIR", default=".", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="uwsounder",
                                description="Multitone channel sounding toolkit")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    s = sub.add_parser("generate", parents=[common], help="write the sounding waveform")
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("simulate", parents=[common], help="pass a sounding through the channel")
    s.add_argument("--input", metavar="WAV", help="sounding bundle (default: synthesize)")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("estimate", parents=[common], help="estimate TVFR/TVIR")
    s.add_argument("--input", metavar="WAV", help="received bundle (default: OUT/received.wav)")
    s.add_argument("--calibration", metavar="CSV", help="freq_hz,gain_db transducer response")
    s.add_argument("--no-compensation", action="store_true",
                   help="skip initial-delay compensation")
    s.set_defaults(func=cmd_estimate)

    for name, func, text in (("characterize", cmd_characterize, "global characterization"),
                             ("paths", cmd_paths, "per-path analysis"),
                             ("fit-rician", cmd_fit_rician, "Rician fit of the gains")):
        s = sub.add_parser(name, parents=[common], help=text)
        s.add_argument("--input", metavar="DIR", help="directory holding tvfr/tvir archives")
        s.set_defaults(func=func)

    s = sub.add_parser("report", parents=[common], help="tables over several presets")
    s.add_argument("--presets", nargs="+", metavar="NAME")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--duration", type=float, default=None, help="record length override (s)")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (SoundingError, OSError) as e:
        print(f"uwsounder: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
