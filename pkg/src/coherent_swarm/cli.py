"""Command-line entry point: ``coherent-swarm <subcommand>``.

Exit codes: 0 success, 1 a check failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import secrets
import sys
from pathlib import Path

import numpy as np

from . import svg
from .config import ConfigError, RunConfig, dump_config, load_config, with_overrides
from .constants import C
from .experiment import TRACE_COLUMNS, export_trace, find_nulls, run_experiment, swept_phase_deg, uncorrected_sweep
from .montecarlo import requirement_contour, run_surface, worst_case_angle, write_surface_csv
from .ranging import METHODS, crlb, ranging_ensemble
from .repro import format_report, run_checks
from .sync import SyncLink, carrier_phase_shift_sync, ref_phase_shift, tone_phase_shifts

SEED_ENV = "COHERENT_SWARM_SEED"


class UsageError(Exception):
    pass


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _add_common(parser: argparse.ArgumentParser, default) -> None:
    # subcommands repeat the global flags with suppressed defaults so a flag
    # given before the subcommand is not reset by the subparser
    parser.add_argument("--config", type=Path, default=default, help="key = value configuration file")
    parser.add_argument("--seed", type=int, default=default, help=f"master seed (falls back to ${SEED_ENV})")
    parser.add_argument("--workers", type=int, default=default, help="worker processes for parallel stages")
    parser.add_argument("-v", "--verbose", action="count", default=default, help="more output")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    _add_common(common, argparse.SUPPRESS)

    p = argparse.ArgumentParser(
        prog="coherent-swarm",
        description="Ranging, frequency transfer and coherent-gain simulator for two-node beamforming.",
    )
    _add_common(p, None)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("crlb", parents=[common], help="ranging accuracy bound")
    c.add_argument("--bw", type=float, help="waveform bandwidth, Hz")
    c.add_argument("--n", type=int, help="pulses per frame")
    c.add_argument("--snr-db", type=float, help="pre-processing SNR, dB")
    c.add_argument("--pulse-time", type=float, help="active pulse time, s")
    c.add_argument("--noise-bw", type=float, help="noise bandwidth, Hz")
    c.add_argument("--csv", type=Path, help="also write the report as CSV")

    r = sub.add_parser("range-sim", parents=[common], help="ranging ensemble against the bound")
    r.add_argument("--distance", type=float, help="true separation, m")
    r.add_argument("--trials", type=int)
    r.add_argument("--snr-db", type=float)
    r.add_argument("--method", choices=METHODS)
    r.add_argument("--out", type=Path, help="per-trial CSV")

    s = sub.add_parser("sync-demo", parents=[common], help="displacement to phase chain")
    s.add_argument("--delta-d", type=float, help="sync-path displacement, m")
    s.add_argument("--fref", type=float, help="tone separation, Hz")
    s.add_argument("--fc", type=float, help="carrier, Hz")

    m = sub.add_parser("mc-grid", parents=[common], help="coherent-gain probability surface")
    m.add_argument("--iterations", type=int)
    m.add_argument("--fc", type=float)
    m.add_argument("--thresholds", type=_float_list)
    m.add_argument("--error-model", choices=("shared", "independent"))
    m.add_argument("--out", type=Path, default=Path("surface.csv"))
    m.add_argument("--svg", type=Path, help="contour plot")

    e = sub.add_parser("experiment", parents=[common], help="moving-node beamforming trace")
    e.add_argument("--fc", type=float)
    e.add_argument("--theta", type=float, help="steering angle, degrees")
    e.add_argument("--snr-db", type=float)
    e.add_argument("--correction", choices=("on", "off", "both"))
    e.add_argument("--out", type=Path, default=Path("trace.csv"))
    e.add_argument("--svg", type=Path, help="amplitude plot")

    q = sub.add_parser("repro", parents=[common], help="run every reproduction check")
    q.add_argument("--tighten", type=float, default=1.0, help="divide every tolerance by this factor")
    return p


def _resolve(args) -> tuple[RunConfig, bool]:
    """Merge config file, flags and seed fallbacks; returns (config, seed_was_drawn)."""
    cfg = load_config(args.config) if args.config else RunConfig()
    verbosity = min(3, cfg.verbosity + args.verbose) if args.verbose else None
    cfg = with_overrides(cfg, workers=args.workers, verbosity=verbosity)
    seed = args.seed if args.seed is not None else cfg.seed
    drawn = False
    if seed is None and os.environ.get(SEED_ENV, "").strip():
        try:
            seed = int(os.environ[SEED_ENV])
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {os.environ[SEED_ENV]!r}")
    if seed is None:
        seed = secrets.randbelow(2**32)
        drawn = True
    if seed < 0:
        raise UsageError("seed must be non-negative")
    return with_overrides(cfg, seed=seed), drawn


def _out_path(cfg: RunConfig, path: Path) -> Path:
    return path if path.is_absolute() else Path(cfg.output_dir) / path


def _cmd_crlb(args, cfg: RunConfig) -> int:
    n = args.n if args.n is not None else cfg.n_pulses
    pri = cfg.pri_s
    duty = cfg.duty
    if args.pulse_time is not None:
        duty = args.pulse_time / pri
    cfg = with_overrides(
        cfg, bw_hz=args.bw, n_pulses=n, snr_db=args.snr_db, noise_bw_hz=args.noise_bw,
        duty=duty if args.pulse_time is not None else None,
    )
    budget = cfg.budget()
    rep = crlb(cfg.ttsfw(), budget)
    rows = [
        ("bandwidth", cfg.bw_hz, "Hz"),
        ("pulses", float(cfg.n_pulses), ""),
        ("snr", cfg.snr_db, "dB"),
        ("processing_gain", budget.processing_gain, ""),
        ("processing_gain_db", budget.processing_gain_db, "dB"),
        ("post_snr_db", budget.post_snr_db, "dB"),
    ] + rep.rows()
    width = max(len(r[0]) for r in rows)
    for name, val, unit in rows:
        print(f"{name.ljust(width)}  {val:.6g} {unit}".rstrip())
    if args.csv:
        with open(_out_path(cfg, args.csv), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["quantity", "value", "unit"])
            for name, val, unit in rows:
                w.writerow([name, repr(float(val)), unit])
    return 0


def _cmd_range(args, cfg: RunConfig) -> int:
    cfg = with_overrides(cfg, distance_m=args.distance, trials=args.trials, snr_db=args.snr_db, method=args.method)
    res = ranging_ensemble(
        cfg.ttsfw(), cfg.budget(), cfg.distance_m, cfg.trials, cfg.seed,
        method=cfg.method, oversample=cfg.oversample, workers=cfg.workers,
    )
    print(f"trials          {cfg.trials}")
    print(f"true distance   {cfg.distance_m:.6f} m")
    print(f"mean estimate   {np.mean(res.estimates):.9f} m")
    print(f"bias            {res.bias * 1e3:.4f} mm")
    print(f"sigma           {res.sigma * 1e3:.4f} mm")
    print(f"CRLB sigma_x    {res.bound.sigma_x * 1e3:.4f} mm")
    print(f"sigma / bound   {res.efficiency_ratio:.4f}")
    if args.out:
        with open(_out_path(cfg, args.out), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trial", "distance_m", "error_m"])
            for i, (d, e) in enumerate(zip(res.estimates, res.errors)):
                w.writerow([i, repr(float(d)), repr(float(e))])
    return 0


def _cmd_sync(args, cfg: RunConfig) -> int:
    delta = cfg.delta_d_m if args.delta_d is None else args.delta_d
    f_ref = cfg.f_ref_hz if args.fref is None else args.fref
    f_c = cfg.fc_hz if args.fc is None else args.fc
    if not f_ref > 0 or not f_c > 0:
        raise UsageError("--fref and --fc must be positive")
    fr1 = cfg.fr1_hz
    d1, d2 = tone_phase_shifts(delta, fr1, fr1 + f_ref)
    dref = ref_phase_shift(delta, f_ref)
    dc1 = carrier_phase_shift_sync(dref, f_c, f_ref)
    print(f"delta_d_IN      {delta:.6g} m")
    print(f"f_ref           {f_ref:.6g} Hz")
    print(f"f_c             {f_c:.6g} Hz")
    print(f"dphi_1          {math.degrees(d1):.4f} deg")
    print(f"dphi_2          {math.degrees(d2):.4f} deg")
    print(f"dphi_ref        {math.degrees(dref):.4f} deg")
    print(f"dphi_c1         {math.degrees(dc1):.4f} deg")
    if math.isclose(f_ref, cfg.f_ref_hz) and f_ref < cfg.lpf_cutoff_hz:
        link = SyncLink(tones=cfg.tones(), mixer=cfg.mixer(), sample_rate=cfg.sync_sample_rate_hz)
        meas = link.measured_shift(cfg.initial_separation_m, delta)
        print(f"measured IF     {math.degrees(meas):.4f} deg (wrapped)")
    return 0


def _cmd_mc(args, cfg: RunConfig) -> int:
    cfg = with_overrides(
        cfg, iterations=args.iterations, fc_hz=args.fc, thresholds=args.thresholds, error_model=args.error_model
    )
    mc = cfg.mc_config()
    surface = run_surface(mc, workers=cfg.workers)
    out = _out_path(cfg, args.out)
    write_surface_csv(surface, out)
    lam = C / mc.f_c
    print(f"iterations {mc.iterations}, grid {len(mc.theta_grid)} x {len(mc.sigma_grid)}, seed {mc.master_seed}")
    series = {}
    for x in mc.thresholds:
        contour = requirement_contour(surface, x)
        th90 = contour.get(90.0, math.nan)
        print(
            f"X = {x:.2f}: sigma_max at 90 deg = {th90:.5f} lambda ({th90 * lam * 1e3:.3f} mm), "
            f"worst angle {worst_case_angle(contour):.1f} deg"
        )
        series[f"X = {x:g}"] = (list(contour.keys()), [v if math.isfinite(v) else math.nan for v in contour.values()])
    print(f"wrote {out}")
    if args.svg:
        chart = svg.line_chart(
            series, f"sigma for P(gc >= X) = {mc.probability_target:g}", "theta (deg)", "sigma / lambda",
            ylim=(0.0, max(mc.sigma_grid)),
        )
        svg.write(_out_path(cfg, args.svg), chart)
    return 0


def _cmd_experiment(args, cfg: RunConfig) -> int:
    cfg = with_overrides(cfg, fc_hz=args.fc, theta_deg=args.theta, snr_db=args.snr_db, correction=args.correction)
    ecfg = cfg.experiment_config()
    rows = run_experiment(ecfg)
    out = _out_path(cfg, args.out)
    export_trace(rows, out)
    x, amp = uncorrected_sweep(ecfg)
    nulls = find_nulls(x, amp)
    gcs = [r.gc_corrected for r in rows if math.isfinite(r.gc_corrected)]
    print(f"positions        {len(rows)}")
    print(f"swept phase      {swept_phase_deg(ecfg):.2f} deg")
    print(f"uncorrected nulls {len(nulls)} at " + ", ".join(f"{v:.4f} m" for v in nulls))
    if gcs:
        print(f"min corrected gc {min(gcs):.4f}")
    flagged = sum(1 for r in rows if ecfg.correction != "off" and not math.isfinite(r.range_estimate))
    if flagged:
        print(f"ranging failures {flagged}")
    print(f"wrote {out}")
    if args.svg:
        pos = [r.position for r in rows]
        series = {name: (pos, [getattr(r, name) for r in rows]) for name in TRACE_COLUMNS[1:5]}
        svg.write(_out_path(cfg, args.svg), svg.line_chart(series, "amplitude at target", "position (m)", "amplitude"))
    return 0


def _cmd_repro(args, cfg: RunConfig) -> int:
    if not args.tighten > 0:
        raise UsageError("--tighten must be positive")
    checks = run_checks(seed=cfg.seed, workers=cfg.workers, tighten=args.tighten)
    sys.stdout.write(format_report(checks))
    return 0 if all(c.passed for c in checks) else 1


COMMANDS = {
    "crlb": _cmd_crlb,
    "range-sim": _cmd_range,
    "sync-demo": _cmd_sync,
    "mc-grid": _cmd_mc,
    "experiment": _cmd_experiment,
    "repro": _cmd_repro,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg, drawn = _resolve(args)
        if drawn:
            print(f"seed: {cfg.seed}", file=sys.stderr)
        if cfg.verbosity >= 2:
            sys.stderr.write("# resolved configuration\n" + dump_config(cfg))
        return COMMANDS[args.command](args, cfg)
    except (ConfigError, UsageError) as exc:
        print(f"coherent-swarm: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"coherent-swarm: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"coherent-swarm: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
