"""Desk-scale reproduction checks with a printable pass/fail table.

Each check compares a simulated value with a reference number under a
tolerance. ``tighten`` divides every tolerance (one-sided bounds move toward
their cap), which makes it easy to watch checks fail once the tolerance
drops below the simulation's own noise floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .beamform import NodeEmission, coherent_gain
from .channel import LinkBudget
from .experiment import (
    ExperimentConfig,
    find_nulls,
    predicted_nulls,
    run_experiment,
    swept_phase_deg,
    uncorrected_sweep,
)
from .montecarlo import (
    McConfig,
    analytic_probability,
    requirement_contour,
    run_surface,
    worst_case_angle,
)
from .ranging import crlb, max_coherent_frequency, ranging_ensemble, second_moment
from .sync import SyncLink, MixerChainConfig, carrier_phase_shift_sync, ref_phase_shift
from .waveform import SampledSignal, SyncToneParams, TtsfwParams, generate_ttsfw, spectral_moments

KINDS = ("abs", "rel", "le", "ge")


@dataclass(frozen=True)
class Check:
    """``abs``: |value-reference| <= tol; ``rel``: relative; ``le``: value <= tol;
    ``ge``: value >= tol, where tighten moves tol toward ``cap``."""

    criterion: int
    name: str
    reference: float
    value: float
    tolerance: float
    kind: str = "abs"
    unit: str = ""
    cap: float = 1.0
    tighten: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown check kind {self.kind!r}")
        if not self.tighten > 0:
            raise ValueError("tighten must be positive")

    @property
    def limit(self) -> float:
        if self.kind == "ge":
            return self.cap - (self.cap - self.tolerance) / self.tighten
        return self.tolerance / self.tighten

    @property
    def passed(self) -> bool:
        v = self.value
        if not math.isfinite(v) and self.kind != "ge":
            return False
        if self.kind == "abs":
            return abs(v - self.reference) <= self.limit
        if self.kind == "rel":
            return abs(v / self.reference - 1.0) <= self.limit
        if self.kind == "le":
            return v <= self.limit
        return v >= self.limit

    def describe_tolerance(self) -> str:
        unit = f" {self.unit}" if self.unit else ""
        if self.kind == "abs":
            return f"+/- {self.limit:.4g}{unit}"
        if self.kind == "rel":
            return f"+/- {100 * self.limit:.4g}%"
        if self.kind == "le":
            return f"<= {self.limit:.6g}{unit}"
        return f">= {self.limit:.6g}{unit}"


# -- individual criteria ----------------------------------------------------

def check_moment() -> list[Check]:
    p = TtsfwParams()
    zeta = second_moment(p)
    frame = generate_ttsfw(p)
    start, stop = p.pulse_bounds(0)
    _, numeric = spectral_moments(SampledSignal(frame.samples[start:stop], p.sample_rate))
    return [
        Check(1, "zeta_f^2 closed form", 1.5791e14, zeta, 1e-4, "rel", "Hz^2"),
        Check(1, "zeta_f^2 numeric / closed", 1.0, numeric / zeta, 0.01, "abs"),
    ]


def check_crlb() -> list[Check]:
    p = TtsfwParams()
    b = LinkBudget.for_waveform(p, 30.0)
    r = crlb(p, b)
    return [
        Check(2, "processing gain", 6250.0, b.processing_gain, 1e-9, "rel"),
        Check(2, "processing gain (dB)", 37.96, b.processing_gain_db, 0.005, "abs", "dB"),
        Check(2, "sigma_tau^2", 5.066e-22, r.sigma_tau_sq, 0.005, "rel", "s^2"),
        Check(2, "sigma_x", 3.4, r.sigma_x * 1e3, 0.1, "abs", "mm"),
    ]


def check_requirement() -> list[Check]:
    return [Check(3, "f_c max at sigma_x = 6 mm", 1.50, max_coherent_frequency(6e-3) / 1e9, 0.01, "abs", "GHz")]


def check_ensemble(seed: int = 0, workers: int = 1, trials: int = 1000) -> list[Check]:
    p = TtsfwParams()
    b = LinkBudget.for_waveform(p, 30.0)
    res = ranging_ensemble(p, b, d_IN=1.5, trials=trials, seed=seed, workers=workers)
    return [
        # [1x, 3x] band written as centre 2 +/- 1
        Check(4, "sigma / CRLB sigma_x", 2.0, res.efficiency_ratio, 1.0, "abs"),
        Check(4, "|bias|", 0.0, abs(res.bias) * 1e3, 0.34, "le", "mm"),
    ]


def check_sync() -> list[Check]:
    link = SyncLink()
    shift = math.degrees(link.measured_shift(1.0, 1.0))
    f_c, f_ref = 1.5e9, 10e6
    composed = []
    for fr1 in (1.0e9, 2.4e9, 4.3e9, 5.8e9, 10.0e9):
        tones = SyncToneParams(fr1, fr1 + f_ref)
        l2 = SyncLink(tones=tones, mixer=MixerChainConfig(f_ref=f_ref))
        composed.append(carrier_phase_shift_sync(l2.measured_shift(1.0, 0.37), f_c, f_ref))
    spread = math.degrees(max(composed) - min(composed))
    expected = math.degrees(carrier_phase_shift_sync(ref_phase_shift(0.37, f_ref), f_c, f_ref))
    return [
        Check(5, "IF phase shift at 1 m", -12.01, shift, 0.1, "abs", "deg"),
        Check(5, "dphi_c1 spread over 5 tone pairs", 0.0, spread, 1e-6, "le", "deg"),
        Check(5, "dphi_c1 vs geometric", expected, float(np.mean(np.degrees(composed))), 1e-6, "abs", "deg"),
    ]


def check_montecarlo(seed: int = 0, workers: int = 1, iterations: int = 5000) -> list[Check]:
    cfg = McConfig.desk(iterations=iterations, master_seed=seed)
    s = run_surface(cfg, workers=workers)
    c90 = requirement_contour(s, 0.9, 0.9)
    k = s.threshold_index(0.9)
    p270 = float(s.probability[s.theta_index(270.0), :, k].min())
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(20):
        i, j, t = rng.integers(len(cfg.theta_grid)), rng.integers(len(cfg.sigma_grid)), rng.integers(len(cfg.thresholds))
        a = analytic_probability(cfg.sigma_grid[j], cfg.theta_grid[i], cfg.thresholds[t], cfg.error_model)
        se = math.sqrt(a * (1 - a) / cfg.iterations)
        diff = abs(s.probability[i, j, t] - a)
        worst = max(worst, diff / se if se > 0 else (0.0 if diff < 1e-12 else math.inf))
    mirror = [s.theta_index((180.0 - th) % 360.0) for th in cfg.theta_grid]
    sym = float(np.abs(s.probability[mirror] - s.probability).max())
    return [
        Check(6, "contour sigma/lambda at theta=90, X=0.9", 0.031, c90[90.0], 0.002, "abs", "lambda"),
        Check(6, "min P(gc>=0.9) at theta=270", 1.0, p270, 1.0, "ge"),
        Check(6, "worst-case angle", 90.0, worst_case_angle(c90), 1.0, "abs", "deg"),
        Check(6, "max |MC - closed form| in std errors (20 cells)", 0.0, worst, 3.0, "le"),
        Check(6, "theta <-> 180-theta asymmetry", 0.0, sym, 2 / math.sqrt(cfg.iterations), "le"),
    ]


def check_experiment(seed: int = 0) -> list[Check]:
    cfg = ExperimentConfig(seed=seed)
    rows = run_experiment(cfg)
    x, amp = uncorrected_sweep(cfg)
    nulls = find_nulls(x, amp)
    pred = predicted_nulls(cfg)
    offset = max((abs(a - b) for a, b in zip(nulls, pred)), default=math.inf) if len(nulls) == len(pred) else math.inf
    gcs = [r.gc_corrected for r in rows]
    quiet = run_experiment(replace(cfg, snr_db=math.inf))
    dev = max(abs(r.gc_corrected - 1.0) for r in quiet)
    return [
        Check(7, "uncorrected nulls", 2.0, float(len(nulls)), 0.0, "abs"),
        Check(7, "null position error", 0.0, offset, cfg.step, "le", "m"),
        Check(7, "total swept phase", 720.0, swept_phase_deg(cfg), 1e-6, "abs", "deg"),
        Check(7, "recorded positions", 11.0, float(len(rows)), 0.0, "abs"),
        Check(7, "min corrected gc", 0.9, float(np.min(gcs)), 0.9, "ge"),
        Check(7, "noiseless |gc - 1|", 0.0, dev, 1e-6, "le"),
    ]


def check_gain_oracle() -> list[Check]:
    psi = np.linspace(-2 * math.pi, 2 * math.pi, 100)
    err = 0.0
    for v in psi:
        g = coherent_gain([NodeEmission(), NodeEmission(residual_error=float(v))]).gc
        err = max(err, abs(g - math.cos(v / 2) ** 2))
    db = 10 * math.log10(0.9)
    return [
        Check(8, "max |gc - cos^2(psi/2)|", 0.0, err, 1e-12, "le"),
        Check(8, "gc = 0.9 in dB", -0.46, db, 0.005, "abs", "dB"),
        Check(8, "degradation rounds to 0.5 dB", 0.5, round(-db, 1), 0.0, "abs", "dB"),
    ]


def run_checks(seed: int = 0, workers: int = 1, tighten: float = 1.0) -> list[Check]:
    checks = (
        check_moment()
        + check_crlb()
        + check_requirement()
        + check_ensemble(seed, workers)
        + check_sync()
        + check_montecarlo(seed, workers)
        + check_experiment(seed)
        + check_gain_oracle()
    )
    return [replace(c, tighten=tighten) for c in checks]


def format_report(checks: list[Check]) -> str:
    head = ("#", "check", "reference", "simulated", "tolerance", "result")
    body = [
        (
            str(c.criterion),
            c.name,
            f"{c.reference:.6g} {c.unit}".strip(),
            f"{c.value:.6g} {c.unit}".strip(),
            c.describe_tolerance(),
            "PASS" if c.passed else "FAIL",
        )
        for c in checks
    ]
    widths = [max(len(r[i]) for r in [head] + body) for i in range(len(head))]
    lines = ["  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip() for r in [head] + body]
    lines.insert(1, "  ".join("-" * w for w in widths))
    n_fail = sum(not c.passed for c in checks)
    lines.append("")
    lines.append(f"{len(checks) - n_fail}/{len(checks)} checks passed")
    return "\n".join(lines) + "\n"
