"""Two-node beamforming while the secondary walks one carrier wavelength.

The secondary moves away from the primary along the array baseline, so the
sync-path and baseline displacements are equal. At each stop it ranges the
primary, its locked carrier picks up the sync-path phase from the recovered
reference, and the two carriers are summed at a far-field target at angle
theta. Amplitudes are normalized so the ideal sum is 1.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from .beamform import NodeEmission, calibrate, coherent_gain, coherent_sum, steering_phase
from .channel import LinkBudget
from .constants import C
from .ranging import RangingError, range_once
from .sync import (
    MixerChainConfig,
    PhaseTracker,
    PllModel,
    SyncLink,
    carrier_phase_shift_sync,
    ref_phase_shift,
)
from .waveform import SyncToneParams, TtsfwParams, generate_ttsfw

CORRECTION_MODES = ("on", "off", "both")
NULL_FRACTION = 0.1


@dataclass(frozen=True)
class ExperimentConfig:
    f_c: float = 1.5e9
    traverse: float = C / 1.5e9
    step: float = 0.02
    cycles_per_position: int = 1500
    snr_db: float = 30.0
    theta: float = 90.0
    correction: str = "both"
    seed: int = 0
    initial_separation: float = 1.5
    calibration_pulses: int = 64
    target_snr_db: float = math.inf
    amplitudes: tuple[float, float] = (0.5, 0.5)
    waveform: TtsfwParams = field(default_factory=TtsfwParams)
    tones: SyncToneParams = field(default_factory=SyncToneParams)
    null_oversample: int = 20

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not self.traverse >= self.step:
            raise ValueError("traverse must be at least one step")
        if self.correction not in CORRECTION_MODES:
            raise ValueError(f"correction must be one of {CORRECTION_MODES}")
        if self.cycles_per_position < 1 or self.calibration_pulses < 1:
            raise ValueError("cycles_per_position and calibration_pulses must be >= 1")
        if not self.f_c > 0:
            raise ValueError("f_c must be positive")
        if self.initial_separation < 0:
            raise ValueError("initial_separation must be non-negative")

    @property
    def wavelength(self) -> float:
        return C / self.f_c

    def positions(self) -> np.ndarray:
        """Stops 0, step, 2*step, ... up to the step nearest the traverse end."""
        n = int(round(self.traverse / self.step))
        return np.arange(n + 1) * self.step


@dataclass(frozen=True)
class TraceRow:
    position: float
    amp_primary: float
    amp_secondary: float
    amp_sum_uncorrected: float
    amp_sum_corrected: float
    gc_corrected: float
    range_estimate: float


TRACE_COLUMNS = tuple(f.name for f in fields(TraceRow))


def _seed(cfg: ExperimentConfig, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(cfg.seed, spawn_key=key)


def carrier_phase_estimate(delta_d: float, cfg: ExperimentConfig) -> float:
    """Carrier phase the secondary predicts for a ranged displacement.

    One displacement estimate drives both the sync-path and steering terms.
    """
    f_ref = cfg.tones.f_ref
    dphi_c1 = carrier_phase_shift_sync(ref_phase_shift(delta_d, f_ref), cfg.f_c, f_ref)
    return dphi_c1 + steering_phase(delta_d, cfg.theta, cfg.f_c)


def true_carrier_phase(x, cfg: ExperimentConfig):
    """Geometric total carrier phase at displacement ``x`` (vectorized)."""
    return carrier_phase_estimate(x, cfg)


def swept_phase_deg(cfg: ExperimentConfig) -> float:
    """Magnitude of the total carrier phase accumulated over the traverse."""
    return abs(math.degrees(true_carrier_phase(cfg.traverse, cfg)))


def _measure(phasor: complex, scale: float, cfg: ExperimentConfig, rng) -> float:
    """Amplitude at the target, averaged over the recorded carrier cycles."""
    if not math.isfinite(cfg.target_snr_db):
        return abs(phasor)
    sd = scale / math.sqrt(10 ** (cfg.target_snr_db / 10) * cfg.cycles_per_position)
    noise = complex(*(rng.standard_normal(2) * sd / math.sqrt(2)))
    return abs(phasor + noise)


def run_experiment(cfg: ExperimentConfig) -> list[TraceRow]:
    """Step the secondary through every position and record the target sums.

    The first stop is the calibration geometry: its range is averaged over
    ``calibration_pulses`` and the initial phases are set there. A ranging
    failure leaves NaN in the range and corrected columns for that row.
    """
    params = cfg.waveform
    frame = generate_ttsfw(params)
    sample_snr = LinkBudget.for_waveform(params, cfg.snr_db).sample_snr_db(params.sample_rate)
    beat = params.sample_rate / params.bw
    link = SyncLink(
        tones=cfg.tones,
        mixer=MixerChainConfig(f_ref=cfg.tones.f_ref, baseband_fr1=cfg.tones.baseband_fr1),
    )
    pll = PllModel()
    amp_p, amp_s = cfg.amplitudes
    scale = abs(amp_p) + abs(amp_s)
    d0 = cfg.initial_separation

    ref0, _ = link.if_phase(d0)
    tracker = PhaseTracker(ref0)

    rows: list[TraceRow] = []
    base_range = math.nan
    last_lag = None
    for i, x in enumerate(cfg.positions()):
        d = d0 + float(x)
        est = math.nan
        try:
            if i == 0:
                first = range_once(frame, d, sample_snr, _seed(cfg, 0, 0), beat_period=beat)
                vals = [first.distance]
                for k in range(1, cfg.calibration_pulses):
                    r = range_once(
                        frame, d, sample_snr, _seed(cfg, 0, k), expected_lag=first.lag, beat_period=beat
                    )
                    vals.append(r.distance)
                est = float(np.mean(vals))
                base_range = est
                last_lag = first.lag
            else:
                r = range_once(frame, d, sample_snr, _seed(cfg, i, 0), expected_lag=last_lag, beat_period=beat)
                est = r.distance
                last_lag = r.lag
        except RangingError:
            est = math.nan

        ref_phase, ref_amp = link.if_phase(d)
        dphi_ref = tracker.update(ref_phase) - ref0
        dphi_c1 = pll.carrier_phase(dphi_ref, cfg.f_c, cfg.tones.f_ref, ref_amp)
        dphi_c = dphi_c1 + steering_phase(float(x), cfg.theta, cfg.f_c)

        primary = NodeEmission(amp_p, 1.0, cfg.f_c)
        unc = NodeEmission(amp_s, 1.0, cfg.f_c, 0.0, dphi_c)
        primary, unc = calibrate([primary, unc])
        rng = np.random.default_rng(_seed(cfg, i, 1))

        amp_unc = amp_cor = gc = math.nan
        if cfg.correction in ("off", "both"):
            amp_unc = _measure(coherent_sum([primary, unc]), scale, cfg, rng) / scale
        if cfg.correction in ("on", "both") and math.isfinite(est):
            corr = carrier_phase_estimate(est - base_range, cfg)
            cor = NodeEmission(amp_s, 1.0, cfg.f_c, -corr, dphi_c - corr, unc.initial_phase)
            amp_cor = _measure(coherent_sum([primary, cor]), scale, cfg, rng) / scale
            gc = coherent_gain([primary, cor]).gc

        rows.append(
            TraceRow(
                position=float(x),
                amp_primary=abs(amp_p) / scale,
                amp_secondary=abs(amp_s) / scale,
                amp_sum_uncorrected=amp_unc,
                amp_sum_corrected=amp_cor,
                gc_corrected=gc,
                range_estimate=est,
            )
        )
    return rows


def _replica(args):
    cfg, seed = args
    from dataclasses import replace

    return run_experiment(replace(cfg, seed=int(seed)))


def run_replicas(cfg: ExperimentConfig, seeds, workers: int = 1) -> list[list[TraceRow]]:
    """Independent experiment runs, one per seed, optionally in parallel."""
    jobs = [(cfg, s) for s in seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_replica, jobs))
    return [_replica(j) for j in jobs]


# -- uncorrected nulls ------------------------------------------------------

def uncorrected_sweep(cfg: ExperimentConfig) -> tuple[np.ndarray, np.ndarray]:
    """Noise-free uncorrected sum amplitude on a grid ``null_oversample`` times finer."""
    n = int(round(cfg.traverse / cfg.step)) * cfg.null_oversample
    x = np.linspace(0.0, cfg.traverse, n + 1)
    amp_p, amp_s = cfg.amplitudes
    s = amp_p + amp_s * np.exp(1j * true_carrier_phase(x, cfg))
    return x, np.abs(s) / (abs(amp_p) + abs(amp_s))


def find_nulls(x: np.ndarray, amp: np.ndarray, fraction: float = NULL_FRACTION) -> list[float]:
    """Positions of the deepest sample in each run below ``fraction`` of the maximum."""
    low = amp < fraction * amp.max()
    nulls = []
    i = 0
    while i < low.size:
        if low[i]:
            j = i
            while j < low.size and low[j]:
                j += 1
            k = i + int(np.argmin(amp[i:j]))
            nulls.append(float(x[k]))
            i = j
        else:
            i += 1
    return nulls


def predicted_nulls(cfg: ExperimentConfig) -> list[float]:
    """Displacements where the total carrier phase is an odd multiple of pi."""
    per_m = abs(true_carrier_phase(1.0, cfg))
    if per_m == 0:
        return []
    out = []
    k = 0
    while True:
        x = (2 * k + 1) * math.pi / per_m
        if x > cfg.traverse + 1e-12:
            return out
        out.append(x)
        k += 1


# -- export -----------------------------------------------------------------

def export_trace(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in rows:
            w.writerow([repr(float(getattr(r, c))) for c in TRACE_COLUMNS])


def read_trace(path) -> list[TraceRow]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != TRACE_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        return [TraceRow(*(float(v) for v in row)) for row in reader if row]
