"""Probability of reaching a coherent-gain threshold under ranging error.

For every (steering angle, ranging sigma) cell, trials draw a true
displacement, perturb it by a Gaussian ranging error, push both through the
phase chain and score the residual with the two-node phasor gain.

All cells reuse one stream of draws (common random numbers). Cells differ
only in how the draws are scaled, so the surface is smooth in sigma, exactly
symmetric in theta, and identical no matter how the grid is split across
worker processes.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import norm

from .beamform import steering_phase, two_node_gain
from .constants import C
from .sync import carrier_phase_shift_sync, ref_phase_shift

ERROR_MODELS = ("shared", "independent")
CSV_COLUMNS = ("theta_deg", "sigma_over_lambda", "threshold", "probability", "stderr")


def _default_sigmas() -> tuple[float, ...]:
    return tuple(round(0.005 * i, 10) for i in range(21))


@dataclass(frozen=True)
class McConfig:
    """Grid and sampling settings. ``sigma_grid`` is in units of the carrier wavelength."""

    iterations: int = 50_000
    thresholds: tuple[float, ...] = (0.6, 0.7, 0.8, 0.9)
    theta_grid: tuple[float, ...] = tuple(float(t) for t in range(360))
    sigma_grid: tuple[float, ...] = field(default_factory=_default_sigmas)
    f_c: float = 1.5e9
    probability_target: float = 0.90
    master_seed: int = 0
    error_model: str = "shared"
    f_ref: float = 10e6

    def __post_init__(self):
        object.__setattr__(self, "thresholds", tuple(float(x) for x in self.thresholds))
        object.__setattr__(self, "theta_grid", tuple(float(x) for x in self.theta_grid))
        object.__setattr__(self, "sigma_grid", tuple(float(x) for x in self.sigma_grid))
        if int(self.iterations) != self.iterations or self.iterations < 1:
            raise ValueError("iterations must be a positive integer")
        if not self.thresholds or any(not (0 < x <= 1) for x in self.thresholds):
            raise ValueError("thresholds must lie in (0, 1]")
        if list(self.thresholds) != sorted(self.thresholds):
            raise ValueError("thresholds must be sorted ascending")
        if not self.sigma_grid or any(s < 0 for s in self.sigma_grid):
            raise ValueError("sigma_grid values must be non-negative")
        if list(self.sigma_grid) != sorted(self.sigma_grid):
            raise ValueError("sigma_grid must be ascending")
        if not self.theta_grid:
            raise ValueError("theta_grid must be non-empty")
        if not (0 < self.probability_target <= 1):
            raise ValueError("probability_target must lie in (0, 1]")
        if self.error_model not in ERROR_MODELS:
            raise ValueError(f"error_model must be one of {ERROR_MODELS}")
        if not self.f_c > 0:
            raise ValueError("f_c must be positive")

    @classmethod
    def desk(cls, **overrides) -> "McConfig":
        """Desk-scale preset: 5,000 iterations, full 1 degree grid."""
        return replace(cls(iterations=5_000), **overrides)

    @property
    def wavelength(self) -> float:
        return C / self.f_c


@dataclass(frozen=True, eq=False)
class GcSurface:
    """P(gc >= X) indexed by (theta, sigma, threshold)."""

    probability: np.ndarray
    config: McConfig

    @property
    def thetas(self) -> np.ndarray:
        return np.asarray(self.config.theta_grid)

    @property
    def sigmas(self) -> np.ndarray:
        return np.asarray(self.config.sigma_grid)

    @property
    def stderr(self) -> np.ndarray:
        p = self.probability
        return np.sqrt(p * (1 - p) / self.config.iterations)

    def threshold_index(self, x: float) -> int:
        for i, t in enumerate(self.config.thresholds):
            if math.isclose(t, x, abs_tol=1e-12):
                return i
        raise KeyError(f"threshold {x} not in surface {self.config.thresholds}")

    def theta_index(self, theta: float) -> int:
        d = np.abs(((self.thetas - theta) + 180.0) % 360.0 - 180.0)
        i = int(np.argmin(d))
        if d[i] > 1e-9:
            raise KeyError(f"theta {theta} not on grid")
        return i

    def sigma_index(self, sigma: float) -> int:
        i = int(np.argmin(np.abs(self.sigmas - sigma)))
        if abs(self.sigmas[i] - sigma) > 1e-12:
            raise KeyError(f"sigma {sigma} not on grid")
        return i

    def at(self, theta: float, sigma: float, x: float) -> float:
        return float(self.probability[self.theta_index(theta), self.sigma_index(sigma), self.threshold_index(x)])

    def rows(self):
        se = self.stderr
        for i, th in enumerate(self.config.theta_grid):
            for j, sg in enumerate(self.config.sigma_grid):
                for k, x in enumerate(self.config.thresholds):
                    yield th, sg, x, float(self.probability[i, j, k]), float(se[i, j, k])


# -- sampling ---------------------------------------------------------------

def _draws(cfg: McConfig):
    rng = np.random.default_rng(cfg.master_seed)
    dd = rng.uniform(0.0, cfg.wavelength, cfg.iterations)
    z_in = rng.standard_normal(cfg.iterations)
    z_t = rng.standard_normal(cfg.iterations)
    if cfg.error_model == "shared":
        z_t = z_in
    return dd, z_in, z_t


def carrier_phase_total(delta_d_IN, delta_d_T, theta: float, f_c: float, f_ref: float):
    """Sync-path plus steering carrier phase for co-located displacements (vectorized)."""
    dphi_c1 = carrier_phase_shift_sync(ref_phase_shift(delta_d_IN, f_ref), f_c, f_ref)
    return dphi_c1 + steering_phase(delta_d_T, theta, f_c)


def _theta_block(args):
    cfg, thetas = args
    dd, z_in, z_t = _draws(cfg)
    lam = cfg.wavelength
    xs = np.asarray(cfg.thresholds)
    out = np.empty((len(thetas), len(cfg.sigma_grid), xs.size))
    for i, th in enumerate(thetas):
        true = carrier_phase_total(dd, dd, th, cfg.f_c, cfg.f_ref)
        for j, s in enumerate(cfg.sigma_grid):
            est = carrier_phase_total(dd + s * lam * z_in, dd + s * lam * z_t, th, cfg.f_c, cfg.f_ref)
            gc = two_node_gain(true - est)
            out[i, j] = np.mean(gc[:, None] >= xs[None, :], axis=0)
    return out


def run_surface(cfg: McConfig, workers: int = 1) -> GcSurface:
    """Estimate P(gc >= X) on the full grid.

    The secondary's motion is co-located (the same displacement on the sync
    path and the baseline). In the shared model one ranging error feeds both
    phase corrections; in the independent model each gets its own.
    """
    thetas = list(cfg.theta_grid)
    workers = max(1, int(workers))
    blocks = [list(b) for b in np.array_split(np.asarray(thetas), min(workers, len(thetas))) if b.size]
    jobs = [(cfg, b) for b in blocks]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_theta_block, jobs))
    else:
        parts = [_theta_block(j) for j in jobs]
    return GcSurface(np.concatenate(parts, axis=0), cfg)


# -- analysis ---------------------------------------------------------------

def phase_error_sigma(sigma_over_lambda, theta: float, error_model: str = "shared"):
    """Standard deviation (rad) of the residual carrier phase."""
    s = np.sin(np.radians(theta))
    spread = abs(1 + s) if error_model == "shared" else math.sqrt(1 + s * s)
    return 2 * np.pi * np.asarray(sigma_over_lambda, dtype=float) * spread


def analytic_probability(
    sigma_over_lambda, theta: float, x: float, error_model: str = "shared", wraps: int = 3
):
    """Closed-form P(gc >= x) for a Gaussian residual phase.

    gc >= x holds while the residual stays within +/- 2 acos(sqrt(x)) of a
    multiple of 2 pi; ``wraps`` sets how many neighbouring multiples count.
    """
    psi_max = 2 * math.acos(math.sqrt(x))
    sp = np.atleast_1d(phase_error_sigma(sigma_over_lambda, theta, error_model))
    out = np.ones_like(sp)
    on = sp > 0
    total = np.zeros(on.sum())
    for k in range(-wraps, wraps + 1):
        c = 2 * math.pi * k
        total += norm.cdf((c + psi_max) / sp[on]) - norm.cdf((c - psi_max) / sp[on])
    out[on] = total
    return out if np.ndim(sigma_over_lambda) else float(out[0])


def requirement_contour(surface: GcSurface, x: float, p: float | None = None) -> dict[float, float]:
    """Largest sigma/lambda keeping P(gc >= x) >= p, per theta.

    Linear interpolation between the last passing and first failing grid
    sigma. ``math.inf`` marks angles where no grid sigma fails.
    """
    k = surface.threshold_index(x)
    p = surface.config.probability_target if p is None else p
    sig = surface.sigmas
    out = {}
    for i, th in enumerate(surface.config.theta_grid):
        prob = surface.probability[i, :, k]
        below = np.flatnonzero(prob < p)
        if below.size == 0:
            out[th] = math.inf
            continue
        j = int(below[0])
        if j == 0:
            out[th] = float(sig[0])
            continue
        p0, p1 = prob[j - 1], prob[j]
        out[th] = float(sig[j - 1] + (p0 - p) / (p0 - p1) * (sig[j] - sig[j - 1]))
    return out


def worst_case_angle(contour: dict[float, float]) -> float:
    """Angle of the strictest requirement; the centre of any tied plateau."""
    thetas = np.asarray(list(contour.keys()))
    vals = np.asarray(list(contour.values()))
    m = vals.min()
    tied = thetas[vals <= m + 1e-12 * max(1.0, abs(m))]
    # circular mean keeps plateaus that straddle 0/360 intact
    ang = np.radians(tied)
    centre = math.degrees(math.atan2(np.sin(ang).mean(), np.cos(ang).mean())) % 360.0
    return 0.0 if math.isclose(centre, 360.0) else float(centre)


def analytic_crossing(theta: float, x: float, p: float, error_model: str = "shared") -> float:
    """sigma/lambda at which the unwrapped closed form equals ``p``."""
    psi_max = 2 * math.acos(math.sqrt(x))
    sigma_psi = psi_max / norm.ppf(0.5 + p / 2)
    per = float(phase_error_sigma(1.0, theta, error_model))
    return sigma_psi / per if per > 0 else math.inf


# -- export -----------------------------------------------------------------

def _fmt(v: float) -> str:
    return repr(float(v))


def write_surface_csv(surface: GcSurface, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in surface.rows():
            w.writerow([_fmt(v) for v in row])


def read_surface_csv(path) -> list[dict[str, float]]:
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in r.items()} for r in csv.DictReader(fh)]
