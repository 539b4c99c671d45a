"""Flat ``key = value`` run configuration with units carried in key names.

Example::

    # carrier and link
    fc_hz = 1.5e9
    snr_db = 30
    thresholds = 0.6, 0.7, 0.8, 0.9

Keys end in their unit (``_hz``, ``_s``, ``_m``, ``_db``, ``_deg``,
``_over_lambda``); values are bare numbers. Unknown keys, unit-suffixed
values and out-of-range numbers are rejected with line and column.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, fields, replace

from .channel import LinkBudget
from .constants import C
from .experiment import CORRECTION_MODES, ExperimentConfig
from .montecarlo import ERROR_MODELS, McConfig
from .ranging import METHODS
from .sync import MixerChainConfig
from .waveform import SyncToneParams, TtsfwParams

UNIT_SUFFIXES = ("_over_lambda", "_hz", "_db", "_deg", "_s", "_m")
_NUMBER_WITH_UNIT = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?\s*[A-Za-z%]+$")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0, key: str | None = None):
        self.line, self.column, self.key = line, column, key
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class RunConfig:
    # global
    seed: int | None = None
    output_dir: str = "."
    verbosity: int = 1
    workers: int = 1
    # ranging waveform and link
    f1_hz: float = 500e3
    bw_hz: float = 4e6
    n_pulses: int = 1
    pri_s: float = 1e-3
    duty: float = 0.5
    sample_rate_hz: float = 25e6
    snr_db: float = 30.0
    noise_bw_hz: float = 12.5e6
    distance_m: float = 1.5
    trials: int = 1000
    interp_points: int = 1000
    oversample: int = 16
    method: str = "spline1000"
    # frequency transfer
    fr1_hz: float = 4.30e9
    fr2_hz: float = 4.31e9
    lpf_cutoff_hz: float = 10.7e6
    baseband_fr1_hz: float = 12e6
    sync_sample_rate_hz: float = 100e6
    delta_d_m: float = 1.0
    # beamforming and Monte Carlo
    fc_hz: float = 1.5e9
    iterations: int = 50_000
    thresholds: tuple[float, ...] = (0.6, 0.7, 0.8, 0.9)
    theta_step_deg: float = 1.0
    sigma_step_over_lambda: float = 0.005
    sigma_max_over_lambda: float = 0.1
    probability_target: float = 0.9
    error_model: str = "shared"
    # experiment
    step_m: float = 0.02
    traverse_m: float | None = None
    cycles_per_position: int = 1500
    theta_deg: float = 90.0
    correction: str = "both"
    initial_separation_m: float = 1.5
    calibration_pulses: int = 64
    target_snr_db: float = math.inf

    @property
    def f_ref_hz(self) -> float:
        return self.fr2_hz - self.fr1_hz

    @property
    def traverse(self) -> float:
        return C / self.fc_hz if self.traverse_m is None else self.traverse_m

    def ttsfw(self) -> TtsfwParams:
        return TtsfwParams(self.f1_hz, self.bw_hz, self.n_pulses, self.pri_s, self.duty, self.sample_rate_hz)

    def budget(self) -> LinkBudget:
        return LinkBudget(self.snr_db, self.noise_bw_hz, self.duty * self.pri_s, self.n_pulses)

    def tones(self) -> SyncToneParams:
        return SyncToneParams(self.fr1_hz, self.fr2_hz, self.baseband_fr1_hz)

    def mixer(self) -> MixerChainConfig:
        return MixerChainConfig(self.f_ref_hz, self.lpf_cutoff_hz, (0.0, 0.0), self.baseband_fr1_hz)

    def mc_config(self) -> McConfig:
        n_theta = int(round(360.0 / self.theta_step_deg))
        n_sigma = int(math.floor(self.sigma_max_over_lambda / self.sigma_step_over_lambda + 1e-9))
        return McConfig(
            iterations=self.iterations,
            thresholds=self.thresholds,
            theta_grid=tuple(round(i * self.theta_step_deg, 10) for i in range(n_theta)),
            sigma_grid=tuple(round(i * self.sigma_step_over_lambda, 12) for i in range(n_sigma + 1)),
            f_c=self.fc_hz,
            probability_target=self.probability_target,
            master_seed=self.seed or 0,
            error_model=self.error_model,
            f_ref=self.f_ref_hz,
        )

    def experiment_config(self) -> ExperimentConfig:
        return ExperimentConfig(
            f_c=self.fc_hz,
            traverse=self.traverse,
            step=self.step_m,
            cycles_per_position=self.cycles_per_position,
            snr_db=self.snr_db,
            theta=self.theta_deg,
            correction=self.correction,
            seed=self.seed or 0,
            initial_separation=self.initial_separation_m,
            calibration_pulses=self.calibration_pulses,
            target_snr_db=self.target_snr_db,
            waveform=self.ttsfw(),
            tones=self.tones(),
        )


_FIELDS = {f.name: f for f in fields(RunConfig)}
_INT_KEYS = {"seed", "verbosity", "workers", "n_pulses", "trials", "interp_points", "oversample",
             "iterations", "cycles_per_position", "calibration_pulses"}
_STR_KEYS = {"output_dir", "method", "error_model", "correction"}
_CHOICES = {"method": METHODS, "error_model": ERROR_MODELS, "correction": CORRECTION_MODES}
_POSITIVE = {"f1_hz", "bw_hz", "pri_s", "sample_rate_hz", "noise_bw_hz", "fr1_hz", "fr2_hz",
             "lpf_cutoff_hz", "baseband_fr1_hz", "sync_sample_rate_hz", "fc_hz", "theta_step_deg",
             "sigma_step_over_lambda", "step_m", "traverse_m"}
_NON_NEGATIVE = {"distance_m", "delta_d_m", "sigma_max_over_lambda", "initial_separation_m", "seed"}
_AT_LEAST_ONE = {"workers", "n_pulses", "trials", "interp_points", "oversample", "iterations",
                 "cycles_per_position", "calibration_pulses"}


def _stem(key: str) -> tuple[str, str]:
    for suf in UNIT_SUFFIXES:
        if key.endswith(suf):
            return key[: -len(suf)], suf
    return key, ""


_STEMS = {_stem(k)[0]: k for k in _FIELDS}


def _convert(key: str, raw: str, line: int, col: int):
    def fail(msg):
        raise ConfigError(f"{key}: {msg}", line, col, key)

    if raw == "":
        fail("missing value")
    if key == "seed" and raw.lower() == "none":
        return None
    if key == "traverse_m" and raw.lower() in ("auto", "none"):
        return None
    if key in _STR_KEYS:
        if len(raw) >= 2 and raw[0] == raw[-1] == '"':
            raw = raw[1:-1]
        return raw
    if _NUMBER_WITH_UNIT.match(raw):
        unit = _stem(key)[1].lstrip("_") or "a dimensionless number"
        fail(f"unit mismatch: value {raw!r} carries a unit; this key takes a bare number in {unit}")
    if key == "thresholds":
        parts = [p.strip() for p in raw.split(",")]
        try:
            return tuple(float(p) for p in parts)
        except ValueError:
            fail(f"expected a comma-separated list of numbers, got {raw!r}")
    if key in _INT_KEYS:
        try:
            return int(raw)
        except ValueError:
            fail(f"expected an integer, got {raw!r}")
    try:
        return float(raw)
    except ValueError:
        fail(f"expected a number, got {raw!r}")


def _check_range(key: str, value, line: int, col: int) -> None:
    def fail(msg):
        raise ConfigError(f"{key} out of range: {msg}", line, col, key)

    if value is None:
        return
    if key in _CHOICES and value not in _CHOICES[key]:
        fail(f"{value!r} is not one of {_CHOICES[key]}")
    if isinstance(value, float) and math.isnan(value):
        fail("NaN is not allowed")
    if key in _POSITIVE and not value > 0:
        fail(f"must be > 0, got {value}")
    if key in _NON_NEGATIVE and value < 0:
        fail(f"must be >= 0, got {value}")
    if key in _AT_LEAST_ONE and value < 1:
        fail(f"must be >= 1, got {value}")
    if key == "duty" and not (0 < value <= 1):
        fail(f"must lie in (0, 1], got {value}")
    if key == "probability_target" and not (0 < value <= 1):
        fail(f"must lie in (0, 1], got {value}")
    if key == "verbosity" and not (0 <= value <= 3):
        fail(f"must lie in 0..3, got {value}")
    if key == "thresholds":
        if not value or any(not (0 < x <= 1) for x in value):
            fail("every threshold must lie in (0, 1]")
        if list(value) != sorted(value):
            fail("thresholds must be ascending")


def _cross_check(cfg: RunConfig, where: dict[str, tuple[int, int]]) -> None:
    def fail(key, msg):
        line, col = where.get(key, (0, 0))
        raise ConfigError(msg, line, col, key)

    if not cfg.fr2_hz > cfg.fr1_hz:
        fail("fr2_hz", "fr2_hz must exceed fr1_hz")
    if cfg.traverse < cfg.step_m:
        fail("traverse_m" if "traverse_m" in where else "step_m", "traverse must be at least one step")
    try:
        cfg.ttsfw()
    except ValueError as exc:
        fail("f1_hz" if "f1_hz" in where else "bw_hz", str(exc))
    try:
        cfg.mixer()
    except ValueError as exc:
        fail("lpf_cutoff_hz", str(exc))


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration; missing keys take their defaults."""
    values = {}
    where: dict[str, tuple[int, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0]
        if not body.strip():
            continue
        if "=" not in body:
            col = len(body) - len(body.lstrip()) + 1
            raise ConfigError("expected 'key = value'", lineno, col)
        key_part, raw_part = body.split("=", 1)
        key = key_part.strip()
        kcol = len(key_part) - len(key_part.lstrip()) + 1
        vcol = len(key_part) + 2 + (len(raw_part) - len(raw_part.lstrip()))
        if key not in _FIELDS:
            stem = _stem(key)[0]
            known = _STEMS.get(stem) or _STEMS.get(key.rsplit("_", 1)[0])
            if known is not None and known != key and _stem(known)[1]:
                raise ConfigError(
                    f"unit mismatch: {key!r} is not accepted; this quantity is configured as {known!r}",
                    lineno, kcol, key,
                )
            raise ConfigError(f"unknown key {key!r}", lineno, kcol, key)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno, kcol, key)
        value = _convert(key, raw_part.strip(), lineno, vcol)
        _check_range(key, value, lineno, vcol)
        values[key] = value
        where[key] = (lineno, kcol)
    cfg = RunConfig(**values)
    _cross_check(cfg, where)
    return cfg


def _format(key: str, value) -> str:
    if value is None:
        return "auto" if key == "traverse_m" else "none"
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        return f'"{value}"' if (value != value.strip() or "#" in value or not value) else value
    return str(value)


def dump_config(cfg: RunConfig) -> str:
    """Serialize every key; ``parse_config(dump_config(c)) == c``."""
    return "".join(f"{f.name} = {_format(f.name, getattr(cfg, f.name))}\n" for f in fields(cfg))


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def with_overrides(cfg: RunConfig, **kwargs) -> RunConfig:
    """Apply non-None overrides with the same validation as file values."""
    changes = {k: v for k, v in kwargs.items() if v is not None}
    for k, v in changes.items():
        if k not in _FIELDS:
            raise ConfigError(f"unknown key {k!r}", key=k)
        if k == "thresholds":
            v = tuple(float(x) for x in v)
            changes[k] = v
        _check_range(k, v, 0, 0)
    out = replace(cfg, **changes)
    _cross_check(out, {})
    return out
