"""Steering phases, phasor summation at the target, and coherent gain.

Transmissions are continuous-wave, so each node is a complex phasor and the
common exp(j 2 pi f_c t) factor is dropped. Phases are in radians, angles in
degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .constants import C


@dataclass(frozen=True)
class NodeEmission:
    """One node's contribution at the target.

    ``phase_correction`` is the phase the node applies to undo its estimated
    motion; ``residual_error`` is whatever phase error remains after that.
    """

    amplitude: float = 1.0
    channel_gain: complex = 1.0
    f_c: float = 1.5e9
    phase_correction: float = 0.0
    residual_error: float = 0.0
    initial_phase: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite")
        if not np.isfinite(complex(self.channel_gain)):
            raise ValueError("channel gain must be finite")

    @property
    def weight(self) -> float:
        """Magnitude this node contributes when perfectly aligned."""
        return abs(complex(self.channel_gain)) * abs(self.amplitude)

    def phasor(self, *, ideal: bool = False) -> complex:
        phase = self.initial_phase + (0.0 if ideal else self.residual_error)
        return complex(self.channel_gain) * self.amplitude * complex(np.exp(1j * phase))


@dataclass(frozen=True)
class GcResult:
    gc: float
    coherent_power: float
    ideal_power: float

    @property
    def gc_db(self) -> float:
        return 10.0 * math.log10(self.gc) if self.gc > 0 else -math.inf


def steering_phase(delta_d_T: float, theta: float, f_c: float) -> float:
    """Carrier phase change when a node moves ``delta_d_T`` along the baseline."""
    return -2.0 * math.pi * (f_c / C) * delta_d_T * math.sin(math.radians(theta))


def total_phase(dphi_c1: float, dphi_c2: float) -> float:
    return dphi_c1 + dphi_c2


def _check_frequencies(emissions: Sequence[NodeEmission]) -> None:
    if not emissions:
        raise ValueError("no emissions to sum")
    f0 = emissions[0].f_c
    for e in emissions[1:]:
        if not math.isclose(e.f_c, f0, rel_tol=1e-12, abs_tol=0.0):
            raise ValueError(f"carrier mismatch: {e.f_c} Hz vs {f0} Hz; nodes are not frequency locked")


def coherent_sum(emissions: Sequence[NodeEmission]) -> complex:
    """Steady-state phasor sum of frequency-locked emissions."""
    _check_frequencies(emissions)
    return sum((e.phasor() for e in emissions), 0j)


def coherent_gain(emissions: Sequence[NodeEmission]) -> GcResult:
    """Received power relative to the best power these emissions can deliver.

    The reference is the fully aligned sum (sum of |h_n| A_n)^2. With a
    calibrated common phase that equals the error-free sum, and it keeps gc
    within [0, 1] for any channel phases.
    """
    _check_frequencies(emissions)
    ideal = sum(e.weight for e in emissions) ** 2
    if ideal == 0:
        raise ValueError("all emission amplitudes are zero")
    power = abs(coherent_sum(emissions)) ** 2
    return GcResult(min(power / ideal, 1.0), power, ideal)


def calibrate(emissions: Sequence[NodeEmission]) -> list[NodeEmission]:
    """Set each initial phase so the error-free sum is fully aligned.

    Mirrors the one-time power-on calibration: channel phases are absorbed
    into phi0 so the calibration geometry yields gc = 1.
    """
    out = []
    for e in emissions:
        phi0 = -float(np.angle(complex(e.channel_gain)))
        out.append(
            NodeEmission(e.amplitude, e.channel_gain, e.f_c, e.phase_correction, e.residual_error, phi0)
        )
    return out


def two_node_gain(residual) -> np.ndarray:
    """Vectorized gc of two equal unit emissions with phase difference ``residual``.

    Evaluates the phasor sum directly rather than the cos^2 closed form so it
    exercises the same arithmetic as :func:`coherent_gain`.
    """
    psi = np.asarray(residual, dtype=float)
    s = 1.0 + np.exp(1j * psi)
    return np.minimum((s.real ** 2 + s.imag ** 2) / 4.0, 1.0)
