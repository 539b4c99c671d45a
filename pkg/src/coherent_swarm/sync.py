"""Wireless frequency transfer by self-mixing a two-tone signal.

The primary radiates two tones separated by the reference frequency. The
secondary splits the received pair into the RF and LO ports of a mixer and
keeps only the difference product, which recovers the reference with a
phase that moves as the node separation changes. The locked carrier inherits
that phase scaled by f_c/f_ref.

All phases are in radians and are accumulated unwrapped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .beamform import steering_phase
from .channel import propagate
from .constants import C
from .waveform import SampledSignal, SyncToneParams, generate_sync_tones


@dataclass(frozen=True)
class MixerChainConfig:
    """Self-mixing receiver settings.

    ``baseband_fr1`` is the simulation-band position of the lower tone; every
    mixer spur above the reference sits at or beyond twice that frequency.
    ``cable_mismatch`` adds (c1, c2) radians to the LO-port copies of the
    lower and upper tones.
    """

    f_ref: float = 10e6
    lpf_cutoff: float = 10.7e6
    cable_mismatch: tuple[float, float] = (0.0, 0.0)
    baseband_fr1: float = 12e6

    def __post_init__(self):
        if not self.f_ref > 0:
            raise ValueError("f_ref must be positive")
        if not self.lpf_cutoff > self.f_ref:
            raise ValueError(
                f"lpf_cutoff ({self.lpf_cutoff:g} Hz) must exceed f_ref ({self.f_ref:g} Hz)"
            )
        if not self.lpf_cutoff < 2 * self.baseband_fr1:
            raise ValueError(
                f"lpf_cutoff ({self.lpf_cutoff:g} Hz) must stay below the lowest spur "
                f"at 2*baseband_fr1 = {2 * self.baseband_fr1:g} Hz"
            )


@dataclass(frozen=True)
class PhaseState:
    """Phase bookkeeping of one secondary node relative to calibration.

    phi1/phi2 are the tone phases at the RF port, phi3/phi4 the same tones at
    the LO port, and phi5 the phase of the recovered reference.
    """

    phi1: float
    phi2: float
    phi3: float
    phi4: float
    phi5: float
    dphi_ref: float
    dphi_c1: float
    dphi_c2: float
    dphi_c: float

    @classmethod
    def from_motion(
        cls,
        delta_d_IN: float,
        delta_d_T: float,
        theta: float,
        f_c: float,
        tones: SyncToneParams | None = None,
        cable_mismatch: tuple[float, float] = (0.0, 0.0),
    ) -> "PhaseState":
        tones = tones or SyncToneParams()
        c1, c2 = cable_mismatch
        phi1, phi2 = tone_phase_shifts(delta_d_IN, tones.fr1, tones.fr2)
        dphi_ref = ref_phase_shift(delta_d_IN, tones.f_ref)
        dphi_c1 = carrier_phase_shift_sync(dphi_ref, f_c, tones.f_ref)
        dphi_c2 = steering_phase(delta_d_T, theta, f_c)
        return cls(
            phi1=phi1,
            phi2=phi2,
            phi3=phi1 + c1,
            phi4=phi2 + c2,
            phi5=phi2 - phi1 + 0.5 * (c2 - c1),
            dphi_ref=dphi_ref,
            dphi_c1=dphi_c1,
            dphi_c2=dphi_c2,
            dphi_c=dphi_c1 + dphi_c2,
        )


# -- displacement to phase --------------------------------------------------

def ref_phase_shift(delta_d_IN: float, f_ref: float) -> float:
    """Phase change of the recovered reference; negative as nodes separate."""
    return -2.0 * math.pi * f_ref * delta_d_IN / C


def tone_phase_shifts(delta_d_IN: float, fr1: float, fr2: float) -> tuple[float, float]:
    """Per-tone phase changes over an extra path of ``delta_d_IN`` metres."""
    k = -2.0 * math.pi * delta_d_IN / C
    return k * fr1, k * fr2


def carrier_phase_shift_sync(dphi_ref: float, f_c: float, f_ref: float) -> float:
    """Carrier phase change of a PLL locked to the shifted reference."""
    if not f_ref > 0:
        raise ValueError("f_ref must be positive")
    return (f_c / f_ref) * dphi_ref


# -- signal-level mixer -----------------------------------------------------

def _apply_cable_mismatch(lo: SampledSignal, cfg: MixerChainConfig) -> np.ndarray:
    c1, c2 = cfg.cable_mismatch
    x = lo.samples
    if c1 == 0 and c2 == 0:
        return x
    spec = sfft.fft(x)
    f = sfft.fftfreq(x.size, 1.0 / lo.sample_rate)
    split = cfg.baseband_fr1 + 0.5 * cfg.f_ref
    spec = spec * np.where(f < split, np.exp(1j * c1), np.exp(1j * c2))
    return sfft.ifft(spec)


def lowpass(x: np.ndarray, sample_rate: float, cutoff: float, *, block_dc: bool = True) -> np.ndarray:
    """Ideal brick-wall low-pass of a real sequence."""
    spec = sfft.rfft(x)
    f = sfft.rfftfreq(x.size, 1.0 / sample_rate)
    spec[f > cutoff] = 0.0
    if block_dc:
        spec[0] = 0.0
    return sfft.irfft(spec, x.size)


def self_mix(rf: SampledSignal, lo: SampledSignal, cfg: MixerChainConfig | None = None) -> SampledSignal:
    """Multiply the RF and LO port voltages and keep the difference product.

    Port voltages are the imaginary parts of the complex two-tone signals,
    so a tone e^{j(wt+phi)} drives the port with sin(wt+phi). The product is
    low-passed at ``cfg.lpf_cutoff`` with DC removed (the IF chain is AC
    coupled). With unit tones and no cable mismatch the output is
    cos(2 pi f_ref t + phi2 - phi1).
    """
    cfg = cfg or MixerChainConfig()
    if not math.isclose(rf.sample_rate, lo.sample_rate, rel_tol=1e-12):
        raise ValueError(f"sample-rate mismatch: {rf.sample_rate} vs {lo.sample_rate}")
    if len(rf) != len(lo):
        raise ValueError("RF and LO inputs must have equal length")
    if cfg.f_ref >= cfg.lpf_cutoff:
        raise ValueError("f_ref must lie below the low-pass cutoff")
    v_rf = rf.samples.imag
    v_lo = _apply_cable_mismatch(lo, cfg).imag
    out = lowpass(v_rf * v_lo, rf.sample_rate, cfg.lpf_cutoff)
    return SampledSignal(out, rf.sample_rate, rf.t0)


def tone_phase(sig: SampledSignal, freq: float) -> tuple[float, float]:
    """Phase (rad) and amplitude of the real tone at ``freq`` by DFT projection.

    Exact when the record holds an integer number of cycles.
    """
    x = sig.samples.real
    t = np.arange(x.size) / sig.sample_rate
    z = 2.0 * np.mean(x * np.exp(-2j * np.pi * freq * t))
    return float(np.angle(z)), float(abs(z))


# -- end-to-end link --------------------------------------------------------

@dataclass(frozen=True)
class SyncLink:
    """Two-tone transmission over a line-of-sight path into the self-mixer.

    The record length defaults to 10 us so both simulation-band tones and the
    reference complete whole cycles at 100 MHz sampling.
    """

    tones: SyncToneParams = SyncToneParams()
    mixer: MixerChainConfig = MixerChainConfig()
    sample_rate: float = 100e6
    duration: float = 10e-6
    snr_db: float = math.inf

    def __post_init__(self):
        if not math.isclose(self.tones.f_ref, self.mixer.f_ref, rel_tol=1e-12):
            raise ValueError("tone separation and mixer f_ref disagree")
        if not math.isclose(self.tones.baseband_fr1, self.mixer.baseband_fr1, rel_tol=1e-12):
            raise ValueError("tone and mixer simulation-band positions disagree")

    def received(self, distance: float, seed=None) -> SampledSignal:
        """Simulation-band copy of the tones after ``distance`` metres.

        The channel delays the simulation-band tones; the extra rotation by
        the band offset restores the phase each physical RF tone would have.
        """
        tx = generate_sync_tones(self.tones, self.duration, self.sample_rate)
        rx = propagate(tx, distance, self.snr_db, seed)
        rot = np.exp(-2j * np.pi * self.tones.lo_frequency * distance / C)
        return rx.with_samples(rx.samples * rot)

    def if_output(self, distance: float, seed=None) -> SampledSignal:
        rx = self.received(distance, seed)
        return self_mix(rx, rx, self.mixer)

    def if_phase(self, distance: float, seed=None) -> tuple[float, float]:
        """(phase rad, amplitude) of the recovered reference."""
        return tone_phase(self.if_output(distance, seed), self.tones.f_ref)

    def measured_shift(self, d0: float, delta_d: float, seed=None) -> float:
        """Reference phase change when the separation grows from d0 by ``delta_d``.

        Wrapped to (-pi, pi]; feed successive values through PhaseTracker for
        long excursions.
        """
        s0 = None if seed is None else np.random.SeedSequence(seed).spawn(2)
        p0, _ = self.if_phase(d0, None if s0 is None else s0[0])
        p1, _ = self.if_phase(d0 + delta_d, None if s0 is None else s0[1])
        return float(np.angle(np.exp(1j * (p1 - p0))))


class PhaseTracker:
    """Incremental unwrapping of a wrapped phase sequence."""

    def __init__(self, initial: float = 0.0):
        self._last = float(initial)
        self._total = float(initial)

    @property
    def value(self) -> float:
        return self._total

    def update(self, wrapped: float) -> float:
        step = math.remainder(wrapped - self._last, 2 * math.pi)
        self._last = float(wrapped)
        self._total += step
        return self._total


@dataclass(frozen=True)
class PllModel:
    """Binary-lock model of the secondary's carrier synthesizer.

    Locked when the recovered reference amplitude reaches ``lock_threshold``
    (unit tones give amplitude 1). Locked, the carrier phase follows the
    reference scaled to f_c plus optional Gaussian jitter. Unlocked, it drifts
    at ``free_run_offset`` fractional frequency error.
    """

    lock_threshold: float = 0.1
    free_run_offset: float = 1e-6
    jitter_std: float = 0.0

    def is_locked(self, if_amplitude: float) -> bool:
        return if_amplitude >= self.lock_threshold

    def frequency_offset(self, if_amplitude: float, f_c: float) -> float:
        """Carrier frequency error in Hz."""
        return 0.0 if self.is_locked(if_amplitude) else self.free_run_offset * f_c

    def carrier_phase(
        self,
        dphi_ref: float,
        f_c: float,
        f_ref: float,
        if_amplitude: float,
        elapsed: float = 0.0,
        rng: np.random.Generator | None = None,
    ) -> float:
        if self.is_locked(if_amplitude):
            phase = carrier_phase_shift_sync(dphi_ref, f_c, f_ref)
            if self.jitter_std > 0:
                rng = rng if rng is not None else np.random.default_rng()
                phase += float(rng.normal(0.0, self.jitter_std))
            return phase
        return 2.0 * math.pi * self.frequency_offset(if_amplitude, f_c) * elapsed
