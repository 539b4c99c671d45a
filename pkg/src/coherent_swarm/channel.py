"""One-way cooperative link: geometry, delay, and complex AWGN.

The ranging frame is treated as one period of a repeating pulse train, so
delays are applied circularly over the frame. That matches what a receiver
capturing one PRI of a steady-state train sees, and it lets fractional
delays be exact frequency-domain phase ramps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import C
from .waveform import SampledSignal, TtsfwParams

_FRAC_TOL = 1e-9


@dataclass(frozen=True)
class NodeGeometry:
    """Primary/secondary layout. Distances in metres, ``theta`` in degrees."""

    d_IN: float
    d_T: float
    theta: float = 90.0
    delta_d_IN: tuple[float, ...] = ()
    delta_d_T: tuple[float, ...] = ()
    co_moving: bool = True

    def __post_init__(self):
        if self.d_IN < 0 or self.d_T < 0:
            raise ValueError("node separations must be non-negative")
        if len(self.delta_d_IN) != len(self.delta_d_T):
            raise ValueError("displacement histories must have equal length")
        if self.co_moving and not np.allclose(self.delta_d_IN, self.delta_d_T, rtol=0, atol=1e-15):
            raise ValueError("co-moving geometry requires delta_d_IN == delta_d_T")

    def moved(self, delta_in: float, delta_t: float | None = None) -> "NodeGeometry":
        """Geometry after the secondary moves by ``delta_in`` along the sync path.

        Displacements are cumulative relative to the calibration geometry.
        """
        delta_t = delta_in if delta_t is None else delta_t
        return NodeGeometry(
            d_IN=self.d_IN,
            d_T=self.d_T,
            theta=self.theta,
            delta_d_IN=self.delta_d_IN + (float(delta_in),),
            delta_d_T=self.delta_d_T + (float(delta_t),),
            co_moving=self.co_moving,
        )

    @property
    def current_d_IN(self) -> float:
        return self.d_IN + (self.delta_d_IN[-1] if self.delta_d_IN else 0.0)


@dataclass(frozen=True)
class LinkBudget:
    """SNR bookkeeping for the ranging link.

    ``snr_db`` is the pre-processing SNR measured in ``noise_bw``. The
    matched-filter gain is N*T*BW_n and E/N0 is that gain applied to the
    linear SNR.
    """

    snr_db: float = 30.0
    noise_bw: float = 12.5e6
    pulse_time: float = 0.5e-3
    pulse_count: int = 1

    @classmethod
    def for_waveform(cls, params: TtsfwParams, snr_db: float = 30.0, noise_bw: float | None = None):
        """Budget for ``params`` with the unfiltered noise bandwidth fs/2 by default."""
        return cls(
            snr_db=snr_db,
            noise_bw=params.sample_rate / 2 if noise_bw is None else noise_bw,
            pulse_time=params.pulse_time,
            pulse_count=params.n_pulses,
        )

    @property
    def snr_linear(self) -> float:
        return 10.0 ** (self.snr_db / 10.0)

    @property
    def processing_gain(self) -> float:
        return self.pulse_count * self.pulse_time * self.noise_bw

    @property
    def processing_gain_db(self) -> float:
        return 10.0 * math.log10(self.processing_gain)

    @property
    def post_snr_linear(self) -> float:
        return self.snr_linear * self.processing_gain

    @property
    def post_snr_db(self) -> float:
        return 10.0 * math.log10(self.post_snr_linear)

    def sample_snr_db(self, sample_rate: float) -> float:
        """Per-sample complex SNR that reproduces this budget's E/N0.

        Complex samples at ``sample_rate`` see noise over the full rate,
        whereas ``snr_db`` is quoted over ``noise_bw``.
        """
        return self.snr_db + 10.0 * math.log10(self.noise_bw / sample_rate)


def round_trip_delay(d_IN: float) -> float:
    """Secondary -> primary repeater -> secondary flight time (s), zero turnaround."""
    if d_IN < 0:
        raise ValueError("d_IN must be non-negative")
    return 2.0 * d_IN / C


def fractional_delay(x: np.ndarray, delay_samples: float) -> np.ndarray:
    """Circularly delay ``x`` by a possibly fractional, possibly negative amount.

    The integer part is an index roll. A non-zero remainder is applied as a
    linear phase across the DFT bins.
    """
    x = np.asarray(x, dtype=np.complex128)
    whole = math.floor(delay_samples + 0.5)
    frac = delay_samples - whole
    y = np.roll(x, whole)
    if abs(frac) > _FRAC_TOL:
        f = np.fft.fftfreq(x.size)
        y = np.fft.ifft(np.fft.fft(y) * np.exp(-2j * np.pi * f * frac))
    return y


def active_power(x: np.ndarray) -> float:
    """Mean power over the non-zero (active) samples of ``x``."""
    mag2 = np.abs(np.asarray(x)) ** 2
    on = mag2 > 0
    if not on.any():
        return 0.0
    return float(mag2[on].mean())


def complex_noise(n: int, power: float, rng: np.random.Generator) -> np.ndarray:
    """Circularly-symmetric Gaussian noise with E|w|^2 = ``power``."""
    scale = math.sqrt(power / 2.0)
    return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def propagate(sig: SampledSignal, distance: float, snr_db: float, rng_seed=None) -> SampledSignal:
    """Delay ``sig`` by distance/c, keep unit gain, and add complex AWGN.

    Noise power is set from the input's power over its active samples so the
    per-sample SNR over the pulse equals ``snr_db``. ``snr_db=inf`` disables
    noise. ``rng_seed`` may be an int, a ``SeedSequence`` or a ``Generator``.
    """
    if distance < 0:
        raise ValueError("distance must be non-negative")
    y = fractional_delay(sig.samples, distance / C * sig.sample_rate)
    if math.isfinite(snr_db):
        rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
        p = active_power(sig.samples)
        y = y + complex_noise(y.size, p / 10.0 ** (snr_db / 10.0), rng)
    return sig.with_samples(y)
