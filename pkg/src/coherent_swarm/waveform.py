"""Ranging and synchronization waveforms as sampled complex baseband.

Two signal families live here:

* the two-tone stepped frequency waveform (TTSFW) used for inter-node
  ranging, and
* the plain two-tone signal whose tone separation carries the frequency
  reference to secondary nodes.

RF tones in the GHz range are never sampled directly. A sync tone is
represented at a simulation-band frequency (``baseband_fr1``) while the
physical frequency is kept for phase bookkeeping.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_EPS = 1e-9

BINARY_MAGIC = b"CSWV"
BINARY_VERSION = 1
_HEADER = struct.Struct("<4sId")


class NyquistError(ValueError):
    """A requested tone does not fit below half the sample rate."""


@dataclass(frozen=True, eq=False)
class SampledSignal:
    """Uniformly sampled complex sequence.

    ``samples`` is stored as a read-only complex128 array so a signal can be
    shared between threads or processes without copying defensively.
    """

    samples: np.ndarray
    sample_rate: float
    t0: float = 0.0

    def __post_init__(self):
        arr = np.array(self.samples, dtype=np.complex128, copy=True).reshape(-1)
        if arr.size == 0:
            raise ValueError("samples must be non-empty")
        if not self.sample_rate > 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "sample_rate", float(self.sample_rate))
        object.__setattr__(self, "t0", float(self.t0))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) / self.sample_rate

    def energy(self) -> float:
        """Sum of |x|^2 / fs (signal energy in V^2 s for unit impedance)."""
        return float(np.sum(np.abs(self.samples) ** 2) / self.sample_rate)

    def with_samples(self, samples: np.ndarray) -> "SampledSignal":
        return SampledSignal(samples, self.sample_rate, self.t0)


@dataclass(frozen=True)
class TtsfwParams:
    """Parameters of the two-tone stepped frequency waveform.

    f1: lower tone of pulse 0 (Hz); bw: total bandwidth (Hz);
    n_pulses: pulses per frame; pri: pulse repetition interval (s);
    duty: active fraction of each PRI; sample_rate: Hz.
    """

    f1: float = 500e3
    bw: float = 4e6
    n_pulses: int = 1
    pri: float = 1e-3
    duty: float = 0.5
    sample_rate: float = 25e6

    def __post_init__(self):
        if self.n_pulses < 1 or int(self.n_pulses) != self.n_pulses:
            raise ValueError(f"n_pulses must be a positive integer, got {self.n_pulses}")
        if not self.bw > 0:
            raise ValueError("bw must be positive")
        if not (0 < self.duty <= 1):
            raise ValueError(f"duty must lie in (0, 1], got {self.duty}")
        if not self.pri > 0 or not self.sample_rate > 0:
            raise ValueError("pri and sample_rate must be positive")
        top = self.f2 + (self.n_pulses - 1) * self.step
        if top >= self.sample_rate / 2:
            raise NyquistError(
                f"highest tone {top:.6g} Hz is not below Nyquist {self.sample_rate / 2:.6g} Hz"
            )
        if self.f1 < -self.sample_rate / 2:
            # complex baseband also folds tones below -fs/2
            raise NyquistError(f"lowest tone {self.f1:.6g} Hz is below -{self.sample_rate / 2:.6g} Hz")

    @property
    def step(self) -> float:
        """Per-pulse frequency step BW/(2N-1)."""
        return self.bw / (2 * self.n_pulses - 1)

    @property
    def tone_spacing(self) -> float:
        """Separation of the two tones inside a pulse, N times the step."""
        return self.n_pulses * self.step

    @property
    def f2(self) -> float:
        return self.f1 + self.tone_spacing

    @property
    def pulse_time(self) -> float:
        """Active (non-zero) part of each PRI."""
        return self.duty * self.pri

    @property
    def frame_samples(self) -> int:
        return int(math.floor(self.n_pulses * self.pri * self.sample_rate + _EPS))

    @property
    def center_frequency(self) -> float:
        """Midpoint of the occupied band, which is also the spectral mean."""
        return self.f1 + self.bw / 2

    def tones(self) -> np.ndarray:
        """All tone frequencies, shape (n_pulses, 2)."""
        n = np.arange(self.n_pulses)[:, None]
        return np.array([self.f1, self.f2])[None, :] + n * self.step

    def pulse_bounds(self, n: int) -> tuple[int, int]:
        """Half-open sample index range [start, stop) of pulse ``n``."""
        fs = self.sample_rate
        start = math.ceil(n * self.pri * fs - _EPS)
        stop = math.ceil((n * self.pri + self.pulse_time) * fs - _EPS)
        return start, min(stop, self.frame_samples)


@dataclass(frozen=True)
class SyncToneParams:
    """Two-tone frequency-transfer signal.

    ``fr1``/``fr2`` are the physical RF tones. ``baseband_fr1`` is where the
    lower tone sits in the simulation band; the upper tone keeps the physical
    separation so the demodulated reference is exact.
    """

    fr1: float = 4.30e9
    fr2: float = 4.31e9
    baseband_fr1: float = 12e6

    def __post_init__(self):
        if not self.fr2 > self.fr1:
            raise ValueError(f"fr2 ({self.fr2}) must exceed fr1 ({self.fr1})")

    @property
    def f_ref(self) -> float:
        return self.fr2 - self.fr1

    @property
    def baseband_fr2(self) -> float:
        return self.baseband_fr1 + self.f_ref

    @property
    def lo_frequency(self) -> float:
        """Downconversion offset mapping physical tones onto the simulation band."""
        return self.fr1 - self.baseband_fr1


def generate_ttsfw(params: TtsfwParams, t0: float = 0.0) -> SampledSignal:
    """Synthesize one frame (N pulses) of the TTSFW.

    The frame holds ``floor(N * pri * fs)`` samples. Pulse ``n`` is non-zero
    for ``n*pri <= t < n*pri + duty*pri`` and carries tones ``f1 + n*step``
    and ``f2 + n*step``; the 1/N amplitude normalization is applied.
    """
    fs = params.sample_rate
    x = np.zeros(params.frame_samples, dtype=np.complex128)
    t = t0 + np.arange(x.size) / fs
    for n, (fa, fb) in enumerate(params.tones()):
        start, stop = params.pulse_bounds(n)
        tt = t[start:stop]
        x[start:stop] = np.exp(2j * np.pi * fa * tt) + np.exp(2j * np.pi * fb * tt)
    return SampledSignal(x / params.n_pulses, fs, t0)


def generate_sync_tones(
    params: SyncToneParams,
    duration: float,
    sample_rate: float,
    phase_offsets: tuple[float, float] = (0.0, 0.0),
) -> SampledSignal:
    """Two unit tones at the simulation-band frequencies with given phases (rad)."""
    lo, hi = params.baseband_fr1, params.baseband_fr2
    if max(abs(lo), abs(hi)) >= sample_rate / 2:
        raise NyquistError(
            f"sync tones {lo:.6g}/{hi:.6g} Hz exceed Nyquist {sample_rate / 2:.6g} Hz"
        )
    n = int(math.floor(duration * sample_rate + _EPS))
    if n < 1:
        raise ValueError("duration too short for a single sample")
    t = np.arange(n) / sample_rate
    p1, p2 = phase_offsets
    x = np.exp(1j * (2 * np.pi * lo * t + p1)) + np.exp(1j * (2 * np.pi * hi * t + p2))
    return SampledSignal(x, sample_rate)


def power_spectrum(sig: SampledSignal, nfft: int | None = None):
    """Return (frequencies in Hz, |X|^2) with frequencies in ascending order."""
    nfft = nfft or len(sig)
    spec = np.fft.fft(sig.samples, nfft)
    freqs = np.fft.fftfreq(nfft, d=1 / sig.sample_rate)
    order = np.argsort(freqs)
    return freqs[order], np.abs(spec[order]) ** 2


def moments_from_spectrum(freqs: np.ndarray, power: np.ndarray) -> tuple[float, float, float]:
    """Mean (Hz), second and third central moments in (rad/s)^2 and (rad/s)^3."""
    w = power / power.sum()
    mean = float(np.sum(freqs * w))
    dev = 2 * np.pi * (freqs - mean)
    return mean, float(np.sum(dev ** 2 * w)), float(np.sum(dev ** 3 * w))


def spectral_moments(sig: SampledSignal, nfft: int | None = None) -> tuple[float, float]:
    """Mean frequency (Hz) and second central moment in (rad/s)^2 of the power spectrum.

    Computed by direct summation over DFT bins; used as the numerical
    counterpart to the closed-form moment in :mod:`coherent_swarm.ranging`.
    """
    mean, second, _ = moments_from_spectrum(*power_spectrum(sig, nfft))
    return mean, second


def pulse_energy_spectrum(params: TtsfwParams) -> tuple[np.ndarray, np.ndarray]:
    """Sum over pulses of each pulse's own |DFT|^2 on its active window.

    Every pulse is cut to the shortest active length so all spectra share one
    bin grid. Tones that complete whole cycles in that window land on single
    bins, which avoids the leakage that wraps around Nyquist in a full-frame
    DFT and skews its moments.
    """
    frame = generate_ttsfw(params)
    bounds = [params.pulse_bounds(n) for n in range(params.n_pulses)]
    length = min(b - a for a, b in bounds)
    total = np.zeros(length)
    for a, _ in bounds:
        total += np.abs(np.fft.fft(frame.samples[a:a + length])) ** 2
    freqs = np.fft.fftfreq(length, d=1 / params.sample_rate)
    order = np.argsort(freqs)
    return freqs[order], total[order]


# -- export -----------------------------------------------------------------

def write_csv(sig: SampledSignal, path) -> None:
    """CSV with columns index, t_seconds, re, im (round-trip exact via repr)."""
    t = sig.times()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "t_seconds", "re", "im"])
        for i, (ti, z) in enumerate(zip(t, sig.samples)):
            w.writerow([i, repr(float(ti)), repr(float(z.real)), repr(float(z.imag))])


def read_csv(path) -> SampledSignal:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no samples")
    t = np.array([float(r["t_seconds"]) for r in rows])
    x = np.array([complex(float(r["re"]), float(r["im"])) for r in rows])
    fs = 1.0 / np.median(np.diff(t)) if t.size > 1 else 1.0
    return SampledSignal(x, fs, t[0])


def write_binary(sig: SampledSignal, path) -> None:
    """16-byte header (magic, u32 version, f64 rate) then LE float64 re/im pairs."""
    body = np.empty(2 * len(sig), dtype="<f8")
    body[0::2] = sig.samples.real
    body[1::2] = sig.samples.imag
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(BINARY_MAGIC, BINARY_VERSION, sig.sample_rate))
        fh.write(body.tobytes())


def read_binary(path) -> SampledSignal:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, fs = _HEADER.unpack_from(raw)
    if magic != BINARY_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != BINARY_VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if body.size % 2:
        raise ValueError(f"{path}: odd number of float64 values")
    return SampledSignal(body[0::2] + 1j * body[1::2], fs)
