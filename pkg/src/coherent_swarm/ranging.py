"""Inter-node range estimation and its Cramer-Rao accuracy budget.

Ranging is a round trip: the secondary transmits a TTSFW frame, the primary
repeats it, and the secondary matched-filters the echo against its own
copy. The delay of the correlation peak maps to distance as c*delay/2.

The matched filter for a two-tone pulse has a comb of near-equal lobes one
beat period (fs/BW samples) apart. Lobes are compared on the oversampled
correlation, because raw integer-lag heights differ more by sampling phase
than by the pulse-overlap taper that actually marks the mainlobe.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft
from scipy.interpolate import CubicSpline
from scipy.ndimage import uniform_filter1d
from scipy.optimize import minimize_scalar
from scipy.signal import argrelmax

from .channel import LinkBudget, propagate
from .constants import C
from .waveform import SampledSignal, TtsfwParams, generate_ttsfw

METHODS = ("spline1000", "parabolic", "fft_zoom")
DIRECT_LIMIT = 4096


class RangingError(ValueError):
    """Peak refinement could not produce a trustworthy delay."""


@dataclass(frozen=True)
class RangeEstimate:
    distance: float
    delay: float
    peak_value: float
    method: str
    lag: float = 0.0  # samples


@dataclass(frozen=True)
class CrlbReport:
    zeta_f_sq: float
    sigma_tau: float
    sigma_x: float
    e_n0_linear: float

    @property
    def sigma_tau_sq(self) -> float:
        return self.sigma_tau ** 2

    def rows(self) -> list[tuple[str, float, str]]:
        return [
            ("zeta_f_sq", self.zeta_f_sq, "Hz^2"),
            ("e_n0_linear", self.e_n0_linear, ""),
            ("e_n0_db", 10 * math.log10(self.e_n0_linear), "dB"),
            ("sigma_tau_sq", self.sigma_tau_sq, "s^2"),
            ("sigma_tau", self.sigma_tau, "s"),
            ("sigma_x", self.sigma_x, "m"),
        ]


# -- bounds -----------------------------------------------------------------

def second_moment(params: TtsfwParams) -> float:
    """Closed-form second spectral moment of the TTSFW (rad^2/s^2, quoted as Hz^2).

    pi^2 (BW/(2-1/N))^2 + (2 pi BW)^2 / (N (4N^2+4N+1)) * sum_{n<N} n^2.
    For N = 1 this is pi^2 BW^2.
    """
    n = params.n_pulses
    bw = params.bw
    sum_n2 = (n - 1) * n * (2 * n - 1) / 6
    return (math.pi * bw / (2 - 1 / n)) ** 2 + (2 * math.pi * bw) ** 2 / (n * (4 * n * n + 4 * n + 1)) * sum_n2


def tone_second_moment(params: TtsfwParams) -> float:
    """Central second moment of the equal-power tone set, in (rad/s)^2.

    Agrees with :func:`second_moment` for N = 1. For N > 1 the closed form
    above uses a non-central pulse-offset term and differs from this value.
    """
    f = params.tones().ravel()
    return float(np.mean((2 * np.pi * (f - f.mean())) ** 2))


def crlb(params: TtsfwParams, budget: LinkBudget, zeta_f_sq: float | None = None) -> CrlbReport:
    """Delay and position bounds for a round-trip measurement.

    The mean-frequency term drops out because the TTSFW spectrum is symmetric.
    """
    e_n0 = budget.post_snr_linear
    if not (math.isfinite(e_n0) and e_n0 > 0):
        raise ValueError(f"E/N0 must be positive and finite, got {e_n0}")
    if budget.snr_linear <= 0:
        raise ValueError("SNR must be positive")
    zeta = second_moment(params) if zeta_f_sq is None else zeta_f_sq
    sigma_tau = math.sqrt(1.0 / (2.0 * e_n0 * zeta))
    return CrlbReport(zeta, sigma_tau, C * sigma_tau / 2.0, e_n0)


def max_coherent_frequency(sigma_x: float) -> float:
    """Highest carrier meeting the 0.03 wavelength ranging requirement."""
    if not sigma_x > 0:
        raise ValueError("sigma_x must be positive")
    return 0.03 * C / sigma_x


# -- matched filter ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Correlation:
    """Matched-filter output.

    ``lags`` are in samples (fractional when ``oversample > 1``). ``spectrum``
    is the DFT of the periodic correlation with lag k stored at bin k mod
    ``len(spectrum)``; it allows exact band-limited evaluation at any lag.
    """

    lags: np.ndarray
    values: np.ndarray
    sample_rate: float
    oversample: int = 1
    circular: bool = False
    spectrum: np.ndarray | None = field(default=None, repr=False)

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)

    def __len__(self) -> int:
        return self.values.size

    def __iter__(self):
        return iter(zip(self.lags.tolist(), self.magnitude.tolist()))

    def evaluate(self, lags) -> np.ndarray:
        """Band-limited (trigonometric) interpolation of the correlation."""
        if self.spectrum is None:
            raise ValueError("correlation was computed without a spectrum")
        return _trig_eval(self.spectrum, np.atleast_1d(np.asarray(lags, dtype=float)))


def _signed_bins(m: int) -> np.ndarray:
    return np.fft.fftfreq(m) * m


def _trig_eval(spec: np.ndarray, taus: np.ndarray) -> np.ndarray:
    m = spec.size
    k = _signed_bins(m)
    w = spec.copy()
    if m % 2 == 0:
        # split the Nyquist bin so the interpolant is symmetric
        w[m // 2] *= 0.5
        k = np.append(k, m // 2)
        w = np.append(w, w[m // 2])
    return np.exp(2j * np.pi * np.outer(taus, k) / m) @ w / m


def _upsample(spec: np.ndarray, factor: int) -> np.ndarray:
    """Periodic correlation sampled ``factor`` times per lag, from its DFT."""
    m = spec.size
    if factor == 1:
        return sfft.ifft(spec)
    z = np.zeros(m * factor, dtype=np.complex128)
    half = m // 2
    if m % 2 == 0:
        z[:half] = spec[:half]
        z[-(half - 1):] = spec[half + 1:] if half > 1 else z[-(half - 1):]
        z[half] += 0.5 * spec[half]
        z[-half] += 0.5 * spec[half]
    else:
        z[: half + 1] = spec[: half + 1]
        z[-half:] = spec[half + 1:]
    return sfft.ifft(z) * factor


def matched_filter(
    rx: SampledSignal,
    ref: SampledSignal,
    *,
    circular: bool = False,
    oversample: int = 1,
) -> Correlation:
    """Cross-correlate ``rx`` against ``ref``: c[k] = sum_n rx[n] conj(ref[n-k]).

    Linear mode returns lags ``-(len(ref)-1) .. len(rx)-1``. Circular mode
    treats both as one period of a repeating frame and returns lags centred
    on zero. Long inputs are correlated via FFT.
    """
    if not math.isclose(rx.sample_rate, ref.sample_rate, rel_tol=1e-12):
        raise ValueError(f"sample-rate mismatch: {rx.sample_rate} vs {ref.sample_rate}")
    oversample = int(oversample)
    if oversample < 1:
        raise ValueError("oversample must be >= 1")
    x, r = rx.samples, ref.samples

    if circular:
        if r.size > x.size:
            raise ValueError("circular correlation needs len(ref) <= len(rx)")
        m = x.size
        spec = sfft.fft(x) * np.conj(sfft.fft(r, m))
        up = _upsample(spec, oversample)
        shift = (m // 2) * oversample
        values = np.roll(up, shift)
        lags = (np.arange(values.size) - shift) / oversample
        return Correlation(lags, values, rx.sample_rate, oversample, True, spec)

    n = x.size + r.size - 1
    if n <= DIRECT_LIMIT and oversample == 1:
        values = np.correlate(x, r, mode="full")
        lags = np.arange(-(r.size - 1), x.size).astype(float)
        nf = n
        spec = sfft.fft(np.roll(np.concatenate([values, np.zeros(nf - n)]), -(r.size - 1)))
        return Correlation(lags, values, rx.sample_rate, 1, False, spec)

    nf = 1 << (n - 1).bit_length()
    spec = sfft.fft(x, nf) * np.conj(sfft.fft(r, nf))
    up = _upsample(spec, oversample)
    lo = (r.size - 1) * oversample
    hi = (x.size - 1) * oversample
    values = np.concatenate([up[up.size - lo:], up[: hi + 1]]) if lo else up[: hi + 1].copy()
    lags = np.arange(-lo, hi + 1) / oversample
    return Correlation(lags, values, rx.sample_rate, oversample, False, spec)


# -- peak refinement --------------------------------------------------------

def _beat_from_peaks(corr: Correlation, mag: np.ndarray) -> float:
    """Spacing (samples) of the fine lobes around the global maximum."""
    j0 = int(np.argmax(mag))
    reach = 40 * corr.oversample
    lo, hi = max(j0 - reach, 0), min(j0 + reach + 1, mag.size)
    pk = argrelmax(mag[lo:hi])[0]
    if pk.size < 2:
        return math.inf
    return float(np.median(np.diff(corr.lags[lo:hi][pk])))


def _refine_spline(lags, mag, win, points, polish):
    cs = CubicSpline(lags[win], mag[win], bc_type="natural")
    xx = np.linspace(lags[win[0]], lags[win[-1]], points)
    yy = cs(xx)
    i = int(np.argmax(yy))
    x = xx[i]
    if polish:
        a, b = xx[max(i - 1, 0)], xx[min(i + 1, points - 1)]
        roots = cs.derivative().roots(extrapolate=False)
        roots = roots[(roots >= a) & (roots <= b)]
        if roots.size:
            x = roots[int(np.argmax(cs(roots)))]
    return float(x), float(cs(x))


def _refine_parabolic(lags, mag, j):
    ym, y0, yp = mag[j - 1], mag[j], mag[j + 1]
    den = ym - 2 * y0 + yp
    if den >= 0:
        raise RangingError("flat or degenerate peak")
    p = 0.5 * (ym - yp) / den
    step = lags[j + 1] - lags[j]
    return float(lags[j] + p * step), float(y0 - 0.25 * (ym - yp) * p)


def _refine_zoom(corr, j):
    step = corr.lags[1] - corr.lags[0]
    a, b = corr.lags[j] - step, corr.lags[j] + step
    res = minimize_scalar(
        lambda t: -abs(corr.evaluate(t)[0]), bounds=(a, b), method="bounded",
        options={"xatol": 1e-12},
    )
    return float(res.x), float(-res.fun)


def estimate_delay(
    corr: Correlation,
    method: str = "spline1000",
    interp_points: int = 1000,
    *,
    expected_lag: float | None = None,
    search_halfwidth: float | None = None,
    beat_period: float | None = None,
    half_window: int = 3,
    polish: bool = True,
    round_trip: bool = True,
) -> RangeEstimate:
    """Sub-sample delay of the correlation mainlobe.

    Candidate lobes are the local maxima of |c| within ``search_halfwidth``
    of ``expected_lag`` when a prior is known, otherwise within four beat
    periods of the peak of the beat-smoothed envelope. Candidates are
    ranked by parabolic-interpolated height and only the tallest is refined.

    ``spline1000`` fits a natural cubic spline over +/- ``half_window``
    samples around the candidate, resamples it at ``interp_points`` points and
    (if ``polish``) moves to the spline's exact stationary point.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    mag = corr.magnitude
    if not np.any(mag > 0):
        raise RangingError("correlation is identically zero")
    u = corr.oversample
    lags = corr.lags
    beat = _beat_from_peaks(corr, mag) if beat_period is None else float(beat_period)

    if expected_lag is not None:
        hw = search_halfwidth if search_halfwidth is not None else (beat / 2 if math.isfinite(beat) else half_window)
        centre = float(expected_lag)
    else:
        stride = corr.oversample
        coarse = mag[::stride]
        size = max(1, int(round(beat))) if math.isfinite(beat) else 1
        env = uniform_filter1d(coarse, size=size, mode="wrap" if corr.circular else "constant")
        centre = float(lags[::stride][int(np.argmax(env))])
        hw = search_halfwidth if search_halfwidth is not None else (4 * beat if math.isfinite(beat) else half_window)

    sel = np.flatnonzero(np.abs(lags - centre) <= hw)
    if sel.size == 0:
        raise RangingError("search window lies outside the correlation")
    lo, hi = sel[0], sel[-1]
    cand = argrelmax(mag[max(lo - 1, 0): hi + 2])[0] + max(lo - 1, 0)
    cand = cand[(cand >= lo) & (cand <= hi)]
    if cand.size == 0:
        raise RangingError("no local peak inside the search window")

    reach = half_window * u
    usable = [int(j) for j in cand if j - reach >= 0 and j + reach < mag.size and j >= 1 and j + 1 < mag.size]
    if not usable:
        raise RangingError("peak too close to the correlation edge")
    # rank lobes by a 3-point parabolic height, refine only the winner
    heights = []
    for j in usable:
        ym, y0, yp = mag[j - 1], mag[j], mag[j + 1]
        den = ym - 2 * y0 + yp
        heights.append(y0 - (ym - yp) ** 2 / (8 * den) if den < 0 else y0)
    j = usable[int(np.argmax(heights))]
    win = np.arange(j - reach, j + reach + 1)
    if np.ptp(mag[win]) <= 1e-12 * mag[j]:
        raise RangingError("flat or degenerate peak")
    if method == "spline1000":
        best = _refine_spline(lags, mag, win, interp_points, polish)
    elif method == "parabolic":
        best = _refine_parabolic(lags, mag, j)
    else:
        best = _refine_zoom(corr, j)

    lag, height = best
    delay = lag / corr.sample_rate
    distance = C * delay / 2.0 if round_trip else C * delay
    return RangeEstimate(distance, delay, height, method, lag)


# -- end-to-end ranging -----------------------------------------------------

def range_once(
    frame: SampledSignal,
    d_IN: float,
    sample_snr_db: float,
    seed=None,
    *,
    method: str = "spline1000",
    oversample: int = 16,
    interp_points: int = 1000,
    expected_lag: float | None = None,
    beat_period: float | None = None,
) -> RangeEstimate:
    """One repeater-path ranging measurement at true separation ``d_IN``."""
    echo = propagate(frame, 2.0 * d_IN, sample_snr_db, seed)
    corr = matched_filter(echo, frame, circular=True, oversample=oversample)
    return estimate_delay(
        corr, method, interp_points, expected_lag=expected_lag, beat_period=beat_period
    )


@dataclass(frozen=True, eq=False)
class EnsembleResult:
    estimates: np.ndarray
    true_distance: float
    bound: CrlbReport

    @property
    def errors(self) -> np.ndarray:
        return self.estimates - self.true_distance

    @property
    def sigma(self) -> float:
        return float(np.std(self.estimates, ddof=1))

    @property
    def bias(self) -> float:
        return float(np.mean(self.errors))

    @property
    def efficiency_ratio(self) -> float:
        """Empirical sigma over the CRLB sigma_x (1.0 is an efficient estimator)."""
        return self.sigma / self.bound.sigma_x


def _ensemble_chunk(args):
    params, d_IN, snr, seed, idx, method, oversample = args
    frame = generate_ttsfw(params)
    beat = params.sample_rate / params.bw
    out = np.empty(len(idx))
    for k, i in enumerate(idx):
        ss = np.random.SeedSequence(seed, spawn_key=(int(i),))
        out[k] = range_once(
            frame, d_IN, snr, np.random.default_rng(ss),
            method=method, oversample=oversample, beat_period=beat,
        ).distance
    return out


def ranging_ensemble(
    params: TtsfwParams,
    budget: LinkBudget,
    d_IN: float = 1.5,
    trials: int = 1000,
    seed: int = 0,
    *,
    method: str = "spline1000",
    oversample: int = 16,
    workers: int = 1,
) -> EnsembleResult:
    """Repeat :func:`range_once` with independent noise per trial.

    Trial ``i`` draws its noise from ``SeedSequence(seed, spawn_key=(i,))`` so
    results do not depend on how trials are split across ``workers``.
    """
    snr = budget.sample_snr_db(params.sample_rate)
    chunks = np.array_split(np.arange(trials), max(1, workers))
    jobs = [(params, d_IN, snr, seed, c, method, oversample) for c in chunks if c.size]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_ensemble_chunk, jobs))
    else:
        parts = [_ensemble_chunk(j) for j in jobs]
    return EnsembleResult(np.concatenate(parts), d_IN, crlb(params, budget))
