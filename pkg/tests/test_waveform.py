import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from coherent_swarm.waveform import (
    NyquistError,
    SampledSignal,
    SyncToneParams,
    TtsfwParams,
    generate_sync_tones,
    generate_ttsfw,
    moments_from_spectrum,
    power_spectrum,
    pulse_energy_spectrum,
    read_binary,
    read_csv,
    write_binary,
    write_csv,
)

FS = 25e6


def test_default_frame_layout():
    p = TtsfwParams()
    assert p.f2 == 4.5e6
    x = generate_ttsfw(p).samples
    assert x.size == 25_000
    assert np.all(x[:12_500] != 0)
    assert np.all(x[12_500:] == 0)


def test_default_frame_peaks():
    x = generate_ttsfw(TtsfwParams()).samples
    f = np.fft.fftfreq(x.size, 1 / FS)
    top = np.sort(f[np.argsort(np.abs(np.fft.fft(x)))[-2:]])
    assert top.tolist() == [0.5e6, 4.5e6]


def test_energy_in_tone_bins_over_active_window():
    # over the full frame half the energy leaks (the frame is half zeros);
    # on the active window both tones complete whole cycles
    p = TtsfwParams()
    x = generate_ttsfw(p).samples[:12_500]
    spec = np.abs(np.fft.fft(x)) ** 2
    f = np.fft.fftfreq(x.size, 1 / FS)
    bins = [int(np.argmin(np.abs(f - t))) for t in (0.5e6, 4.5e6)]
    assert spec[bins].sum() / spec.sum() >= 0.99


def test_full_frame_tone_bins_hold_half_the_energy():
    x = generate_ttsfw(TtsfwParams()).samples
    spec = np.abs(np.fft.fft(x)) ** 2
    f = np.fft.fftfreq(x.size, 1 / FS)
    bins = [int(np.argmin(np.abs(f - t))) for t in (0.5e6, 4.5e6)]
    assert spec[bins].sum() / spec.sum() == pytest.approx(0.5, rel=1e-9)


def test_single_pulse_step_equals_bandwidth():
    p = TtsfwParams(bw=3e6, n_pulses=1)
    assert p.step == p.bw
    assert p.tone_spacing == p.bw


def test_multi_pulse_tones_and_normalization():
    p = TtsfwParams(f1=1e6, bw=5e6, n_pulses=3, pri=40e-6, duty=0.5)
    assert p.step == pytest.approx(1e6)
    assert np.allclose(p.tones(), [[1e6, 4e6], [2e6, 5e6], [3e6, 6e6]])
    x = generate_ttsfw(p).samples
    for n, (fa, fb) in enumerate(p.tones()):
        a, b = p.pulse_bounds(n)
        seg = x[a:b]
        t = (a + np.arange(seg.size)) / FS
        model = (np.exp(2j * np.pi * fa * t) + np.exp(2j * np.pi * fb * t)) / 3
        assert np.allclose(seg, model, atol=1e-12)
        gap_end = p.pulse_bounds(n + 1)[0] if n + 1 < 3 else x.size
        assert np.all(x[b:gap_end] == 0)


def test_pulse_windows_are_half_open():
    p = TtsfwParams(pri=1e-3, duty=0.5)
    assert p.pulse_bounds(0) == (0, 12_500)
    p2 = TtsfwParams(f1=1e6, bw=2e6, n_pulses=2, pri=1e-3, duty=0.5)
    assert p2.pulse_bounds(1) == (25_000, 37_500)


def test_nyquist_violation():
    with pytest.raises(NyquistError):
        TtsfwParams(f1=10e6, bw=4e6)
    with pytest.raises(NyquistError):
        generate_sync_tones(SyncToneParams(baseband_fr1=45e6), 1e-6, 100e6)


def test_non_integer_sample_count_rounds_down():
    p = TtsfwParams(pri=1.00001e-6 * 3, sample_rate=25e6)
    assert p.frame_samples == math.floor(3.00003e-6 * 25e6)


def test_sync_tone_examples():
    tones = SyncToneParams(fr1=4.30e9, fr2=4.31e9)
    assert tones.f_ref == pytest.approx(10e6)
    s = generate_sync_tones(SyncToneParams(1e9, 1.01e9, baseband_fr1=1e6), 10e-6, 100e6)
    f, pw = power_spectrum(s)
    peaks = np.sort(f[np.argsort(pw)[-2:]])
    assert peaks.tolist() == pytest.approx([1e6, 11e6])
    assert pw[np.argsort(pw)[-3]] < 1e-20 * pw.max()
    z = generate_sync_tones(tones, 1e-6, 100e6, (0.0, math.pi))
    assert abs(z.samples[0]) < 1e-15


def test_sync_tones_reject_inverted_pair():
    with pytest.raises(ValueError):
        SyncToneParams(fr1=4.31e9, fr2=4.30e9)


def test_sampled_signal_invariants():
    with pytest.raises(ValueError):
        SampledSignal(np.array([]), 1.0)
    with pytest.raises(ValueError):
        SampledSignal(np.ones(3), 0.0)
    s = SampledSignal(np.ones(50), 10.0)
    assert s.duration == 5.0
    with pytest.raises(ValueError):
        s.samples[0] = 2


@st.composite
def on_bin_params(draw):
    n = draw(st.integers(1, 4))
    length = draw(st.integers(40, 400))
    duty = draw(st.sampled_from([0.25, 0.5, 1.0]))
    k1 = draw(st.integers(-20, 20))
    m = draw(st.integers(1, 5))
    df = FS / length
    span = (2 * n - 1) * m
    assume(k1 * df >= -FS / 2 and (k1 + span) * df < FS / 2)
    return TtsfwParams(k1 * df, span * df, n, length / FS / duty, duty, FS)


@given(on_bin_params())
def test_spectrum_symmetric_about_its_mean(params):
    mean, second, third = moments_from_spectrum(*pulse_energy_spectrum(params))
    assert abs(mean - params.center_frequency) < 1e-6 * params.bw
    assert abs(third) < 1e-6 * second ** 1.5


@given(st.integers(1, 3), st.floats(0.1, 1.0), st.floats(1.0, 4.0))
def test_energy_scales_with_active_time(n, duty, scale):
    # two unit tones average power 2 before the 1/N scaling; the residual
    # beat term is bounded by one beat period per pulse
    base = TtsfwParams(f1=1e6, bw=4e6, n_pulses=n, pri=40e-6, duty=duty)
    longer = TtsfwParams(f1=1e6, bw=4e6, n_pulses=n, pri=40e-6 * scale, duty=duty)
    for p in (base, longer):
        active = n * p.pulse_time
        expected = 2 * active / n ** 2
        slack = n * 2 / (math.pi * p.step) / n ** 2 + n * 2 / FS
        assert abs(generate_ttsfw(p).energy() - expected) <= slack
    ratio = generate_ttsfw(longer).energy() / generate_ttsfw(base).energy()
    assert ratio == pytest.approx(scale, rel=0.05)


def test_regeneration_is_bit_identical():
    p = TtsfwParams()
    assert generate_ttsfw(p).samples.tobytes() == generate_ttsfw(p).samples.tobytes()


def test_csv_and_binary_round_trip(tmp_path):
    s = generate_ttsfw(TtsfwParams(pri=4e-6))
    write_csv(s, tmp_path / "w.csv")
    back = read_csv(tmp_path / "w.csv")
    assert np.array_equal(back.samples, s.samples)
    assert back.sample_rate == pytest.approx(FS)
    write_binary(s, tmp_path / "w.bin")
    raw = (tmp_path / "w.bin").read_bytes()
    assert raw[:4] == b"CSWV" and len(raw) == 16 + 16 * len(s)
    back = read_binary(tmp_path / "w.bin")
    assert np.array_equal(back.samples, s.samples) and back.sample_rate == FS


def test_binary_rejects_bad_magic(tmp_path):
    (tmp_path / "x.bin").write_bytes(b"NOPE" + bytes(12))
    with pytest.raises(ValueError):
        read_binary(tmp_path / "x.bin")
