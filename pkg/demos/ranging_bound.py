"""How tightly can two nodes measure their separation?

Builds the two-tone stepped-frequency waveform, checks its spectral second
moment against a numerical estimate, and walks the link budget down to the
range-accuracy bound and the highest carrier that accuracy can support.
"""

from coherent_swarm.channel import LinkBudget
from coherent_swarm.ranging import crlb, max_coherent_frequency, second_moment
from coherent_swarm.waveform import SampledSignal, TtsfwParams, generate_ttsfw, spectral_moments


def main():
    params = TtsfwParams()  # 500 kHz lower tone, 4 MHz span, one pulse per 1 ms frame
    print(f"tone step {params.step / 1e6:.1f} MHz, tone gap {params.tone_spacing / 1e6:.1f} MHz")

    zeta = second_moment(params)
    frame = generate_ttsfw(params)
    start, stop = params.pulse_bounds(0)
    _, numeric = spectral_moments(SampledSignal(frame.samples[start:stop], params.sample_rate))
    print(f"second moment: closed form {zeta:.5e} Hz^2, from the samples {numeric:.5e} Hz^2")

    budget = LinkBudget.for_waveform(params, snr_db=30.0)
    print(f"processing gain {budget.processing_gain:.0f} ({budget.processing_gain_db:.2f} dB)")
    print(f"SNR after matched filtering {budget.post_snr_db:.2f} dB")

    bound = crlb(params, budget)
    print(f"delay variance bound {bound.sigma_tau_sq:.4e} s^2 -> range sigma {bound.sigma_x * 1e3:.3f} mm")

    # coherent beamforming needs range error near lambda/30
    for sigma in (bound.sigma_x, 6e-3, 1e-2):
        print(f"  sigma_x {sigma * 1e3:5.2f} mm supports carriers up to {max_coherent_frequency(sigma) / 1e9:.2f} GHz")

    print("\nrange sigma falls in proportion to bandwidth:")
    for bw in (1e6, 2e6, 4e6, 8e6):
        p = TtsfwParams(bw=bw)
        r = crlb(p, LinkBudget.for_waveform(p, 30.0))
        print(f"  BW {bw / 1e6:3.0f} MHz: sigma_x {r.sigma_x * 1e3:6.3f} mm")


if __name__ == "__main__":
    main()
