"""Does the matched-filter estimator reach the bound?

Runs a noisy ranging ensemble at 1.5 m and compares the spread of the
estimates with the Cramer-Rao bound for each sub-sample refinement method.
"""

import sys

import numpy as np

from coherent_swarm.channel import LinkBudget
from coherent_swarm.ranging import METHODS, ranging_ensemble
from coherent_swarm.waveform import TtsfwParams


def main(trials=300, seed=0):
    params = TtsfwParams()
    budget = LinkBudget.for_waveform(params, snr_db=30.0)
    print(f"{trials} trials at 1.5 m, SNR 30 dB before processing, seed {seed}")
    runs = {}
    for method in METHODS:
        res = runs[method] = ranging_ensemble(params, budget, d_IN=1.5, trials=trials, seed=seed, method=method)
        worst = np.max(np.abs(res.errors)) * 1e3
        print(
            f"  {method:10s}: sigma {res.sigma * 1e3:.3f} mm, bound {res.bound.sigma_x * 1e3:.3f} mm, "
            f"ratio {res.efficiency_ratio:.3f}, bias {res.bias * 1e3:+.3f} mm, worst {worst:.2f} mm"
        )
    spread = max(np.max(np.abs(r.estimates - runs["spline1000"].estimates)) for r in runs.values())
    print(f"on a 16x oversampled correlation the methods agree to {spread * 1e6:.1f} um;")
    print("the spread left over is noise, not interpolation error")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 300)
