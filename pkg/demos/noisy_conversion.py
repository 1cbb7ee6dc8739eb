"""Average the GHZ-to-W conversion over laser phase-noise realizations.

    python demos/noisy_conversion.py [h0] [n_seeds]
"""
import sys

import numpy as np

from flsim import DecayParams, LaserParams, make_conversion_I, mhz, projector, run_cycles
from flsim.perturbations import PhaseNoiseSpec, phase_source


def main(h0=400.0, n_seeds=3):
    proto = make_conversion_I(LaserParams(mhz(4.0), mhz(0.04), mhz(200.0)), DecayParams())
    finals = []
    for seed in range(n_seeds):
        src = phase_source(PhaseNoiseSpec(h0=h0, seed=seed))
        tr = run_cycles(projector("GHZ-"), proto, phase_source=src)
        finals.append(tr.observables["W0"][-1])
        print(f"seed {seed}: P(W0) = {finals[-1]:.5f}")
    print(f"h0 = {h0:g} Hz^2/Hz: mean {np.mean(finals):.5f}, std {np.std(finals, ddof=1):.1e}")


if __name__ == "__main__":
    args = sys.argv[1:]
    main(float(args[0]) if args else 400.0, int(args[1]) if len(args) > 1 else 3)
