"""Step through one GHZ-to-W cycle, then run the full conversion.

    python demos/conversion_walkthrough.py
"""
import numpy as np

from flsim import DecayParams, LaserParams, make_conversion_I, mhz, named_state, projector, run_cycles


def main():
    p = LaserParams(mhz(4.0), mhz(0.04), mhz(200.0))
    proto = make_conversion_I(p, DecayParams())
    print(f"period {proto.period:.2f} us, 18 cycles {18 * proto.period / 1000:.3f} ms")

    # one cycle, inspecting the state after every step
    tr = run_cycles(projector("GHZ-"), proto, n_cycles=1)
    watch = ("GHZ-", "000", "D1", "W0")
    print("step    " + "".join(f"{s:>8}" for s in watch))
    for step, idx in zip(proto.steps, tr.marks["step_end"]):
        rho = tr.states[idx]
        pops = [np.real(np.vdot(named_state(s), rho @ named_state(s))) for s in watch]
        print(f"{step.label:<8}" + "".join(f"{x:8.4f}" for x in pops))

    # the whole conversion, per cycle
    tr = run_cycles(projector("GHZ-"), proto)
    w0 = tr.observables["W0"][tr.marks["cycle_end"]]
    for k in (1, 2, 4, 8, 12, 18):
        print(f"after {k:2d} cycles  P(W0) = {w0[k - 1]:.5f}")


if __name__ == "__main__":
    main()
