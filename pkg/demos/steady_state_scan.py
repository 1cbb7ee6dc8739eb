"""Effective one-period generator and its steady state against omega2 / omega1.

    python demos/steady_state_scan.py
"""
from flsim import sweep_ratio


def main():
    for family in ("ConversionI", "ConversionII"):
        print(family)
        for point in sweep_ratio(family, [0.005, 0.01, 0.025, 0.08]):
            r = point.result
            if r is None:
                print(f"  {point.ratio:<6} failed: {point.error}")
                continue
            print(f"  ratio {point.ratio:<6} zero modes {r.zero_modes}  purity {r.purity:.5f}"
                  f"  target {r.target_population:.5f}  gap {r.spectral_gap:.2e} /us")


if __name__ == "__main__":
    main()
