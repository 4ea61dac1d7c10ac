#!/usr/bin/env python3
"""Plasma echo and its collisional suppression.

A pump wave mixes away, a small seed is planted at velocity frequency
eta_star, and the field stays quiet until the k = 1 characteristic sweeps
back through the seed.  The burst arrives on schedule; raising the
collision frequency shaves its amplitude because the information parked
at high frequencies decays first.  Three frequencies are enough to see
the trend; the acceptance suite sweeps five.
"""

from vpfp.experiments import run_experiment
from vpfp.io_config import RunConfig


def main():
    rep = run_experiment("echo", RunConfig(nu_list=(1e-9, 1e-5, 1e-3)))

    print(f"  {'nu':>8} {'peak time':>10} {'predicted':>10} {'amplitude':>12}")
    for r in rep.rows:
        print(f"  {r['nu']:>8.0e} {r['peak_time']:>10.3f} "
              f"{r['predicted_time']:>10.3f} {r['peak_amp']:>12.4e}  "
              f"{r['verdict']}")
    print(f"amplitudes nonincreasing in nu: {rep.monotone_amp} "
          f"(strictly: {rep.strictly_decreasing})")
    print(f"near-collisionless peak timing off the un-mixing prediction by "
          f"{rep.collisionless_deviation:.1%}")


if __name__ == "__main__":
    main()
