#!/usr/bin/env python3
"""Long-run relaxation of a perturbed state toward uniform equilibrium.

One full nonlinear run, sampled sparsely, split into the two halves of
the story: the x-dependent part of the perturbation dies on the fast
cube-root timescale, while the x-averaged profile relaxes at the plain
collisional rate.  Kinetic plus field energy must hold still the whole
time.  Takes about half a minute.
"""

from vpfp.experiments import run_experiment
from vpfp.io_config import RunConfig


def main():
    cfg = RunConfig(nu=1e-3, eps=1e-3)
    rep = run_experiment("thermalize", cfg)

    nu13 = cfg.nu ** (-1.0 / 3.0)
    print(f"{rep.n_steps} steps to t = 1000 at nu = {cfg.nu:.0e} "
          f"(nu^(-1/3) = {nu13:.1f})")
    print(f"  x-dependent remainder rate  {rep.k_rate:.5f}  "
          f"= {rep.k_rate_nu13:.2f} nu^(1/3)")
    print(f"  x-averaged profile rate     {rep.x_rate:.3e}  "
          f"= {rep.x_rate_over_nu:.2f} nu")
    print(f"  energy residual             {rep.heating_residual:.2e} relative")
    print(f"  mass drift {rep.max_mass_drift:.1e}, "
          f"momentum drift {rep.max_momentum_drift:.1e}")


if __name__ == "__main__":
    main()
