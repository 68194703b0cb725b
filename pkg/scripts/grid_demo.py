#!/usr/bin/env python3
"""Evolve the full master equation for rho(x,y) from a displaced Gaussian and
overlay the grid moments on the analytic moment solution.

Defaults to N=128 for a ~10 s run; pass N=256 for the validation-grade grid.
"""

import sys
import time

from qbrown import (
    MomentState,
    SystemParams,
    analytic_solution,
    diffusion_constants,
    equilibrium_moments,
    evolve,
    gaussian_state,
)
from qbrown.grid import suggested_half_width


def main(N=128, t_end=3.0):
    p = SystemParams(omega0=2.0, T=2.0)
    d = diffusion_constants(p)
    eq = equilibrium_moments(p, d)
    s0 = MomentState(1.4 * eq.q2, 0.75 * eq.p2, eq.qp)
    g0 = gaussian_state(s0, N=N, L=suggested_half_width(1.05 * s0.q2, p, d, N=N))

    t0 = time.time()
    _, samples = evolve(g0, p, d, t_end, sample_every=100)
    print(f"N={N}, t_end={t_end:g}: {time.time() - t0:.1f} s, "
          f"{len(samples)} samples")
    print(f"{'t':>7} {'q2_grid':>10} {'q2_ode':>10} {'p2_grid':>10} {'p2_ode':>10} "
          f"{'trace-1':>9} {'herm':>8}")
    for s in samples:
        a = analytic_solution(s0, p, d, s["t"])
        print(f"{s['t']:7.3f} {s['q2']:10.6f} {a.q2:10.6f} {s['p2']:10.6f} "
              f"{a.p2:10.6f} {s['trace'] - 1:9.1e} {s['herm']:8.1e}")


if __name__ == "__main__":
    main(N=int(sys.argv[1]) if len(sys.argv) > 1 else 128)
