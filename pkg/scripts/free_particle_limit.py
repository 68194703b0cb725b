#!/usr/bin/env python3
"""Vanishing-frequency limit: long-time <p^2>, the diffusive <q^2> slope, and
the coefficient limits, each against its closed form."""

import math

import numpy as np

from qbrown import (
    MomentState,
    SystemParams,
    alpha_pair,
    alpha_prime_free,
    free_particle_longtime,
)


def main(gamma=1.0, T=1.0):
    s0 = MomentState(q2=1.0, p2=T, qp=0.0)
    x = gamma / T

    p2 = free_particle_longtime(s0, gamma, T, t=80.0 / gamma).p2
    p2_ref = gamma / math.tanh(x)
    print(f"<p^2> long-time : {p2:.10f}  vs  M*hbar*gamma*coth = {p2_ref:.10f} "
          f"(rel {p2 / p2_ref - 1:+.2e})")

    ts = np.linspace(50.0 / gamma, 100.0 / gamma, 11)
    q2s = [free_particle_longtime(s0, gamma, T, float(t)).q2 for t in ts]
    slope = np.polyfit(ts, q2s, 1)[0]
    print(f"<q^2> slope     : {slope:.10f}  vs  kB*T/(M*gamma) = {T / gamma:.10f} "
          f"(rel {slope * gamma / T - 1:+.2e})")

    ab = alpha_pair(SystemParams(omega0=1e-6 * gamma, T=T, gamma=gamma))
    ap0 = alpha_prime_free(gamma, T)
    print(f"alpha           : {ab.alpha:.12f}  vs  1 (gap {ab.alpha - 1:+.2e})")
    print(f"alpha'          : {ab.alpha_prime:.12f}  vs  alpha'_0 = {ap0:.12f} "
          f"(rel {ab.alpha_prime / ap0 - 1:+.2e})")


if __name__ == "__main__":
    main()
