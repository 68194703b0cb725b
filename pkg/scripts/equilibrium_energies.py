#!/usr/bin/env python3
"""Equilibrium kinetic and potential energies vs temperature, master equation
against the Matsubara reference, for gamma/omega0 = 0.01 and 2.

Writes equilibrium_energies_<ratio>.csv and optional plots.  The kinetic
column shows the known cutoff-log offset near breakdown; the potential
column agrees to well under a percent.
"""

import csv
import pathlib
import warnings

import numpy as np

from qbrown import (
    SystemParams,
    breakdown_temperature,
    diffusion_constants,
    equilibrium_moments,
    matsubara_p2,
    matsubara_q2,
)

HERE = pathlib.Path(__file__).parent


def sweep(gamma_over_omega0, n_points=40):
    omega0 = 1.0 / gamma_over_omega0   # gamma = 1 units
    tc = breakdown_temperature(omega0)
    rows = []
    for T in np.geomspace(1.1 * tc, 120.0 * tc, n_points):
        p = SystemParams(omega0=omega0, T=float(T))
        eq = equilibrium_moments(p, diffusion_constants(p))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            q2_ref, p2_ref = matsubara_q2(p), matsubara_p2(p)
        w2 = omega0 ** 2
        rows.append((float(T), 0.5 * w2 * eq.q2, eq.p2 / 2.0,
                     0.5 * w2 * q2_ref, p2_ref / 2.0))
    return tc, rows


def main():
    for ratio in (0.01, 2.0):
        tc, rows = sweep(ratio)
        out = HERE / f"equilibrium_energies_{ratio:g}.csv"
        with open(out, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["T", "potential", "kinetic", "potential_ref", "kinetic_ref"])
            w.writerows(rows)
        print(f"gamma/omega0={ratio:g}: Tc={tc:.4f}, wrote {out}")

        try:
            import matplotlib
            matplotlib.use("Agg")
            import matplotlib.pyplot as plt
        except ImportError:
            continue
        T, pot, kin, pot_r, kin_r = map(np.array, zip(*rows))
        fig, axes = plt.subplots(1, 2, figsize=(8, 3.2), sharex=True)
        for ax, me, ref, name in ((axes[0], pot, pot_r, "potential"),
                                  (axes[1], kin, kin_r, "kinetic")):
            ax.loglog(T, me, label="master equation")
            ax.loglog(T, ref, "o", ms=3, label="thermodynamic")
            ax.set_xlabel(r"$k_B T/\hbar\gamma$")
            ax.set_title(f"{name} energy")
            ax.legend()
        fig.tight_layout()
        png = out.with_suffix(".png")
        fig.savefig(png, dpi=160)
        print(f"wrote {png}")


if __name__ == "__main__":
    main()
