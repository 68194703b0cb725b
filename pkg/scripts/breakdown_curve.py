#!/usr/bin/env python3
"""Breakdown-temperature curve: kB*Tc/(hbar*gamma) vs omega0/gamma.

Writes breakdown_curve.csv next to this script and, when matplotlib is
available, a log-log plot breakdown_curve.png.
"""

import csv
import pathlib

from qbrown import tc_curve

OUT = pathlib.Path(__file__).with_suffix(".csv")


def main():
    pts = tc_curve(1e-3, 1e2, 200)
    with open(OUT, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["omega0_over_gamma", "kBTc_over_hbar_gamma"])
        w.writerows(pts)
    print(f"wrote {OUT} ({len(pts)} points); "
          f"Tc at omega0/gamma=1e-3: {pts[0][1]:.6f} (anchor ~0.4)")

    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("matplotlib not available; skipping plot")
        return
    r, tc = zip(*pts)
    plt.figure(figsize=(5, 3.4))
    plt.loglog(r, tc)
    plt.xlabel(r"$\omega_0/\gamma$")
    plt.ylabel(r"$k_B T_c/\hbar\gamma$")
    plt.tight_layout()
    png = OUT.with_suffix(".png")
    plt.savefig(png, dpi=160)
    print(f"wrote {png}")


if __name__ == "__main__":
    main()
