"""Diffusion constants of the master equation, the positivity functional
Delta, and the breakdown-temperature solver.

The Dekker-Valsakumar condition Delta = Dpp*Dqq - Dpq^2 - hbar^2 gamma^2/4 > 0
holds only above a breakdown temperature T_c(omega0/gamma); below it the
derived master equation stops being positivity preserving.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .coefficients import AlphaPair, alpha_pair
from .core import BracketError, SystemParams, TemperatureError

DEFAULT_TC_BRACKET = (1e-3, 1e3)


@dataclass(frozen=True)
class DiffusionConstants:
    """Dpp (decoherence), Dqq (position diffusion), Dpq (anomalous) plus the
    coefficients and parameters they came from.

    The algebraic ties Dpq = 4 kB T gamma^2 a', Dqq = 2 kB T gamma a'/M,
    Dpp = 2 kB T M gamma (a + 4 gamma^2 a') are reproducible bit-for-bit from
    ``source``.  ``source``/``params`` are None for hand-built instances.
    """

    Dpp: float
    Dqq: float
    Dpq: float
    source: Optional[AlphaPair] = None
    params: Optional[SystemParams] = None


@dataclass(frozen=True)
class PositivityReport:
    delta: float
    positive: bool
    T: float
    params: Optional[SystemParams]


def diffusion_constants(p: SystemParams) -> DiffusionConstants:
    """Full (non-perturbative) diffusion constants at temperature T > 0."""
    ab = alpha_pair(p)
    kT = p.kB * p.T
    g = p.gamma
    Dpq = 4.0 * kT * g * g * ab.alpha_prime
    Dqq = 2.0 * kT * g * ab.alpha_prime / p.M
    Dpp = 2.0 * kT * p.M * g * (ab.alpha + 4.0 * g * g * ab.alpha_prime)
    return DiffusionConstants(Dpp, Dqq, Dpq, ab, p)


def high_t_diffusion(p: SystemParams) -> DiffusionConstants:
    """Closed high-temperature forms, independent of omega0.

    Useful as an asymptotic oracle: the full constants converge to these to
    better than 1% once kB*T >~ 50 hbar*max(gamma, omega0).
    """
    if p.T <= 0.0:
        raise TemperatureError("high-T diffusion constants need T > 0")
    kT = p.kB * p.T
    g = p.gamma
    h = p.hbar
    Dpp = 2.0 * kT * p.M * g * (1.0 + h * h * g * g / (3.0 * kT * kT))
    Dqq = h * h * g / (6.0 * p.M * kT)
    Dpq = h * h * g * g / (3.0 * kT)
    return DiffusionConstants(Dpp, Dqq, Dpq, None, p)


def positivity_delta(d: DiffusionConstants) -> PositivityReport:
    """Delta = Dpp*Dqq - Dpq^2 - hbar^2 gamma^2 / 4.

    When all three contributions are within 1e6x of each other, hbar^2 gamma^2
    is factored out before subtracting so the high-temperature limit
    hbar^2 gamma^2 / 12 is not lost to cancellation.
    """
    if d.params is None:
        raise ValueError("positivity_delta needs DiffusionConstants with params attached")
    p = d.params
    hg = p.hbar * p.gamma
    a = d.Dpp * d.Dqq / (hg * hg)
    b = (d.Dpq / hg) ** 2
    if max(abs(a), abs(b)) < 1e6:
        delta = (a - b - 0.25) * hg * hg
    else:
        delta = d.Dpp * d.Dqq - d.Dpq * d.Dpq - 0.25 * hg * hg
    return PositivityReport(delta, delta > 0.0, p.T, p)


def _delta_dimensionless(ratio: float, theta: float, hbar: float, kB: float) -> float:
    """Delta/(hbar*gamma)^2 at omega0/gamma = ratio, kB*T/(hbar*gamma) = theta."""
    p = SystemParams(omega0=ratio, T=theta * hbar / kB, gamma=1.0, M=1.0, hbar=hbar, kB=kB)
    rep = positivity_delta(diffusion_constants(p))
    return rep.delta / (hbar * hbar)


def breakdown_temperature(
    omega0_over_gamma: float,
    hbar: float = 1.0,
    kB: float = 1.0,
    bracket: tuple[float, float] = DEFAULT_TC_BRACKET,
    scan_points: int = 200,
    rtol: float = 1e-10,
) -> float:
    """kB*T_c/(hbar*gamma) at which Delta crosses zero.

    Scans ``scan_points`` log-spaced temperatures over ``bracket`` first and
    requires exactly one sign change (BracketError, carrying the scan table,
    otherwise), then bisects in log-temperature to relative width ``rtol``.
    """
    if not omega0_over_gamma > 0.0:
        raise ValueError("omega0_over_gamma must be positive")
    thetas = np.geomspace(bracket[0], bracket[1], scan_points)
    deltas = [_delta_dimensionless(omega0_over_gamma, th, hbar, kB) for th in thetas]

    crossings = [
        i for i in range(len(thetas) - 1)
        if deltas[i] == 0.0 or deltas[i] * deltas[i + 1] < 0.0
    ]
    if len(crossings) != 1:
        raise BracketError(
            f"expected exactly one sign change of Delta for omega0/gamma="
            f"{omega0_over_gamma:g} in {bracket}, found {len(crossings)}",
            scan=list(zip(thetas.tolist(), deltas)),
        )

    i = crossings[0]
    lo, hi = float(thetas[i]), float(thetas[i + 1])
    flo = deltas[i]
    for _ in range(200):
        if hi - lo <= rtol * lo:
            break
        mid = math.sqrt(lo * hi)
        fmid = _delta_dimensionless(omega0_over_gamma, mid, hbar, kB)
        if fmid == 0.0:
            return mid
        if (fmid < 0.0) == (flo < 0.0):
            lo = mid
            flo = fmid
        else:
            hi = mid
    return math.sqrt(lo * hi)


def tc_curve(
    ratio_lo: float,
    ratio_hi: float,
    n_points: int,
    hbar: float = 1.0,
    kB: float = 1.0,
) -> list[tuple[float, float]]:
    """Breakdown-temperature curve (omega0/gamma, kB*T_c/hbar*gamma).

    Points are independent; QBROWN_THREADS > 1 evaluates them in a thread
    pool.  Output order is by abscissa regardless of completion order.
    """
    if not (0.0 < ratio_lo < ratio_hi):
        raise ValueError("need 0 < ratio_lo < ratio_hi")
    if n_points < 2:
        raise ValueError("need at least two points")
    ratios = np.geomspace(ratio_lo, ratio_hi, n_points)

    def worker(r: float) -> float:
        return breakdown_temperature(r, hbar=hbar, kB=kB)

    threads = int(os.environ.get("QBROWN_THREADS", "1") or "1")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            tcs = list(ex.map(worker, ratios))
    else:
        tcs = [worker(r) for r in ratios]
    return [(float(r), tc) for r, tc in zip(ratios, tcs)]
