"""Independent equilibrium reference: imaginary-time (Matsubara) sums for
<q^2> and <p^2> of the Drude-damped oscillator.

These are the standard partition-function results for the Ohmic bath with a
Drude rolloff, in the friction convention gamma_hat(0) = 2*gamma (classical
motion q'' + 2 gamma q' + omega0^2 q = 0).  They serve as the thermodynamic
circles against which the master-equation equilibrium is compared.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from .core import SystemParams, TemperatureError

_CONV_RTOL = 1e-8
_CUTOFF_RTOL = 1e-2
_CHUNK = 1 << 21


class ConvergenceWarning(UserWarning):
    """Partial sums at n_max and 2*n_max disagree beyond 1e-8 relative."""


class CutoffSensitivityWarning(UserWarning):
    """<p^2> changes by more than 1% when the Drude cutoff is doubled."""


class TailMode(Enum):
    NONE = "none"
    INTEGRAL = "integral"


@dataclass(frozen=True)
class MatsubaraConfig:
    """Summation cutoff and tail handling.

    ``drude_cutoff`` None means 1e3 * max(gamma, omega0); it must stay finite
    because the <p^2> sum diverges logarithmically without it.
    """

    n_max: int = 10 ** 6
    tail_mode: TailMode = TailMode.INTEGRAL
    drude_cutoff: Optional[float] = None

    def __post_init__(self):
        if self.n_max < 10 ** 3:
            raise ValueError("n_max must be at least 1e3")
        if self.drude_cutoff is not None and not (
            self.drude_cutoff > 0.0 and math.isfinite(self.drude_cutoff)
        ):
            raise ValueError("drude_cutoff must be finite and positive")

    def cutoff_for(self, p: SystemParams) -> float:
        if self.drude_cutoff is not None:
            return self.drude_cutoff
        return 1e3 * max(p.gamma, p.omega0)


def drude_friction(nu: np.ndarray, gamma: float, omega_c: float) -> np.ndarray:
    """Laplace-transform friction gamma_hat(nu) = 2*gamma*omega_c/(nu + omega_c)."""
    return 2.0 * gamma * omega_c / (nu + omega_c)


def _partial_sum(p: SystemParams, wc: float, n_lo: int, n_hi: int, kind: str) -> float:
    """Sum of the n in [n_lo, n_hi] terms (n >= 1 side only), chunked."""
    nu1 = 2.0 * math.pi * p.kB * p.T / p.hbar
    total = 0.0
    w2 = p.omega0 ** 2
    for start in range(n_lo, n_hi + 1, _CHUNK):
        stop = min(start + _CHUNK - 1, n_hi)
        nu = nu1 * np.arange(start, stop + 1, dtype=float)
        nug = nu * drude_friction(nu, p.gamma, wc)
        den = w2 + nu * nu + nug
        if kind == "q2":
            total += float(np.sum(1.0 / den))
        else:
            total += float(np.sum((w2 + nug) / den))
    return total


def _tail(p: SystemParams, wc: float, n: int, kind: str, mode: TailMode) -> float:
    """Euler-Maclaurin estimate of the n > n_max remainder.

    Expansion of the summand in 1/nu with a = omega0^2 + 2*gamma*wc (the
    nu*gamma_hat plateau) and b = 2*gamma*wc^2 (its first rolloff correction):
    q2 terms go as nu^-2 - a nu^-4 + b nu^-5, p2 terms as
    a nu^-2 - b nu^-3 + (2 gamma wc^3 - a^2) nu^-4.
    """
    if mode is TailMode.NONE:
        return 0.0
    nu1 = 2.0 * math.pi * p.kB * p.T / p.hbar
    N = float(n)
    zeta2 = 1.0 / N - 1.0 / (2.0 * N * N) + 1.0 / (6.0 * N ** 3)
    zeta3 = 1.0 / (2.0 * N * N) - 1.0 / (2.0 * N ** 3) + 1.0 / (4.0 * N ** 4)
    zeta4 = 1.0 / (3.0 * N ** 3) - 1.0 / (2.0 * N ** 4) + 1.0 / (3.0 * N ** 5)
    zeta5 = 1.0 / (4.0 * N ** 4) - 1.0 / (2.0 * N ** 5) + 5.0 / (12.0 * N ** 6)
    a = p.omega0 ** 2 + 2.0 * p.gamma * wc
    b = 2.0 * p.gamma * wc * wc
    if kind == "q2":
        return zeta2 / nu1 ** 2 - a * zeta4 / nu1 ** 4 + b * zeta5 / nu1 ** 5
    return (a * zeta2 / nu1 ** 2 - b * zeta3 / nu1 ** 3
            + (2.0 * p.gamma * wc ** 3 - a * a) * zeta4 / nu1 ** 4)


def _folded_sum(p, wc, config, kind, doubled_check=True):
    """n0 + 2*sum_{n>=1} with tail at n_max, and the same at 2*n_max."""
    n = config.n_max
    s1 = _partial_sum(p, wc, 1, n, kind)
    n0 = 1.0 / p.omega0 ** 2 if kind == "q2" else 1.0
    v1 = n0 + 2.0 * (s1 + _tail(p, wc, n, kind, config.tail_mode))
    if not doubled_check:
        return v1, v1
    s2 = s1 + _partial_sum(p, wc, n + 1, 2 * n, kind)
    v2 = n0 + 2.0 * (s2 + _tail(p, wc, 2 * n, kind, config.tail_mode))
    return v1, v2


def matsubara_q2(p: SystemParams, config: MatsubaraConfig = MatsubaraConfig()) -> float:
    """<q^2> = (kB T/M) sum_n 1/(omega0^2 + nu_n^2 + |nu_n| gamma_hat(|nu_n|)),
    nu_n = 2 pi n kB T/hbar, folded to n >= 0.

    Warns ConvergenceWarning if the n_max and 2*n_max totals differ by more
    than 1e-8 relative.
    """
    if p.T <= 0.0:
        raise TemperatureError("Matsubara sums need T > 0")
    if p.omega0 <= 0.0:
        raise ValueError("<q^2> diverges for the free particle (omega0 = 0)")
    wc = config.cutoff_for(p)
    v1, v2 = _folded_sum(p, wc, config, "q2")
    if abs(v2 - v1) > _CONV_RTOL * abs(v2):
        warnings.warn(
            f"matsubara_q2 not converged at n_max={config.n_max}: "
            f"rel change {abs(v2 - v1) / abs(v2):.2e}", ConvergenceWarning)
    return p.kB * p.T / p.M * v1


def matsubara_p2(p: SystemParams, config: MatsubaraConfig = MatsubaraConfig()) -> float:
    """<p^2> = M kB T sum_n (omega0^2 + |nu_n| gamma_hat)/(omega0^2 + nu_n^2 + |nu_n| gamma_hat).

    Also re-evaluates at twice the Drude cutoff and warns
    CutoffSensitivityWarning when the two differ by more than 1%.
    """
    if p.T <= 0.0:
        raise TemperatureError("Matsubara sums need T > 0")
    wc = config.cutoff_for(p)
    v1, v2 = _folded_sum(p, wc, config, "p2")
    if abs(v2 - v1) > _CONV_RTOL * abs(v2):
        warnings.warn(
            f"matsubara_p2 not converged at n_max={config.n_max}: "
            f"rel change {abs(v2 - v1) / abs(v2):.2e}", ConvergenceWarning)
    w1, _ = _folded_sum(p, 2.0 * wc, config, "p2", doubled_check=False)
    if abs(w1 - v1) > _CUTOFF_RTOL * abs(v1):
        warnings.warn(
            f"matsubara_p2 cutoff-sensitive: doubling omega_c={wc:g} changes "
            f"<p^2> by {abs(w1 - v1) / abs(v1) * 100:.1f}%", CutoffSensitivityWarning)
    return p.M * p.kB * p.T * v1
