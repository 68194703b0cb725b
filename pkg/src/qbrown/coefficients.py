"""Dimensionless dissipation coefficients alpha and alpha' (and the
free-particle limit alpha'_0) obtained from resumming the bath memory over
classical paths.

All diffusion constants downstream are products of kB*T*gamma with these two
numbers.  ``alpha`` is dimensionless; ``alpha_prime`` carries 1/frequency^2
from its (lambda2 - lambda1)^-2 prefactor.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum

from .core import (
    CRITICAL_NUDGE,
    SystemParams,
    TemperatureError,
    eigenvalues,
    xcothx_m1,
)

logger = logging.getLogger(__name__)

_TINY = 1e-300


class CutoffMode(Enum):
    FINITE = "finite"
    INFINITE = "infinite"


@dataclass(frozen=True)
class AlphaPair:
    """alpha, alpha' and the size of the imaginary residue discarded.

    For underdamped systems the two complex decay modes enter as a conjugate
    pair, so both coefficients are real up to rounding; ``residual_imag`` is
    the larger relative imaginary part that was dropped.
    """

    alpha: float
    alpha_prime: float
    cutoff_mode: CutoffMode
    residual_imag: float


def _bracket(z: complex, lam: complex, omega_c: float) -> complex:
    """One coth bracket: xcothx(z) - 1, with the extra 1/(1 + lam^2/omega_c^2)
    denominator on the xcothx part at finite cutoff."""
    if math.isinf(omega_c):
        return xcothx_m1(z)
    d = (lam / omega_c) ** 2
    return (xcothx_m1(z) - d) / (1.0 + d)


def _alpha_raw(p: SystemParams) -> tuple[complex, complex]:
    """Evaluate the three-bracket closed forms at the given parameters.

    sqrt(lambda1*lambda2) is resolved to +omega0 (principal value; the product
    is omega0^2 exactly, and evenness of xcothx makes the sign immaterial).
    """
    eig = eigenvalues(p)
    l1, l2 = eig.lambda1, eig.lambda2
    s = p.hbar / (2.0 * p.kB * p.T)

    if p.omega0 == 0.0:
        # lambda1 = 0: the first and middle brackets vanish and alpha -> 1;
        # only the lambda2 = -2*gamma bracket survives in alpha'.
        b2 = _bracket(l2 * s, l2, p.omega_c)
        return 1.0 + 0.0j, b2 / (l2 - l1) ** 2

    b1 = _bracket(l1 * s, l1, p.omega_c)
    bm = _bracket(p.omega0 * s, complex(p.omega0), p.omega_c)
    b2 = _bracket(l2 * s, l2, p.omega_c)

    d2 = (l2 - l1) ** 2
    prod = p.omega0 * p.omega0  # lambda1*lambda2
    alpha = 1.0 + (prod * prod / d2) * (b1 / (l1 * l1) - 2.0 * bm / prod + b2 / (l2 * l2))
    alpha_prime = (b1 - 2.0 * bm + b2) / d2
    return alpha, alpha_prime


def alpha_pair(p: SystemParams) -> AlphaPair:
    """Dissipation coefficients for the given parameters.

    Raises TemperatureError at T = 0 (the coth arguments diverge).  At
    critical damping the formulas divide by (lambda2 - lambda1); the result
    is the two-sided average at omega0*(1 +/- 1e-7), accurate to ~1e-6.
    """
    if p.T <= 0.0:
        raise TemperatureError("alpha, alpha' are only defined for T > 0")

    if p.is_critical():
        a_hi, ap_hi = _alpha_raw(replace(p, omega0=p.omega0 * (1.0 + CRITICAL_NUDGE)))
        a_lo, ap_lo = _alpha_raw(replace(p, omega0=p.omega0 * (1.0 - CRITICAL_NUDGE)))
        a = 0.5 * (a_hi + a_lo)
        ap = 0.5 * (ap_hi + ap_lo)
    else:
        a, ap = _alpha_raw(p)

    residual = max(
        abs(a.imag) / max(abs(a.real), _TINY),
        abs(ap.imag) / max(abs(ap.real), _TINY),
    )
    mode = CutoffMode.INFINITE if math.isinf(p.omega_c) else CutoffMode.FINITE
    if a.real <= 0.0 or ap.real < 0.0:
        # routine below the breakdown temperature; the positivity module, not
        # this one, decides what negative coefficients mean physically
        logger.debug("non-positive coefficient at %r: alpha=%g alpha'=%g", p, a.real, ap.real)
    return AlphaPair(a.real, ap.real, mode, residual)


def alpha_prime_free(gamma: float, T: float, hbar: float = 1.0, kB: float = 1.0) -> float:
    """Free-particle coefficient alpha'_0 = [x coth x - 1]/(4 gamma^2),
    x = hbar*gamma/(kB*T)."""
    if T <= 0.0:
        raise TemperatureError("alpha'_0 is only defined for T > 0")
    if gamma <= 0.0:
        raise ValueError("gamma must be positive")
    x = hbar * gamma / (kB * T)
    return xcothx_m1(x).real / (4.0 * gamma * gamma)
