"""Physical parameters, damping eigenvalues, and the x*coth(x) kernel.

Everything here is a pure function of its inputs; the dataclasses are frozen
and safe to share across threads.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

INFINITE_CUTOFF = math.inf

# relative |gamma - omega0|/gamma below which a system counts as critically damped
CRITICAL_TOL = 1e-9
# two-sided relative omega0 nudge used to evaluate formulas that divide by
# (lambda2 - lambda1) at critical damping
CRITICAL_NUDGE = 1e-7

_POLE_TOL = 1e-12
_SERIES_RADIUS = 1e-2


class QbmError(Exception):
    """Base class for numerical failures in this package."""


class PoleError(QbmError):
    """Argument too close to a nonzero pole i*k*pi of coth."""


class TemperatureError(QbmError):
    """Operation undefined at this temperature (coth arguments diverge at T=0)."""


class NoEquilibriumError(QbmError):
    """The free particle has no equilibrium <q^2>."""


class BracketError(QbmError):
    """Sign-change bracketing failed; carries the scan table in .scan."""

    def __init__(self, message, scan=None):
        super().__init__(message)
        self.scan = scan or []


class StepSizeError(QbmError):
    """Requested ODE step size violates the accuracy precondition."""


class StabilityError(QbmError):
    """Requested PDE step size violates the explicit-stepping stability bound."""


class StateError(QbmError):
    """Invalid physical state (uncertainty violation, grid too small, NaN)."""


class Regime(Enum):
    OVERDAMPED = "overdamped"
    UNDERDAMPED = "underdamped"
    CRITICAL = "critical"


@dataclass(frozen=True)
class SystemParams:
    """Parameters of the damped oscillator and its bath.

    ``gamma`` is half the momentum damping rate: the classical motion obeys
    q'' + 2*gamma*q' + omega0^2 q = 0, so <p^2> relaxes at rate 4*gamma.
    Defaults give the dimensionless convention hbar = kB = M = gamma = 1 in
    which temperatures read as kB*T/(hbar*gamma) and frequencies as
    omega0/gamma.  ``omega_c`` is the Drude cutoff; ``math.inf`` means the
    cutoff is removed.
    """

    omega0: float
    T: float
    gamma: float = 1.0
    M: float = 1.0
    omega_c: float = INFINITE_CUTOFF
    hbar: float = 1.0
    kB: float = 1.0

    def __post_init__(self):
        if not (self.M > 0.0 and self.gamma > 0.0 and self.hbar > 0.0 and self.kB > 0.0):
            raise ValueError("M, gamma, hbar, kB must be strictly positive")
        if self.omega0 < 0.0:
            raise ValueError("omega0 must be non-negative")
        if self.T < 0.0:
            raise ValueError("T must be non-negative")
        if not self.omega_c > 0.0:
            raise ValueError("omega_c must be positive (math.inf removes the cutoff)")

    @property
    def chi(self) -> float:
        """hbar*omega_c / (2 kB T); inf when the cutoff is removed."""
        return self.hbar * self.omega_c / (2.0 * self.kB * self.T)

    def is_critical(self) -> bool:
        return abs(self.gamma - self.omega0) <= CRITICAL_TOL * self.gamma


@dataclass(frozen=True)
class EigenPair:
    """Decay eigenvalues lambda_{1,2} = -gamma +/- Omega, Omega = sqrt(gamma^2 - omega0^2)."""

    lambda1: complex
    lambda2: complex
    Omega: complex
    regime: Regime


def eigenvalues(p: SystemParams) -> EigenPair:
    """Eigenvalues of the damped-oscillator equation of motion.

    lambda1 takes the '+' branch.  It is computed in the rationalized form
    -omega0^2/(gamma + Omega), which is exact where -gamma + Omega would
    cancel catastrophically (deeply overdamped systems) and keeps
    lambda1*lambda2 = omega0^2 and lambda1 + lambda2 = -2*gamma to roundoff.
    """
    Omega = cmath.sqrt(complex(p.gamma * p.gamma - p.omega0 * p.omega0))
    if p.is_critical():
        regime = Regime.CRITICAL
    elif p.gamma > p.omega0:
        regime = Regime.OVERDAMPED
    else:
        regime = Regime.UNDERDAMPED
    if p.gamma >= p.omega0:
        # real Omega: avoid the -gamma + Omega cancellation
        lambda1 = -(p.omega0 * p.omega0) / (p.gamma + Omega)
    else:
        # imaginary Omega: real/imaginary parts are separate, no cancellation
        lambda1 = -p.gamma + Omega
    return EigenPair(lambda1, -p.gamma - Omega, Omega, regime)


def xcothx(z: complex) -> complex:
    """z*coth(z): even, analytic at z=0 (value 1), poles at nonzero i*k*pi.

    Uses the even power series 1 + z^2/3 - z^4/45 + 2 z^6/945 for
    |z| < 1e-2 and the overflow-safe exponential form otherwise.  Raises
    PoleError within 1e-12 of a nonzero pole.
    """
    return 1.0 + xcothx_m1(z)


def xcothx_m1(z: complex) -> complex:
    """xcothx(z) - 1, computed without cancellation for small |z|.

    The coefficient brackets of the dissipation formulas are differences of
    this quantity at O(z^2) scale; returning the series directly keeps their
    high-temperature cancellations at full precision.
    """
    z = complex(z)
    if abs(z) < _SERIES_RADIUS:
        z2 = z * z
        return z2 * (1.0 / 3.0 + z2 * (-1.0 / 45.0 + z2 * (2.0 / 945.0)))
    if z.real < 0.0:
        z = -z
    k = round(z.imag / math.pi)
    if k != 0 and abs(z - 1j * (k * math.pi)) < _POLE_TOL:
        raise PoleError(f"argument {z} lies within {_POLE_TOL} of the pole {k}*i*pi")
    e = cmath.exp(-2.0 * z)  # |e| <= 1, never overflows
    return z * (1.0 + e) / (1.0 - e) - 1.0
