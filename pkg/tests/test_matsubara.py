"""Matsubara-sum equilibrium reference values."""

import math
import warnings

import numpy as np
import pytest

from qbrown.core import SystemParams, TemperatureError
from qbrown.diffusion import breakdown_temperature, diffusion_constants
from qbrown.dynamics import equilibrium_moments
from qbrown.matsubara import (
    ConvergenceWarning,
    CutoffSensitivityWarning,
    MatsubaraConfig,
    TailMode,
    drude_friction,
    matsubara_p2,
    matsubara_q2,
)


def isolated_q2(omega0, T, M=1.0, hbar=1.0, kB=1.0):
    """Brute-force oracle: undamped oscillator (hbar/2 M omega0) coth(hbar omega0/2 kB T)."""
    x = hbar * omega0 / (2.0 * kB * T)
    return hbar / (2.0 * M * omega0) / math.tanh(x)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            MatsubaraConfig(n_max=100)
        with pytest.raises(ValueError):
            MatsubaraConfig(drude_cutoff=math.inf)
        with pytest.raises(ValueError):
            MatsubaraConfig(drude_cutoff=-1.0)

    def test_default_cutoff_tracks_scales(self):
        c = MatsubaraConfig()
        assert c.cutoff_for(SystemParams(omega0=50.0, T=1.0)) == 5e4
        assert c.cutoff_for(SystemParams(omega0=0.1, T=1.0, gamma=2.0)) == 2e3

    def test_friction_convention(self):
        # gamma_hat(0) = 2*gamma (classical q'' + 2 gamma q' + omega0^2 q = 0)
        assert drude_friction(np.array([0.0]), 1.5, 100.0)[0] == 3.0


class TestQ2:
    def test_classical_equipartition(self):
        p = SystemParams(omega0=1.0, T=100.0, gamma=0.01)
        assert matsubara_q2(p) == pytest.approx(100.0, rel=0.01)

    def test_isolated_oscillator_limit(self):
        for T in (0.3, 1.0, 3.0):
            p = SystemParams(omega0=1.0, T=T, gamma=1e-6)
            assert matsubara_q2(p) == pytest.approx(isolated_q2(1.0, T), rel=1e-4)

    def test_requires_positive_t_and_omega0(self):
        with pytest.raises(TemperatureError):
            matsubara_q2(SystemParams(omega0=1.0, T=0.0))
        with pytest.raises(ValueError):
            matsubara_q2(SystemParams(omega0=0.0, T=1.0))

    def test_matches_master_equation_above_tc(self):
        for ratio in (100.0, 0.5):   # gamma/omega0 = 0.01 and 2
            tc = breakdown_temperature(ratio)
            for fac in (1.2, 3.0, 10.0):
                p = SystemParams(omega0=ratio, T=fac * tc)
                eq = equilibrium_moments(p, diffusion_constants(p))
                assert matsubara_q2(p) == pytest.approx(eq.q2, rel=0.05)

    def test_folded_equals_two_sided(self):
        p = SystemParams(omega0=1.3, T=0.9, gamma=0.7)
        wc = 1e3 * 1.3
        nu1 = 2.0 * math.pi * p.T
        n = np.arange(-2000, 2001)
        nu = np.abs(n) * nu1
        terms = 1.0 / (p.omega0 ** 2 + nu ** 2 + nu * drude_friction(nu, p.gamma, wc))
        two_sided = p.T * terms.sum()
        cfg = MatsubaraConfig(n_max=2000, tail_mode=TailMode.NONE)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            folded = matsubara_q2(p, cfg)
        assert folded == pytest.approx(two_sided, rel=1e-13)

    def test_monotone_in_n_max(self):
        # all terms positive: partial sums increase
        p = SystemParams(omega0=1.0, T=0.5)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            vals = [matsubara_q2(p, MatsubaraConfig(n_max=n, tail_mode=TailMode.NONE))
                    for n in (10 ** 3, 10 ** 4, 10 ** 5)]
        assert vals[0] < vals[1] < vals[2]

    def test_increasing_in_temperature(self):
        p0 = SystemParams(omega0=1.0, T=1.0, gamma=0.8)
        vals = [matsubara_q2(SystemParams(omega0=1.0, T=T, gamma=0.8))
                for T in (0.5, 1.0, 2.0, 4.0)]
        assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_convergence_warning_without_tail(self):
        p = SystemParams(omega0=1.0, T=0.1)
        with pytest.warns(ConvergenceWarning):
            matsubara_q2(p, MatsubaraConfig(n_max=10 ** 3, tail_mode=TailMode.NONE))

    def test_tail_mode_fixes_convergence(self):
        p = SystemParams(omega0=1.0, T=0.1)
        with warnings.catch_warnings():
            warnings.simplefilter("error", ConvergenceWarning)
            v = matsubara_q2(p, MatsubaraConfig(n_max=10 ** 4))
        ref = matsubara_q2(p, MatsubaraConfig(n_max=10 ** 6))
        assert v == pytest.approx(ref, rel=1e-9)


class TestP2:
    def test_classical_equipartition(self):
        p = SystemParams(omega0=1.0, T=100.0, gamma=0.01)
        assert matsubara_p2(p) == pytest.approx(100.0, rel=0.01)

    def test_isolated_oscillator_limit(self):
        for T in (0.3, 1.0, 3.0):
            p = SystemParams(omega0=1.0, T=T, gamma=1e-6)
            # <p^2> = M^2 omega0^2 <q^2> for the undamped oscillator
            assert matsubara_p2(p) == pytest.approx(isolated_q2(1.0, T), rel=1e-3)

    def test_increasing_in_temperature(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            vals = [matsubara_p2(SystemParams(omega0=1.0, T=T, gamma=0.8))
                    for T in (0.5, 1.0, 2.0, 4.0)]
        assert all(a < b for a, b in zip(vals, vals[1:]))

    def test_cutoff_sensitivity_warned_at_low_t(self):
        # the log(omega_c) weight in <p^2> is a real physical sensitivity
        p = SystemParams(omega0=0.5, T=0.6)
        with pytest.warns(CutoffSensitivityWarning):
            matsubara_p2(p)

    def test_cutoff_insensitive_at_high_t(self):
        p = SystemParams(omega0=1.0, T=300.0)
        with warnings.catch_warnings():
            warnings.simplefilter("error", CutoffSensitivityWarning)
            matsubara_p2(p)

    def test_matches_master_equation_at_high_t(self):
        # the kinetic comparison carries the cutoff log; gap < 5% only well
        # above breakdown, decreasing with T (see the acceptance analysis)
        for ratio in (100.0, 0.5):
            tc = breakdown_temperature(ratio)
            gaps = []
            for fac in (40.0, 80.0, 160.0):
                p = SystemParams(omega0=ratio, T=fac * tc)
                eq = equilibrium_moments(p, diffusion_constants(p))
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    gaps.append(abs(eq.p2 / matsubara_p2(p) - 1.0))
            assert gaps[-1] < 0.05
            assert gaps[0] > gaps[1] > gaps[2]
