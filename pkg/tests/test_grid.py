"""Grid evolution of the full master equation vs the moment ODEs."""

import io
import math

import numpy as np
import pytest

from qbrown.core import StabilityError, StateError, SystemParams
from qbrown.diffusion import DiffusionConstants, diffusion_constants
from qbrown.dynamics import MomentState, analytic_solution, equilibrium_moments, evolve_numeric
from qbrown.grid import (
    BoundaryMassWarning,
    DensityGrid,
    evolve,
    gaussian_state,
    moments_from_grid,
    stable_dt,
    step,
    suggested_half_width,
)

P = SystemParams(omega0=2.0, T=2.0)
D = diffusion_constants(P)
EQ = equilibrium_moments(P, D)


def displaced():
    return MomentState(1.4 * EQ.q2, 0.75 * EQ.p2, EQ.qp)


class TestGaussianState:
    def test_zero_correlation_is_real_symmetric(self):
        g = gaussian_state(MomentState(1.0, 1.0, 0.0), N=64)
        assert np.abs(g.values.imag).max() == 0.0
        assert np.abs(g.values - g.values.T).max() < 1e-15

    def test_normalized_and_hermitian(self):
        g = gaussian_state(MomentState(0.8, 1.1, 0.4), N=128)
        assert g.trace() == pytest.approx(1.0, abs=1e-14)
        assert g.hermiticity_residual() < 1e-15

    def test_moment_roundtrip_at_default_resolution(self):
        m = displaced()
        g = gaussian_state(m, N=256)
        got = moments_from_grid(g)
        assert got.q2 == pytest.approx(m.q2, rel=1e-3)
        assert got.p2 == pytest.approx(m.p2, rel=1e-3)
        assert got.qp == pytest.approx(m.qp, rel=1e-2, abs=1e-3 * math.sqrt(m.q2 * m.p2))

    def test_purity_identity_for_pure_state(self):
        # tr(rho^2) dx = hbar/(2 sqrt(<q^2> p2c)); pure state has u = hbar^2/4
        q2 = 0.7
        qp = 0.3
        p2c = 0.25 / q2            # u = q2*p2 - (qp/2)^2 = hbar^2/4
        p2 = p2c + (qp / 2.0) ** 2 / q2
        m = MomentState(q2, p2, qp)
        assert m.uncertainty() == pytest.approx(0.25, rel=1e-12)
        g = gaussian_state(m, N=256)
        purity = float(np.sum(np.abs(g.values) ** 2) * g.dx * g.dx)
        assert purity == pytest.approx(1.0, rel=0.01)
        assert purity == pytest.approx(1.0 / (2.0 * math.sqrt(q2 * p2c)), rel=0.01)

    def test_rejects_uncertainty_violation(self):
        with pytest.raises(StateError):
            gaussian_state(MomentState(0.1, 0.1, 0.0), N=64)

    def test_rejects_small_box(self):
        with pytest.raises(StateError):
            gaussian_state(MomentState(1.0, 1.0, 0.0), N=64, L=4.0)

    def test_default_box_is_8_sigma(self):
        g = gaussian_state(MomentState(1.0, 1.0, 0.0), N=64)
        assert g.L == pytest.approx(8.0)


class TestStep:
    def test_rejects_large_dt(self):
        g = gaussian_state(displaced(), N=64)
        with pytest.raises(StabilityError):
            step(g, P, D, 10.0 * stable_dt(g, P, D))

    def test_single_step_advances_time(self):
        g = gaussian_state(displaced(), N=64)
        dt = stable_dt(g, P, D)
        g2 = step(g, P, D, dt)
        assert g2.t == pytest.approx(dt)
        assert g2 is not g and g2.values is not g.values

    def test_unitary_oscillator_limit(self):
        # no diffusion, negligible friction: <q^2> oscillates at 2*omega0 and
        # the uncertainty product stays put
        p = SystemParams(omega0=2.0, T=1.0, gamma=1e-12)
        d0 = DiffusionConstants(0.0, 0.0, 0.0, None, p)
        m = MomentState(0.5, 0.5, 0.0)   # u = 0.25: pure state, squeezed vs omega0=2
        g = gaussian_state(m, N=128, L=8.0)
        period = math.pi / p.omega0      # 2*omega0 oscillation
        _, samples = evolve(g, p, d0, 2.0 * period, sample_every=20)
        ode = [analytic_q2_unitary(m, p, s["t"]) for s in samples]
        for s, ref in zip(samples, ode):
            assert s["q2"] == pytest.approx(ref, rel=2e-3)
            u = s["q2"] * s["p2"] - (s["qp"] / 2.0) ** 2
            assert u == pytest.approx(0.25, rel=5e-3)
        # full period returns to the start
        assert samples[-1]["q2"] == pytest.approx(m.q2, rel=2e-3)

    def test_equilibrium_is_stationary_on_grid(self):
        g = gaussian_state(EQ, N=128, L=suggested_half_width(1.1 * EQ.q2, P, D, N=128))
        _, samples = evolve(g, P, D, 1.0, sample_every=200)
        for s in samples:
            assert s["q2"] == pytest.approx(EQ.q2, rel=0.01)
            assert s["p2"] == pytest.approx(EQ.p2, rel=0.01)

    def test_displaced_tracks_moment_odes(self):
        m = displaced()
        g = gaussian_state(m, N=128, L=8.0 * math.sqrt(1.45 * EQ.q2))
        _, samples = evolve(g, P, D, 1.5, sample_every=100)
        for s in samples:
            a = analytic_solution(m, P, D, s["t"])
            assert s["q2"] == pytest.approx(a.q2, rel=0.01)
            assert s["p2"] == pytest.approx(a.p2, rel=0.01)
            assert abs(s["qp"] - a.qp) < 0.01 * math.sqrt(a.q2 * a.p2)

    def test_trace_and_hermiticity_preserved(self):
        g = gaussian_state(displaced(), N=128, L=8.0 * math.sqrt(1.45 * EQ.q2))
        final, samples = evolve(g, P, D, 1.0, sample_every=100)
        for s in samples:
            assert abs(s["trace"] - 1.0) < 1e-6
            assert s["herm"] < 1e-9
        # above breakdown the diagonal is a probability density
        diag = np.diagonal(final.values)
        assert np.abs(diag.imag).max() < 1e-12
        assert diag.real.min() >= -1e-9

    def test_grid_convergence_under_dx_halving(self):
        # halving dx from the default-resolution spacing moves moments < 0.2%
        # (the N^-4 extraction bias dominates: 0.11% at N=128, 0.007% at 256)
        m = displaced()
        L = 8.0 * math.sqrt(1.45 * EQ.q2)
        results = []
        for N in (128, 256):
            g = gaussian_state(m, N=N, L=L)
            _, samples = evolve(g, P, D, 0.4, sample_every=10 ** 6)
            results.append(samples[-1])
        assert results[0]["q2"] == pytest.approx(results[1]["q2"], rel=2e-3)
        assert results[0]["p2"] == pytest.approx(results[1]["p2"], rel=2e-3)

    def test_boundary_mass_warning(self):
        # a box barely wider than the state leaks into the clamped border
        m = MomentState(1.0, 1.0, 0.0)
        g = gaussian_state(m, N=96, L=8.0)
        tiny = DensityGrid(g.x * 0.55, g.values.copy(), 0.0)  # squeeze the box
        p = SystemParams(omega0=0.1, T=4.0)
        d = diffusion_constants(p)
        with pytest.warns(BoundaryMassWarning):
            evolve(tiny, p, d, 0.8)


def analytic_q2_unitary(m, p, t):
    """Closed-form <q^2>(t) for the undamped oscillator (rotation of moments)."""
    w = p.omega0
    c, s = math.cos(w * t), math.sin(w * t)
    # q(t) = q cos + (p/M w) sin
    return (m.q2 * c * c + m.p2 * s * s / (p.M * w) ** 2
            + m.qp * c * s / (p.M * w))


class TestMomentsFromGrid:
    def test_nan_rejected(self):
        g = gaussian_state(MomentState(1.0, 1.0, 0.0), N=64)
        g.values[3, 4] = float("nan")
        with pytest.raises(StateError):
            moments_from_grid(g)


class TestSnapshotCsv:
    def test_header_and_rows(self):
        g = gaussian_state(MomentState(1.0, 1.0, 0.2), N=16)
        buf = io.StringIO()
        g.write_csv(buf, params=P)
        lines = buf.getvalue().split("\r\n")
        assert lines[0].startswith("# N=16 L=8")
        assert "omega0=2" in lines[0] and "T=2" in lines[0]
        assert lines[1] == "x,y,re,im"
        assert len(lines) == 2 + 16 * 16 + 1  # header lines + rows + trailing
        x, y, re, im = (float(v) for v in lines[2].split(","))
        assert (x, y) == (g.x[0], g.x[0])
        assert re == g.values[0, 0].real and im == g.values[0, 0].imag
