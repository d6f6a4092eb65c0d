import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from tclfano.bath import SpectralParams, memory_kernel
from tclfano.green import (envelope_exact, envelope_log_derivative, exact_green,
                           fourth_order_combination, free_green, green_set, gtilde2, gtilde4,
                           gtilde4_dot, roots)
from tclfano.numerics import TimeGrid

P = SpectralParams()
GRID = TimeGrid(0.0, 20.0, 8000)


class TestRoots:
    def test_resonant_weak_values(self):
        r = roots(SpectralParams(delta=0.0))
        assert r.s1 == pytest.approx(-0.1127017, abs=1e-7)
        assert r.s2 == pytest.approx(-0.8872983, abs=1e-7)
        assert r.s1.imag == 0 and r.s2.imag == 0

    @given(st.floats(0.01, 5), st.floats(0.1, 3), st.floats(-6, 6))
    @settings(max_examples=100)
    def test_vieta(self, g0, lam, d):
        r = roots(SpectralParams(gamma0=g0, lam=lam, delta=d))
        assert r.s1 + r.s2 == pytest.approx(complex(-lam, d), abs=1e-9)
        assert r.s1 * r.s2 == pytest.approx(g0 * lam / 2, abs=1e-9)
        assert r.s1.real >= r.s2.real
        assert r.s1.real + r.s2.real == pytest.approx(-lam)

    def test_weak_coupling_limit(self):
        r = roots(P.with_(gamma0=1e-8))
        assert abs(r.s1) < 1e-7
        assert r.s2 == pytest.approx(complex(-1.0, 0.4), abs=1e-7)

    def test_degenerate_point(self):
        p = SpectralParams(gamma0=0.5, delta=0.0)
        assert roots(p).is_degenerate(p.lam)
        t = np.linspace(0, 10, 50)
        near = envelope_exact(p.with_(gamma0=0.5 + 1e-7), t)
        assert np.max(np.abs(envelope_exact(p, t) - near)) < 1e-5
        assert np.all(np.isfinite(envelope_log_derivative(p, t)))


class TestExactGreen:
    def test_initial_value(self):
        for p in (P, SpectralParams(gamma0=2.0), SpectralParams(gamma0=0.5, delta=0.0)):
            assert exact_green(p, GRID).values[0] == pytest.approx(1.0)

    def test_free_limit(self):
        G = exact_green(P.with_(gamma0=1e-12), GRID)
        assert np.max(np.abs(G.values - free_green(P, GRID).values)) < 1e-9

    @pytest.mark.parametrize("g0,d", [(0.2, 0.4), (2.0, 0.4), (2.0, 0.0), (2.0, -3.0), (0.5, 0.0), (5.0, 1.0)])
    def test_modulus_bounded(self, g0, d):
        G = exact_green(SpectralParams(gamma0=g0, delta=d), GRID)
        assert np.max(np.abs(G.values)) <= 1.0 + 1e-12

    def test_late_decay_rate(self):
        t = GRID.times
        late = t > 10
        slope = np.polyfit(t[late], np.log(np.abs(exact_green(P, GRID).values[late]) ** 2), 1)[0]
        assert slope == pytest.approx(2 * roots(P).s1.real, rel=1e-4)

    def test_log_derivative_matches_finite_difference(self):
        t = GRID.times
        env = envelope_exact(P, t)
        fd = np.gradient(env, GRID.h, edge_order=2) / env
        assert np.max(np.abs(fd - envelope_log_derivative(P, t))) < 1e-4


class TestSecondOrder:
    def test_initial_and_stationary(self):
        gt2, gt2_dot = gtilde2(P, GRID)
        assert gt2.values[0] == 0 and gt2_dot.values[0] == 0
        assert gt2_dot.values[-1].real == pytest.approx(-0.0862069, abs=1e-7)
        assert gt2_dot.values[-1].imag == pytest.approx(-0.0344828, abs=1e-7)

    def test_derivative_consistency(self):
        gt2, gt2_dot = gtilde2(P, GRID)
        fd = np.gradient(gt2.values, GRID.h, edge_order=2)
        assert np.max(np.abs(fd - gt2_dot.values)) < 1e-5

    def test_defining_integral(self):
        # Gt2' = -int_0^t K(s) e^{i omega0 s} ds
        _, gt2_dot = gtilde2(P, GRID)
        for k in (400, 2000, 8000):
            t = GRID.times[k]
            f = lambda s, part: getattr(-memory_kernel(P, s) * np.exp(1j * P.omega0 * s), part)
            ref = integrate.quad(f, 0, t, args=("real",), limit=200)[0] + 1j * integrate.quad(
                f, 0, t, args=("imag",), limit=200)[0]
            assert gt2_dot.values[k] == pytest.approx(ref, abs=1e-10)


class TestFourthOrder:
    def test_initial_value(self):
        assert gtilde4_dot(P, GRID).values[0] == 0

    def test_quadratic_scaling(self):
        a = gtilde4_dot(P, GRID).values
        b = gtilde4_dot(P.with_(gamma0=0.4), GRID).values
        np.testing.assert_allclose(b, 4 * a, rtol=1e-12, atol=1e-15)

    def test_matches_convolution(self):
        grid = TimeGrid(0.0, 10.0, 4000)
        gt2, _ = gtilde2(P, grid)
        t = grid.times
        ker = memory_kernel(P, t) * np.exp(1j * P.omega0 * t)
        got = gtilde4_dot(P, grid).values
        worst = 0.0
        for k in range(0, 4001, 250):
            if k == 0:
                continue
            integrand = ker[k::-1] * gt2.values[: k + 1]
            ref = -integrate.simpson(integrand, x=t[: k + 1])
            worst = max(worst, abs(ref - got[k]))
        assert worst < 1e-6

    def test_combination_identity(self):
        gs = green_set(P, GRID)
        direct = gs.gt4_dot.values - gs.gt2_dot.values * gs.gt2.values
        assert np.max(np.abs(direct - fourth_order_combination(P, GRID.times))) < 1e-12


def _residual(g0):
    p = P.with_(gamma0=g0)
    gt2, _ = gtilde2(p, GRID)
    pert = free_green(p, GRID).values * (1 + gt2.values + gtilde4(p, GRID).values)
    return np.max(np.abs(exact_green(p, GRID).values - pert))


def test_reconstruction_residual_is_third_order():
    ratio = _residual(0.05) / _residual(0.025)
    assert 6 <= ratio <= 10


def test_reconstruction_breaks_down_at_strong_resonance():
    p = SpectralParams(gamma0=2.0, delta=0.0)
    gt2, _ = gtilde2(p, GRID)
    pert = free_green(p, GRID).values * (1 + gt2.values + gtilde4(p, GRID).values)
    assert np.max(np.abs(exact_green(p, GRID).values - pert)) > 1.0
