import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from tclfano.bath import SpectralParams, lorentzian_density, memory_kernel, thermal_weight
from tclfano.green import exact_green
from tclfano.numerics import (ComplexTrajectory, NonFiniteError, TimeGrid,
                              build_frequency_quadrature, cumulative_trapezoid,
                              forward_difference, integrate_ode, linear_interpolant,
                              positive_part_integral, solve_volterra)


class TestTimeGrid:
    def test_samples(self):
        g = TimeGrid(0.0, 1.0, 4)
        assert len(g) == 5
        assert g.h == 0.25
        np.testing.assert_allclose(g.times, [0, 0.25, 0.5, 0.75, 1.0])

    @pytest.mark.parametrize("args", [(1.0, 1.0, 10), (0.0, 1.0, 1), (0.0, 1.0, 2.5)])
    def test_rejects_bad_grids(self, args):
        with pytest.raises(ValueError):
            TimeGrid(*args)

    def test_default(self):
        g = TimeGrid.default()
        assert (g.t_start, g.t_end, g.n_steps) == (0.0, 20.0, 8000)
        assert g.h == pytest.approx(0.0025)


def test_trajectory_rejects_nan_and_reports_time():
    g = TimeGrid(0.0, 1.0, 4)
    with pytest.raises(NonFiniteError) as err:
        ComplexTrajectory(g, [0, 1, np.nan, 0, 0])
    assert err.value.where == pytest.approx(0.5)


def test_trajectory_length_checked():
    with pytest.raises(ValueError):
        ComplexTrajectory(TimeGrid(0.0, 1.0, 4), [0, 1])


def test_trajectory_interpolation():
    g = TimeGrid(0.0, 1.0, 2)
    tr = ComplexTrajectory(g, [0, 1j, 2])
    assert tr.at(0.25) == pytest.approx(0.5j)
    assert tr.at(0.75) == pytest.approx(1 + 0.5j)


class TestVolterra:
    def test_zero_kernel_is_free_phase(self):
        g = TimeGrid(0.0, 10.0, 10000)
        G = solve_volterra(lambda t: np.zeros_like(t), 10.0, g)
        assert np.max(np.abs(G.values - np.exp(-10j * g.times))) < 1e-10
        assert np.max(np.abs(np.abs(G.values) - 1)) < 1e-10

    def test_matches_closed_form(self):
        p = SpectralParams()
        g = TimeGrid(0.0, 10.0, 4000)
        G = solve_volterra(lambda t: memory_kernel(p, t), p.omega0, g)
        assert np.max(np.abs(G.values - exact_green(p, g).values)) < 1e-5

    def test_second_order_self_convergence(self):
        # Kernel without oscillation (delta = omega0 cancels the carrier).
        p = SpectralParams(delta=10.0)
        kernel = lambda t: memory_kernel(p, t)
        ref = solve_volterra(kernel, 0.0, TimeGrid(0.0, 5.0, 3200))
        errs = []
        for n in (200, 400, 800):
            G = solve_volterra(kernel, 0.0, TimeGrid(0.0, 5.0, n))
            stride = 3200 // n
            errs.append(np.max(np.abs(G.values - ref.values[::stride])))
        assert errs[0] / errs[1] >= 3.5
        assert errs[1] / errs[2] >= 3.5

    def test_scalar_only_kernel_is_accepted(self):
        g = TimeGrid(0.0, 1.0, 50)
        G = solve_volterra(lambda t: 0.1 * complex(np.exp(-float(t))), 0.0, g)
        assert np.isfinite(G.values).all()

    def test_nonfinite_kernel_reports_time(self):
        g = TimeGrid(0.0, 1.0, 10)
        with pytest.raises(NonFiniteError) as err:
            solve_volterra(lambda t: np.where(t > 0.45, np.inf, 1.0), 0.0, g)
        assert err.value.where == pytest.approx(0.5)


class TestIntegrateOde:
    def test_exponential_decay(self):
        y = integrate_ode(lambda t, y: -y, 1.0, TimeGrid(0.0, 1.0, 100))
        assert abs(y[-1] - np.exp(-1)) < 1e-8

    def test_zero_rhs(self):
        y0 = np.array([1.0 + 2j, -3.0])
        y = integrate_ode(lambda t, y: np.zeros_like(y), y0, TimeGrid(0.0, 1.0, 10))
        assert np.all(y == y0)

    def test_damped_mode(self):
        g = TimeGrid(0.0, 20.0, 8000)
        y = integrate_ode(lambda t, y: -(10j + 0.1) * y, 1.0 + 0j, g)
        assert np.max(np.abs(np.abs(y) - np.exp(-0.1 * g.times))) < 1e-6

    def test_nan_reports_step(self):
        with pytest.raises(NonFiniteError) as err:
            integrate_ode(lambda t, y: np.nan if t > 0.25 else 0.0, 1.0, TimeGrid(0.0, 1.0, 10))
        assert err.value.where == 3


def test_linear_interpolant_at_half_steps_and_between():
    g = TimeGrid(0.0, 1.0, 4)
    v = g.times**2
    f = linear_interpolant(v, g)
    assert f(0.125) == pytest.approx(0.5 * (0 + 0.0625))
    assert f(0.3) == pytest.approx(0.0625 + 0.2 * (0.25 - 0.0625))
    assert f(1.0) == pytest.approx(1.0)


class TestQuadrature:
    p = SpectralParams()

    def test_structure(self):
        q = build_frequency_quadrature(self.p)
        assert len(q) == 2000
        assert np.all(np.diff(q.nodes) > 0)
        assert q.nodes[0] >= 0
        assert np.all(q.weights > 0)
        assert q.cutoff == pytest.approx(10.0 + 40.0)

    def test_weight_sum(self):
        q = build_frequency_quadrature(self.p)
        assert abs(q.weights.sum() - q.cutoff) / q.cutoff < 1e-10

    def test_lorentzian_mass(self):
        q = build_frequency_quadrature(self.p)
        got = q.integrate(lorentzian_density(self.p, q.nodes))
        ref = integrate.quad(lambda w: lorentzian_density(self.p, w), 0, q.cutoff,
                             points=[self.p.peak], limit=200)[0]
        assert got == pytest.approx(ref, rel=1e-8)
        # gamma0*lam/2 over the full line, minus the truncated tails
        assert got == pytest.approx(0.1, rel=0.05)

    def test_thermal_integrand_positive_and_finite(self):
        q = build_frequency_quadrature(self.p)
        got = q.integrate(thermal_weight(self.p, q.nodes))
        ref = integrate.quad(lambda w: thermal_weight(self.p, w), 0, q.cutoff,
                             points=[self.p.omega_m, self.p.peak], limit=400)[0]
        assert np.isfinite(got) and got > 0
        # kink at omega_m limits the rule to algebraic convergence
        assert got == pytest.approx(ref, rel=1e-5)

    def test_minimum_nodes(self):
        with pytest.raises(ValueError):
            build_frequency_quadrature(self.p, n_nodes=10)

    def test_cutoff_below_peak(self):
        with pytest.raises(ValueError):
            build_frequency_quadrature(self.p, cutoff_widths=-20.0)


class TestPositivePart:
    def test_monotone_decreasing(self):
        assert positive_part_integral(np.linspace(1, 0, 50)) == 0.0

    def test_tent(self):
        assert positive_part_integral([0.0, 0.5, 1.0, 0.5, 0.0]) == pytest.approx(1.0)

    def test_sine(self):
        t = np.linspace(0, 2 * np.pi, 20001)
        assert positive_part_integral(np.sin(t)) == pytest.approx(2.0, abs=1e-3)

    def test_single_point(self):
        assert positive_part_integral([3.0]) == 0.0

    def test_accepts_trajectory(self):
        g = TimeGrid(0.0, 1.0, 2)
        assert positive_part_integral(ComplexTrajectory(g, [0.0, 2.0, 1.0])) == 2.0

    @given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=60))
    @settings(max_examples=200, deadline=None)
    def test_total_variation(self, xs):
        x = np.array(xs)
        tv = np.sum(np.abs(np.diff(x)))
        assert positive_part_integral(x) + positive_part_integral(-x) == pytest.approx(tv, abs=1e-9)


def test_forward_difference_and_trapezoid():
    g = TimeGrid(0.0, 1.0, 1000)
    v = np.sin(g.times)
    assert np.max(np.abs(cumulative_trapezoid(np.cos(g.times), g) - v)) < 1e-6
    d = forward_difference(v, g.h)
    assert d.shape == v.shape
    assert np.max(np.abs(d[:-1] - np.cos(g.times[:-1]))) < 1e-3
