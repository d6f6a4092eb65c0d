import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from tclfano.bath import (Regime, SpectralParams, bose_occupation, convergence_radius,
                          coupling_regime, lorentzian_density, memory_kernel, modified_density,
                          thermal_weight)

P = SpectralParams()


class TestParams:
    def test_defaults(self):
        assert (P.gamma0, P.lam, P.delta, P.omega0) == (0.2, 1.0, 0.4, 10.0)
        assert (P.big_omega, P.omega_m, P.temperature) == (2.0, 1.0, 10.0)
        assert P.beta == pytest.approx(0.1)

    @pytest.mark.parametrize("bad", [dict(gamma0=0), dict(lam=-1), dict(omega0=0),
                                     dict(big_omega=0.5), dict(omega_m=20.0),
                                     dict(temperature=0), dict(delta=float("nan"))])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            SpectralParams(**bad)

    def test_delta_may_be_negative(self):
        assert SpectralParams(delta=-3.0).peak == 13.0


class TestLorentzian:
    def test_peak(self):
        assert lorentzian_density(P, P.peak) == pytest.approx(0.2 / (2 * math.pi))
        assert lorentzian_density(P, P.peak) == pytest.approx(0.0318310, abs=1e-7)

    def test_half_width(self):
        half = 0.5 * lorentzian_density(P, P.peak)
        assert lorentzian_density(P, P.peak + P.lam) == pytest.approx(half)
        assert lorentzian_density(P, P.peak - P.lam) == pytest.approx(half)

    def test_value_at_omega0(self):
        assert lorentzian_density(P, 10.0) == pytest.approx(0.0274405, abs=1e-7)

    @given(st.floats(-50, 50))
    def test_symmetric_about_peak(self, x):
        assert lorentzian_density(P, P.peak + x) == pytest.approx(lorentzian_density(P, P.peak - x))

    def test_full_line_mass(self):
        mass = integrate.quad(lambda w: lorentzian_density(P, w), -np.inf, np.inf)[0]
        assert mass == pytest.approx(P.gamma0 * P.lam / 2, rel=1e-8)


class TestModified:
    def test_zero(self):
        for om in (1.0, 2.0, 3.0):
            assert modified_density(P.with_(big_omega=om), 0.0) == 0.0

    def test_continuity(self):
        w = P.omega_m
        assert modified_density(P, w) == pytest.approx(lorentzian_density(P, w))
        assert modified_density(P, w * (1 + 1e-12)) == pytest.approx(lorentzian_density(P, w))

    def test_half_omega_m(self):
        w = P.omega_m / 2
        assert modified_density(P, w) == pytest.approx(lorentzian_density(P, w) / 4)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            modified_density(P, -0.1)

    @given(st.floats(0, 40))
    def test_bounded_by_lorentzian(self, w):
        m, l = modified_density(P, w), lorentzian_density(P, w)
        if w <= P.omega_m:
            assert m <= l * (1 + 1e-12)
        else:
            assert m == l


class TestBose:
    def test_values(self):
        assert bose_occupation(P, 10.0) == pytest.approx(1 / (math.e - 1))
        assert bose_occupation(P, 10.0) == pytest.approx(0.5819767, abs=1e-7)
        assert bose_occupation(P, P.temperature * math.log(2)) == pytest.approx(1.0)
        assert bose_occupation(P.with_(temperature=0.01), 10.0) == 0.0

    def test_rejects_nonpositive(self):
        for w in (0.0, -1.0):
            with pytest.raises(ValueError):
                bose_occupation(P, w)

    def test_decreasing(self):
        w = np.linspace(0.01, 100, 1000)
        assert np.all(np.diff(bose_occupation(P, w)) < 0)


class TestThermalWeight:
    def test_superohmic_vanishes_at_zero(self):
        w = np.array([0.0, 1e-6, 1e-4])
        vals = thermal_weight(P, w)
        assert vals[0] == 0.0
        assert vals[1] < vals[2]

    def test_ohmic_limit_finite(self):
        p = P.with_(big_omega=1.0)
        lim = thermal_weight(p, 0.0)
        assert lim == pytest.approx(thermal_weight(p, 1e-7), rel=1e-5)
        assert lim > 0


class TestKernel:
    def test_initial_value(self):
        assert memory_kernel(P, 0.0) == pytest.approx(0.1)

    def test_modulus(self):
        t = np.linspace(0, 10, 101)
        np.testing.assert_allclose(np.abs(memory_kernel(P, t)), 0.1 * np.exp(-t))

    def test_laplace_integral(self):
        f = lambda t, part: getattr(memory_kernel(P, t) * np.exp(1j * P.omega0 * t), part)
        re = integrate.quad(f, 0, 60, args=("real",), limit=400)[0]
        im = integrate.quad(f, 0, 60, args=("imag",), limit=400)[0]
        assert re + 1j * im == pytest.approx(0.1 / complex(1.0, -0.4), abs=1e-9)


class TestRegime:
    def test_radius_values(self):
        assert coupling_regime(P).radius == pytest.approx(0.58)
        assert float(convergence_radius(1.0, 0.0)) == 0.5
        assert coupling_regime(P).classification is Regime.WEAK

    def test_detuned_strong_coupling_is_weak(self):
        r = coupling_regime(SpectralParams(gamma0=2.0, delta=-3.0))
        assert r.radius == pytest.approx(5.0)
        assert r.classification is Regime.WEAK

    def test_boundary_is_strong(self):
        r = coupling_regime(SpectralParams(gamma0=0.5, delta=0.0))
        assert r.alpha_sq == r.radius
        assert r.classification is Regime.STRONG

    @given(st.floats(-20, 20), st.floats(0.1, 5))
    def test_radius_properties(self, d, lam):
        r = float(convergence_radius(lam, d))
        assert r == float(convergence_radius(lam, -d))
        assert r >= 0.5
