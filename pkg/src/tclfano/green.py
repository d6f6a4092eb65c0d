"""Green function of the system mode, exact and order by order.

Throughout, G(t) = Gt(t) * exp(-i omega0 t); the envelope Gt ("G tilde")
carries the bath-induced corrections. With z = -lam + i delta and
c = gamma0*lam/2 the Lorentzian kernel in the rotating frame is c*exp(z t).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bath import SpectralParams
from .numerics import ComplexTrajectory, TimeGrid, cumulative_trapezoid

# below this root separation (in units of lambda) the confluent formula is used
CRITICAL_TOL = 1e-9


@dataclass(frozen=True)
class RootPair:
    s1: complex
    s2: complex

    def is_degenerate(self, lam: float) -> bool:
        return abs(self.s1 - self.s2) < CRITICAL_TOL * lam


@dataclass(frozen=True)
class GreenSet:
    grid: TimeGrid
    exact: ComplexTrajectory
    g0: ComplexTrajectory
    gt2: ComplexTrajectory
    gt2_dot: ComplexTrajectory
    gt4_dot: ComplexTrajectory


def _z(params: SpectralParams) -> complex:
    return complex(-params.lam, params.delta)


def _c(params: SpectralParams) -> float:
    return 0.5 * params.gamma0 * params.lam


def roots(params: SpectralParams) -> RootPair:
    z = _z(params)
    disc = np.sqrt(complex(params.lam, -params.delta) ** 2 - 2 * params.gamma0 * params.lam)
    s1 = 0.5 * (z + disc)
    s2 = 0.5 * (z - disc)
    if s1.real < s2.real:
        s1, s2 = s2, s1
    return RootPair(complex(s1), complex(s2))


def envelope_exact(params: SpectralParams, t) -> np.ndarray:
    """Gt(t) = (s2 e^{s1 t} - s1 e^{s2 t}) / (s2 - s1)."""
    t = np.asarray(t, dtype=float)
    r = roots(params)
    s1, s2 = r.s1, r.s2
    if r.is_degenerate(params.lam):
        s = 0.5 * (s1 + s2)
        return np.exp(s * t) * (1 - s * t)
    # factor out the slower-decaying exponential
    e = np.exp((s2 - s1) * t)
    return np.exp(s1 * t) * (s2 - s1 * e) / (s2 - s1)


def envelope_log_derivative(params: SpectralParams, t) -> np.ndarray:
    """Gt'/Gt = s1 s2 (e^{s1 t} - e^{s2 t}) / (s2 e^{s1 t} - s1 e^{s2 t}).

    Returns inf where the envelope vanishes.
    """
    t = np.asarray(t, dtype=float)
    r = roots(params)
    s1, s2 = r.s1, r.s2
    with np.errstate(divide="ignore", invalid="ignore"):
        if r.is_degenerate(params.lam):
            s = 0.5 * (s1 + s2)
            return -s * s * t / (1 - s * t)
        e = np.exp((s2 - s1) * t)
        return s1 * s2 * (1 - e) / (s2 - s1 * e)


def exact_green(params: SpectralParams, grid: TimeGrid) -> ComplexTrajectory:
    t = grid.times
    return ComplexTrajectory(grid, envelope_exact(params, t) * np.exp(-1j * params.omega0 * t))


def free_green(params: SpectralParams, grid: TimeGrid) -> ComplexTrajectory:
    return ComplexTrajectory(grid, np.exp(-1j * params.omega0 * grid.times))


def gtilde2(params: SpectralParams, grid: TimeGrid):
    """Second-order envelope correction and its derivative.

    Gt2'(t) = c/z (1 - e^{zt}),  Gt2(t) = c/z (1/z + t - e^{zt}/z).
    """
    t = grid.times
    z, c = _z(params), _c(params)
    e = np.exp(z * t)
    a = c / z
    gt2 = a * (t + (1 - e) / z)
    gt2_dot = a * (1 - e)
    return ComplexTrajectory(grid, gt2), ComplexTrajectory(grid, gt2_dot)


def gtilde4_dot(params: SpectralParams, grid: TimeGrid) -> ComplexTrajectory:
    """Gt4'(t) = (c/z)^2 [t + t e^{zt} + 2(1 - e^{zt})/z].

    In terms of lam, delta the prefactor is
    (lam^2 gamma0^2/4) (lam + i delta)^2 / (lam^2 + delta^2)^2.
    """
    t = grid.times
    z, c = _z(params), _c(params)
    e = np.exp(z * t)
    return ComplexTrajectory(grid, (c / z) ** 2 * (t + t * e + 2 * (1 - e) / z))


def gtilde4(params: SpectralParams, grid: TimeGrid) -> ComplexTrajectory:
    """Gt4 by cumulative trapezoidal integration of Gt4', Gt4(0) = 0."""
    return ComplexTrajectory(grid, cumulative_trapezoid(gtilde4_dot(params, grid).values, grid))


def fourth_order_combination(params: SpectralParams, t) -> np.ndarray:
    """Gt4' - Gt2' Gt2 = (c/z)^2 [2 t e^{zt} + (1 - e^{2zt})/z]."""
    t = np.asarray(t, dtype=float)
    z, c = _z(params), _c(params)
    e = np.exp(z * t)
    return (c / z) ** 2 * (2 * t * e + (1 - e * e) / z)


def green_set(params: SpectralParams, grid: TimeGrid) -> GreenSet:
    gt2, gt2_dot = gtilde2(params, grid)
    return GreenSet(
        grid=grid,
        exact=exact_green(params, grid),
        g0=free_green(params, grid),
        gt2=gt2,
        gt2_dot=gt2_dot,
        gt4_dot=gtilde4_dot(params, grid),
    )
