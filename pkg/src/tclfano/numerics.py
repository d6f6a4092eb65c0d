"""Shared numerical machinery: time grids, trajectories, quadrature and solvers."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np


class NonFiniteError(FloatingPointError):
    """A NaN or Inf showed up where a finite number was required.

    ``where`` carries the offending time, step index or frequency node.
    """

    def __init__(self, message: str, where=None):
        super().__init__(message)
        self.where = where


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t_k = t_start + k*h, k = 0..n_steps."""

    t_start: float
    t_end: float
    n_steps: int

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ValueError(f"t_end ({self.t_end}) must exceed t_start ({self.t_start})")
        if int(self.n_steps) != self.n_steps or self.n_steps < 2:
            raise ValueError(f"n_steps must be an integer >= 2, got {self.n_steps}")
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @classmethod
    def default(cls) -> "TimeGrid":
        return cls(0.0, 20.0, 8000)

    @property
    def h(self) -> float:
        return (self.t_end - self.t_start) / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.h * np.arange(self.n_steps + 1)

    def __len__(self) -> int:
        return self.n_steps + 1

    def refined(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.t_start, self.t_end, self.n_steps * factor)


def _frozen(values) -> np.ndarray:
    arr = np.array(values)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ComplexTrajectory:
    """Samples of a (complex or real) function of time on a TimeGrid."""

    grid: TimeGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = _frozen(self.values)
        if values.shape != (len(self.grid),):
            raise ValueError(
                f"expected {len(self.grid)} samples, got shape {values.shape}")
        bad = ~np.isfinite(values)
        if bad.any():
            k = int(np.argmax(bad))
            raise NonFiniteError(
                f"non-finite trajectory value at t={self.grid.times[k]:.6g}",
                where=self.grid.times[k])
        object.__setattr__(self, "values", values)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def real(self) -> np.ndarray:
        return np.real(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, k):
        return self.values[k]

    def at(self, t) -> np.ndarray:
        """Linear interpolation between samples."""
        v = self.values
        if np.iscomplexobj(v):
            return np.interp(t, self.times, v.real) + 1j * np.interp(t, self.times, v.imag)
        return np.interp(t, self.times, v)


@dataclass(frozen=True)
class FrequencyQuadrature:
    """Nodes and weights for integrals over [0, cutoff]."""

    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    peak: float
    cutoff: float

    def __post_init__(self):
        object.__setattr__(self, "nodes", _frozen(self.nodes))
        object.__setattr__(self, "weights", _frozen(self.weights))

    def __len__(self) -> int:
        return len(self.nodes)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


@lru_cache(maxsize=8)
def _legendre_rule(n: int):
    u, w = np.polynomial.legendre.leggauss(n)
    u.setflags(write=False)
    w.setflags(write=False)
    return u, w


def build_frequency_quadrature(params, n_nodes: int = 2000,
                               cutoff_widths: float = 40.0) -> FrequencyQuadrature:
    """Gauss-Legendre rule in theta with omega = peak + lambda*tan(theta).

    The substitution packs nodes around the Lorentzian peak omega0 - delta
    and spreads them out in the tails. The interval is [0, omega_cut] with
    omega_cut = max(omega0 - delta, omega0) + cutoff_widths * lambda.
    """
    if n_nodes < 64:
        raise ValueError(f"n_nodes must be >= 64, got {n_nodes}")
    lam = params.lam
    peak = params.omega0 - params.delta
    cutoff = max(peak, params.omega0) + cutoff_widths * lam
    if not cutoff > max(peak, 0.0):
        raise ValueError(f"cutoff {cutoff} lies below the spectral peak {peak}")
    th_lo = np.arctan((0.0 - peak) / lam)
    th_hi = np.arctan((cutoff - peak) / lam)
    u, wu = _legendre_rule(int(n_nodes))
    half = 0.5 * (th_hi - th_lo)
    theta = half * u + 0.5 * (th_hi + th_lo)
    nodes = peak + lam * np.tan(theta)
    weights = half * wu * lam / np.cos(theta) ** 2
    return FrequencyQuadrature(nodes=nodes, weights=weights, peak=peak, cutoff=cutoff)


def _sample_kernel(kernel: Callable, lags: np.ndarray) -> np.ndarray:
    try:
        k = np.asarray(kernel(lags), dtype=complex)
        if k.shape != lags.shape:
            raise ValueError
    except (TypeError, ValueError):
        k = np.array([complex(kernel(s)) for s in lags])
    bad = ~np.isfinite(k)
    if bad.any():
        j = int(np.argmax(bad))
        raise NonFiniteError(f"kernel is not finite at t={lags[j]:.6g}", where=lags[j])
    return k


def solve_volterra(kernel: Callable, omega0: float, grid: TimeGrid) -> ComplexTrajectory:
    """Solve G' + i*omega0*G + int_0^t K(t-s) G(s) ds = 0 with G(0) = 1.

    The free phase exp(-i*omega0*t) is split off exactly, so the solver works
    on the slowly varying envelope g = G*exp(i*omega0*t), which obeys
    g' = -int_0^t K(t-s) exp(i*omega0*(t-s)) g(s) ds. The convolution is
    evaluated with the trapezoidal product rule and each step is an explicit
    Euler predictor followed by one trapezoidal corrector; O(h^2) overall.
    """
    h = grid.h
    n = grid.n_steps
    lags = h * np.arange(n + 1)
    kr = _sample_kernel(kernel, lags) * np.exp(1j * omega0 * lags)

    g = np.zeros(n + 1, dtype=complex)
    g[0] = 1.0
    slope = np.zeros(n + 1, dtype=complex)  # g'(t_k)
    for k in range(n):
        m = k + 1
        # trapezoid sum for t_m without the unknown g[m]
        partial = 0.5 * kr[m] * g[0]
        if m > 1:
            partial += np.dot(kr[m - 1:0:-1], g[1:m])
        g_pred = g[k] + h * slope[k]
        slope_pred = -h * (partial + 0.5 * kr[0] * g_pred)
        g[m] = g[k] + 0.5 * h * (slope[k] + slope_pred)
        slope[m] = -h * (partial + 0.5 * kr[0] * g[m])
        if not np.isfinite(g[m]):
            raise NonFiniteError(f"Volterra solution diverged at t={grid.times[m]:.6g}",
                                 where=grid.times[m])
    return ComplexTrajectory(grid, g * np.exp(-1j * omega0 * lags))


def integrate_ode(rhs: Callable, y0, grid: TimeGrid) -> np.ndarray:
    """Classical RK4 on a fixed grid. Returns an array of shape (len(grid), *y0.shape)."""
    y0 = np.asarray(y0)
    dtype = np.result_type(y0, float)
    out = np.empty((len(grid),) + y0.shape, dtype=dtype)
    out[0] = y0
    h = grid.h
    times = grid.times
    y = out[0].copy()
    for k in range(grid.n_steps):
        t = times[k]
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise NonFiniteError(f"ODE state became non-finite at step {k + 1}", where=k + 1)
        out[k + 1] = y
    return out


def cumulative_trapezoid(values, grid: TimeGrid) -> np.ndarray:
    """Running trapezoidal integral starting at 0."""
    v = np.asarray(values)
    out = np.zeros_like(v)
    out[1:] = np.cumsum(0.5 * grid.h * (v[1:] + v[:-1]))
    return out


def forward_difference(values, h: float) -> np.ndarray:
    """Forward differences padded with the last one so the length is kept."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return np.zeros_like(v)
    d = np.diff(v) / h
    return np.append(d, d[-1])


def positive_part_integral(traj) -> float:
    """Integral of max(sigma, 0) where sigma is the forward-difference rate.

    Equivalent to the sum of the positive increments of the samples.
    """
    v = np.real(np.asarray(getattr(traj, "values", traj)))
    if v.size < 2:
        return 0.0
    inc = np.diff(v)
    return float(np.sum(inc[inc > 0.0]))


def linear_interpolant(values, grid: TimeGrid) -> Callable:
    """Piecewise-linear lookup of grid samples along axis 0, clamped to the grid ends.

    Values at nodes and midpoints, the only points RK4 visits, are tabulated
    once so those calls are a single index operation.
    """
    v = np.asarray(values)
    t0, h, n = grid.t_start, grid.h, grid.n_steps
    half = np.empty((2 * n + 1,) + v.shape[1:], dtype=v.dtype)
    half[0::2] = v
    half[1::2] = 0.5 * (v[:-1] + v[1:])

    def at(t):
        s2 = 2.0 * (t - t0) / h
        j = int(round(s2))
        if abs(s2 - j) < 1e-9 and 0 <= j <= 2 * n:
            return half[j]
        s = s2 / 2.0
        k = min(max(int(s), 0), n - 1)
        frac = s - k
        return v[k] + frac * (v[k + 1] - v[k])

    return at
