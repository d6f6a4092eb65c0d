"""First and second moments of the system mode, and the Gaussian states they define."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bath import SpectralParams
from .coefficients import MasterEqCoefficients, NoiseIntegral, Order, noise_integral
from .green import envelope_exact
from .numerics import (FrequencyQuadrature, TimeGrid, integrate_ode,
                       linear_interpolant)

NEGATIVE_N_TOL = 1e-6
UNPHYSICAL_TOL = 1e-6


@dataclass(frozen=True)
class Moments:
    """<a>, <aa> and <a^dag a> of one mode."""

    a_mean: complex
    aa_mean: complex
    n_mean: float

    @classmethod
    def coherent(cls, alpha: complex) -> "Moments":
        alpha = complex(alpha)
        return cls(alpha, alpha * alpha, abs(alpha) ** 2)

    @classmethod
    def thermal(cls, nbar: float) -> "Moments":
        return cls(0j, 0j, float(nbar))

    @classmethod
    def vacuum(cls) -> "Moments":
        return cls(0j, 0j, 0.0)

    def scaled(self, c: complex) -> "Moments":
        return Moments(c * self.a_mean, c * c * self.aa_mean, abs(c) ** 2 * self.n_mean)


@dataclass(frozen=True)
class MomentTrajectory:
    grid: TimeGrid
    a_mean: np.ndarray = field(repr=False)
    aa_mean: np.ndarray = field(repr=False)
    n_mean: np.ndarray = field(repr=False)
    order: Order = Order.EXACT
    label: str = ""

    def __len__(self):
        return len(self.a_mean)

    def __getitem__(self, k) -> Moments:
        return Moments(complex(self.a_mean[k]), complex(self.aa_mean[k]), float(self.n_mean[k]))

    @property
    def negative_n(self) -> np.ndarray:
        """Nodes where <a^dag a> dips below -1e-6 (positivity violated)."""
        return self.n_mean < -NEGATIVE_N_TOL

    def gaussian_path(self) -> "GaussianPath":
        return gaussian_path(self)


@dataclass(frozen=True)
class GaussianState:
    """Displacement (<X>, <P>) and covariance matrix, X = (a + a^dag)/sqrt2."""

    d: np.ndarray
    cov: np.ndarray

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.cov))

    @property
    def physical(self) -> bool:
        return self.det >= 0.25 - UNPHYSICAL_TOL


@dataclass(frozen=True)
class GaussianPath:
    """Gaussian states along a trajectory, stored as arrays (N, 2) and (N, 2, 2)."""

    d: np.ndarray = field(repr=False)
    cov: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.d)

    def __getitem__(self, k) -> GaussianState:
        return GaussianState(self.d[k], self.cov[k])

    @property
    def det(self) -> np.ndarray:
        c = self.cov
        return c[:, 0, 0] * c[:, 1, 1] - c[:, 0, 1] * c[:, 1, 0]

    @property
    def unphysical(self) -> np.ndarray:
        return self.det < 0.25 - UNPHYSICAL_TOL

    @classmethod
    def from_states(cls, states: Sequence[GaussianState]) -> "GaussianPath":
        return cls(np.array([s.d for s in states]), np.array([s.cov for s in states]))


def _gaussian_arrays(a, aa, n):
    a = np.asarray(a, dtype=complex)
    aa = np.asarray(aa, dtype=complex)
    n = np.asarray(n, dtype=float)
    d = np.sqrt(2.0) * np.stack([a.real, a.imag], axis=-1)
    vx = aa.real + n + 0.5 - 2 * a.real**2
    vp = -aa.real + n + 0.5 - 2 * a.imag**2
    cxp = aa.imag - 2 * a.real * a.imag
    cov = np.stack([np.stack([vx, cxp], axis=-1), np.stack([cxp, vp], axis=-1)], axis=-2)
    return d, cov


def moments_to_gaussian(m: Moments) -> GaussianState:
    d, cov = _gaussian_arrays(m.a_mean, m.aa_mean, m.n_mean)
    return GaussianState(d, cov)


def gaussian_path(traj: MomentTrajectory) -> GaussianPath:
    d, cov = _gaussian_arrays(traj.a_mean, traj.aa_mean, traj.n_mean)
    return GaussianPath(d, cov)


def _as_list(m0):
    if isinstance(m0, Moments):
        return [m0], True
    return list(m0), False


def propagate_exact(params: SpectralParams, m0, grid: TimeGrid,
                    quad: FrequencyQuadrature | None = None,
                    noise: NoiseIntegral | None = None,
                    workers: int = 1):
    """<a>_t = G <a>_0, <aa>_t = G^2 <aa>_0, <a^dag a>_t = |G|^2 <a^dag a>_0 + I(t).

    Accepts one Moments or a sequence of them; the noise integral is shared.
    """
    states, single = _as_list(m0)
    t = grid.times - grid.t_start
    G = envelope_exact(params, t) * np.exp(-1j * params.omega0 * t)
    if noise is None:
        noise = noise_integral(params, grid, Order.EXACT, quad, workers=workers)
    absg2 = np.abs(G) ** 2
    out = [MomentTrajectory(grid, G * m.a_mean, G * G * m.aa_mean,
                            absg2 * m.n_mean + noise.value, Order.EXACT)
           for m in states]
    return out[0] if single else out


def propagate_tcl(coeffs: MasterEqCoefficients, m0, grid: TimeGrid | None = None):
    """Integrate the moment equations with the given coefficient trajectories.

    d<a>/dt = -(i w_r + g/2)<a>,  d<aa>/dt = -(2i w_r + g)<aa>,
    d<n>/dt = -g <n> + g_plus.
    The phases are integrated in a frame rotating at omega_r(0); RK4 runs
    on the fixed grid with linear interpolation of the coefficients.
    """
    grid = coeffs.grid if grid is None else grid
    if grid != coeffs.grid:
        raise ValueError("coefficients are sampled on a different grid")
    states, single = _as_list(m0)
    w_ref = float(coeffs.omega_r[0])
    dw = coeffs.omega_r - w_ref
    g = coeffs.gamma
    # the system is linear, y' = A(t) y + b(t); A and b are linear in the coefficients
    rates = np.stack([-(1j * dw + 0.5 * g), -(2j * dw + g), -g.astype(complex)], axis=1)
    source = np.zeros_like(rates)
    source[:, 2] = coeffs.gamma_plus
    a_of = linear_interpolant(rates[:, :, None], grid)
    b_of = linear_interpolant(source[:, :, None], grid)

    def rhs(t, y):
        return a_of(t) * y + b_of(t)

    y0 = np.array([[m.a_mean for m in states], [m.aa_mean for m in states],
                   [m.n_mean for m in states]], dtype=complex)
    ys = integrate_ode(rhs, y0, grid)
    t = grid.times - grid.t_start
    rot = np.exp(-1j * w_ref * t)[:, None]
    a = ys[:, 0, :] * rot
    aa = ys[:, 1, :] * rot**2
    n = ys[:, 2, :].real
    out = [MomentTrajectory(grid, a[:, j], aa[:, j], n[:, j], coeffs.order)
           for j in range(len(states))]
    return out[0] if single else out
