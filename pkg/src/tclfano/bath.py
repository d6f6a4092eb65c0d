"""Lorentzian bath: spectral densities, thermal occupation, memory kernel.

Units: hbar = k_B = 1, every frequency in the same arbitrary unit.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class SpectralParams:
    """Bath and system parameters.

    gamma0      Markovian emission rate (weight of the Lorentzian)
    lam         Lorentzian width lambda
    delta       detuning; the spectral peak sits at omega0 - delta
    omega0      bare system frequency
    big_omega   low-frequency exponent of the modified density
    omega_m     frequency below which the density is suppressed
    temperature bath temperature, beta = 1/temperature
    """

    gamma0: float = 0.2
    lam: float = 1.0
    delta: float = 0.4
    omega0: float = 10.0
    big_omega: float = 2.0
    omega_m: float = 1.0
    temperature: float = 10.0

    def __post_init__(self):
        checks = [
            (self.gamma0 > 0, "gamma0 must be positive"),
            (self.lam > 0, "lambda must be positive"),
            (self.omega0 > 0, "omega0 must be positive"),
            (self.big_omega >= 1, "big_omega must be >= 1"),
            (0 < self.omega_m < self.omega0, "omega_m must lie in (0, omega0)"),
            (self.temperature > 0, "temperature must be positive"),
            (np.isfinite(self.delta), "delta must be finite"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(f"{msg} ({self})")

    @property
    def beta(self) -> float:
        return 1.0 / self.temperature

    @property
    def peak(self) -> float:
        return self.omega0 - self.delta

    def with_(self, **changes) -> "SpectralParams":
        return replace(self, **changes)


class Regime(enum.Enum):
    WEAK = "weak"
    STRONG = "strong"


@dataclass(frozen=True)
class CouplingRegime:
    alpha_sq: float
    radius: float
    classification: Regime


def lorentzian_density(params: SpectralParams, omega):
    """J_L(w) = gamma0/(2 pi) * lam^2 / (lam^2 + (w - omega0 + delta)^2)."""
    lam = params.lam
    w = np.asarray(omega, dtype=float)
    out = params.gamma0 / (2 * np.pi) * lam**2 / (lam**2 + (w - params.peak) ** 2)
    return out if out.ndim else float(out)


def modified_density(params: SpectralParams, omega):
    """Lorentzian with (w/omega_m)^Omega suppression below omega_m."""
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise ValueError("modified_density is defined for omega >= 0 only")
    jl = lorentzian_density(params, w)
    factor = np.where(w <= params.omega_m, (w / params.omega_m) ** params.big_omega, 1.0)
    out = factor * jl
    return out if np.ndim(out) else float(out)


def bose_occupation(params: SpectralParams, omega):
    """1 / (exp(beta*w) - 1), evaluated without overflow."""
    w = np.asarray(omega, dtype=float)
    if np.any(w <= 0):
        raise ValueError("bose_occupation requires omega > 0")
    x = params.beta * w
    out = np.exp(-x) / -np.expm1(-x)
    return out if out.ndim else float(out)


def thermal_weight(params: SpectralParams, omega):
    """J(w) n(w) with the w -> 0 limit filled in (0 for Omega > 1).

    For Omega = 1 the limit is finite, J_L(0) * T / omega_m.
    """
    w = np.asarray(omega, dtype=float)
    out = np.empty_like(w)
    pos = w > 0
    out[pos] = modified_density(params, w[pos]) * bose_occupation(params, w[pos])
    zero = ~pos
    if zero.any():
        if params.big_omega > 1:
            out[zero] = 0.0
        else:
            out[zero] = lorentzian_density(params, 0.0) * params.temperature / params.omega_m
    return out if out.ndim else float(out)


def memory_kernel(params: SpectralParams, t):
    """K(t) = (gamma0*lam/2) exp(-(lam + i(omega0 - delta)) t), full-line Lorentzian."""
    t = np.asarray(t, dtype=float)
    out = 0.5 * params.gamma0 * params.lam * np.exp(-(params.lam + 1j * params.peak) * t)
    return out if out.ndim else complex(out)


def convergence_radius(lam: float, delta):
    """R = (1 + delta^2/lam^2) / 2."""
    return 0.5 * (1.0 + np.asarray(delta, dtype=float) ** 2 / lam**2)


def coupling_regime(params: SpectralParams) -> CouplingRegime:
    alpha_sq = params.gamma0 / params.lam
    radius = float(convergence_radius(params.lam, params.delta))
    cls = Regime.WEAK if alpha_sq < radius else Regime.STRONG
    return CouplingRegime(alpha_sq=alpha_sq, radius=radius, classification=cls)
