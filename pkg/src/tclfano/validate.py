"""Self-checks run by ``tclfano validate``; each compares against an independent oracle."""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import sqrtm
from scipy.special import gammaln

from .bath import Regime, SpectralParams, coupling_regime, memory_kernel
from .coefficients import Order, exact_coefficients, gamma2_trajectory, gamma4_trajectory, noise_integral
from .dynamics import Moments, moments_to_gaussian, propagate_exact, propagate_tcl
from .green import envelope_log_derivative, exact_green
from .metrics import bures_trajectory, coherent_pair, gaussian_fidelity
from .numerics import TimeGrid, build_frequency_quadrature, solve_volterra


class Status(enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    XFAIL = "XFAIL"  # failed where failure is expected (divergent regime)


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: Status
    measured: float
    threshold: str
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        text = f"{self.status.value:5s} {self.name}: measured {self.measured:.6g} (want {self.threshold})"
        if self.detail:
            text += f"; {self.detail}"
        return text


# --------------------------------------------------------------------------
# Fock-space oracles (truncated number basis)

def fock_coherent(alpha: complex, dim: int = 60) -> np.ndarray:
    n = np.arange(dim)
    logmag = -0.5 * abs(alpha) ** 2 + n * np.log(abs(alpha) + 1e-300) - 0.5 * gammaln(n + 1)
    amp = np.exp(logmag) * np.exp(1j * n * np.angle(alpha))
    if alpha == 0:
        amp = (n == 0).astype(complex)
    return np.outer(amp, amp.conj())


def fock_thermal(nbar: float, dim: int = 60) -> np.ndarray:
    n = np.arange(dim)
    p = (nbar / (nbar + 1)) ** n / (nbar + 1)
    return np.diag(p).astype(complex)


def fock_fidelity(rho1: np.ndarray, rho2: np.ndarray) -> float:
    """(Tr sqrt(sqrt(rho1) rho2 sqrt(rho1)))^2."""
    s1 = sqrtm(rho1)
    return float(np.real(np.trace(sqrtm(s1 @ rho2 @ s1))) ** 2)


# --------------------------------------------------------------------------
# quantities shared with the test-suite

def volterra_error(params: SpectralParams, grid: TimeGrid) -> float:
    num = solve_volterra(lambda s: memory_kernel(params, s), params.omega0, grid)
    return float(np.max(np.abs(num.values - exact_green(params, grid).values)))


def order_scaling_ratios(params: SpectralParams, grid: TimeGrid) -> tuple[float, float]:
    """Shrink factors of the TCL2 and TCL4 residuals in gamma when gamma0 is halved."""
    t = grid.times - grid.t_start

    def residuals(p):
        with np.errstate(all="ignore"):
            ge = -2.0 * envelope_log_derivative(p, t).real
        ok = np.isfinite(ge)
        r2 = ge - gamma2_trajectory(p, t)
        r4 = r2 - gamma4_trajectory(p, t)
        return np.max(np.abs(r2[ok])), np.max(np.abs(r4[ok]))

    a2, a4 = residuals(params)
    b2, b4 = residuals(params.with_(gamma0=params.gamma0 / 2))
    return a2 / b2, a4 / b4


def rate_fd_error(params: SpectralParams, grid: TimeGrid, order: Order = Order.EXACT) -> float:
    """max |central difference of I - dI/dt| relative to max |dI/dt|."""
    ni = noise_integral(params, grid, order)
    fd = np.gradient(ni.value, grid.h, edge_order=2)
    return float(np.max(np.abs(fd - ni.rate)) / np.max(np.abs(ni.rate)))


def moment_oracle_error(params: SpectralParams, grid: TimeGrid) -> float:
    """propagate_tcl with exact coefficients vs the closed forms, relative."""
    quad = build_frequency_quadrature(params)
    noise = noise_integral(params, grid, Order.EXACT, quad)
    states = [*coherent_pair(), Moments.thermal(1.0)]
    closed = propagate_exact(params, states, grid, quad, noise=noise)
    ode = propagate_tcl(exact_coefficients(params, grid, quad, noise=noise), states, grid)
    worst = 0.0
    for a, b in zip(closed, ode):
        for f in ("a_mean", "aa_mean", "n_mean"):
            x, y = getattr(a, f), getattr(b, f)
            scale = np.max(np.abs(x))
            if scale > 0:
                worst = max(worst, float(np.max(np.abs(x - y)) / scale))
    return worst


def contraction_violation(params: SpectralParams, grid: TimeGrid) -> tuple[float, int]:
    """Largest per-step Bures increase on steps where exact gamma_plus, gamma_minus >= 0.

    Returns (largest increase, number of such steps).
    """
    quad = build_frequency_quadrature(params)
    noise = noise_integral(params, grid, Order.EXACT, quad)
    co = exact_coefficients(params, grid, quad, noise=noise)
    a, b = propagate_exact(params, list(coherent_pair()), grid, quad, noise=noise)
    d = bures_trajectory(a, b, grid).values
    cp = (co.gamma_plus >= 0) & (co.gamma_minus >= 0) & ~co.singular
    step_ok = cp[:-1] & cp[1:]
    inc = np.diff(d)[step_ok]
    return (float(np.max(inc)) if inc.size else 0.0), int(step_ok.sum())


# --------------------------------------------------------------------------

def _check(name, fn: Callable[[], float], ok: Callable[[float], bool], threshold: str,
           expect_fail: bool = False, detail: str = "") -> CheckResult:
    t0 = time.perf_counter()
    try:
        value = fn()
        passed = ok(value)
    except Exception as exc:  # a crash is a failed check, reported not raised
        value, passed, detail = float("nan"), False, f"{type(exc).__name__}: {exc}"
    if passed:
        status = Status.PASS
    else:
        status = Status.XFAIL if expect_fail else Status.FAIL
    return CheckResult(name, status, value, threshold, detail, time.perf_counter() - t0)


def run_validation(params: SpectralParams, grid: TimeGrid) -> list[CheckResult]:
    regime = coupling_regime(params)
    strong = regime.classification is Regime.STRONG
    results = []

    results.append(_check("volterra vs closed-form G", lambda: volterra_error(params, grid),
                          lambda v: v < 1e-5, "< 1e-5"))

    ratios = {}

    # one halving below the requested coupling, so the leading power dominates
    half = params.with_(gamma0=params.gamma0 / 2)

    def r2():
        ratios["r"] = order_scaling_ratios(half, grid)
        return ratios["r"][0]

    note = f"alpha^2 = {regime.alpha_sq:.3g}, R = {regime.radius:.3g}"
    note += " (divergent regime, failure expected)" if strong else ""
    results.append(_check("TCL2 residual ratio, gamma0/2 vs gamma0/4", r2,
                          lambda v: 3 <= v <= 5, "in [3, 5]", strong, note))
    results.append(_check("TCL4 residual ratio, gamma0/2 vs gamma0/4",
                          lambda: ratios["r"][1] if "r" in ratios else float("nan"),
                          lambda v: 6 <= v <= 10, "in [6, 10]", strong, note))

    results.append(_check("finite-difference dI/dt vs analytic",
                          lambda: rate_fd_error(params, grid), lambda v: v < 1e-3, "< 1e-3"))
    results.append(_check("moment ODE vs closed forms", lambda: moment_oracle_error(params, grid),
                          lambda v: v < 1e-4, "< 1e-4", strong,
                          "exact rates diverge where G vanishes" if strong else ""))

    vac = moments_to_gaussian(Moments.vacuum())
    alpha = 0.11 + 0.22j
    results.append(_check("fidelity F(s, s)",
                          lambda: abs(gaussian_fidelity(vac, vac) - 1.0),
                          lambda v: v < 1e-10, "< 1e-10"))
    results.append(_check(
        "fidelity of |a> and |-a> vs exp(-4|a|^2)",
        lambda: abs(gaussian_fidelity(moments_to_gaussian(Moments.coherent(alpha)),
                                      moments_to_gaussian(Moments.coherent(-alpha)))
                    - math.exp(-4 * abs(alpha) ** 2)),
        lambda v: v < 1e-6, "< 1e-6"))
    results.append(_check(
        "fidelity vacuum vs thermal(1) vs Fock (dim 60)",
        lambda: abs(gaussian_fidelity(vac, moments_to_gaussian(Moments.thermal(1.0)))
                    - fock_fidelity(fock_coherent(0, 60), fock_thermal(1.0, 60))),
        lambda v: v < 1e-4, "< 1e-4"))

    results.append(_check("Bures contraction where gamma_plus, gamma_minus >= 0",
                          lambda: contraction_violation(params, grid)[0],
                          lambda v: v < 1e-4, "< 1e-4"))
    return results


def summary(results: list[CheckResult]) -> tuple[int, int, int]:
    counts = {s: sum(r.status is s for r in results) for s in Status}
    return counts[Status.PASS], counts[Status.FAIL], counts[Status.XFAIL]


__all__ = ["Status", "CheckResult", "run_validation", "summary", "fock_coherent", "fock_thermal",
           "fock_fidelity", "volterra_error", "order_scaling_ratios", "rate_fd_error",
           "moment_oracle_error", "contraction_violation"]
