"""Coefficients of the time-local master equation at orders Exact, TCL2, TCL4.

The master equation has a renormalized frequency omega_r(t), a total rate
gamma(t) and absorption rate gamma_plus(t) = gamma*I + dI/dt, where I(t) is
the noise integral; the emission rate is gamma_minus = gamma + gamma_plus.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .bath import SpectralParams, bose_occupation, modified_density, thermal_weight
from .green import envelope_exact, envelope_log_derivative, gtilde2, roots
from .numerics import FrequencyQuadrature, NonFiniteError, TimeGrid, build_frequency_quadrature

SINGULAR_TOL = 1e-10
N_EFF_TOL = 1e-12
# complex entries per node chunk in the noise integral (memory bound)
_CHUNK_ELEMENTS = 1_500_000


class Order(enum.Enum):
    EXACT = "exact"
    TCL2 = "tcl2"
    TCL4 = "tcl4"

    @classmethod
    def parse(cls, text: str) -> "Order":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown order {text!r}; expected exact, tcl2 or tcl4") from None


@dataclass(frozen=True)
class NoiseIntegral:
    """I(t) and dI/dt at a given order.

    For TCL4, ``value``/``rate`` are the second- plus fourth-order sums and the
    second-order parts are kept in ``value2``/``rate2``.
    """

    order: Order
    value: np.ndarray = field(repr=False)
    rate: np.ndarray = field(repr=False)
    value2: np.ndarray | None = field(default=None, repr=False)
    rate2: np.ndarray | None = field(default=None, repr=False)

    def __iter__(self):
        return iter((self.value, self.rate))


@dataclass(frozen=True)
class MasterEqCoefficients:
    grid: TimeGrid
    order: Order
    omega_r: np.ndarray = field(repr=False)
    gamma: np.ndarray = field(repr=False)
    gamma_plus: np.ndarray = field(repr=False)
    gamma_minus: np.ndarray = field(repr=False)
    singular: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.singular is None:
            object.__setattr__(self, "singular", np.zeros(len(self.grid), dtype=bool))

    @property
    def n_singular(self) -> int:
        return int(np.count_nonzero(self.singular))

    @property
    def n_eff(self) -> np.ndarray:
        """N(t) = gamma_plus/gamma, NaN where |gamma| <= 1e-12."""
        out = np.full_like(self.gamma, np.nan)
        ok = np.abs(self.gamma) > N_EFF_TOL
        out[ok] = self.gamma_plus[ok] / self.gamma[ok]
        return out

    def tail_mean(self, fraction: float = 0.1) -> dict:
        k = max(1, int(round(fraction * len(self.grid))))
        return {name: float(np.mean(getattr(self, name)[-k:]))
                for name in ("omega_r", "gamma", "gamma_plus", "gamma_minus")}


@dataclass(frozen=True)
class SteadyState:
    order: Order
    omega_r_st: float
    gamma_st: float
    gamma_plus_st: float
    terms: dict = field(default_factory=dict)


# --------------------------------------------------------------------------
# noise integral

def _step_weights(theta: np.ndarray):
    """h-normalised weights of the linear interpolant against exp(i theta s), s in [0, 1].

    Returns (int (1-s) e^{i theta s} ds, int s e^{i theta s} ds).
    """
    theta = np.asarray(theta, dtype=float)
    e1 = np.empty(theta.shape, dtype=complex)
    e2 = np.empty(theta.shape, dtype=complex)
    small = np.abs(theta) < 1e-2
    big = ~small
    it = 1j * theta[big]
    ex = np.exp(it)
    e1[big] = (ex - 1) / it
    e2[big] = ex / it - (ex - 1) / it**2
    it = 1j * theta[small]
    e1[small] = 1 + it / 2 + it**2 / 6 + it**3 / 24 + it**4 / 120 + it**5 / 720
    e2[small] = 0.5 + it / 3 + it**2 / 8 + it**3 / 30 + it**4 / 144 + it**5 / 840
    return e1 - e2, e2


def _cumulate(x: np.ndarray, phase: np.ndarray, env: np.ndarray | None, h: float) -> np.ndarray:
    """F(x, t_k) = int_0^{t_k} env(s) exp(i x s) ds for the piecewise-linear env.

    The exponential is integrated exactly on each step. env=None means env == 1.
    """
    w0, w1 = _step_weights(x * h)
    if env is None:
        inc = phase[:, :-1] * (h * (w0 + w1))[:, None]
    else:
        inc = phase[:, :-1] * (h * w0[:, None] * env[None, :-1] + h * w1[:, None] * env[None, 1:])
    F = np.empty_like(phase)
    F[:, 0] = 0.0
    np.cumsum(inc, axis=1, out=F[:, 1:])
    return F


def _chunk_terms(params, order, x, wf, t, h, env_exact, gt2):
    phase = np.exp(1j * np.outer(x, t))
    out = {}
    if order is Order.TCL4:
        F0 = _cumulate(x, phase, None, h)
        F2 = _cumulate(x, phase, gt2, h)
        pc0 = phase * np.conj(F0)
        out["I2"] = wf @ (F0.real**2 + F0.imag**2)
        out["S0"] = wf @ pc0
        out["I4"] = 2.0 * (wf @ (F2 * np.conj(F0))).real
        out["S2"] = wf @ (F2 * np.conj(phase))
        arrays = (F0, F2)
    else:
        env = env_exact if order is Order.EXACT else None
        F = _cumulate(x, phase, env, h)
        out["I"] = wf @ (F.real**2 + F.imag**2)
        out["S"] = wf @ (phase * np.conj(F))
        arrays = (F,)
    for arr in arrays:
        finite = np.isfinite(arr).all(axis=1)
        if not finite.all():
            j = int(np.argmin(finite))
            w = params.omega0 + x[j]
            raise NonFiniteError(f"noise integral not finite at frequency node omega={w:.6g}",
                                 where=w)
    return out


def noise_integral(params: SpectralParams, grid: TimeGrid, order: Order,
                   quad: FrequencyQuadrature | None = None, workers: int = 1) -> NoiseIntegral:
    """Noise integral I(t) = int dw J(w) n(w) |int_0^t G(s) e^{iws} ds|^2 and dI/dt.

    G is the exact Green function (Exact), the free one (TCL2), or free plus
    second-order correction with only the order-gamma0^2 cross term kept
    (TCL4). dI/dt is obtained by differentiating under the integral sign.
    """
    order = Order(order)
    if quad is None:
        quad = build_frequency_quadrature(params)
    t = grid.times - grid.t_start
    h = grid.h
    x = quad.nodes - params.omega0
    wf = quad.weights * thermal_weight(params, quad.nodes)

    env_exact = envelope_exact(params, t) if order is Order.EXACT else None
    gt2 = gtilde2(params, grid)[0].values if order is Order.TCL4 else None

    chunk = max(1, _CHUNK_ELEMENTS // len(t))
    slices = [slice(i, i + chunk) for i in range(0, len(x), chunk)]

    def run(sl):
        return _chunk_terms(params, order, x[sl], wf[sl], t, h, env_exact, gt2)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, slices))
    else:
        parts = [run(sl) for sl in slices]
    total = {key: sum(p[key] for p in parts) for key in parts[0]}

    if order is Order.TCL4:
        i2 = total["I2"]
        r2 = 2.0 * total["S0"].real
        i4 = total["I4"]
        r4 = 2.0 * (gt2 * total["S0"] + total["S2"]).real
        return NoiseIntegral(order, i2 + i4, r2 + r4, value2=i2, rate2=r2)
    env = env_exact if order is Order.EXACT else 1.0
    return NoiseIntegral(order, total["I"], 2.0 * (env * total["S"]).real)


# --------------------------------------------------------------------------
# coefficient trajectories

def _bridge(values: np.ndarray, bad: np.ndarray, times: np.ndarray) -> np.ndarray:
    if not bad.any():
        return values
    good = ~bad
    out = values.copy()
    out[bad] = np.interp(times[bad], times[good], values[good])
    return out


def exact_coefficients(params: SpectralParams, grid: TimeGrid,
                       quad: FrequencyQuadrature | None = None,
                       noise: NoiseIntegral | None = None,
                       workers: int = 1) -> MasterEqCoefficients:
    t = grid.times - grid.t_start
    env = envelope_exact(params, t)
    ratio = envelope_log_derivative(params, t)
    singular = (np.abs(env) < SINGULAR_TOL) | ~np.isfinite(ratio)
    # a zero of G between two nodes shows up as a phase jump of more than pi/2
    jump = np.abs(np.angle(env[1:] * np.conj(env[:-1]))) > 0.5 * np.pi
    singular[1:] |= jump
    singular[:-1] |= jump
    if singular.all():
        raise NonFiniteError("Green function vanishes on the whole grid")
    ratio = np.where(singular, 0.0, ratio)
    omega_r = params.omega0 - ratio.imag
    gamma = -2.0 * ratio.real
    if noise is None:
        noise = noise_integral(params, grid, Order.EXACT, quad, workers=workers)
    gamma_plus = gamma * noise.value + noise.rate
    omega_r = _bridge(omega_r, singular, t)
    gamma = _bridge(gamma, singular, t)
    gamma_plus = _bridge(gamma_plus, singular, t)
    return MasterEqCoefficients(grid, Order.EXACT, omega_r, gamma, gamma_plus,
                                gamma + gamma_plus, singular)


def gamma2_trajectory(params: SpectralParams, t) -> np.ndarray:
    lam, d, g0 = params.lam, params.delta, params.gamma0
    s = lam**2 + d**2
    e = np.exp(-lam * np.asarray(t, dtype=float))
    return (g0 * lam * d / s) * np.sin(d * t) * e + (g0 * lam**2 / s) * (1 - np.cos(d * t) * e)


def omega2_trajectory(params: SpectralParams, t) -> np.ndarray:
    """Second-order frequency shift omega_r^(2)(t) (without omega0)."""
    lam, d, g0 = params.lam, params.delta, params.gamma0
    s = lam**2 + d**2
    e = np.exp(-lam * np.asarray(t, dtype=float))
    return (g0 * lam * d / (2 * s)) * (1 - np.cos(d * t) * e) - (g0 * lam**2 / (2 * s)) * np.sin(d * t) * e


def gamma4_trajectory(params: SpectralParams, t) -> np.ndarray:
    """Fourth-order rate increment gamma^(4)(t)."""
    lam, d, g0 = params.lam, params.delta, params.gamma0
    t = np.asarray(t, dtype=float)
    s = lam**2 + d**2
    e = np.exp(-lam * t)
    # exp(-lam t) is distributed into the bracket to avoid overflow
    bracket = ((1 - e * e * np.cos(2 * d * t)) * (1 - 3 * d**2 / lam**2)
               - 2 * lam * t * e * np.cos(d * t) * (1 - d**4 / lam**4)
               + 4 * d * t * e * (1 + d**2 / lam**2) * np.sin(d * t)
               + (d / lam) * e * e * np.sin(2 * d * t) * (3 - d**2 / lam**2))
    return g0**2 * lam**5 / (2 * s**3) * bracket


def omega4_trajectory(params: SpectralParams, t) -> np.ndarray:
    """Fourth-order frequency shift omega_r^(4)(t); identically 0 at resonance."""
    lam, d, g0 = params.lam, params.delta, params.gamma0
    t = np.asarray(t, dtype=float)
    if d == 0.0:
        return np.zeros_like(t)
    s = lam**2 + d**2
    e = np.exp(-lam * t)
    bracket = ((1 - e * e * np.cos(2 * d * t)) * (1 - 3 * lam**2 / d**2)
               - 2 * d * t * e * np.sin(d * t) * (1 - lam**4 / d**4)
               + 4 * lam * t * e * (1 + lam**2 / d**2) * np.cos(d * t)
               - (lam / d) * e * e * np.sin(2 * d * t) * (3 - lam**2 / d**2))
    return -g0**2 * lam**2 * d**3 / (4 * s**3) * bracket


def tcl2_coefficients(params: SpectralParams, grid: TimeGrid,
                      quad: FrequencyQuadrature | None = None,
                      noise: NoiseIntegral | None = None,
                      workers: int = 1) -> MasterEqCoefficients:
    t = grid.times - grid.t_start
    gamma = gamma2_trajectory(params, t)
    omega_r = params.omega0 + omega2_trajectory(params, t)
    if noise is None:
        noise = noise_integral(params, grid, Order.TCL2, quad, workers=workers)
    gamma_plus = noise.rate
    return MasterEqCoefficients(grid, Order.TCL2, omega_r, gamma, gamma_plus, gamma + gamma_plus)


def tcl4_coefficients(params: SpectralParams, grid: TimeGrid,
                      quad: FrequencyQuadrature | None = None,
                      noise: NoiseIntegral | None = None,
                      workers: int = 1) -> MasterEqCoefficients:
    t = grid.times - grid.t_start
    g2 = gamma2_trajectory(params, t)
    gamma = g2 + gamma4_trajectory(params, t)
    omega_r = params.omega0 + omega2_trajectory(params, t) + omega4_trajectory(params, t)
    if noise is None:
        noise = noise_integral(params, grid, Order.TCL4, quad, workers=workers)
    # gamma_plus^(2) = dI2/dt ; gamma_plus^(4) = dI4/dt + gamma^(2) I2
    gamma_plus = noise.rate + g2 * noise.value2
    return MasterEqCoefficients(grid, Order.TCL4, omega_r, gamma, gamma_plus, gamma + gamma_plus)


def coefficients(params: SpectralParams, grid: TimeGrid, order: Order,
                 quad: FrequencyQuadrature | None = None, workers: int = 1) -> MasterEqCoefficients:
    order = Order(order)
    fn = {Order.EXACT: exact_coefficients, Order.TCL2: tcl2_coefficients,
          Order.TCL4: tcl4_coefficients}[order]
    return fn(params, grid, quad, workers=workers)


# --------------------------------------------------------------------------
# stationary values

def _quad_segments(f, a, b, points) -> float:
    pts = sorted({p for p in points if a < p < b})
    edges = [a, *pts, b]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(f, lo, hi, limit=400, epsabs=1e-13, epsrel=1e-11)
        total += val
    return total


def stationary_noise_integral(params: SpectralParams) -> float:
    """I_st = int_0^inf J n |Ghat(w - omega0)|^2 dw with the exact envelope transform.

    Ghat(x) = 1 / (p + c/(p + lam - i delta)), p = -i x.
    """
    c = 0.5 * params.gamma0 * params.lam
    r = roots(params)

    def integrand(w):
        p = -1j * (w - params.omega0)
        ghat = 1.0 / (p + c / (p + params.lam - 1j * params.delta))
        return thermal_weight(params, np.array([w]))[0] * abs(ghat) ** 2

    res = [params.omega0 - r.s1.imag, params.omega0 - r.s2.imag]
    points = [params.omega_m, params.peak, *res]
    upper = max(params.peak, params.omega0) + 200 * params.lam
    inner = _quad_segments(integrand, 0.0, upper, points)
    tail, _ = integrate.quad(integrand, upper, np.inf, limit=200)
    return inner + tail


def thermal_finite_part(params: SpectralParams) -> float:
    """Hadamard finite part of int f(x)/x^2 dx, f(x) = J(omega0+x) n(omega0+x), x >= -omega0."""
    w0 = params.omega0

    def f(x):
        return thermal_weight(params, np.atleast_1d(w0 + x))

    f0 = float(f(0.0)[0])
    fp0 = f0 * (-2 * params.delta / (params.lam**2 + params.delta**2)
                - params.beta * (1.0 + float(bose_occupation(params, w0))))
    half = 0.5 * min(w0 - params.omega_m, params.lam)

    def regular(x):
        return (float(f(x)[0]) - f0 - x * fp0) / (x * x)

    def outer(x):
        return float(f(x)[0]) / (x * x)

    a = -w0
    centre = _quad_segments(regular, -half, half, [0.0, -params.delta])
    left = _quad_segments(outer, a, -half, [params.omega_m - w0, -params.delta])
    upper = max(half, -params.delta) + 200 * params.lam
    right = _quad_segments(outer, half, upper, [-params.delta])
    right += integrate.quad(outer, upper, np.inf, limit=400)[0]
    # FP int_{-L}^{L} dx/x^2 = -2/L ; PV int_{-L}^{L} dx/x = 0
    return centre + left + right - 2.0 * f0 / half


def steady_state(params: SpectralParams, order: Order) -> SteadyState:
    order = Order(order)
    lam, d, g0, w0 = params.lam, params.delta, params.gamma0, params.omega0
    s = lam**2 + d**2
    if order is Order.EXACT:
        r = roots(params)
        gamma = -2.0 * r.s1.real
        i_st = stationary_noise_integral(params)
        return SteadyState(order, w0 - r.s1.imag, gamma, gamma * i_st,
                           terms={"noise_integral": i_st, "s1": r.s1, "s2": r.s2})

    j0 = float(modified_density(params, w0))
    n0 = float(bose_occupation(params, w0))
    resonant2 = 2 * np.pi * j0 * n0
    omega_r = w0 + g0 * lam * d / (2 * s)
    gamma = g0 * lam**2 / s
    terms = {"gamma_plus2": resonant2}
    gamma_plus = resonant2
    if order is Order.TCL4:
        omega_r += g0**2 * lam**2 * d * (3 * lam**2 - d**2) / (4 * s**3)
        gamma4 = g0**2 * lam**3 * (lam**2 - 3 * d**2) / (2 * s**3)
        resonant4 = resonant2 * lam * g0 * (lam**2 - d**2) / s**2
        # exp(beta w0) n0 = 1 + n0
        slope4 = -lam * g0 * d * np.pi * n0 * j0 / s * ((1 + n0) * params.beta + 2 * d / s)
        # long-time limit of gamma^(2) I^(2) minus its secular part
        finite4 = gamma * thermal_finite_part(params)
        terms.update(gamma4=gamma4, resonant4=resonant4, slope4=slope4,
                     printed4=resonant4 + slope4, finite_part4=finite4)
        gamma += gamma4
        gamma_plus += resonant4 + slope4 + finite4
    return SteadyState(order, float(omega_r), float(gamma), float(gamma_plus),
                       terms={k: float(v) for k, v in terms.items()})
