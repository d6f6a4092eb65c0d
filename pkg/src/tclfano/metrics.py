"""Gaussian fidelity, Bures distance, the backflow measure N and parameter sweeps."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bath import SpectralParams, convergence_radius
from .coefficients import Order, coefficients
from .dynamics import (GaussianPath, GaussianState, Moments, MomentTrajectory,
                       UNPHYSICAL_TOL, gaussian_path, propagate_exact, propagate_tcl)
from .numerics import (NonFiniteError, TimeGrid, build_frequency_quadrature,
                       forward_difference, positive_part_integral)

SQRT2 = math.sqrt(2.0)
DELTA_F_TOL = 1e-9
SINGULAR_SUM_TOL = 1e-15
DEFAULT_ALPHA = 0.11 + 0.22j


class FidelityError(ValueError):
    """cov1 + cov2 is (numerically) singular."""


@dataclass(frozen=True)
class FidelityResult:
    value: float
    clamped: bool
    flagged: bool


def _fidelity_arrays(d1, c1, d2, c2):
    """Vectorised fidelity over leading axes. Returns (F, clamped, flagged)."""
    s = c1 + c2
    det_s = s[..., 0, 0] * s[..., 1, 1] - s[..., 0, 1] * s[..., 1, 0]
    if np.any(det_s < SINGULAR_SUM_TOL):
        raise FidelityError(f"cov1 + cov2 is singular (det = {np.min(det_s):.3g})")
    det1 = c1[..., 0, 0] * c1[..., 1, 1] - c1[..., 0, 1] * c1[..., 1, 0]
    det2 = c2[..., 0, 0] * c2[..., 1, 1] - c2[..., 0, 1] * c2[..., 1, 0]
    big = 4.0 * det_s
    small = 16.0 * (det1 - 0.25) * (det2 - 0.25)
    flagged = small < -DELTA_F_TOL
    small_c = np.maximum(small, 0.0)
    dd = d2 - d1
    # (cov1 + cov2)^{-1} via the adjugate
    quad = (s[..., 1, 1] * dd[..., 0] ** 2 - 2 * s[..., 0, 1] * dd[..., 0] * dd[..., 1]
            + s[..., 0, 0] * dd[..., 1] ** 2) / det_s
    with np.errstate(invalid="ignore"):
        F = 2.0 / (np.sqrt(big + small_c) - np.sqrt(small_c)) * np.exp(-0.5 * quad)
    flagged = flagged | ~np.isfinite(F)
    F = np.where(np.isfinite(F), F, 0.0)
    clamped = (F < 0.0) | (F > 1.0 + 1e-9)
    return np.clip(F, 0.0, 1.0), clamped, flagged


def fidelity_details(s1: GaussianState, s2: GaussianState) -> FidelityResult:
    F, clamped, flagged = _fidelity_arrays(np.asarray(s1.d), np.asarray(s1.cov),
                                           np.asarray(s2.d), np.asarray(s2.cov))
    return FidelityResult(float(F), bool(clamped), bool(flagged))


def gaussian_fidelity(s1: GaussianState, s2: GaussianState) -> float:
    """Uhlmann fidelity of two single-mode Gaussian states, in [0, 1]."""
    return fidelity_details(s1, s2).value


def bures_distance(s1: GaussianState, s2: GaussianState) -> float:
    return math.sqrt(max(2.0 - 2.0 * math.sqrt(gaussian_fidelity(s1, s2)), 0.0))


@dataclass(frozen=True)
class DistanceTrajectory:
    """Bures distance along two paths, with its forward-difference rate sigma.

    ``flagged`` marks nodes where either state is unphysical or the fidelity
    formula was used outside its domain; ``n_clamped`` counts fidelity values
    pulled back into [0, 1].
    """

    grid: TimeGrid
    values: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)
    flagged: np.ndarray = field(repr=False)
    n_clamped: int = 0

    @property
    def n_flagged(self) -> int:
        return int(np.count_nonzero(self.flagged))

    @property
    def times(self) -> np.ndarray:
        return self.grid.times


def _as_path(p) -> GaussianPath:
    if isinstance(p, GaussianPath):
        return p
    if isinstance(p, MomentTrajectory):
        return gaussian_path(p)
    return GaussianPath.from_states(list(p))


def bures_trajectory(path_a, path_b, grid: TimeGrid) -> DistanceTrajectory:
    a, b = _as_path(path_a), _as_path(path_b)
    if len(a) != len(b):
        raise ValueError(f"paths differ in length ({len(a)} vs {len(b)})")
    if len(a) != len(grid):
        raise ValueError(f"paths have {len(a)} nodes, grid has {len(grid)}")
    F, clamped, flagged = _fidelity_arrays(a.d, a.cov, b.d, b.cov)
    flagged = flagged | a.unphysical | b.unphysical
    dist = np.sqrt(np.maximum(2.0 - 2.0 * np.sqrt(F), 0.0))
    return DistanceTrajectory(grid, dist, forward_difference(dist, grid.h), flagged,
                              int(np.count_nonzero(clamped)))


def non_markovianity(path_a, path_b, grid: TimeGrid) -> float:
    """Total increase of the Bures distance, the integral of max(sigma, 0)."""
    return positive_part_integral(bures_trajectory(path_a, path_b, grid).values)


def cumulative_non_markovianity(dist: DistanceTrajectory) -> np.ndarray:
    """N(t): running sum of the positive increments of D_B."""
    inc = np.diff(dist.values)
    return np.concatenate([[0.0], np.cumsum(np.where(inc > 0.0, inc, 0.0))])


def coherent_pair(alpha: complex = DEFAULT_ALPHA) -> tuple[Moments, Moments]:
    """The pair alpha, conj(alpha), e.g. 0.11 +- 0.22i."""
    return Moments.coherent(alpha), Moments.coherent(np.conj(alpha))


# --------------------------------------------------------------------------
# full pipeline: coefficients -> moments -> Gaussian states -> distance

@dataclass(frozen=True)
class PairRun:
    order: Order
    trajectories: tuple[MomentTrajectory, MomentTrajectory]
    distance: DistanceTrajectory

    @property
    def n_measure(self) -> float:
        return positive_part_integral(self.distance.values)

    @property
    def negative_n(self) -> bool:
        return any(bool(tr.negative_n.any()) for tr in self.trajectories)

    @property
    def flagged(self) -> bool:
        return self.negative_n or self.distance.n_flagged > 0


def evolve_pair(params: SpectralParams, order: Order, pair: Sequence[Moments],
                grid: TimeGrid, quad=None, workers: int = 1) -> PairRun:
    order = Order(order)
    if quad is None:
        quad = build_frequency_quadrature(params)
    if order is Order.EXACT:
        trajs = propagate_exact(params, list(pair), grid, quad, workers=workers)
    else:
        coeffs = coefficients(params, grid, order, quad, workers=workers)
        trajs = propagate_tcl(coeffs, list(pair), grid)
    trajs = tuple(tr if tr.label else _labelled(tr, k) for k, tr in enumerate(trajs))
    return PairRun(order, trajs, bures_trajectory(trajs[0], trajs[1], grid))


def _labelled(tr: MomentTrajectory, k: int) -> MomentTrajectory:
    return MomentTrajectory(tr.grid, tr.a_mean, tr.aa_mean, tr.n_mean, tr.order, "AB"[k])


# --------------------------------------------------------------------------
# sweeps

@dataclass(frozen=True)
class SweepResult:
    """N over a (delta, gamma0/lambda) grid.

    ``values`` has shape (len(deltas), len(couplings)); failed cells hold NaN
    there while ``raw`` keeps whatever number was computed (NaN if none).
    """

    deltas: np.ndarray
    couplings: np.ndarray
    order: Order
    values: np.ndarray = field(repr=False)
    raw: np.ndarray = field(repr=False)
    failures: frozenset = frozenset()
    reasons: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        shape = (len(self.deltas), len(self.couplings))
        if self.values.shape != shape or self.raw.shape != shape:
            raise ValueError(f"value matrix shape must be {shape}")

    def boundary(self, lam: float = 1.0) -> np.ndarray:
        """gamma0/lambda = R(delta) along the delta axis."""
        return convergence_radius(lam, self.deltas)

    def outside_radius(self, lam: float = 1.0) -> np.ndarray:
        """Boolean mask of cells with gamma0/lambda > R(delta)."""
        return np.asarray(self.couplings)[None, :] > self.boundary(lam)[:, None]

    def asymmetry(self) -> tuple[float, tuple[int, int] | None]:
        """max |N(delta) - N(-delta)| over mirrored cells and where it occurs.

        Requires a delta axis symmetric about 0; cells failing on either side
        are skipped.
        """
        d = np.asarray(self.deltas)
        best, where = 0.0, None
        for i in range(len(d)):
            j = int(np.argmin(np.abs(d + d[i])))
            if not math.isclose(d[j], -d[i], abs_tol=1e-9) or j <= i:
                continue
            diff = np.abs(self.values[i] - self.values[j])
            if np.all(np.isnan(diff)):
                continue
            k = int(np.nanargmax(diff))
            if diff[k] > best:
                best, where = float(diff[k]), (i, k)
        return best, where


def heatmap_cell(base: SpectralParams, delta: float, coupling: float, order: Order,
                 pair: Sequence[Moments], grid: TimeGrid, n_nodes: int):
    """One sweep cell. Returns (N, failed, reason); never raises."""
    try:
        params = base.with_(delta=float(delta), gamma0=float(coupling) * base.lam)
        quad = build_frequency_quadrature(params, n_nodes)
        run = evolve_pair(params, order, pair, grid, quad)
        value = run.n_measure
        if not math.isfinite(value):
            return float("nan"), True, "non-finite measure"
        if run.negative_n:
            return value, True, "negative occupation"
        if run.distance.n_flagged:
            return value, True, "unphysical state"
        return value, False, ""
    except (NonFiniteError, FloatingPointError, ValueError) as exc:
        return float("nan"), True, f"{type(exc).__name__}: {exc}"


def _cell_star(args):
    return heatmap_cell(*args)


def heatmap(base: SpectralParams, deltas, couplings, order: Order,
            pair: Sequence[Moments] | None = None, grid: TimeGrid | None = None,
            n_nodes: int = 2000, workers: int = 1) -> SweepResult:
    """Evaluate N on every (delta, coupling) cell; gamma0 = coupling * lambda.

    Cells are independent; with workers > 1 they run in separate processes
    and are merged by index, so the result does not depend on scheduling.
    """
    deltas = np.asarray(deltas, dtype=float)
    couplings = np.asarray(couplings, dtype=float)
    if deltas.size == 0 or couplings.size == 0:
        raise ValueError("sweep axes must be non-empty")
    order = Order(order)
    pair = tuple(pair) if pair is not None else coherent_pair()
    grid = grid or TimeGrid(0.0, 20.0, 1000)
    cells = [(i, k) for i in range(deltas.size) for k in range(couplings.size)]
    jobs = [(base, deltas[i], couplings[k], order, pair, grid, n_nodes) for i, k in cells]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cell_star, jobs, chunksize=4))
    else:
        results = [_cell_star(j) for j in jobs]
    raw = np.full((deltas.size, couplings.size), np.nan)
    values = raw.copy()
    failures, reasons = set(), {}
    for (i, k), (value, failed, reason) in zip(cells, results):
        raw[i, k] = value
        if failed:
            failures.add((i, k))
            reasons[(i, k)] = reason
        else:
            values[i, k] = value
    return SweepResult(deltas, couplings, order, values, raw, frozenset(failures), reasons)


def default_sweep_axes(n_delta: int = 41, n_coupling: int = 30):
    """41 detunings on [-5, 5] and 30 couplings on [0.1, 3.0]."""
    deltas = np.linspace(-5.0, 5.0, n_delta)
    couplings = np.linspace(3.0 / n_coupling, 3.0, n_coupling)
    return deltas, couplings
