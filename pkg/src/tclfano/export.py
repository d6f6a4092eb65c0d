"""CSV writers. Every file has a header row; floats use 17 significant digits."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .coefficients import MasterEqCoefficients
from .dynamics import MomentTrajectory
from .metrics import DistanceTrajectory, SweepResult, cumulative_non_markovianity


def fmt(x) -> str:
    """17 significant digits; NaN and None become an empty field."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "" if math.isnan(x) else "%.17g" % x
    return str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write_coefficients(path, c: MasterEqCoefficients) -> Path:
    o = c.order.value
    rows = zip(c.grid.times, c.omega_r, c.gamma, c.gamma_plus, c.gamma_minus,
               (o for _ in c.grid.times))
    return write_csv(path, ["t", "omega_r", "gamma", "gamma_plus", "gamma_minus", "order"], rows)


def write_moments(path, tr: MomentTrajectory) -> Path:
    o = tr.order.value
    rows = ((t, a.real, a.imag, aa.real, aa.imag, n, o)
            for t, a, aa, n in zip(tr.grid.times, tr.a_mean, tr.aa_mean, tr.n_mean))
    return write_csv(path, ["t", "re_a", "im_a", "re_aa", "im_aa", "n", "order"], rows)


def write_phase_space(path, trajectories: Sequence[MomentTrajectory]) -> Path:
    """Long format: one row per (state, node) with the displacement <X>, <P>."""
    header = ["t", "x", "p", "order", "state_label"]

    def rows():
        for tr in trajectories:
            x = np.sqrt(2.0) * tr.a_mean.real
            p = np.sqrt(2.0) * tr.a_mean.imag
            for t, xi, pi in zip(tr.grid.times, x, p):
                yield t, xi, pi, tr.order.value, tr.label
    return write_csv(path, header, rows())


def write_bures(path, dist: DistanceTrajectory, order) -> Path:
    o = getattr(order, "value", order)
    rows = ((t, d, s, o) for t, d, s in zip(dist.times, dist.values, dist.sigma))
    return write_csv(path, ["t", "d_bures", "sigma", "order"], rows)


def write_nonmarkov(path, dist: DistanceTrajectory, order) -> Path:
    o = getattr(order, "value", order)
    cum = cumulative_non_markovianity(dist)
    rows = ((t, n, o) for t, n in zip(dist.times, cum))
    return write_csv(path, ["t", "n_measure", "order"], rows)


def write_heatmap(path, sweep: SweepResult) -> Path:
    def rows():
        for i, d in enumerate(sweep.deltas):
            for k, c in enumerate(sweep.couplings):
                yield d, c, sweep.values[i, k], sweep.order.value, (i, k) in sweep.failures
    return write_csv(path, ["delta", "coupling", "n_measure", "order", "flagged"], rows())


def write_boundary(path, deltas, radius) -> Path:
    return write_csv(path, ["delta", "r_of_delta"], zip(deltas, radius))
