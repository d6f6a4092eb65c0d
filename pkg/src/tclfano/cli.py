"""Command-line entry point: ``tclfano <subcommand> [options]``."""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bath import coupling_regime
from .coefficients import Order, coefficients, steady_state
from .config import ConfigError, RunConfig, load_config, load_preset, preset_names
from .export import (write_boundary, write_bures, write_coefficients, write_csv, write_heatmap,
                     write_moments, write_nonmarkov, write_phase_space)
from .metrics import coherent_pair, evolve_pair, heatmap
from .numerics import NonFiniteError, TimeGrid, build_frequency_quadrature
from .validate import Status, run_validation, summary

HEATMAP_STEPS = 1000
HEATMAP_NODES = 1000

UNITS_NOTE = ("Units: hbar = k_B = 1; frequencies, rates and temperature share one arbitrary "
              "energy unit, times are in its inverse.")

# flag dest -> config key
_FLAG_KEYS = {
    "gamma0": "gamma0", "lam": "lambda", "delta": "delta", "omega0": "omega0",
    "temperature": "temperature", "omega_m": "omega_m", "big_omega": "big_omega",
    "t_end": "t_end", "steps": "steps", "orders": "orders", "workers": "workers",
    "out": "out", "nodes": "nodes", "alpha": "alpha",
    "delta_min": "delta_min", "delta_max": "delta_max", "n_delta": "n_delta",
    "coupling_min": "coupling_min", "coupling_max": "coupling_max",
    "n_coupling": "n_coupling", "gamma0_list": "gamma0_list",
}


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("configuration")
    src = g.add_mutually_exclusive_group()
    src.add_argument("--config", metavar="PATH", help="key = value config file")
    src.add_argument("--preset", metavar="NAME", help="packaged preset (see 'tclfano presets')")
    s = p.add_argument_group("spectral parameters")
    s.add_argument("--gamma0", type=float, help="coupling strength gamma0 (default 0.2)")
    s.add_argument("--lambda", dest="lam", type=float, help="Lorentzian width (default 1.0)")
    s.add_argument("--delta", type=float, help="detuning; peak at omega0 - delta (default 0.4)")
    s.add_argument("--omega0", type=float, help="system frequency (default 10.0)")
    s.add_argument("--temperature", type=float, help="bath temperature (default 10.0)")
    s.add_argument("--omega-m", dest="omega_m", type=float,
                   help="low-frequency suppression scale (default 1.0)")
    s.add_argument("--big-omega", dest="big_omega", type=float,
                   help="low-frequency exponent (default 2.0)")
    r = p.add_argument_group("run")
    r.add_argument("--t-end", dest="t_end", type=float, help="final time (default 20)")
    r.add_argument("--steps", type=int, help="time steps (default 8000; heatmap cells 1000)")
    r.add_argument("--nodes", type=int, help="frequency quadrature nodes (default 2000; heatmap 1000)")
    r.add_argument("--orders", help="comma list of exact, tcl2, tcl4 (default all)")
    r.add_argument("--workers", type=int, help="parallel workers; 1 is bit-reproducible")
    r.add_argument("--out", metavar="DIR", help="output directory (fallback $TCLFANO_OUT, then .)")
    return p


def _build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="tclfano",
        description="Exact, TCL2 and TCL4 dynamics of a damped mode coupled to a Lorentzian bath.",
        epilog=UNITS_NOTE)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    sub.add_parser("coeffs", parents=[common], epilog=UNITS_NOTE,
                   help="master-equation coefficient trajectories")
    st = sub.add_parser("steady", parents=[common], epilog=UNITS_NOTE,
                        help="stationary coefficients swept over detuning or coupling")
    st.add_argument("--sweep", choices=("delta", "gamma0"), default="delta")
    _axis_flags(st, coupling=True)
    st.add_argument("--gamma0-list", dest="gamma0_list",
                    help="comma list of gamma0 values for a delta sweep")
    for name, help_ in (("evolve", "moment and phase-space trajectories of a coherent pair"),
                        ("bures", "Bures distance between the pair"),
                        ("nonmarkov", "cumulative non-Markovianity N(t)")):
        sp = sub.add_parser(name, parents=[common], epilog=UNITS_NOTE, help=help_)
        sp.add_argument("--alpha", type=complex,
                        help="coherent amplitude; the pair is alpha, conj(alpha) (default 0.11+0.22j)")
    hm = sub.add_parser("heatmap", parents=[common], epilog=UNITS_NOTE,
                        help="N over a (delta, gamma0/lambda) grid")
    _axis_flags(hm, coupling=True)
    hm.add_argument("--alpha", type=complex, help="coherent amplitude (default 0.11+0.22j)")
    sub.add_parser("validate", parents=[common], epilog=UNITS_NOTE,
                   help="run the built-in oracle checks; nonzero exit on failure")
    sub.add_parser("presets", help="list packaged presets")
    return parser


def _axis_flags(p, coupling: bool):
    g = p.add_argument_group("sweep axes")
    g.add_argument("--delta-min", dest="delta_min", type=float)
    g.add_argument("--delta-max", dest="delta_max", type=float)
    g.add_argument("--n-delta", dest="n_delta", type=int)
    if coupling:
        g.add_argument("--coupling-min", dest="coupling_min", type=float, help="gamma0/lambda")
        g.add_argument("--coupling-max", dest="coupling_max", type=float)
        g.add_argument("--n-coupling", dest="n_coupling", type=int)


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then config file or preset, then command-line flags."""
    if getattr(args, "config", None):
        cfg = load_config(args.config)
    elif getattr(args, "preset", None):
        cfg = load_preset(args.preset)
    else:
        cfg = RunConfig()
    overrides = {}
    for dest, key in _FLAG_KEYS.items():
        v = getattr(args, dest, None)
        if v is not None:
            overrides[key] = v
    return cfg.with_values(overrides, "command line") if overrides else cfg


# --------------------------------------------------------------------------
# subcommands

def _regime_line(params) -> str:
    r = coupling_regime(params)
    rel = "<" if r.classification.value == "weak" else ">="
    return (f"regime: {r.classification.value.capitalize()} "
            f"(gamma0/lambda = {r.alpha_sq:.6g} {rel} R(delta) = {r.radius:.6g})")


def cmd_coeffs(cfg: RunConfig, out: Path) -> list[Path]:
    params, grid = cfg.spectral, cfg.grid
    print(_regime_line(params))
    quad = build_frequency_quadrature(params, cfg.nodes)
    written = []
    for order in cfg.orders:
        c = coefficients(params, grid, order, quad, workers=cfg.workers)
        if c.n_singular:
            print(f"{order.value}: {c.n_singular} nodes where G vanishes were bridged")
        written.append(write_coefficients(out / f"coefficients_{order.value}.csv", c))
    return written


def steady_rows(cfg: RunConfig, sweep: str = "delta"):
    """Rows (delta, gamma0, order, omega_r, gamma, gamma_plus, regime) and boundary rows."""
    base = cfg.spectral
    if sweep == "gamma0":
        gammas = np.linspace(cfg.coupling_min, cfg.coupling_max, cfg.n_coupling) * base.lam
        deltas = np.array([base.delta])
    else:
        gammas = np.array(cfg.gamma0_list or (base.gamma0,))
        deltas = np.linspace(cfg.delta_min, cfg.delta_max, cfg.n_delta)
    rows, markers = [], []
    for g0 in gammas:
        if g0 > base.lam / 2:
            m = float(np.sqrt(base.lam * (2 * g0 - base.lam)))
            markers += [(g0, -m), (g0, m)]
        for d in deltas:
            p = base.with_(gamma0=float(g0), delta=float(d))
            regime = coupling_regime(p).classification.value
            for order in cfg.orders:
                ss = steady_state(p, order)
                rows.append((d, g0, order.value, ss.omega_r_st, ss.gamma_st, ss.gamma_plus_st, regime))
    return rows, markers


def cmd_steady(cfg: RunConfig, out: Path, sweep: str = "delta") -> list[Path]:
    rows, markers = steady_rows(cfg, sweep)
    a = write_csv(out / "steady_state.csv",
                  ["delta", "gamma0", "order", "omega_r", "gamma", "gamma_plus", "regime"], rows)
    b = write_csv(out / "steady_boundary.csv", ["gamma0", "delta_marker"], markers)
    for g0, m in markers[1::2]:
        print(f"gamma0 = {g0:.6g}: convergence boundary at |delta| = {m:.6g}")
    return [a, b]


def _pair(cfg: RunConfig):
    return coherent_pair(cfg.alpha)


def cmd_evolve(cfg: RunConfig, out: Path) -> list[Path]:
    params, grid = cfg.spectral, cfg.grid
    quad = build_frequency_quadrature(params, cfg.nodes)
    written, traces = [], []
    for order in cfg.orders:
        run = evolve_pair(params, order, _pair(cfg), grid, quad, workers=cfg.workers)
        for tr in run.trajectories:
            written.append(write_moments(out / f"moments_{order.value}_{tr.label}.csv", tr))
            traces.append(tr)
            if tr.negative_n.any():
                print(f"{order.value} state {tr.label}: <a^dag a> < 0 at "
                      f"{int(tr.negative_n.sum())} nodes (positivity violated)")
        if run.distance.n_flagged:
            print(f"{order.value}: {run.distance.n_flagged} nodes with unphysical covariance")
    written.append(write_phase_space(out / "phase_space.csv", traces))
    return written


def cmd_bures(cfg: RunConfig, out: Path, cumulative: bool = False) -> list[Path]:
    params, grid = cfg.spectral, cfg.grid
    print(_regime_line(params))
    quad = build_frequency_quadrature(params, cfg.nodes)
    written = []
    for order in cfg.orders:
        run = evolve_pair(params, order, _pair(cfg), grid, quad, workers=cfg.workers)
        flag = " (flagged: unphysical states)" if run.flagged else ""
        print(f"{order.value}: N = {run.n_measure:.10g}{flag}")
        if cumulative:
            written.append(write_nonmarkov(out / f"nonmarkov_{order.value}.csv",
                                           run.distance, order))
        else:
            written.append(write_bures(out / f"bures_{order.value}.csv", run.distance, order))
    return written


def cmd_nonmarkov(cfg: RunConfig, out: Path) -> list[Path]:
    return cmd_bures(cfg, out, cumulative=True)


def cmd_heatmap(cfg: RunConfig, out: Path) -> list[Path]:
    steps = cfg.steps if cfg.is_set("steps") else HEATMAP_STEPS
    nodes = cfg.nodes if cfg.is_set("nodes") else HEATMAP_NODES
    grid = TimeGrid(0.0, cfg.t_end, steps)
    deltas = np.linspace(cfg.delta_min, cfg.delta_max, cfg.n_delta)
    couplings = np.linspace(cfg.coupling_min, cfg.coupling_max, cfg.n_coupling)
    written = []
    for order in cfg.orders:
        t0 = time.perf_counter()
        res = heatmap(cfg.spectral, deltas, couplings, order, _pair(cfg), grid, nodes, cfg.workers)
        print(f"{order.value}: {deltas.size}x{couplings.size} cells, {len(res.failures)} failed, "
              f"{time.perf_counter() - t0:.1f} s")
        written.append(write_heatmap(out / f"heatmap_{order.value}.csv", res))
    written.append(write_boundary(out / "heatmap_boundary.csv", deltas,
                                  (1 + deltas**2 / cfg.spectral.lam**2) / 2))
    return written


def cmd_validate(cfg: RunConfig) -> int:
    results = run_validation(cfg.spectral, cfg.grid)
    for r in results:
        print(r.line())
    n_pass, n_fail, n_xfail = summary(results)
    print(f"{n_pass} passed, {n_fail} failed, {n_xfail} expected failures")
    return 1 if any(r.status is Status.FAIL for r in results) else 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command == "presets":
        for name in preset_names():
            cfg = load_preset(name)
            print(f"{name:6s} {cfg.command:10s} {cfg.description}")
        return 0
    try:
        cfg = resolve_config(args)
        if cfg.command and cfg.command != args.command:
            print(f"note: this configuration is meant for '{cfg.command}'", file=sys.stderr)
        if args.command == "validate":
            return cmd_validate(cfg)
        out = cfg.output_dir()
        handlers = {
            "coeffs": cmd_coeffs, "evolve": cmd_evolve, "bures": cmd_bures,
            "nonmarkov": cmd_nonmarkov, "heatmap": cmd_heatmap,
            "steady": lambda c, o: cmd_steady(c, o, args.sweep),
        }
        for path in handlers[args.command](cfg, out):
            print(f"wrote {path}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NonFiniteError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
