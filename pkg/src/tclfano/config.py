"""Run configuration: flat ``key = value`` files, presets and overrides."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .bath import SpectralParams
from .coefficients import Order
from .numerics import TimeGrid


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        where = ""
        if source is not None:
            where = f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
        self.line = line
        self.source = source


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _orders(text: str) -> tuple[Order, ...]:
    parts = [p for p in text.replace(",", " ").split() if p]
    if not parts:
        raise ValueError("at least one order is required")
    out = []
    for p in parts:
        o = Order.parse(p)
        if o not in out:
            out.append(o)
    return tuple(out)


# config key -> (RunConfig attribute, parser)
_SPECTRAL_KEYS = {
    "gamma0": "gamma0", "lambda": "lam", "delta": "delta", "omega0": "omega0",
    "temperature": "temperature", "omega_m": "omega_m", "big_omega": "big_omega",
}
_RUN_KEYS = {
    "t_end": ("t_end", float),
    "steps": ("steps", int),
    "orders": ("orders", _orders),
    "workers": ("workers", int),
    "out": ("out", str),
    "nodes": ("nodes", int),
    "alpha": ("alpha", complex),
    "delta_min": ("delta_min", float),
    "delta_max": ("delta_max", float),
    "n_delta": ("n_delta", int),
    "coupling_min": ("coupling_min", float),
    "coupling_max": ("coupling_max", float),
    "n_coupling": ("n_coupling", int),
    "gamma0_list": ("gamma0_list", _floats),
    "command": ("command", str),
    "description": ("description", str),
}
KNOWN_KEYS = tuple(_SPECTRAL_KEYS) + tuple(_RUN_KEYS)


@dataclass(frozen=True)
class RunConfig:
    """Everything a subcommand needs. Units: hbar = k_B = 1."""

    spectral: SpectralParams = field(default_factory=SpectralParams)
    t_end: float = 20.0
    steps: int = 8000
    orders: tuple = (Order.EXACT, Order.TCL2, Order.TCL4)
    workers: int = 1
    out: str | None = None
    nodes: int = 2000
    alpha: complex = 0.11 + 0.22j
    # steady-state and heatmap axes
    delta_min: float = -5.0
    delta_max: float = 5.0
    n_delta: int = 41
    coupling_min: float = 0.1
    coupling_max: float = 3.0
    n_coupling: int = 30
    gamma0_list: tuple = ()
    command: str = ""
    description: str = ""
    explicit: frozenset = frozenset()  # keys set by a file, preset or flag

    def __post_init__(self):
        if not self.orders:
            raise ConfigError("orders must not be empty")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(0.0, self.t_end, self.steps)

    def is_set(self, key: str) -> bool:
        return key in self.explicit

    def output_dir(self) -> Path:
        """--out, else $TCLFANO_OUT, else the working directory; created if missing."""
        path = Path(self.out or os.environ.get("TCLFANO_OUT") or ".")
        path.mkdir(parents=True, exist_ok=True)
        if not os.access(path, os.W_OK):
            raise ConfigError(f"output directory {path} is not writable")
        return path

    def with_values(self, values: dict, source: str | None = None,
                    lines: dict | None = None) -> "RunConfig":
        """Apply string or typed values keyed by config names."""
        lines = lines or {}
        spectral, run = {}, {}
        for key, raw in values.items():
            line = lines.get(key)
            try:
                if key in _SPECTRAL_KEYS:
                    spectral[_SPECTRAL_KEYS[key]] = float(raw)
                elif key in _RUN_KEYS:
                    attr, parse = _RUN_KEYS[key]
                    run[attr] = parse(raw) if isinstance(raw, str) else raw
                else:
                    raise ConfigError(f"unknown key {key!r}", line, source)
            except ConfigError:
                raise
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}", line, source) from None
        try:
            spec = self.spectral.with_(**spectral) if spectral else self.spectral
            return replace(self, spectral=spec, explicit=self.explicit | set(values), **run)
        except ConfigError as exc:
            raise ConfigError(str(exc), None, source) from None
        except ValueError as exc:
            # blame the key the message names, else the first key given
            msg = str(exc)
            named = [k for k in values if k in lines and msg.startswith(_SPECTRAL_KEYS.get(k, k))]
            cands = named or [k for k in values if k in lines]
            line = min((lines[k] for k in cands), default=None)
            raise ConfigError(msg, line, source) from None


def parse_config_text(text: str, source: str = "<config>") -> tuple[dict, dict]:
    """Parse ``key = value`` lines. Returns (values, line numbers)."""
    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno, source)
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower().replace("-", "_")
        if not key:
            raise ConfigError("missing key", lineno, source)
        if key not in KNOWN_KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno, source)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first on line {lines[key]})", lineno, source)
        values[key], lines[key] = value, lineno
    return values, lines


def load_config(path, base: RunConfig | None = None) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", source=str(path)) from None
    values, lines = parse_config_text(text, str(path))
    return (base or RunConfig()).with_values(values, str(path), lines)


def preset_names() -> list[str]:
    files = resources.files("tclfano").joinpath("presets").iterdir()
    names = [f.name[:-4] for f in files if f.name.endswith(".cfg")]
    return sorted(names, key=lambda s: (len(s), s))


def load_preset(name: str) -> RunConfig:
    ref = resources.files("tclfano").joinpath("presets", f"{name}.cfg")
    if not ref.is_file():
        raise ConfigError(f"no preset named {name!r}; available: {', '.join(preset_names())}")
    values, lines = parse_config_text(ref.read_text(encoding="utf-8"), f"preset {name}")
    return RunConfig().with_values(values, f"preset {name}", lines)


def config_items(cfg: RunConfig) -> list[tuple[str, str]]:
    """Flat key/value listing, for provenance headers and --show-config."""
    sp = cfg.spectral
    items = [(k, repr(getattr(sp, a))) for k, a in _SPECTRAL_KEYS.items()]
    for key, (attr, _) in _RUN_KEYS.items():
        v = getattr(cfg, attr)
        if attr == "orders":
            v = ",".join(o.value for o in v)
        elif attr == "gamma0_list":
            v = ",".join(repr(x) for x in v)
        items.append((key, str(v)))
    return items


__all__ = ["ConfigError", "RunConfig", "load_config", "load_preset", "parse_config_text",
           "preset_names", "config_items", "KNOWN_KEYS"]
