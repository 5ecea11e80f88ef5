"""Scenario files: a versioned YAML schema with sections hamiltonian,
initial, grid, time, ensemble and sweep; validation errors carry the
offending field path; the canonical hash feeds every output header."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import yaml

from .errors import ConfigError
from .grids import GridSpec
from .model import Custom1D, Hamiltonian, Quartic1D, Toda2D

SCHEMA_VERSION = 1
KINDS = ("quartic", "toda", "bose", "custom")

__all__ = ["ScenarioConfig", "load_config", "parse_config", "scenario_hash",
           "apply_overrides", "build_hamiltonian", "SCHEMA_VERSION"]


@dataclass
class ScenarioConfig:
    """Validated scenario prior to auto-resolution of grid and steps."""

    label: str
    kind: str
    hbar: Optional[float]          # None for bose (1/N takes the role)
    x0: tuple = ()
    p0: tuple = ()
    mass: float = 1.0
    potential_expr: Optional[str] = None
    grid: Optional[GridSpec] = None  # None means auto
    dt: Optional[float] = None       # None means auto (T_c / 512)
    t_final: Optional[float] = None  # None means auto
    sample_every: int = 1
    snapshot_times: tuple = ()
    snapshot_peak_window: Optional[tuple] = None  # bracket one |A(t)| peak
    n_samples: int = 100_000
    seed: int = 20240811
    ensemble_t_final: Optional[float] = None  # None: follow the quantum window
    sweep_values: tuple = ()         # hbar_eps values, or N for bose
    revival_subset: tuple = ()
    n_particles: Optional[int] = None
    c_over_nu: Optional[float] = None
    alpha: Optional[complex] = None
    beta: Optional[complex] = None
    quick: bool = False
    raw: dict = field(default_factory=dict)


def _fail(path: str, message: str):
    raise ConfigError(f"{path}: {message}")


def _section(data: dict, name: str, required: bool = False) -> dict:
    sec = data.get(name)
    if sec is None:
        if required:
            _fail(name, "section is required")
        return {}
    if not isinstance(sec, dict):
        _fail(name, f"must be a mapping, got {type(sec).__name__}")
    return sec


def _number(sec: dict, path: str, key: str, default=None, positive=False,
            allow_auto=False):
    val = sec.get(key, default)
    if val is None:
        return None
    if allow_auto and val == "auto":
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        _fail(f"{path}.{key}", f"must be a number, got {val!r}")
    val = float(val)
    if not math.isfinite(val):
        _fail(f"{path}.{key}", "must be finite")
    if positive and val <= 0:
        _fail(f"{path}.{key}", f"must be positive, got {val}")
    return val


def _integer(sec: dict, path: str, key: str, default=None, minimum=None):
    val = sec.get(key, default)
    if val is None:
        return None
    if isinstance(val, bool) or not isinstance(val, int):
        _fail(f"{path}.{key}", f"must be an integer, got {val!r}")
    if minimum is not None and val < minimum:
        _fail(f"{path}.{key}", f"must be >= {minimum}, got {val}")
    return val


def _float_list(sec: dict, path: str, key: str, length=None, default=None,
                positive=False):
    val = sec.get(key, default)
    if val is None:
        return None
    if not isinstance(val, (list, tuple)):
        _fail(f"{path}.{key}", f"must be a list, got {val!r}")
    out = []
    for i, item in enumerate(val):
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            _fail(f"{path}.{key}[{i}]", f"must be a number, got {item!r}")
        if positive and item <= 0:
            _fail(f"{path}.{key}[{i}]", f"must be positive, got {item}")
        out.append(float(item))
    if length is not None and len(out) != length:
        _fail(f"{path}.{key}", f"must have {length} entries, got {len(out)}")
    return tuple(out)


def _complex_value(sec: dict, path: str, key: str):
    val = sec.get(key)
    if val is None:
        return None
    if isinstance(val, (int, float)) and not isinstance(val, bool):
        return complex(float(val))
    if isinstance(val, (list, tuple)) and len(val) == 2 \
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in val):
        return complex(float(val[0]), float(val[1]))
    _fail(f"{path}.{key}", f"must be a number or [re, im] pair, got {val!r}")


def load_config(path: str) -> ScenarioConfig:
    """Parse and validate a scenario file; YAML errors keep their line
    context, schema errors name the field."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}")
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return parse_config(data)


def parse_config(data: dict) -> ScenarioConfig:
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        _fail("schema_version", f"must be {SCHEMA_VERSION}, got {version!r}")
    label = data.get("label", "scenario")
    if not isinstance(label, str) or not label:
        _fail("label", f"must be a nonempty string, got {label!r}")

    known = {"schema_version", "label", "hamiltonian", "initial", "grid",
             "time", "ensemble", "sweep"}
    extra = set(data) - known
    if extra:
        _fail(sorted(extra)[0], "unknown top-level key")

    ham = _section(data, "hamiltonian", required=True)
    kind = ham.get("kind")
    if kind not in KINDS:
        _fail("hamiltonian.kind", f"must be one of {KINDS}, got {kind!r}")
    dim = 2 if kind == "toda" else 1

    initial = _section(data, "initial", required=kind != "bose")
    time_sec = _section(data, "time")
    ens_sec = _section(data, "ensemble")
    sweep_sec = _section(data, "sweep")

    cfg = ScenarioConfig(label=label, kind=kind, hbar=None, raw=data)

    if kind == "bose":
        cfg.n_particles = _integer(ham, "hamiltonian", "n_particles", minimum=1)
        if cfg.n_particles is None:
            _fail("hamiltonian.n_particles", "is required for kind bose")
        cfg.c_over_nu = _number(ham, "hamiltonian", "c_over_nu")
        if cfg.c_over_nu is None:
            _fail("hamiltonian.c_over_nu", "is required for kind bose")
        alpha = _complex_value(initial, "initial", "alpha")
        beta = _complex_value(initial, "initial", "beta")
        if alpha is None or beta is None:
            # the reference initial condition: s = 1/2 at relative phase pi/2
            alpha = complex(1.0 / math.sqrt(2.0))
            beta = 1j / math.sqrt(2.0)
        total = abs(alpha) ** 2 + abs(beta) ** 2
        if abs(total - 1.0) > 1e-9:
            _fail("initial.alpha", f"|alpha|^2 + |beta|^2 = {total}, expected 1")
        cfg.alpha, cfg.beta = alpha, beta
        cfg.hbar = 1.0 / cfg.n_particles
    else:
        cfg.hbar = _number(ham, "hamiltonian", "hbar", positive=True)
        if cfg.hbar is None:
            _fail("hamiltonian.hbar", "is required")
        cfg.mass = _number(ham, "hamiltonian", "mass", default=1.0,
                           positive=True)
        if kind != "custom" and cfg.mass != 1.0:
            _fail("hamiltonian.mass", f"kind {kind} has unit mass; "
                  "use kind custom for other masses")
        if kind == "custom":
            expr = ham.get("potential")
            if not isinstance(expr, str) or not expr:
                _fail("hamiltonian.potential",
                      "a potential expression in x is required for kind custom")
            cfg.potential_expr = expr
        x0 = _float_list(initial, "initial", "x0", length=dim)
        p0 = _float_list(initial, "initial", "p0", length=dim)
        if x0 is None:
            _fail("initial.x0", "is required")
        if p0 is None:
            _fail("initial.p0", "is required")
        cfg.x0, cfg.p0 = x0, p0

        grid = data.get("grid")
        if grid is not None and grid != "auto":
            if not isinstance(grid, dict):
                _fail("grid", "must be 'auto' or a mapping")
            x_min = _float_list(grid, "grid", "x_min", length=dim)
            x_max = _float_list(grid, "grid", "x_max", length=dim)
            n_pts = grid.get("n_points")
            if x_min is None or x_max is None or n_pts is None:
                _fail("grid", "needs x_min, x_max and n_points")
            if not isinstance(n_pts, (list, tuple)) or len(n_pts) != dim \
                    or not all(isinstance(n, int) and not isinstance(n, bool)
                               for n in n_pts):
                _fail("grid.n_points", f"must be a list of {dim} integers")
            try:
                cfg.grid = GridSpec.make(x_min, x_max, n_pts)
            except Exception as exc:
                _fail("grid", str(exc))

    cfg.dt = _number(time_sec, "time", "dt", positive=True, allow_auto=True)
    cfg.t_final = _number(time_sec, "time", "t_final", positive=True,
                          allow_auto=True)
    cfg.sample_every = _integer(time_sec, "time", "sample_every",
                                default=1, minimum=1)
    snaps = _float_list(time_sec, "time", "snapshots", default=())
    if snaps and any(s < 0 for s in snaps):
        _fail("time.snapshots", "snapshot times must be nonnegative")
    cfg.snapshot_times = tuple(snaps or ())
    window = _float_list(time_sec, "time", "snapshot_peak_window", default=())
    if window:
        if len(window) != 2 or not 0 <= window[0] < window[1]:
            _fail("time.snapshot_peak_window",
                  "must be [t_lo, t_hi] with 0 <= t_lo < t_hi")
        cfg.snapshot_peak_window = (float(window[0]), float(window[1]))

    cfg.n_samples = _integer(ens_sec, "ensemble", "n_samples",
                             default=100_000, minimum=1)
    cfg.seed = _integer(ens_sec, "ensemble", "seed", default=20240811)
    cfg.ensemble_t_final = _number(ens_sec, "ensemble", "t_final",
                                   positive=True)

    if sweep_sec:
        if kind == "bose":
            values = sweep_sec.get("n_list")
            if not isinstance(values, (list, tuple)) \
                    or not all(isinstance(n, int) and not isinstance(n, bool)
                               and n >= 1 for n in values):
                _fail("sweep.n_list", "must be a list of positive integers")
            cfg.sweep_values = tuple(int(n) for n in values)
        else:
            values = _float_list(sweep_sec, "sweep", "hbar_list", positive=True)
            if values is None:
                _fail("sweep.hbar_list", "is required in the sweep section")
            cfg.sweep_values = values
        subset = _float_list(sweep_sec, "sweep", "revival_subset", default=())
        cfg.revival_subset = tuple(subset or ())
    return cfg


def build_hamiltonian(cfg: ScenarioConfig) -> Hamiltonian:
    if cfg.kind == "quartic":
        return Quartic1D()
    if cfg.kind == "toda":
        return Toda2D()
    if cfg.kind == "custom":
        return _sympy_hamiltonian(cfg.potential_expr, cfg.mass)
    raise ConfigError(f"hamiltonian.kind: no phase-space model for {cfg.kind!r}")


def _sympy_hamiltonian(expr: str, mass: float) -> Custom1D:
    import sympy

    x = sympy.symbols("x")
    try:
        sym = sympy.sympify(expr, locals={"x": x})
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise ConfigError(f"hamiltonian.potential: cannot parse {expr!r} ({exc})")
    extra = sym.free_symbols - {x}
    if extra:
        names = sorted(str(s) for s in extra)
        raise ConfigError(f"hamiltonian.potential: unknown symbols {names}")
    v_fn = sympy.lambdify(x, sym, "numpy")
    g_fn = sympy.lambdify(x, sympy.diff(sym, x), "numpy")

    def _vectorized(fn):
        def call(q):
            out = np.asarray(fn(q), dtype=float)
            if out.shape != np.shape(q):
                out = np.broadcast_to(out, np.shape(q)).copy()
            return out if out.shape else float(out)
        return call

    return Custom1D(potential=_vectorized(v_fn), gradient=_vectorized(g_fn),
                    mass=mass, label=expr)


def apply_overrides(cfg: ScenarioConfig, seed_override: Optional[int] = None,
                    quick: bool = False) -> ScenarioConfig:
    """Seed override and the --quick cost reductions (smaller swarm,
    capped grid, shortened window)."""
    out = replace(cfg)
    if seed_override is not None:
        out.seed = int(seed_override)
    if quick:
        out.quick = True
        out.n_samples = min(out.n_samples, 2000)
        if out.t_final is not None:
            out.t_final = min(out.t_final, 100.0)
    return out


def _canonical(value):
    if isinstance(value, dict):
        return {str(k): _canonical(v) for k, v in sorted(value.items())}
    if isinstance(value, (list, tuple)):
        return [_canonical(v) for v in value]
    if isinstance(value, complex):
        return {"re": repr(value.real), "im": repr(value.imag)}
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, GridSpec):
        return {"x_min": [repr(v) for v in value.x_min],
                "x_max": [repr(v) for v in value.x_max],
                "n_points": list(value.n_points)}
    return value


def scenario_hash(cfg: ScenarioConfig) -> str:
    """sha256 over the canonical JSON of every field that affects output."""
    payload = {
        "schema_version": SCHEMA_VERSION,
        "label": cfg.label, "kind": cfg.kind, "hbar": cfg.hbar,
        "x0": cfg.x0, "p0": cfg.p0, "mass": cfg.mass,
        "potential": cfg.potential_expr, "grid": cfg.grid,
        "dt": cfg.dt, "t_final": cfg.t_final,
        "sample_every": cfg.sample_every, "snapshots": cfg.snapshot_times,
        "snapshot_peak_window": cfg.snapshot_peak_window,
        "n_samples": cfg.n_samples, "seed": cfg.seed,
        "ensemble_t_final": cfg.ensemble_t_final,
        "sweep": cfg.sweep_values, "revival_subset": cfg.revival_subset,
        "n_particles": cfg.n_particles, "c_over_nu": cfg.c_over_nu,
        "alpha": cfg.alpha, "beta": cfg.beta, "quick": cfg.quick,
    }
    text = json.dumps(_canonical(payload), sort_keys=True,
                      separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
