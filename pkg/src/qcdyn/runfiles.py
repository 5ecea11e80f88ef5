"""Output plumbing: CSV series with scenario-hash headers, phase-density
matrices with sidecar metadata, fit reports, packed point clouds, and the
run manifest. Every float is written with repr() so reruns are
byte-identical."""

from __future__ import annotations

import hashlib
import json
import struct
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import UsageError
from .analysis import EnvelopeFit, ScatterSeries, TimeSeries

__all__ = [
    "file_sha256", "write_columns_csv", "write_series_csv",
    "write_scatter_csv", "write_action_profile_csv", "write_phase_density",
    "write_fit_report", "write_point_cloud", "read_point_cloud",
    "RunManifest", "write_manifest", "verify_manifest", "module_versions",
]

POINT_CLOUD_MAGIC = b"QCPC"
POINT_CLOUD_VERSION = 1


def _fmt(value: float) -> str:
    return repr(float(value))


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def write_columns_csv(path, header_meta: dict, columns: dict) -> Path:
    """'# key: value' header lines, then a column-name row, then rows of
    repr()-formatted floats."""
    names = list(columns)
    arrays = [np.asarray(columns[n], dtype=float) for n in names]
    length = len(arrays[0])
    if any(len(a) != length for a in arrays):
        raise UsageError("CSV columns must have equal length")
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in header_meta.items():
            fh.write(f"# {key}: {value}\n")
        fh.write(",".join(names) + "\n")
        for i in range(length):
            fh.write(",".join(_fmt(a[i]) for a in arrays) + "\n")
    return path


def write_series_csv(path, series, scenario_hash: str,
                     hbar_eps: Optional[float]) -> Path:
    """One or more TimeSeries sharing a grid; columns t,<name>,..."""
    if isinstance(series, TimeSeries):
        series = {"value": series}
    items = list(series.items())
    t0 = items[0][1].t
    for _, s in items[1:]:
        if len(s.t) != len(t0) or not np.allclose(s.t, t0, rtol=1e-9, atol=1e-12):
            raise UsageError("series in one CSV must share the time grid")
    meta = {"scenario": scenario_hash}
    if hbar_eps is not None:
        meta["hbar_eps"] = _fmt(hbar_eps)
    cols = {"t": t0}
    cols.update({name: s.v for name, s in items})
    return write_columns_csv(path, meta, cols)


def write_scatter_csv(path, scatter: ScatterSeries, scenario_hash: str,
                      hbar_eps: Optional[float], name: str = "value") -> Path:
    meta = {"scenario": scenario_hash}
    if hbar_eps is not None:
        meta["hbar_eps"] = _fmt(hbar_eps)
    return write_columns_csv(path, meta, {"t": scatter.t, name: scatter.v})


def write_action_profile_csv(path, profile, scenario_hash: str) -> Path:
    return write_columns_csv(path, {"scenario": scenario_hash}, {
        "E": profile.energy_grid, "I": profile.I_of_E,
        "omega": profile.omega_of_I, "omega_prime": profile.omega_prime_of_I})


def write_phase_density(path_base, density, scenario_hash: str,
                        sim_time: float) -> tuple:
    """Cell-mass matrix (x rows, p columns) plus a JSON sidecar with the
    grid geometry; sim_time is simulation time, keeping reruns identical."""
    base = Path(path_base)
    csv_path = base.with_suffix(".csv")
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# scenario: {scenario_hash}\n")
        fh.write(f"# kind: {density.kind}\n")
        fh.write(f"# rows: x cells, columns: p cells\n")
        for row in density.masses:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    sidecar = {
        "scenario": scenario_hash,
        "kind": density.kind,
        "sim_time": float(sim_time),
        "hbar_eps": float(density.grid.hbar_eps),
        "x_edges": [float(v) for v in density.grid.x_edges],
        "p_edges": [float(v) for v in density.grid.p_edges],
        "dx": density.grid.dx,
        "dp": density.grid.dp,
        "leakage": float(density.leakage),
        "meta": {k: _json_safe(v) for k, v in density.meta.items()},
    }
    json_path = base.with_suffix(".json")
    _write_json(json_path, sidecar)
    return csv_path, json_path


def _json_safe(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    return value


def _write_json(path, payload) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_fit_report(path, fit: EnvelopeFit, scenario_hash: str,
                     inputs: dict, extra: Optional[dict] = None) -> Path:
    """Envelope-fit parameters plus provenance hashes of the fitted inputs."""
    payload = {
        "scenario": scenario_hash,
        "model": "a*(1-exp(-b*t^2))",
        "a": fit.a, "b": fit.b, "tau": fit.tau,
        "residual_rms": fit.residual, "n_peaks": fit.n_peaks,
        "n_iterations": fit.n_iterations,
        "inputs": dict(inputs),
    }
    if extra:
        payload.update(extra)
    return _write_json(path, payload)


def write_point_cloud(path, ensemble, sim_time: float) -> Path:
    """Packed binary snapshot: magic 'QCPC', u32 version, u32 dim, u64 n,
    f64 hbar_eps, f64 sim_time, then x then p as little-endian f64 blocks
    (n*dim each, C order)."""
    path = Path(path)
    x = np.ascontiguousarray(ensemble.x, dtype="<f8")
    p = np.ascontiguousarray(ensemble.p, dtype="<f8")
    header = struct.pack("<4sIIQdd", POINT_CLOUD_MAGIC, POINT_CLOUD_VERSION,
                         ensemble.dim, ensemble.n_points,
                         ensemble.hbar.hbar_eps, float(sim_time))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(x.tobytes())
        fh.write(p.tobytes())
    return path


def read_point_cloud(path) -> dict:
    with open(path, "rb") as fh:
        head = fh.read(struct.calcsize("<4sIIQdd"))
        magic, version, dim, n, hbar_eps, sim_time = struct.unpack("<4sIIQdd", head)
        if magic != POINT_CLOUD_MAGIC:
            raise UsageError(f"{path}: not a point-cloud file")
        if version != POINT_CLOUD_VERSION:
            raise UsageError(f"{path}: unsupported version {version}")
        count = n * dim
        x = np.frombuffer(fh.read(count * 8), dtype="<f8").astype(float)
        p = np.frombuffer(fh.read(count * 8), dtype="<f8").astype(float)
    shape = (n,) if dim == 1 else (n, dim)
    return {"x": x.reshape(shape), "p": p.reshape(shape),
            "hbar_eps": hbar_eps, "sim_time": sim_time}


def module_versions() -> dict:
    import numpy
    import scipy

    from . import __version__
    from .kernels import backend_name
    return {
        "qcdyn": __version__,
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
        "python": sys.version.split()[0],
        "kernel_backend": backend_name(),
    }


@dataclass
class RunManifest:
    scenario_hash: str
    label: str
    seeds: dict
    versions: dict = field(default_factory=module_versions)
    wall_clock_s: float = 0.0
    files: dict = field(default_factory=dict)  # relative path -> sha256

    def add_file(self, out_dir, path) -> None:
        rel = str(Path(path).relative_to(out_dir))
        self.files[rel] = file_sha256(path)


def write_manifest(path, manifest: RunManifest) -> Path:
    return _write_json(path, {
        "scenario_hash": manifest.scenario_hash,
        "label": manifest.label,
        "seeds": manifest.seeds,
        "versions": manifest.versions,
        "wall_clock_s": manifest.wall_clock_s,
        "files": dict(sorted(manifest.files.items())),
    })


def verify_manifest(out_dir) -> bool:
    """Recompute every listed hash; True when all files match."""
    out_dir = Path(out_dir)
    with open(out_dir / "manifest.json", "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return all(file_sha256(out_dir / rel) == digest
               for rel, digest in data["files"].items())
