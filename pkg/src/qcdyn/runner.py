"""Scenario execution: resolves auto grid/step settings, runs the quantum,
single-trajectory and ensemble pipelines side by side, extracts breakdown
and revival times, and writes every artifact under one manifest.

Sweeps fan out over a process pool; each point rebuilds its model from
plain values so workers stay picklable, and aggregation follows the
configured point order regardless of completion order.
"""

from __future__ import annotations

import math
import os
import time as _time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import bose as bose_mod
from .analysis import (FitError, InsufficientDataError, TimeSeries,
                       deviation_series, detect_revival, fit_envelope,
                       peak_envelope, scaling_fit)
from .classical import (ActionProfile, PhasePoint, classical_period,
                        integrate_trajectory, predicted_ehrenfest_time,
                        predicted_revival_time, _turning_points)
from .configio import ScenarioConfig, build_hamiltonian, scenario_hash
from .ensemble import evolve_ensemble, sample_wigner
from .errors import ConfigError
from .grids import GridSpec, auto_grid, populated_potential_ceiling
from .model import ScaledPlanck
from .phasespace import PlanckGrid, density_distance, ensemble_density, husimi_density
from .quantum import gaussian_packet, propagate
from .runfiles import (RunManifest, write_action_profile_csv, write_fit_report,
                       write_manifest, write_phase_density, write_point_cloud,
                       write_series_csv)

__all__ = ["resolve_scenario", "run_scenario", "run_sweep", "run_diagram",
           "examples_table", "ResolvedScenario"]

QUANTUM_STEPS_PER_PERIOD = 512
ENSEMBLE_DT_TARGET = 1e-3
TFINAL_OVER_PREDICTED = 1.5


@dataclass
class ResolvedScenario:
    cfg: ScenarioConfig
    hamiltonian: object
    hbar: ScaledPlanck
    grid: GridSpec
    dt: float
    t_final: float
    sample_every: int
    n_steps: int          # multiple of sample_every
    period: float


def _orbit_box(hamiltonian, x0, p0):
    """Bounding box of the classical orbit, from turning points in 1D or a
    sampled trajectory in 2D."""
    energy = hamiltonian.energy(x0, p0)
    if hamiltonian.dim == 1:
        lo, hi = _turning_points(hamiltonian, energy)
        v_min = min(float(hamiltonian.potential(np.asarray(x))) for x in (lo, hi, 0.5 * (lo + hi)))
        p_max = math.sqrt(max(2.0 * hamiltonian.mass * (energy - v_min), 0.0))
        return np.array([lo]), np.array([hi]), np.array([p_max])
    period = classical_period(hamiltonian, energy)
    traj = integrate_trajectory(PhasePoint(tuple(x0), tuple(p0)), hamiltonian,
                                dt=1e-3, n_steps=int(20 * period / 1e-3),
                                sample_every=20)
    xs = np.column_stack([traj["x1"].v, traj["x2"].v])
    ps = np.column_stack([traj["p1"].v, traj["p2"].v])
    return xs.min(axis=0), xs.max(axis=0), np.abs(ps).max(axis=0)


def resolve_scenario(cfg: ScenarioConfig) -> ResolvedScenario:
    """Turn auto settings into concrete grid, dt, t_final and step count."""
    if cfg.kind == "bose":
        raise ConfigError("hamiltonian.kind: bose scenarios resolve separately")
    hamiltonian = build_hamiltonian(cfg)
    hbar = ScaledPlanck(cfg.hbar)
    energy = hamiltonian.energy(cfg.x0, cfg.p0)
    period = classical_period(hamiltonian, energy)

    lo, hi, p_ext = _orbit_box(hamiltonian, cfg.x0, cfg.p0)
    dt = cfg.dt
    if dt is None:
        # phases of every populated energy must stay under the pi/step
        # saturation bound of the propagator, with its 0.8 onset factor
        v_pop = populated_potential_ceiling(hamiltonian, lo, hi, hbar.hbar_eps)
        dt = min(period / QUANTUM_STEPS_PER_PERIOD,
                 0.8 * math.pi * hbar.hbar_eps / v_pop)
    t_final = cfg.t_final
    if t_final is None:
        tau_hint = _predict_tau(hamiltonian, cfg.x0, cfg.p0, hbar)
        if not math.isfinite(tau_hint):
            raise ConfigError(
                "time.t_final: required when the dephasing predictor is "
                "infinite (isochronous dynamics)")
        t_final = TFINAL_OVER_PREDICTED * tau_hint
    if cfg.quick:
        t_final = min(t_final, 100.0)

    grid = cfg.grid
    if grid is None:
        n_max = 4096 if hamiltonian.dim == 1 else 512
        if cfg.quick:
            n_max = min(n_max, 1024 if hamiltonian.dim == 1 else 128)
        grid = auto_grid(lo, hi, p_ext, hbar.hbar_eps, n_max=n_max,
                         hamiltonian=hamiltonian)

    sample_every = cfg.sample_every
    sample_dt = dt * sample_every
    n_chunks = max(1, int(math.ceil(t_final / sample_dt - 1e-9)))
    n_steps = n_chunks * sample_every
    for t_snap in cfg.snapshot_times:
        if t_snap > n_chunks * sample_dt * (1 + 1e-9):
            raise ConfigError(
                f"time.snapshots: {t_snap} exceeds t_final {t_final}")
    if cfg.snapshot_peak_window is not None and \
            cfg.snapshot_peak_window[0] > n_chunks * sample_dt * (1 + 1e-9):
        raise ConfigError(
            f"time.snapshot_peak_window: starts at "
            f"{cfg.snapshot_peak_window[0]}, after t_final {t_final}")
    return ResolvedScenario(cfg=cfg, hamiltonian=hamiltonian, hbar=hbar,
                            grid=grid, dt=dt, t_final=n_chunks * sample_dt,
                            sample_every=sample_every, n_steps=n_steps,
                            period=period)


def _predict_tau(hamiltonian, x0, p0, hbar) -> float:
    if hamiltonian.dim != 1:
        return math.inf
    return predicted_ehrenfest_time(hamiltonian, x0[0], p0[0], hbar)


def _planck_grid_for(res: ResolvedScenario) -> PlanckGrid:
    """Planck cells anchored (corner) at the initial packet, padded a few
    widths beyond the classical orbit box."""
    lo, hi, p_ext = _orbit_box(res.hamiltonian, res.cfg.x0, res.cfg.p0)
    pad = 4.0 * math.sqrt(res.hbar.hbar_eps)
    return PlanckGrid.anchored(
        res.cfg.x0[0], res.cfg.p0[0],
        (lo[0] - pad, hi[0] + pad),
        (-p_ext[0] - pad, p_ext[0] + pad),
        res.hbar.hbar_eps)


def _axis_labels(dim: int, stem: str):
    return [stem] if dim == 1 else [f"{stem}{i + 1}" for i in range(dim)]


def _deviation_magnitude(q_series: dict, c_series: dict, dim: int) -> TimeSeries:
    """|<x> - x_cl| in 1D; the Euclidean norm across axes in 2D."""
    labels = _axis_labels(dim, "x")
    total = None
    for lab in labels:
        d = deviation_series(q_series[lab], c_series[lab], mode="absolute")
        total = d.v ** 2 if total is None else total + d.v ** 2
        times = d.t
    return TimeSeries(times, np.sqrt(total), dict(q_series[labels[0]].meta))


def run_scenario(cfg: ScenarioConfig, out_dir, threads: int = 1) -> RunManifest:
    """Execute one scenario, writing series, densities, fit reports and
    the manifest into out_dir. Numerical failures still leave a manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    digest = scenario_hash(cfg)
    manifest = RunManifest(scenario_hash=digest, label=cfg.label,
                           seeds={"ensemble": cfg.seed})
    start = _time.perf_counter()
    try:
        if cfg.kind == "bose":
            _run_bose(cfg, out_dir, digest, manifest)
        else:
            _run_phase(cfg, out_dir, digest, manifest)
    finally:
        manifest.wall_clock_s = _time.perf_counter() - start
        write_manifest(out_dir / "manifest.json", manifest)
    return manifest


def _run_phase(cfg: ScenarioConfig, out_dir: Path, digest: str,
               manifest: RunManifest) -> None:
    res = resolve_scenario(cfg)
    ham, hbar, grid = res.hamiltonian, res.hbar, res.grid
    dim = ham.dim

    wf0 = gaussian_packet(grid, cfg.x0, cfg.p0, hbar)
    prop = propagate(wf0, ham, res.dt, res.n_steps,
                     sample_every=res.sample_every,
                     snapshot_times=cfg.snapshot_times,
                     peak_snapshot_window=cfg.snapshot_peak_window)
    traj = integrate_trajectory(PhasePoint(tuple(cfg.x0), tuple(cfg.p0)), ham,
                                dt=res.dt, n_steps=res.n_steps,
                                sample_every=res.sample_every)

    sample_dt = res.dt * res.sample_every
    n_sub = max(1, int(round(sample_dt / ENSEMBLE_DT_TARGET)))
    n_chunks = res.n_steps // res.sample_every
    ens_chunks = n_chunks
    if cfg.ensemble_t_final is not None:
        ens_chunks = min(n_chunks, max(1, int(
            math.floor(cfg.ensemble_t_final / sample_dt + 1e-9))))
    ens_window = ens_chunks * sample_dt
    ens_snap_times = tuple(t for t in cfg.snapshot_times
                           if t <= ens_window + 1e-9)
    swarm = sample_wigner(ham, cfg.x0, cfg.p0, hbar, cfg.n_samples, cfg.seed)
    ens = evolve_ensemble(swarm, ham, sample_dt / n_sub, ens_chunks * n_sub,
                          sample_every=n_sub, snapshot_times=ens_snap_times)

    files = []
    x_labels = _axis_labels(dim, "x")
    p_labels = _axis_labels(dim, "p")
    v_labels = _axis_labels(dim, "var_x")
    heps = hbar.hbar_eps

    quantum_cols = {lab: prop.series[lab] for lab in x_labels + p_labels + v_labels}
    quantum_cols["energy"] = prop.series["energy"]
    quantum_cols["norm"] = prop.series["norm"]
    files.append(write_series_csv(out_dir / "quantum.csv", quantum_cols, digest, heps))
    files.append(write_series_csv(out_dir / "autocorr.csv", {
        "re": prop.series["autocorr_re"], "im": prop.series["autocorr_im"],
        "abs": prop.series["autocorr_abs"]}, digest, heps))
    files.append(write_series_csv(
        out_dir / "classical.csv",
        {lab: traj.series[lab] for lab in x_labels + p_labels}, digest, heps))
    files.append(write_series_csv(
        out_dir / "ensemble.csv",
        {lab: ens.series[lab] for lab in x_labels + p_labels + v_labels},
        digest, heps))

    dev_traj = _deviation_magnitude(prop.series, traj.series, dim)
    q_window = {lab: prop.series[lab].until(ens_window * (1 + 1e-12))
                for lab in x_labels}
    dev_ens = _deviation_magnitude(q_window, ens.series, dim)
    files.append(write_series_csv(out_dir / "deviation_trajectory.csv",
                                  dev_traj, digest, heps))
    files.append(write_series_csv(out_dir / "deviation_ensemble.csv",
                                  dev_ens, digest, heps))

    from .runfiles import _write_json, file_sha256  # local: avoid cycle noise

    # 1D fits the absolute deviation; 2D orbits wander in amplitude, so
    # the transverse coordinate is compared in relative terms instead.
    if dim == 1:
        dev_fit, dev_mode = dev_traj, "absolute"
    else:
        dev_fit = deviation_series(prop.series["x2"], traj.series["x2"],
                                   mode="relative")
        dev_mode = "relative"
    fit_error = None
    try:
        fit = fit_envelope(peak_envelope(dev_fit))
        files.append(write_fit_report(
            out_dir / "fit_tau.json", fit, digest,
            {"deviation_trajectory.csv": file_sha256(out_dir / "deviation_trajectory.csv")},
            extra={"hbar_eps": heps, "deviation_mode": dev_mode}))
    except (FitError, InsufficientDataError) as exc:
        fit_error = exc

    revival = detect_revival(prop.series["autocorr_abs"], res.period)
    rev_payload = {
        "found": revival.found, "t_r": revival.t_r,
        "strength": revival.strength,
        "fractional": [{"t": t, "strength": s,
                        "label": None if lab is None else list(lab)}
                       for t, s, lab in revival.fractional],
        "classical_period": res.period,
    }
    if dim == 1:
        rev_payload["t_r_predicted"] = predicted_revival_time(
            ham, ham.energy(cfg.x0, cfg.p0), hbar)
        rev_payload["tau_predicted"] = _predict_tau(ham, cfg.x0, cfg.p0, hbar)
    files.append(_write_json(out_dir / "revival.json", rev_payload))

    if dim == 1:
        energy = ham.energy(cfg.x0, cfg.p0)
        profile = ActionProfile.build(
            ham, np.linspace(0.6 * energy, 1.4 * energy, 9))
        files.append(write_action_profile_csv(
            out_dir / "action_profile.csv", profile, digest))

        if cfg.snapshot_times or prop.peak_snapshot is not None:
            pgrid = _planck_grid_for(res)
            husimi0 = husimi_density(wf0, pgrid)
            c0, j0 = write_phase_density(out_dir / "husimi_t0", husimi0, digest, 0.0)
            files.extend([c0, j0])
            snap_info = {}
            ens_snaps = dict((round(t, 9), e) for t, e in ens.snapshots)
            all_snaps = list(prop.snapshots)
            peak_key = None
            if prop.peak_snapshot is not None:
                t_pk, wf_pk, a_pk = prop.peak_snapshot
                all_snaps.append((t_pk, wf_pk))
                peak_key = f"{t_pk:g}"
            for t_snap, wf_t in all_snaps:
                tag = f"{t_snap:g}".replace(".", "p").replace("-", "m")
                h_t = husimi_density(wf_t, pgrid)
                c1, j1 = write_phase_density(out_dir / f"husimi_t{tag}", h_t,
                                             digest, t_snap)
                files.extend([c1, j1])
                entry = {"husimi_csv": c1.name,
                         "l1_to_initial_husimi": density_distance(h_t, husimi0)}
                if peak_key is not None and f"{t_snap:g}" == peak_key:
                    entry["at_autocorr_peak"] = True
                    entry["autocorr_abs"] = prop.peak_snapshot[2]
                key = round(t_snap, 9)
                if key in ens_snaps:
                    e_t = ens_snaps[key]
                    d_t = ensemble_density(e_t, pgrid)
                    c2, j2 = write_phase_density(out_dir / f"ensemble_t{tag}",
                                                 d_t, digest, t_snap)
                    pc = write_point_cloud(out_dir / f"points_t{tag}.qcpc",
                                           e_t, t_snap)
                    files.extend([c2, j2, pc])
                    entry["ensemble_csv"] = c2.name
                    entry["l1_husimi_vs_ensemble"] = density_distance(h_t, d_t)
                snap_info[f"{t_snap:g}"] = entry
            files.append(_write_json(out_dir / "snapshots.json", snap_info))

    for f in files:
        manifest.add_file(out_dir, f)
    if fit_error is not None:
        raise fit_error


def _run_bose(cfg: ScenarioConfig, out_dir: Path, digest: str,
              manifest: RunManifest) -> None:
    n_tot = cfg.n_particles
    dt = cfg.dt if cfg.dt is not None else 0.05
    t_final = cfg.t_final if cfg.t_final is not None else 8.0 * math.sqrt(n_tot)
    if cfg.quick:
        t_final = min(t_final, 100.0)
    t = np.arange(int(round(t_final / dt)) + 1) * dt

    state = bose_mod.coherent_state(cfg.alpha, cfg.beta, n_tot,
                                    c=cfg.c_over_nu, nu=1.0)
    quantum = bose_mod.quantum_evolve_bh(state, t)
    mf0 = bose_mod.MeanFieldState(a=cfg.alpha, b=cfg.beta,
                                  c=cfg.c_over_nu, nu=1.0)
    mf = bose_mod.meanfield_evolve(mf0, t)
    ens = bose_mod.stheta_ensemble(cfg.alpha, cfg.beta, n_tot,
                                   min(cfg.n_samples, 20_000), cfg.seed,
                                   c=cfg.c_over_nu, nu=1.0)
    sbar = bose_mod.ensemble_meanfield_evolve(ens, t)

    files = [
        write_series_csv(out_dir / "quantum.csv", {"s": quantum}, digest,
                         1.0 / n_tot),
        write_series_csv(out_dir / "meanfield.csv",
                         {"s": mf.series["s"], "theta": mf.series["theta"]},
                         digest, 1.0 / n_tot),
        write_series_csv(out_dir / "ensemble_meanfield.csv", {"s": sbar},
                         digest, 1.0 / n_tot),
    ]

    dev = deviation_series(quantum, mf.series["s"], mode="absolute")
    files.append(write_series_csv(out_dir / "deviation_meanfield.csv", dev,
                                  digest, 1.0 / n_tot))

    from .runfiles import _write_json, file_sha256

    ds, dtheta = bose_mod.stheta_widths(abs(cfg.beta) ** 2, n_tot)
    files.append(_write_json(out_dir / "stheta_stats.json", {
        "delta_s_closed_form": ds, "delta_theta_closed_form": dtheta,
        "product_identity": 1.0 / (2 * n_tot),
        "delta_s_sampled": float(np.std(ens.s)),
        "delta_theta_sampled": float(np.std(ens.theta)),
        "n_samples": ens.n_samples,
    }))

    fit_error = None
    try:
        fit = fit_envelope(peak_envelope(dev))
        files.append(write_fit_report(
            out_dir / "fit_tau.json", fit, digest,
            {"deviation_meanfield.csv": file_sha256(out_dir / "deviation_meanfield.csv")},
            extra={"n_particles": n_tot}))
    except (FitError, InsufficientDataError) as exc:
        fit_error = exc

    for f in files:
        manifest.add_file(out_dir, f)
    if fit_error is not None:
        raise fit_error


# ---------------------------------------------------------------------------
# sweeps

def _sweep_point(payload: dict) -> dict:
    """One sweep point, rebuilt from plain values (picklable for workers)."""
    value = payload["value"]
    revival = None
    try:
        if payload["kind"] == "bose":
            initial = (payload["alpha"], payload["beta"])
            tau = bose_mod._bose_tau(int(value), payload["c_over_nu"], initial,
                                     8.0 * math.sqrt(value), payload["dt_grid"])
            revival = bose_mod.bose_revival_analog(
                int(value), payload["c_over_nu"], initial,
                dt_grid=payload["dt_grid"])
        else:
            tau = _phase_point_tau(payload, float(value))
        return {"value": value, "tau": tau, "revival": revival, "error": None}
    except Exception as exc:  # per-point failures must not kill the sweep
        return {"value": value, "tau": None, "revival": None,
                "error": f"{type(exc).__name__}: {exc}"}


def _phase_point_tau(payload: dict, hbar_eps: float) -> float:
    cfg = ScenarioConfig(
        label=payload["label"], kind=payload["kind"], hbar=hbar_eps,
        x0=tuple(payload["x0"]), p0=tuple(payload["p0"]),
        mass=payload["mass"], potential_expr=payload["potential"],
        sample_every=payload["sample_every"], n_samples=1,
        seed=payload["seed"], quick=payload["quick"])
    if payload["t_final"] is not None:
        cfg.t_final = payload["t_final"]
    res = resolve_scenario(cfg)
    wf0 = gaussian_packet(res.grid, cfg.x0, cfg.p0, res.hbar)
    prop = propagate(wf0, res.hamiltonian, res.dt, res.n_steps,
                     observers=("x",), sample_every=res.sample_every)
    traj = integrate_trajectory(PhasePoint(tuple(cfg.x0), tuple(cfg.p0)),
                                res.hamiltonian, dt=res.dt,
                                n_steps=res.n_steps,
                                sample_every=res.sample_every)
    if res.hamiltonian.dim == 1:
        dev = _deviation_magnitude(prop.series, traj.series, 1)
    else:
        dev = deviation_series(prop.series["x2"], traj.series["x2"],
                               mode="relative")
    return fit_envelope(peak_envelope(dev)).tau


def _sweep_payloads(cfg: ScenarioConfig) -> list:
    base = {"label": cfg.label, "kind": cfg.kind, "seed": cfg.seed,
            "quick": cfg.quick}
    if cfg.kind == "bose":
        base.update({"c_over_nu": cfg.c_over_nu, "alpha": cfg.alpha,
                     "beta": cfg.beta, "dt_grid": cfg.dt if cfg.dt else 0.05})
    else:
        base.update({"x0": list(cfg.x0), "p0": list(cfg.p0), "mass": cfg.mass,
                     "potential": cfg.potential_expr,
                     "sample_every": cfg.sample_every,
                     "t_final": cfg.t_final})
    return [dict(base, value=v) for v in cfg.sweep_values]


def run_sweep(cfg: ScenarioConfig, out_dir, threads: int = 1) -> RunManifest:
    """tau per sweep point, then the log-log scaling fit. Failed points
    are recorded and skipped; fewer than 4 survivors refuses the fit."""
    if len(cfg.sweep_values) < 4:
        raise ConfigError(
            f"sweep: needs at least 4 points for a scaling fit, "
            f"got {len(cfg.sweep_values)}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    digest = scenario_hash(cfg)
    manifest = RunManifest(scenario_hash=digest, label=cfg.label,
                           seeds={"ensemble": cfg.seed})
    start = _time.perf_counter()

    payloads = _sweep_payloads(cfg)
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_sweep_point, payloads))
    else:
        results = [_sweep_point(p) for p in payloads]

    from .runfiles import _write_json

    survivors = [(r["value"], r["tau"]) for r in results if r["error"] is None]
    failures = [{"value": r["value"], "error": r["error"]}
                for r in results if r["error"] is not None]
    rows_v = np.array([r["value"] for r in results], dtype=float)
    rows_tau = np.array([r["tau"] if r["tau"] is not None else math.nan
                         for r in results])
    inv_hbar = rows_v if cfg.kind == "bose" else 1.0 / rows_v
    files = [write_columns_csv_sweep(out_dir / "sweep.csv", digest, rows_v,
                                     inv_hbar, rows_tau, cfg.kind)]

    if len(survivors) < 4:
        files.append(_write_json(out_dir / "scaling.json", {
            "error": f"only {len(survivors)} surviving points, need 4",
            "failures": failures}))
        for f in files:
            manifest.add_file(out_dir, f)
        manifest.wall_clock_s = _time.perf_counter() - start
        write_manifest(out_dir / "manifest.json", manifest)
        raise InsufficientDataError(
            f"sweep kept {len(survivors)} of {len(results)} points; "
            "need at least 4 for the scaling fit")

    points = [(1.0 / v, tau) if cfg.kind == "bose" else (v, tau)
              for v, tau in survivors]
    fit = scaling_fit(points)
    scaling = {
        "slope": fit.slope, "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "points": [{"value": v, "tau": tau} for v, tau in survivors],
        "failures": failures,
        "seed": cfg.seed,
    }
    if cfg.kind == "bose":
        revs = [(r["value"], r["revival"]) for r in results
                if r["error"] is None and r["revival"] is not None]
        if revs:
            ratios = [t / n for n, t in revs]
            mean_ratio = sum(ratios) / len(ratios)
            scaling["revival_analog"] = {
                "points": [{"n_particles": n, "t_revival": t}
                           for n, t in revs],
                "ratio_mean": mean_ratio,
                # worst fractional departure of t_revival/N from the mean;
                # small values certify the linear-in-N growth
                "max_rel_dev": max(abs(r - mean_ratio) for r in ratios)
                               / mean_ratio,
            }
    files.append(_write_json(out_dir / "scaling.json", scaling))
    for f in files:
        manifest.add_file(out_dir, f)
    manifest.wall_clock_s = _time.perf_counter() - start
    write_manifest(out_dir / "manifest.json", manifest)
    return manifest


def write_columns_csv_sweep(path, digest, values, inv_hbar, taus, kind):
    from .runfiles import write_columns_csv
    name = "n_particles" if kind == "bose" else "hbar_eps"
    return write_columns_csv(path, {"scenario": digest, "sweep": name}, {
        name: values, "inv_hbar": inv_hbar, "tau": taus})


def run_diagram(cfg: ScenarioConfig, out_dir, threads: int = 1) -> RunManifest:
    """Measured and predicted (tau, T_r) against 1/hbar_eps, plus the
    region labels the two curves separate."""
    if cfg.kind == "bose":
        raise ConfigError("hamiltonian.kind: the diagram needs a wave-packet scenario")
    if len(cfg.sweep_values) < 2:
        raise ConfigError("sweep.hbar_list: the diagram needs at least 2 points")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    digest = scenario_hash(cfg)
    manifest = RunManifest(scenario_hash=digest, label=cfg.label,
                           seeds={"ensemble": cfg.seed})
    start = _time.perf_counter()

    hamiltonian = build_hamiltonian(cfg)
    energy = hamiltonian.energy(cfg.x0, cfg.p0)
    period = classical_period(hamiltonian, energy)

    payloads = _sweep_payloads(cfg)
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            tau_rows = list(pool.map(_sweep_point, payloads))
    else:
        tau_rows = [_sweep_point(p) for p in payloads]

    rows = []
    for r in tau_rows:
        heps = float(r["value"])
        hbar = ScaledPlanck(heps)
        row = {
            "hbar_eps": heps, "inv_hbar": 1.0 / heps,
            "tau_measured": r["tau"] if r["error"] is None else math.nan,
            "tau_predicted": _predict_tau(hamiltonian, cfg.x0, cfg.p0, hbar),
            "tr_predicted": predicted_revival_time(hamiltonian, energy, hbar),
            "tr_measured": math.nan,
        }
        if any(abs(heps - s) < 1e-12 for s in cfg.revival_subset):
            row["tr_measured"] = _measure_revival(cfg, heps, row["tr_predicted"],
                                                  period)
        rows.append(row)

    from .runfiles import _write_json, write_columns_csv

    cols = {key: np.array([row[key] for row in rows])
            for key in ("hbar_eps", "inv_hbar", "tau_measured",
                        "tau_predicted", "tr_measured", "tr_predicted")}
    files = [
        write_columns_csv(out_dir / "diagram.csv", {"scenario": digest}, cols),
        _write_json(out_dir / "regions.json", {
            "axes": {"x": "1/hbar_eps", "y": "time (scaled units)"},
            "curves": {"tau": "Ehrenfest breakdown, ~ hbar^-1/2",
                       "t_r": "quantum revival, ~ hbar^-1"},
            "regions": [
                {"name": "classical", "where": "t < tau(hbar_eps)"},
                {"name": "classical ensemble",
                 "where": "tau(hbar_eps) < t < T_r(hbar_eps)"},
                {"name": "quantum", "where": "t > T_r(hbar_eps)"},
            ]}),
    ]
    for f in files:
        manifest.add_file(out_dir, f)
    manifest.wall_clock_s = _time.perf_counter() - start
    write_manifest(out_dir / "manifest.json", manifest)
    return manifest


def _measure_revival(cfg: ScenarioConfig, hbar_eps: float, tr_hint: float,
                     period: float) -> float:
    """Autocorrelation run long enough to catch the predicted revival."""
    point = ScenarioConfig(
        label=cfg.label, kind=cfg.kind, hbar=hbar_eps, x0=cfg.x0, p0=cfg.p0,
        mass=cfg.mass, potential_expr=cfg.potential_expr,
        sample_every=cfg.sample_every, n_samples=1, seed=cfg.seed,
        t_final=1.25 * tr_hint, quick=False)
    res = resolve_scenario(point)
    wf0 = gaussian_packet(res.grid, point.x0, point.p0, res.hbar)
    prop = propagate(wf0, res.hamiltonian, res.dt, res.n_steps,
                     observers=("autocorr",), sample_every=res.sample_every)
    found = detect_revival(prop.series["autocorr_abs"], period)
    return found.t_r if found.found else math.nan


def examples_table() -> list:
    """The four order-of-magnitude rows: tau/T_c and T_r/T_c for a ball in
    a box, a cold atom in a box, the sun-earth orbit, and hydrogen."""
    from .model import (HBAR_SI, YEAR_SI, SIInputs, box_ehrenfest_time,
                        box_revival_time, kepler_coupling_for_period,
                        kepler_ehrenfest_time, kepler_revival_time)

    rows = []
    ball = SIInputs(mass=1e-3, length=1.0, speed=1.0)
    tau_ratio, tau_s = box_ehrenfest_time(ball)
    rows.append({"system": "ball in box (1 g, 1 m, 1 m/s)",
                 "tau_over_Tc": tau_ratio, "tau_seconds": tau_s,
                 "Tr_over_Tc": box_revival_time(ball)})

    atom = SIInputs(mass=1.5e-25, length=1e-7, speed=1e-3)
    tau_ratio, tau_s = box_ehrenfest_time(atom)
    rows.append({"system": "cold Rb atom (optical well, 10 nK)",
                 "tau_over_Tc": tau_ratio, "tau_seconds": tau_s,
                 "Tr_over_Tc": box_revival_time(atom)})

    l_orbit = 2.7e39
    m_earth = 5.97e24
    k_sun = kepler_coupling_for_period(l_orbit, 0.0, m_earth, YEAR_SI)
    tau_ratio, tau_s = kepler_ehrenfest_time(l_orbit, 0.0, m_earth, k_sun)
    rows.append({"system": "sun-earth orbit (L = 2.7e39 J s)",
                 "tau_over_Tc": tau_ratio, "tau_years": tau_s / YEAR_SI,
                 "Tr_over_Tc": kepler_revival_time(l_orbit, 0.0)})

    tau_ratio, tau_s = kepler_ehrenfest_time(HBAR_SI, 0.0, 9.109e-31,
                                             2.307e-28)
    rows.append({"system": "hydrogen-like circular orbit (L = hbar)",
                 "tau_over_Tc": tau_ratio, "tau_seconds": tau_s,
                 "Tr_over_Tc": kepler_revival_time(HBAR_SI, 0.0)})
    return rows
