"""Experiment runner: dispatches configs to the dynamics modules and writes
reproducible outputs.

Data files (time series, snapshots, difference matrices, the report) are
byte-stable for a fixed config; wall-clock timings go to a separate
``*_timings.json`` so reruns stay byte-identical elsewhere.  The master
integration is timed as the median of 3 runs; the trajectory oracle is
timed once (it dominates the budget by design).
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import oracle as oracle_mod
from .config import ExperimentConfig, serialize_experiment_config
from .errors import ConfigParseError
from .network import validate_network
from .observables import bunching_ratio, coherence, joint_probability, populations, validate_density
from .oracle import mc_single_density, mc_two_density
from .single_particle import DensityMatrix, evolve_single, steady_state_single
from .two_particle import (
    InputAmplitudeProfile,
    TwoParticleDensity,
    canonical_two_particle_state,
    compose_two_particle_amplitude,
    evolve_two,
)

OUTPUT_DIR_ENV = "STOCHNET_OUT"


@dataclass
class RunReport:
    name: str
    scenario: str
    out_dir: Path | None
    files: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    data: dict = field(default_factory=dict)


def _fmt(x):
    return repr(float(x))


def _site_vector(state, n):
    psi = np.zeros(n, dtype=complex)
    psi[state.site] = 1.0
    return psi


def _basis(n, p, q):
    m = np.zeros((n, n), dtype=complex)
    m[p, q] = 1.0
    return m


def _two_particle_initial(state, n):
    """(TwoParticleDensity, oracle input, statistics) for a two-particle state."""
    if state.kind in ("separable", "incoherent", "entangled"):
        a, b = state.sites
        density = canonical_two_particle_state(state.kind, (a, b), n)
        if state.kind == "separable":
            mc_input = (_basis(n, a, b) + _basis(n, b, a)) / np.sqrt(2)
        elif state.kind == "entangled":
            mc_input = (_basis(n, a, a) + _basis(n, b, b)) / np.sqrt(2)
        else:
            mc_input = [(0.5, _basis(n, a, b)), (0.5, _basis(n, b, a))]
        return density, mc_input, None
    if state.kind == "amplitude_profile":
        profile = InputAmplitudeProfile(state.xi)
        amp = compose_two_particle_amplitude(np.eye(n, dtype=complex), profile,
                                             state.statistics)
        return TwoParticleDensity.from_amplitude(amp), profile, state.statistics
    raise ConfigParseError(f"initial_state.kind: {state.kind!r} is not a two-particle state")


def _median_of_three(fn):
    walls = []
    result = None
    for _ in range(3):
        t0 = time.perf_counter()
        result = fn()
        walls.append(time.perf_counter() - t0)
    return result, sorted(walls)[1]


def _single_series_rows(times, mats, ses=None):
    n = mats[0].shape[0]
    header = ["time_ps"] + [f"pop_{i + 1}" for i in range(n)]
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    header += [c for i, j in pairs for c in (f"re_coh_{i + 1}_{j + 1}",
                                             f"im_coh_{i + 1}_{j + 1}")]
    if ses is not None:
        header += [f"se_pop_{i + 1}" for i in range(n)]
        header += [f"se_coh_{i + 1}_{j + 1}" for i, j in pairs]
    rows = [header]
    for idx, (t, m) in enumerate(zip(times, mats)):
        row = [_fmt(t)] + [_fmt(m[i, i].real) for i in range(n)]
        row += [x for i, j in pairs for x in (_fmt(m[i, j].real), _fmt(m[i, j].imag))]
        if ses is not None:
            row += [_fmt(ses[idx][i, i]) for i in range(n)]
            row += [_fmt(ses[idx][i, j]) for i, j in pairs]
        rows.append(row)
    return rows


def _two_series_rows(times, mats, ses=None):
    dim = int(round(np.sqrt(mats[0].shape[0])))
    labels = [(p, q) for p in range(dim) for q in range(dim)]
    header = ["time_ps"] + [f"gamma_{p + 1}_{q + 1}" for p, q in labels] + ["bunching_ratio"]
    if ses is not None:
        header += [f"se_gamma_{p + 1}_{q + 1}" for p, q in labels]
    rows = [header]
    for idx, (t, m) in enumerate(zip(times, mats)):
        joint = m.diagonal().real.reshape(dim, dim)
        row = [_fmt(t)] + [_fmt(joint[p, q]) for p, q in labels]
        row.append(_fmt(np.trace(joint)))
        if ses is not None:
            se_d = ses[idx].diagonal().reshape(dim, dim)
            row += [_fmt(se_d[p, q]) for p, q in labels]
        rows.append(row)
    return rows


def _snapshot_doc(mat, t, kind, n_sites):
    doc = {
        "kind": kind,
        "time_ps": float(t),
        "n_sites": int(n_sites),
        "dim": int(mat.shape[0]),
        "index_base": 1,
        "real": [[float(x) for x in row] for row in mat.real],
        "imag": [[float(x) for x in row] for row in mat.imag],
    }
    if kind == "two_particle":
        doc["pair_index_convention"] = (
            "row-major pair index: sites (p, q) map to flat index (p-1)*N + (q-1) "
            "in 1-based site labels")
    return doc


def _nearest_index(times, t):
    times = np.asarray(times, dtype=float)
    idx = int(np.argmin(np.abs(times - t)))
    if abs(times[idx] - t) > 1e-9:
        raise ConfigParseError(
            f"outputs.snapshot_times: {t} is not one of the grid sample times")
    return idx


def run_experiment(cfg: ExperimentConfig, out_dir=None, write=True) -> RunReport:
    """Run one experiment and (optionally) write its output files."""
    net = validate_network(cfg.network)
    n = net.n_sites
    report = RunReport(name=cfg.name, scenario=cfg.scenario, out_dir=None)
    two = cfg.initial_state.is_two_particle()
    times = np.asarray(cfg.grid.sample_times, dtype=float)
    report.data["times"] = times

    needs_master = cfg.scenario in ("single", "two", "compare", "steady-state")
    needs_oracle = cfg.scenario in ("oracle-single", "oracle-two", "compare")

    if needs_oracle:
        # surface grid misalignment as a config error before spending any time
        try:
            oracle_mod._steps_per_interval(cfg.grid, cfg.oracle.dt)
        except ValueError as exc:
            raise ConfigParseError(f"oracle.dt: {exc}") from exc

    master_mats = None
    if needs_master:
        if two:
            rho0, _, _ = _two_particle_initial(cfg.initial_state, n)

            def master_run():
                return evolve_two(net, rho0, cfg.grid, cfg.solver)
        else:
            rho0 = DensityMatrix.from_site(cfg.initial_state.site, n)

            def master_run():
                return evolve_single(net, rho0, cfg.grid, cfg.solver)

        if cfg.scenario == "compare":
            series, master_wall = _median_of_three(master_run)
            report.timings["master_integration_s"] = master_wall
            report.timings["master_timing_runs"] = 3
        else:
            t0 = time.perf_counter()
            series = master_run()
            report.timings["master_integration_s"] = time.perf_counter() - t0
            report.timings["master_timing_runs"] = 1
        master_mats = [snap.rho for _, snap in series]
        report.data["master"] = series

    ensemble = None
    if needs_oracle:
        t0 = time.perf_counter()
        if two:
            _, mc_input, stats = _two_particle_initial(cfg.initial_state, n)
            ensemble = mc_two_density(
                net, mc_input, cfg.oracle.n_traj, cfg.oracle.dt, cfg.grid,
                cfg.oracle.base_seed, statistics=stats, scheme=cfg.oracle.scheme,
                unitarity_tol=cfg.oracle.unitarity_tol, threads=cfg.oracle.threads)
        else:
            ensemble = mc_single_density(
                net, _site_vector(cfg.initial_state, n), cfg.oracle.n_traj,
                cfg.oracle.dt, cfg.grid, cfg.oracle.base_seed,
                scheme=cfg.oracle.scheme, unitarity_tol=cfg.oracle.unitarity_tol,
                threads=cfg.oracle.threads)
        report.timings["oracle_integration_s"] = time.perf_counter() - t0
        report.timings["oracle_timing_runs"] = 1
        report.timings["oracle_n_traj"] = cfg.oracle.n_traj
        report.data["ensemble"] = ensemble

    if cfg.scenario == "steady-state":
        t0 = time.perf_counter()
        steady = steady_state_single(net, rho0, tol=1e-7)
        report.timings["steady_state_s"] = time.perf_counter() - t0
        report.data["steady_state"] = steady
        pops = populations(steady)
        coh_max = max(abs(steady.rho[i, j]) for i in range(n) for j in range(n) if i != j)
        final = master_mats[-1]
        report.metrics["steady_populations"] = [float(p) for p in pops]
        report.metrics["steady_max_coherence"] = float(coh_max)
        report.metrics["final_vs_steady_max_dev"] = float(np.abs(final - steady.rho).max())

    if cfg.scenario == "compare":
        dev = np.abs(np.stack(master_mats) - ensemble.mean)
        se = ensemble.standard_error()
        z = dev / np.maximum(se, 1e-300)
        report.metrics["max_abs_deviation"] = float(dev.max())
        report.metrics["max_z_score"] = float(z[se > 0].max()) if np.any(se > 0) else 0.0
        if report.timings["master_integration_s"] > 0:
            # wall-clock derived: lives with the timings, not the stable report
            report.timings["speedup_ratio"] = float(
                report.timings["oracle_integration_s"]
                / report.timings["master_integration_s"])
        delta = {}
        for t in cfg.outputs.snapshot_times:
            idx = _nearest_index(times, t)
            delta[t] = np.abs(np.abs(master_mats[idx]) - np.abs(ensemble.mean[idx]))
        report.data["delta_rho"] = delta
        report.metrics["delta_rho_max"] = {f"{t:g}": float(d.max()) for t, d in delta.items()}

    if two and master_mats is not None:
        snap_metrics = {}
        for t in cfg.outputs.snapshot_times:
            idx = _nearest_index(times, t)
            joint = joint_probability(master_mats[idx])
            g = joint.gamma_mat
            off = g[~np.eye(n, dtype=bool)]
            snap_metrics[f"{t:g}"] = {
                "bunching_ratio": bunching_ratio(joint),
                "min_diagonal": float(g.diagonal().min()),
                "max_offdiagonal": float(off.max()),
            }
        if snap_metrics:
            report.metrics["joint_probability_snapshots"] = snap_metrics

    report.metrics["oracle_backend"] = oracle_mod.BACKEND
    report.timings["cpu_count"] = os.cpu_count()

    if write:
        write_outputs(report, cfg, out_dir)
    return report


def write_outputs(report: RunReport, cfg: ExperimentConfig, out_dir=None):
    """Write the report's data files; returns the list of paths written."""
    base = Path(out_dir or os.environ.get(OUTPUT_DIR_ENV) or Path.cwd() / "runs")
    base.mkdir(parents=True, exist_ok=True)
    report.out_dir = base
    name = report.name
    n = cfg.network.n_sites
    times = report.data["times"]
    two = cfg.initial_state.is_two_particle()

    def emit_csv(path, rows):
        text = "\n".join(",".join(row) for row in rows) + "\n"
        path.write_text(text)
        report.files.append(str(path))

    def emit_json(path, doc):
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        report.files.append(str(path))

    if "master" in report.data:
        mats = [snap.rho for _, snap in report.data["master"]]
        rows = (_two_series_rows(times, mats) if two
                else _single_series_rows(times, mats))
        emit_csv(base / f"{name}_master_timeseries.csv", rows)
        for t in cfg.outputs.snapshot_times:
            idx = _nearest_index(times, t)
            kind = "two_particle" if two else "single"
            emit_json(base / f"{name}_master_snapshot_t{t:g}.json",
                      _snapshot_doc(mats[idx], t, kind, n))

    if "ensemble" in report.data:
        ens = report.data["ensemble"]
        ses = ens.standard_error()
        mats = list(ens.mean)
        rows = (_two_series_rows(times, mats, ses) if two
                else _single_series_rows(times, mats, ses))
        emit_csv(base / f"{name}_oracle_timeseries.csv", rows)
        for t in cfg.outputs.snapshot_times:
            idx = _nearest_index(times, t)
            kind = "two_particle" if two else "single"
            emit_json(base / f"{name}_oracle_snapshot_t{t:g}.json",
                      _snapshot_doc(ens.mean[idx], t, kind, n))

    for t, delta in report.data.get("delta_rho", {}).items():
        emit_json(base / f"{name}_delta_rho_t{t:g}.json", {
            "kind": "delta_rho",
            "time_ps": float(t),
            "definition": "element-wise | |rho_master| - |rho_oracle| |",
            "values": [[float(x) for x in row] for row in delta],
        })

    if "steady_state" in report.data:
        emit_json(base / f"{name}_steady_state.json",
                  _snapshot_doc(report.data["steady_state"].rho, float("nan"),
                                "single", n) | {"time_ps": "stationary"})

    emit_json(base / f"{name}_report.json", {
        "name": name,
        "scenario": report.scenario,
        "config": serialize_experiment_config(cfg),
        "metrics": report.metrics,
        "files": sorted(Path(f).name for f in report.files),
    })

    # timings are wall-clock and deliberately live outside the byte-stable set
    timings_path = base / f"{name}_timings.json"
    timings_path.write_text(json.dumps(report.timings, indent=2, sort_keys=True) + "\n")
    report.files.append(str(timings_path))
    return [Path(f) for f in report.files]
