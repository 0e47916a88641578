"""Declarative experiment configuration.

A config document is JSON with sections ``network``, ``scenario``,
``initial_state``, ``grid``, ``solver``, ``oracle`` and ``outputs``.  Site
labels in documents are 1-based; everything returned by the parser is
0-based.  A bundle file holds several experiments under ``experiments``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigParseError
from .network import NetworkSpec, parse_network_config, serialize_network_spec
from .ode import SolverOptions, TimeGrid

SCENARIOS = ("single", "two", "oracle-single", "oracle-two", "compare", "steady-state")
OBSERVABLES = ("populations", "coherences", "joint_probabilities", "bunching_ratio",
               "purity")
SINGLE_STATE_KINDS = ("site",)
TWO_STATE_KINDS = ("separable", "incoherent", "entangled", "amplitude_profile")


@dataclass(frozen=True)
class InitialState:
    """Initial condition: a site index, a canonical two-particle kind on a
    site pair, or an explicit amplitude profile with statistics."""

    kind: str
    site: int | None = None
    sites: tuple[int, int] | None = None
    xi: np.ndarray | None = None
    statistics: str | None = None

    def is_two_particle(self):
        return self.kind != "site"


@dataclass(frozen=True)
class OracleOptions:
    n_traj: int = 10000
    dt: float = 1e-3
    base_seed: int = 0
    scheme: str = "heun"
    unitarity_tol: float = 1e-4
    threads: int = 1


@dataclass(frozen=True)
class OutputSpec:
    observables: tuple[str, ...] = ()
    snapshot_times: tuple[float, ...] = ()


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    network: NetworkSpec
    scenario: str
    initial_state: InitialState
    grid: TimeGrid
    solver: SolverOptions = SolverOptions()
    oracle: OracleOptions = OracleOptions()
    outputs: OutputSpec = OutputSpec()


def _require(data, key, path):
    if key not in data:
        raise ConfigParseError(f"{path}.{key}: missing")
    return data[key]


def _parse_initial_state(data, n_sites) -> InitialState:
    path = "initial_state"
    if not isinstance(data, dict):
        raise ConfigParseError(f"{path}: expected an object")
    if "site" in data:
        site = data["site"]
        if not isinstance(site, int) or not 1 <= site <= n_sites:
            raise ConfigParseError(f"{path}.site: need an integer in 1..{n_sites}, got {site!r}")
        return InitialState(kind="site", site=site - 1)
    kind = _require(data, "kind", path)
    if kind in ("separable", "incoherent", "entangled"):
        sites = _require(data, "sites", path)
        if (not isinstance(sites, list) or len(sites) != 2
                or not all(isinstance(s, int) for s in sites)):
            raise ConfigParseError(f"{path}.sites: need two integer site labels")
        a, b = sites
        if not (1 <= a < b <= n_sites):
            raise ConfigParseError(
                f"{path}.sites: need 1 <= a < b <= {n_sites}, got ({a}, {b})")
        return InitialState(kind=kind, sites=(a - 1, b - 1))
    if kind == "amplitude_profile":
        xi_raw = _require(data, "xi", path)
        stats = _require(data, "statistics", path)
        if stats not in ("boson", "fermion"):
            raise ConfigParseError(
                f"{path}.statistics: must be 'boson' or 'fermion', got {stats!r}")
        try:
            arr = np.asarray(xi_raw, dtype=float)
            if arr.ndim == 3 and arr.shape[-1] == 2:  # [re, im] pairs
                xi = arr[..., 0] + 1j * arr[..., 1]
            else:
                xi = arr.astype(complex)
        except (TypeError, ValueError) as exc:
            raise ConfigParseError(f"{path}.xi: not a complex matrix ({exc})") from exc
        if xi.shape != (n_sites, n_sites):
            raise ConfigParseError(
                f"{path}.xi: shape {xi.shape} does not match n_sites={n_sites}")
        norm = np.linalg.norm(xi)
        if norm == 0:
            raise ConfigParseError(f"{path}.xi: zero profile")
        return InitialState(kind=kind, xi=xi / norm, statistics=stats)
    raise ConfigParseError(f"{path}.kind: unknown kind {kind!r}")


def _parse_grid(data) -> TimeGrid:
    path = "grid"
    if not isinstance(data, dict):
        raise ConfigParseError(f"{path}: expected an object")
    t_start = float(data.get("t_start", 0.0))
    t_end = _require(data, "t_end", path)
    try:
        if "sample_times" in data:
            times = np.asarray(data["sample_times"], dtype=float)
        else:
            n = _require(data, "n_samples", path)
            if not isinstance(n, int) or n < 1:
                raise ConfigParseError(f"{path}.n_samples: need a positive integer")
            times = np.linspace(t_start, float(t_end), n)
        return TimeGrid(t_start, float(t_end), times)
    except ValueError as exc:
        raise ConfigParseError(f"{path}: {exc}") from exc


def _parse_solver(data) -> SolverOptions:
    if data is None:
        return SolverOptions()
    path = "solver"
    known = {"dt", "mode", "rel_tol", "abs_tol"}
    for key in data:
        if key not in known:
            raise ConfigParseError(f"{path}.{key}: unknown field")
    try:
        return SolverOptions(
            dt=float(data.get("dt", 1e-3)),
            mode=data.get("mode", "fixed"),
            rel_tol=float(data.get("rel_tol", 1e-8)),
            abs_tol=float(data.get("abs_tol", 1e-12)),
        )
    except ValueError as exc:
        raise ConfigParseError(f"{path}: {exc}") from exc


def _parse_oracle(data) -> OracleOptions:
    if data is None:
        return OracleOptions()
    path = "oracle"
    known = {"n_traj", "dt", "base_seed", "scheme", "unitarity_tol", "threads"}
    for key in data:
        if key not in known:
            raise ConfigParseError(f"{path}.{key}: unknown field")
    n_traj = data.get("n_traj", 10000)
    if not isinstance(n_traj, int) or n_traj < 1:
        raise ConfigParseError(f"{path}.n_traj: need a positive integer, got {n_traj!r}")
    scheme = data.get("scheme", "heun")
    if scheme not in ("heun", "euler"):
        raise ConfigParseError(f"{path}.scheme: must be 'heun' or 'euler', got {scheme!r}")
    threads = data.get("threads", 1)
    if not isinstance(threads, int) or threads < 1:
        raise ConfigParseError(f"{path}.threads: need a positive integer")
    dt = float(data.get("dt", 1e-3))
    if dt <= 0:
        raise ConfigParseError(f"{path}.dt: must be positive")
    tol = float(data.get("unitarity_tol", 1e-4))
    if tol <= 0:
        raise ConfigParseError(f"{path}.unitarity_tol: must be positive")
    return OracleOptions(n_traj=n_traj, dt=dt, base_seed=int(data.get("base_seed", 0)),
                         scheme=scheme, unitarity_tol=tol, threads=threads)


def _parse_outputs(data) -> OutputSpec:
    if data is None:
        return OutputSpec()
    path = "outputs"
    obs = data.get("observables", [])
    for name in obs:
        if name not in OBSERVABLES:
            raise ConfigParseError(
                f"{path}.observables: unknown observable {name!r} "
                f"(known: {', '.join(OBSERVABLES)})")
    snaps = data.get("snapshot_times", [])
    try:
        snap_tuple = tuple(float(t) for t in snaps)
    except (TypeError, ValueError) as exc:
        raise ConfigParseError(f"{path}.snapshot_times: {exc}") from exc
    return OutputSpec(observables=tuple(obs), snapshot_times=snap_tuple)


def parse_experiment_config(document, name=None) -> ExperimentConfig:
    """Parse one experiment config from JSON text or a decoded mapping."""
    if isinstance(document, (str, bytes)):
        try:
            data = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ConfigParseError(f"invalid JSON: {exc}") from exc
    else:
        data = document
    if not isinstance(data, dict):
        raise ConfigParseError(f"expected a JSON object, got {type(data).__name__}")
    known = {"name", "network", "scenario", "initial_state", "grid", "solver",
             "oracle", "outputs"}
    for key in data:
        if key not in known:
            raise ConfigParseError(f"{key}: unknown section")
    network = parse_network_config(_require(data, "network", "config"))
    scenario = _require(data, "scenario", "config")
    if scenario not in SCENARIOS:
        raise ConfigParseError(
            f"scenario: unknown scenario {scenario!r} (known: {', '.join(SCENARIOS)})")
    state = _parse_initial_state(_require(data, "initial_state", "config"),
                                 network.n_sites)
    two_particle_scenario = scenario in ("two", "oracle-two")
    if scenario in ("single", "oracle-single", "steady-state") and state.is_two_particle():
        raise ConfigParseError(
            f"initial_state: scenario {scenario!r} needs a single-particle state")
    if two_particle_scenario and not state.is_two_particle():
        raise ConfigParseError(
            f"initial_state: scenario {scenario!r} needs a two-particle state")
    grid = _parse_grid(_require(data, "grid", "config"))
    cfg = ExperimentConfig(
        name=str(data.get("name", name or "experiment")),
        network=network,
        scenario=scenario,
        initial_state=state,
        grid=grid,
        solver=_parse_solver(data.get("solver")),
        oracle=_parse_oracle(data.get("oracle")),
        outputs=_parse_outputs(data.get("outputs")),
    )
    return cfg


def parse_config_document(text) -> list[ExperimentConfig]:
    """Parse a config file: either one experiment or a bundle of them."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"invalid JSON: {exc}") from exc
    if isinstance(data, dict) and "experiments" in data:
        experiments = data["experiments"]
        if not isinstance(experiments, list) or not experiments:
            raise ConfigParseError("experiments: expected a non-empty list")
        return [parse_experiment_config(entry, name=f"experiment-{i + 1}")
                for i, entry in enumerate(experiments)]
    return [parse_experiment_config(data)]


def apply_overrides(cfg: ExperimentConfig, *, seed=None, threads=None, dt=None,
                    n_traj=None) -> ExperimentConfig:
    """CLI-flag overrides.  ``dt`` retunes both the solver and oracle steps."""
    oracle = cfg.oracle
    solver = cfg.solver
    if seed is not None:
        oracle = replace(oracle, base_seed=int(seed))
    if threads is not None:
        oracle = replace(oracle, threads=int(threads))
    if n_traj is not None:
        oracle = replace(oracle, n_traj=int(n_traj))
    if dt is not None:
        oracle = replace(oracle, dt=float(dt))
        solver = replace(solver, dt=float(dt))
    return replace(cfg, oracle=oracle, solver=solver)


def serialize_experiment_config(cfg: ExperimentConfig) -> dict:
    """Canonical JSON form (1-based site labels), suitable for re-parsing."""
    state: dict = {"kind": cfg.initial_state.kind}
    if cfg.initial_state.kind == "site":
        state = {"site": cfg.initial_state.site + 1}
    elif cfg.initial_state.sites is not None:
        state["sites"] = [s + 1 for s in cfg.initial_state.sites]
    if cfg.initial_state.xi is not None:
        state["xi"] = [[[float(z.real), float(z.imag)] for z in row]
                       for row in cfg.initial_state.xi]
        state["statistics"] = cfg.initial_state.statistics
    return {
        "name": cfg.name,
        "network": serialize_network_spec(cfg.network),
        "scenario": cfg.scenario,
        "initial_state": state,
        "grid": {
            "t_start": cfg.grid.t_start,
            "t_end": cfg.grid.t_end,
            "sample_times": [float(t) for t in cfg.grid.sample_times],
        },
        "solver": {"dt": cfg.solver.dt, "mode": cfg.solver.mode,
                   "rel_tol": cfg.solver.rel_tol, "abs_tol": cfg.solver.abs_tol},
        "oracle": {"n_traj": cfg.oracle.n_traj, "dt": cfg.oracle.dt,
                   "base_seed": cfg.oracle.base_seed, "scheme": cfg.oracle.scheme,
                   "unitarity_tol": cfg.oracle.unitarity_tol,
                   "threads": cfg.oracle.threads},
        "outputs": {"observables": list(cfg.outputs.observables),
                    "snapshot_times": list(cfg.outputs.snapshot_times)},
    }
