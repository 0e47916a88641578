#!/usr/bin/env python3
"""Regenerate the frozen regression values used by the acceptance suite.

Golden values come from converged master-equation runs: each quantity is
computed at two step sizes and the runs must agree to well below the 1e-6
pin before anything is written.  Output: tests/goldens/*.json.
"""

import json
import sys
from pathlib import Path

import numpy as np

from stochnet import (
    NetworkSpec,
    SolverOptions,
    TimeGrid,
    canonical_two_particle_state,
    evolve_two,
    validate_network,
)

REPO = Path(__file__).resolve().parent.parent
GOLDEN_DIR = REPO / "tests" / "goldens"

KINDS = ("separable", "incoherent", "entangled")


def paper_network():
    kappa = np.array([[0.0, 2.0, 1.0], [2.0, 0.0, 1.0], [1.0, 1.0, 0.0]])
    gamma = 0.38 * (np.ones((3, 3)) - np.eye(3))
    return validate_network(NetworkSpec(3, np.array([5.0, 5.0, 5.0]), kappa, gamma))


def converged_snapshots(net, kind, sample_times, t_end):
    """Evolve at two steps; require agreement well under the regression pin."""
    rho0 = canonical_two_particle_state(kind, (0, 1), 3)
    grid = TimeGrid(0.0, t_end, np.asarray(sample_times, dtype=float))
    coarse = evolve_two(net, rho0, grid, SolverOptions(dt=5e-4))
    fine = evolve_two(net, rho0, grid, SolverOptions(dt=2.5e-4))
    for (_, a), (_, b) in zip(coarse, fine):
        gap = np.abs(a.rho - b.rho).max()
        if gap > 1e-9:
            raise RuntimeError(f"{kind}: runs at dt=5e-4 and 2.5e-4 differ by {gap:.2e}")
    return fine


def main():
    GOLDEN_DIR.mkdir(parents=True, exist_ok=True)
    net = paper_network()

    joint = {}
    for kind in KINDS:
        snaps = converged_snapshots(net, kind, [0.0, 1.0], 1.0)
        joint[kind] = {
            f"{t:g}": snap.rho.diagonal().real.reshape(3, 3).tolist()
            for t, snap in snaps
        }
    path = GOLDEN_DIR / "fig3_joint_probabilities.json"
    path.write_text(json.dumps(joint, indent=2, sort_keys=True) + "\n")
    print(f"wrote {path}")

    exchange = {}
    for kind in ("separable", "incoherent"):
        snap = converged_snapshots(net, kind, [20.0], 20.0)[0][1]
        r = snap.tensor()
        mags = [abs(r[p, q, q, p]) for p in range(3) for q in range(3) if p != q]
        exchange[kind] = {
            "time_ps": 20.0,
            "exchange_coherence_min": min(mags),
            "exchange_coherence_max": max(mags),
        }
    path = GOLDEN_DIR / "exchange_coherence.json"
    path.write_text(json.dumps(exchange, indent=2, sort_keys=True) + "\n")
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
