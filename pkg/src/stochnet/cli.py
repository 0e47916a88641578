"""Command-line interface.

Subcommands:
  run CONFIG        run the experiment(s) in a JSON config file
  preset NAME       run a bundled preset (fig2, fig3, appendixB)
  validate CONFIG   parse and validate a config file without running it

``--seed``, ``--threads``, ``--dt`` and ``--n-traj`` override the
corresponding config fields (``--dt`` retunes both the master solver and the
oracle step).  Output goes to ``--out``, else $STOCHNET_OUT, else ./runs.
"""

from __future__ import annotations

import argparse
import sys
from importlib import resources
from pathlib import Path

from .config import apply_overrides, parse_config_document
from .errors import StochnetError
from .runner import run_experiment

PRESETS = ("fig2", "fig3", "appendixB")


def _load_preset_text(name):
    if name not in PRESETS:
        raise StochnetError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    return (resources.files("stochnet") / "presets" / f"{name}.json").read_text()


def _load_config_text(path):
    p = Path(path)
    if not p.exists():
        raise StochnetError(f"config file not found: {path}")
    return p.read_text()


def _run_configs(text, args):
    configs = parse_config_document(text)
    for cfg in configs:
        cfg = apply_overrides(cfg, seed=args.seed, threads=args.threads,
                              dt=args.dt, n_traj=args.n_traj)
        report = run_experiment(cfg, out_dir=args.out, write=True)
        print(f"{report.name}: scenario={report.scenario} "
              f"files={len(report.files)} out={report.out_dir}")
        for key, value in sorted(report.metrics.items()):
            print(f"  {key}: {value}")
        for key in ("master_integration_s", "oracle_integration_s", "steady_state_s"):
            if key in report.timings:
                print(f"  {key}: {report.timings[key]:.3f}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="stochnet",
        description="Quantum walks in networks with stochastically fluctuating couplings",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_run_flags(p):
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override oracle base seed")
        p.add_argument("--threads", type=int, default=None, help="override oracle threads")
        p.add_argument("--dt", type=float, default=None,
                       help="override both solver and oracle step (ps)")
        p.add_argument("--n-traj", type=int, default=None, help="override trajectory count")

    p_run = sub.add_parser("run", help="run experiments from a config file")
    p_run.add_argument("config", help="path to a JSON config or bundle")
    add_run_flags(p_run)

    p_preset = sub.add_parser("preset", help="run a bundled preset")
    p_preset.add_argument("name", choices=PRESETS)
    add_run_flags(p_preset)

    p_val = sub.add_parser("validate", help="validate a config file")
    p_val.add_argument("config", help="path to a JSON config or bundle")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _run_configs(_load_config_text(args.config), args)
        if args.command == "preset":
            return _run_configs(_load_preset_text(args.name), args)
        if args.command == "validate":
            configs = parse_config_document(_load_config_text(args.config))
            for cfg in configs:
                print(f"{cfg.name}: ok ({cfg.scenario}, {cfg.network.n_sites} sites)")
            return 0
        raise StochnetError(f"unknown command {args.command!r}")
    except StochnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
