#!/usr/bin/env python3
"""Single-excitation experiment on the three-site network: master-equation
populations and coherences over [0, 10] ps next to the 10,000-trajectory
ensemble (takes a few minutes).  Extra flags are passed to the CLI, e.g.
``--out DIR --n-traj 2000``."""

import sys

from stochnet.cli import main

if __name__ == "__main__":
    sys.exit(main(["preset", "fig2", *sys.argv[1:]]))
