#!/usr/bin/env python3
"""Two-particle snapshots at t = 0 and t = 1 ps for the separable, incoherent
and entangled inputs: bunching for indistinguishable particles, anti-bunching
for distinguishable ones."""

import sys

from stochnet.cli import main

if __name__ == "__main__":
    sys.exit(main(["preset", "fig3", *sys.argv[1:]]))
