#!/usr/bin/env python3
"""Quantitative master-vs-trajectory comparison for the separable two-particle
input: magnitude-difference matrices at t = 1, 3, 5 ps plus wall-clock
timings for both routes (the ensemble side takes several minutes)."""

import sys

from stochnet.cli import main

if __name__ == "__main__":
    sys.exit(main(["preset", "appendixB", *sys.argv[1:]]))
