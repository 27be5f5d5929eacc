#!/usr/bin/env python3
"""Full-size diagonal ensemble experiment.

Defaults reproduce the headline run: a million-step Rademacher ensemble
over 4096 paths, eta = 1.5, delta = delta' = eps = 0.1, eps' = 0.02.
Takes a couple of minutes; outputs land in out/lil-run.
"""

import sys

from nclil.cli import main

DEFAULTS = [
    "lil-run",
    "--horizon", "1000000",
    "--paths", "4096",
    "--eps-prime", "0.02",
    "--seed", "0",
    "--out", "out/lil-run",
]

if __name__ == "__main__":
    sys.exit(main(DEFAULTS + sys.argv[1:]))
