#!/usr/bin/env python3
"""Classical random-walk calibration at the full experiment size."""

import sys

from nclil.cli import main

if __name__ == "__main__":
    args = ["baseline-scalar", "--paths", "4096", "--horizon", "1000000",
            "--per-path", "--out", "out/baseline-scalar"]
    sys.exit(main(args + sys.argv[1:]))
