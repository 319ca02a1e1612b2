#!/usr/bin/env python3
"""Kernel-schedule comparison on an ill-conditioned quadratic.

Runs the same instance under an isotropic kernel at its certified step
size and under Hessian-matched diagonal/Jacobi kernels, and prints the
iteration counts.  The matched kernels deliberately exceed the uniform
m/L step cap (validation is advisory), which is exactly the regime where
second-order proximity terms pay off.
"""

import argparse
import sys
from pathlib import Path

from vbpg.cli import main as cli_main

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "compare_kernels.json"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="compare_out")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rc = cli_main(["compare", "--config", str(CONFIG), "--seed",
                   str(args.seed), "--out", args.out])
    if rc != 0:
        sys.exit(rc)
    print((Path(args.out) / "compare.csv").read_text())


if __name__ == "__main__":
    main()
