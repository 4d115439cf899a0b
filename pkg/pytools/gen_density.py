#!/usr/bin/env python3
"""Derive a density volume from a velocity volume with Gardner's relation.

rho = 309.8 * v^0.25 (SI units: v in m/s gives rho in kg/m^3), applied
pointwise, so the output file has exactly the layout and size of the input.
"""

import argparse
import sys

import numpy as np

GARDNER_A = 309.8
GARDNER_B = 0.25


def gardner(velocity):
    if velocity.size == 0:
        raise ValueError("velocity file is empty")
    if not np.all(np.isfinite(velocity)) or np.any(velocity <= 0):
        raise ValueError("velocity must be finite and strictly positive")
    return GARDNER_A * velocity**GARDNER_B


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--vel", required=True, help="input velocity .bin (float64)")
    parser.add_argument("--out", required=True, help="output density .bin")
    args = parser.parse_args(argv)
    try:
        v = np.fromfile(args.vel, dtype="<f8")
        rho = gardner(v)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    rho.astype("<f8").tofile(args.out)
    print(f"wrote density for {v.size} samples to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
