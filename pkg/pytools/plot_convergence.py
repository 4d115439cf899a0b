#!/usr/bin/env python3
"""Plot the misfit convergence curve from an inversion log.

Scans the log for ``J=<value>`` entries (one per optimizer iteration in
the fwi driver's output) and plots them in order on a log scale.
"""

import argparse
import re
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

J_PATTERN = re.compile(r"\bJ=([0-9][0-9.eE+-]*)")


def parse_misfits(text):
    values = [float(m.group(1)) for m in J_PATTERN.finditer(text)]
    if not values:
        raise ValueError("no J=<value> entries found in the log")
    return values


def render(values, out_path):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(range(len(values)), values, marker="o")
    ax.set_xlabel("optimizer iteration")
    ax.set_ylabel("misfit J")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--log", required=True, help="fwi log file")
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)
    try:
        with open(args.log, encoding="utf-8") as fh:
            values = parse_misfits(fh.read())
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    render(values, args.out)
    print(f"plotted {len(values)} misfit values to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
