#!/usr/bin/env python3
"""Render a seismogram file as a grayscale variable-density image.

The input is trace-major float64: the first ns values are the full first
trace.  Time runs downward, one column per receiver.
"""

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def load_seismogram(path, ns):
    raw = np.fromfile(path, dtype="<f8")
    if ns < 1:
        raise ValueError("ns must be >= 1")
    if raw.size % ns != 0:
        raise ValueError(f"{path}: {raw.size} samples not divisible by ns={ns}")
    return raw.reshape(-1, ns)


def render(data, out_path, dt=None, title="seismogram"):
    clip = np.percentile(np.abs(data), 99.0) or 1.0
    extent = [-0.5, data.shape[0] - 0.5,
              (data.shape[1] - 1) * (dt or 1.0), 0.0]
    fig, ax = plt.subplots(figsize=(6, 7))
    ax.imshow(data.T, cmap="gray", aspect="auto", vmin=-clip, vmax=clip,
              extent=extent, interpolation="nearest")
    ax.set_xlabel("trace")
    ax.set_ylabel("time (s)" if dt else "sample")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dobs", required=True, help="seismogram .bin path")
    parser.add_argument("--ns", type=int, required=True, help="samples per trace")
    parser.add_argument("--dt", type=float, default=None, help="time sampling in s")
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)
    try:
        data = load_seismogram(args.dobs, args.ns)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    render(data, args.out, dt=args.dt, title=args.dobs)
    print(f"rendered {data.shape[0]} traces x {data.shape[1]} samples to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
