#!/usr/bin/env python3
"""Render one slice of a binary velocity volume with a color map.

The volume layout is nx*ny*nz float64 with z fastest; the slice axis and
index select a 2-D plane.
"""

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

AXES = {"x": 0, "y": 1, "z": 2}


def load_volume(path, nx, ny, nz):
    raw = np.fromfile(path, dtype="<f8")
    expected = nx * ny * nz
    if raw.size != expected:
        raise ValueError(f"{path}: holds {raw.size} values, expected {expected}")
    return raw.reshape(nx, ny, nz)


def take_slice(volume, axis, index):
    ax = AXES[axis]
    if not 0 <= index < volume.shape[ax]:
        raise ValueError(f"index {index} out of range for axis {axis} "
                         f"of size {volume.shape[ax]}")
    return np.take(volume, index, axis=ax)


def render(plane, out_path, axis, index, title=""):
    fig, ax = plt.subplots(figsize=(6, 5))
    im = ax.imshow(plane.T, cmap="viridis", origin="upper", aspect="equal",
                   interpolation="nearest")
    remaining = [a for a in "xyz" if a != axis]
    ax.set_xlabel(remaining[0])
    ax.set_ylabel(remaining[1])
    ax.set_title(title or f"slice {axis}={index}")
    fig.colorbar(im, ax=ax, label="m/s")
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--model", required=True, help="volume .bin path")
    parser.add_argument("--nx", type=int, required=True)
    parser.add_argument("--ny", type=int, required=True)
    parser.add_argument("--nz", type=int, required=True)
    parser.add_argument("--axis", choices=tuple(AXES), default="y")
    parser.add_argument("--index", type=int, required=True)
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)
    try:
        volume = load_volume(args.model, args.nx, args.ny, args.nz)
        plane = take_slice(volume, args.axis, args.index)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    render(plane, args.out, args.axis, args.index, title=args.model)
    print(f"rendered {args.axis}={args.index} slice to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
