#!/usr/bin/env python3
"""Generate a synthetic velocity model as a raw binary volume.

The file holds nx*ny*nz little-endian float64 values with z varying
fastest: linear offset (ix*ny + iy)*nz + iz.  Three kinds are supported:
a constant model, a centered hard sphere, and a centered sphere with a
Gaussian profile, v = v_base + 1000 * exp(-0.5 * d^2 / sigma^2) with d the
index distance to (nx/2, ny/2, nz/2) and sigma in points.
"""

import argparse
import sys

import numpy as np


def centered_distance_squared(nx, ny, nz):
    di2 = (np.arange(nx) - nx / 2.0) ** 2
    dj2 = (np.arange(ny) - ny / 2.0) ** 2
    dk2 = (np.arange(nz) - nz / 2.0) ** 2
    return di2[:, None, None] + dj2[None, :, None] + dk2[None, None, :]


def build_model(kind, nx, ny, nz, v_base, sigma=None, radius=None, v_sphere=None):
    if min(nx, ny, nz) < 1:
        raise ValueError("model dimensions must be positive")
    if v_base <= 0:
        raise ValueError("v_base must be positive")
    if kind == "constant":
        return np.full((nx, ny, nz), float(v_base))
    d2 = centered_distance_squared(nx, ny, nz)
    if kind == "sphere":
        if radius is None or radius < 0:
            raise ValueError("sphere needs a nonnegative --radius in points")
        inside = d2 < float(radius) ** 2
        v = np.full((nx, ny, nz), float(v_base))
        v[inside] = float(v_sphere if v_sphere is not None else v_base + 1000.0)
        return v
    if kind == "gaussian_sphere":
        if sigma is None or sigma <= 0:
            raise ValueError("gaussian_sphere needs a positive --sigma in points")
        return v_base + 1.0e3 * np.exp(-0.5 * d2 / sigma**2)
    raise ValueError(f"unknown model kind {kind!r}")


def write_volume(path, values):
    np.ascontiguousarray(values, dtype="<f8").tofile(path)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--kind", choices=("constant", "sphere", "gaussian_sphere"),
                        required=True)
    parser.add_argument("--nx", type=int, required=True)
    parser.add_argument("--ny", type=int, required=True)
    parser.add_argument("--nz", type=int, required=True)
    parser.add_argument("--v-base", type=float, default=2500.0,
                        help="background velocity in m/s (default 2500)")
    parser.add_argument("--v-sphere", type=float, default=None,
                        help="velocity inside a hard sphere (default v_base + 1000)")
    parser.add_argument("--radius", type=float, default=None,
                        help="hard-sphere radius in points")
    parser.add_argument("--sigma", type=float, default=None,
                        help="Gaussian width in points")
    parser.add_argument("--out", required=True, help="output .bin path")
    args = parser.parse_args(argv)
    try:
        v = build_model(args.kind, args.nx, args.ny, args.nz, args.v_base,
                        sigma=args.sigma, radius=args.radius, v_sphere=args.v_sphere)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    write_volume(args.out, v)
    print(f"wrote {args.kind} model {args.nx}x{args.ny}x{args.nz} to {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
