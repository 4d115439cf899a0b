"""Readers and writers for the binary project-directory file set.

Everything is raw little-endian IEEE-754 float64.  Coordinates are stored
as (x, y, z) triples; models use the dimension sequence z * y * x with z
varying fastest, i.e. linear offset (ix*ny + iy)*nz + iz.  Seismograms are
trace-major: the first ns doubles are the full first trace.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from wavekit.model import Field3D, Grid

__all__ = [
    "Coordinate3",
    "Seismogram",
    "ShotRecord",
    "FileFormatError",
    "read_source_coords",
    "write_source_coords",
    "read_receiver_coords",
    "write_receiver_coords",
    "read_wavelet",
    "write_wavelet",
    "read_seismogram",
    "write_seismogram",
    "read_model",
    "write_model",
    "receiver_coord_path",
    "observed_data_path",
    "iteration_model_path",
    "SOURCE_COORD_FILE",
    "SOURCE_WAVELET_FILE",
    "FINAL_MODEL_FILE",
]

DTYPE = np.dtype("<f8")

SOURCE_COORD_FILE = "src_coord.bin"
SOURCE_WAVELET_FILE = "source.bin"
FINAL_MODEL_FILE = "v-final.bin"


class FileFormatError(ValueError):
    """Raised when a binary file has the wrong size or content."""


@dataclass(frozen=True)
class Coordinate3:
    """Physical position in meters."""

    x: float
    y: float
    z: float


@dataclass
class Seismogram:
    """Receiver-by-time samples for one shot."""

    shot_id: int
    dt: float
    data: np.ndarray  # (n_receivers, ns)

    def __post_init__(self) -> None:
        self.data = np.ascontiguousarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ValueError("seismogram data must be 2-D (receivers x samples)")

    @property
    def n_receivers(self) -> int:
        return self.data.shape[0]

    @property
    def ns(self) -> int:
        return self.data.shape[1]


@dataclass
class ShotRecord:
    """One shot: source position, receiver positions, optional data."""

    shot_id: int
    source: Coordinate3
    receivers: list[Coordinate3]
    seismogram: Seismogram | None = None


def receiver_coord_path(proj_dir, shot_id: int) -> Path:
    return Path(proj_dir) / f"rcv_coord_{shot_id}.bin"


def observed_data_path(proj_dir, shot_id: int) -> Path:
    return Path(proj_dir) / f"dobs_{shot_id}.bin"


def iteration_model_path(proj_dir, k: int) -> Path:
    return Path(proj_dir) / f"v-iter-{k}.bin"


def _read_exact(path, expected_bytes: int | None = None,
                multiple_of: int | None = None) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"missing input file: {path}")
    size = os.path.getsize(path)
    if expected_bytes is not None and size != expected_bytes:
        raise FileFormatError(f"{path}: expected {expected_bytes} bytes, found {size}")
    if multiple_of is not None and size % multiple_of != 0:
        raise FileFormatError(f"{path}: size {size} is not a multiple of {multiple_of} bytes")
    return np.fromfile(path, dtype=DTYPE)


def _check_finite(values: np.ndarray, path) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise FileFormatError(f"{path}: contains non-finite values")
    return values


def read_source_coords(path, n_src: int | None = None) -> list[Coordinate3]:
    """Read one (x, y, z) triple per shot, in shot-ID order."""
    expected = None if n_src is None else n_src * 24
    raw = _check_finite(_read_exact(path, expected_bytes=expected, multiple_of=24), path)
    return [Coordinate3(*xyz) for xyz in raw.reshape(-1, 3)]


def write_source_coords(path, coords) -> None:
    np.array([(c.x, c.y, c.z) for c in coords], dtype=np.float64).astype(DTYPE).tofile(path)


def read_receiver_coords(path) -> list[Coordinate3]:
    """Read the receiver (x, y, z) triples of one shot, in trace order."""
    raw = _check_finite(_read_exact(path, multiple_of=24), path)
    return [Coordinate3(*xyz) for xyz in raw.reshape(-1, 3)]


def write_receiver_coords(path, coords) -> None:
    write_source_coords(path, coords)


def read_wavelet(path, ns: int) -> np.ndarray:
    """Read the ns source-signature samples."""
    return _read_exact(path, expected_bytes=ns * 8)


def write_wavelet(path, samples) -> None:
    np.asarray(samples, dtype=np.float64).astype(DTYPE).tofile(path)


def read_seismogram(path, ns: int, *, shot_id: int = 0, dt: float = 0.0) -> Seismogram:
    """Read a trace-major seismogram; the receiver count comes from the size."""
    if ns < 1:
        raise ValueError("ns must be >= 1")
    raw = _read_exact(path, multiple_of=ns * 8)
    return Seismogram(shot_id=shot_id, dt=dt, data=raw.reshape(-1, ns))


def write_seismogram(path, seismogram: Seismogram) -> None:
    seismogram.data.astype(DTYPE).tofile(path)


def read_model(path, grid: Grid, unit: str = "m/s") -> Field3D:
    """Read an interior-sized model stored z-fastest."""
    n = grid.nx * grid.ny * grid.nz
    raw = _check_finite(_read_exact(path, expected_bytes=n * 8), path)
    return Field3D(grid, raw.reshape(grid.interior_shape), unit)


def write_model(path, field: Field3D) -> None:
    """Write the interior region of a model, z-fastest."""
    np.ascontiguousarray(field.interior()).astype(DTYPE).tofile(path)
