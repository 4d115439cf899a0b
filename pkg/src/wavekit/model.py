"""Grid geometry, scalar fields and synthetic model builders.

Arrays are laid out ``(x, y, z)`` with z fastest (C order), matching the
on-disk model format.  A field is either interior-sized or extended by the
absorbing-boundary thickness; the top-side extension may differ so a free
surface can sit one stencil halo below the array edge.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

__all__ = [
    "Grid",
    "Field3D",
    "MassTerm",
    "build_gaussian_sphere_model",
    "gardner_density",
    "mass_term",
    "extend_model",
    "fold_boundary",
    "laplacian_clamped",
]

GARDNER_A = 309.8  # kg/m^3 per (m/s)^b; SI form of the 0.31 g/cc relation
GARDNER_B = 0.25


@dataclass(frozen=True)
class Grid:
    """Discretization geometry: interior counts, spacings, origin, boundary.

    ``nb`` is the absorbing-boundary thickness in points; ``nb_top`` is the
    extension above the z=0 plane and defaults to ``nb`` (pass the stencil
    half-width instead when running with a free surface).
    """

    nx: int
    ny: int
    nz: int
    dx: float
    dy: float
    dz: float
    ox: float = 0.0
    oy: float = 0.0
    oz: float = 0.0
    nb: int = 0
    nb_top: int | None = None

    def __post_init__(self) -> None:
        if self.nb_top is None:
            object.__setattr__(self, "nb_top", self.nb)
        if min(self.nx, self.ny, self.nz) < 1:
            raise ValueError("grid needs at least one point per axis")
        if min(self.dx, self.dy, self.dz) <= 0:
            raise ValueError("grid spacings must be positive")
        if self.nb < 0 or self.nb_top < 0:
            raise ValueError("boundary thickness must be nonnegative")

    @classmethod
    def from_config(cls, cfg, free_surface: bool = False) -> "Grid":
        # a free surface needs two stencil halos above the surface plane:
        # one for the antisymmetric mirror, one more for the adjoint sweep's
        # scatter into the mirrored rows
        nb_top = 2 * cfg.stencil if free_surface else cfg.border
        return cls(cfg.nx, cfg.ny, cfg.nz, cfg.dx, cfg.dy, cfg.dz,
                   cfg.ox, cfg.oy, cfg.oz, nb=cfg.border, nb_top=nb_top)

    @property
    def nxe(self) -> int:
        return self.nx + 2 * self.nb

    @property
    def nye(self) -> int:
        return self.ny + 2 * self.nb

    @property
    def nze(self) -> int:
        return self.nz + self.nb_top + self.nb

    @property
    def interior_shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def extended_shape(self) -> tuple[int, int, int]:
        return (self.nxe, self.nye, self.nze)

    @property
    def offsets(self) -> tuple[int, int, int]:
        """Extended-array index of interior point (0, 0, 0)."""
        return (self.nb, self.nb, self.nb_top)

    @property
    def spacings(self) -> tuple[float, float, float]:
        return (self.dx, self.dy, self.dz)

    def interior_slices(self) -> tuple[slice, slice, slice]:
        return (slice(self.nb, self.nb + self.nx),
                slice(self.nb, self.nb + self.ny),
                slice(self.nb_top, self.nb_top + self.nz))

    def index_of(self, x: float, y: float, z: float) -> tuple[int, int, int]:
        """Nearest interior grid node of a physical coordinate."""
        i = int(round((x - self.ox) / self.dx))
        j = int(round((y - self.oy) / self.dy))
        k = int(round((z - self.oz) / self.dz))
        if not (0 <= i < self.nx and 0 <= j < self.ny and 0 <= k < self.nz):
            raise ValueError(f"coordinate ({x}, {y}, {z}) maps to node ({i}, {j}, {k}), "
                             f"outside the {self.nx}x{self.ny}x{self.nz} interior grid")
        return (i, j, k)

    def extended_index_of(self, x: float, y: float, z: float) -> tuple[int, int, int]:
        i, j, k = self.index_of(x, y, z)
        return (i + self.nb, j + self.nb, k + self.nb_top)


@dataclass
class Field3D:
    """A double-precision scalar field on the interior or extended grid."""

    grid: Grid
    values: np.ndarray
    unit: str = ""

    def __post_init__(self) -> None:
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        shape = self.values.shape
        if shape not in (self.grid.interior_shape, self.grid.extended_shape):
            raise ValueError(f"field shape {shape} matches neither interior "
                             f"{self.grid.interior_shape} nor extended "
                             f"{self.grid.extended_shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    @property
    def is_extended(self) -> bool:
        return self.values.shape == self.grid.extended_shape

    def interior(self) -> np.ndarray:
        """View of the interior region."""
        if not self.is_extended:
            return self.values
        return self.values[self.grid.interior_slices()]

    def copy(self) -> "Field3D":
        return Field3D(self.grid, self.values.copy(), self.unit)


@dataclass
class MassTerm:
    """The variable-density term m^2 = lap(sqrt(rho))/sqrt(rho), in 1/m^2."""

    field: Field3D
    sqrt_rho: Field3D = dataclass_field(repr=False, default=None)


def constant_field(grid: Grid, value: float, unit: str = "", extended: bool = False) -> Field3D:
    shape = grid.extended_shape if extended else grid.interior_shape
    return Field3D(grid, np.full(shape, float(value)), unit)


def build_gaussian_sphere_model(grid: Grid, v_base: float, sigma: float) -> Field3D:
    """Velocity model with a centered Gaussian high-velocity sphere.

    v(i,j,k) = v_base + 1e3 * exp(-0.5 * ((i-nx/2)^2 + (j-ny/2)^2 + (k-nz/2)^2) / sigma^2)

    Index offsets use the floating half-counts (nx/2, not nx//2); sigma is in
    points.  The returned field is extended by edge replication.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    di2 = (np.arange(grid.nx) - grid.nx / 2.0) ** 2
    dj2 = (np.arange(grid.ny) - grid.ny / 2.0) ** 2
    dk2 = (np.arange(grid.nz) - grid.nz / 2.0) ** 2
    d2 = di2[:, None, None] + dj2[None, :, None] + dk2[None, None, :]
    v = v_base + 1.0e3 * np.exp(-0.5 * d2 / sigma**2)
    return extend_model(Field3D(grid, v, unit="m/s"))


def gardner_density(vel: Field3D) -> Field3D:
    """Density from velocity via the power-law rho = 309.8 * v^0.25 (SI)."""
    if np.any(vel.values <= 0):
        raise ValueError("velocity must be strictly positive")
    rho = GARDNER_A * vel.values**GARDNER_B
    return Field3D(vel.grid, rho, unit="kg/m^3")


def laplacian_clamped(values: np.ndarray, spacings, coeffs: np.ndarray) -> np.ndarray:
    """Apply the symmetric second-derivative stencil with edge-clamped halos.

    ``coeffs`` holds the central coefficient and one-sided weights c0..ch
    (dimensionless); the result is divided by the squared spacings axis-wise.
    """
    h = len(coeffs) - 1
    padded = np.pad(values, h, mode="edge")
    core = tuple(slice(h, h + n) for n in values.shape)
    out = coeffs[0] * (1.0 / spacings[0] ** 2 + 1.0 / spacings[1] ** 2
                       + 1.0 / spacings[2] ** 2) * values
    for axis in range(3):
        inv_d2 = 1.0 / spacings[axis] ** 2
        for m in range(1, h + 1):
            lo = list(core)
            hi = list(core)
            lo[axis] = slice(h - m, h - m + values.shape[axis])
            hi[axis] = slice(h + m, h + m + values.shape[axis])
            out += (coeffs[m] * inv_d2) * (padded[tuple(lo)] + padded[tuple(hi)])
    return out


def mass_term(rho: Field3D, half_width: int = 4) -> MassTerm:
    """Mass term of the normalized wave equation from a density field.

    Uses the same high-order Laplacian as the propagator; edges are
    replicated before differencing so the term stays bounded there.
    """
    from wavekit.propagator import fd_coefficients  # local import, no cycle at module load

    if np.any(rho.values <= 0):
        raise ValueError("density must be strictly positive")
    s = np.sqrt(rho.values)
    coeffs = fd_coefficients(half_width).values
    lap = laplacian_clamped(s, rho.grid.spacings, coeffs)
    f = Field3D(rho.grid, lap / s, unit="1/m^2")
    return MassTerm(field=f, sqrt_rho=Field3D(rho.grid, s))


def extend_model(field: Field3D) -> Field3D:
    """Extend an interior field into the boundary region by edge replication."""
    grid = field.grid
    if field.is_extended:
        return field
    ext = np.pad(field.values,
                 ((grid.nb, grid.nb), (grid.nb, grid.nb), (grid.nb_top, grid.nb)),
                 mode="edge")
    return Field3D(grid, ext, field.unit)


def fold_boundary(field: Field3D) -> Field3D:
    """Adjoint of :func:`extend_model`: sum replicated boundary cells back
    onto the interior cells they were copied from."""
    grid = field.grid
    if not field.is_extended:
        return field.copy()
    v = field.values.copy()

    def fold_axis(arr: np.ndarray, axis: int, lo: int, hi: int) -> np.ndarray:
        arr = np.moveaxis(arr, axis, 0)
        core = arr[lo:arr.shape[0] - hi].copy()
        if lo:
            core[0] += arr[:lo].sum(axis=0)
        if hi:
            core[-1] += arr[arr.shape[0] - hi:].sum(axis=0)
        return np.moveaxis(core, 0, axis)

    v = fold_axis(v, 0, grid.nb, grid.nb)
    v = fold_axis(v, 1, grid.nb, grid.nb)
    v = fold_axis(v, 2, grid.nb_top, grid.nb)
    return Field3D(grid, v, field.unit)
