"""Time-domain acoustic finite-difference propagator.

Second-order leapfrog in time, configurable even-order central stencil in
space (8th order by default).  Absorbing boundaries are an exponential
damping skirt applied to both time levels after every step; an optional
free surface pins the top interior plane to zero pressure with an
antisymmetric halo above it.  All arithmetic is float64.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from wavekit import _kernels
from wavekit.model import Field3D, Grid, MassTerm, extend_model, mass_term
from wavekit.seisio import Seismogram, ShotRecord

__all__ = [
    "StencilCoefficients",
    "SourceWavelet",
    "WaveState",
    "CflReport",
    "PropagationError",
    "fd_coefficients",
    "ricker",
    "check_cfl",
    "damping_taper",
    "apply_damping",
    "apply_free_surface",
    "Propagator",
    "forward_shot",
    "interpolate_trace",
]

SINC_HALF_WIDTH = 8  # samples, for windowed-sinc trace resampling


class PropagationError(RuntimeError):
    """Raised for unstable propagation or unusable run setup."""


@dataclass(frozen=True)
class StencilCoefficients:
    """Central second-derivative weights c0..ch (to be divided by spacing^2)."""

    half_width: int
    values: np.ndarray

    def stability_sum(self) -> float:
        """|c0| + 2*sum|c_m|, the bound used by the CFL estimate."""
        return float(abs(self.values[0]) + 2.0 * np.abs(self.values[1:]).sum())


def fd_coefficients(half_width: int) -> StencilCoefficients:
    """Solve the Taylor system for the symmetric second-derivative stencil.

    Exact rational elimination, so the classic weights (e.g. -205/72, 8/5,
    -1/5, 8/315, -1/560 for half_width 4) come out to the last bit.
    """
    if not 1 <= half_width <= 8:
        raise ValueError(f"unsupported stencil half-width {half_width}, expected 1..8")
    h = half_width
    # sum_m c_m m^(2j) = 1 for j=1, 0 for j=2..h
    rows = [[Fraction(m**(2 * j)) for m in range(1, h + 1)] for j in range(1, h + 1)]
    rhs = [Fraction(1)] + [Fraction(0)] * (h - 1)
    for col in range(h):
        pivot = next(r for r in range(col, h) if rows[r][col] != 0)
        rows[col], rows[pivot] = rows[pivot], rows[col]
        rhs[col], rhs[pivot] = rhs[pivot], rhs[col]
        for r in range(h):
            if r != col and rows[r][col] != 0:
                factor = rows[r][col] / rows[col][col]
                rows[r] = [a - factor * b for a, b in zip(rows[r], rows[col])]
                rhs[r] = rhs[r] - factor * rhs[col]
    side = [rhs[r] / rows[r][r] for r in range(h)]
    c0 = -2 * sum(side)
    values = np.array([float(c0)] + [float(c) for c in side])
    return StencilCoefficients(half_width=h, values=values)


@dataclass(frozen=True)
class SourceWavelet:
    """Time-sampled source signature."""

    samples: np.ndarray
    dt: float
    fpeak: float
    amplitude: float


def ricker(ns: int, dt: float, fpeak: float, amplitude: float) -> SourceWavelet:
    """Ricker wavelet with peak delay 1/fpeak.

    f(t) = A * (1 - 2*pi^2*fpeak^2*(t-t0)^2) * exp(-pi^2*fpeak^2*(t-t0)^2)
    """
    if fpeak <= 0:
        raise ValueError("fpeak must be positive")
    if fpeak * dt >= 0.5:
        raise ValueError(f"undersampled source: fpeak*dt = {fpeak * dt} >= 0.5")
    t0 = 1.0 / fpeak
    t = np.arange(ns) * dt - t0
    arg = (math.pi * fpeak) ** 2 * t**2
    samples = amplitude * (1.0 - 2.0 * arg) * np.exp(-arg)
    return SourceWavelet(samples=samples, dt=dt, fpeak=fpeak, amplitude=amplitude)


@dataclass(frozen=True)
class CflReport:
    dt: float
    dt_max: float
    vmax: float

    @property
    def ok(self) -> bool:
        return self.dt <= self.dt_max


def check_cfl(grid: Grid, dt: float, vmax: float,
              coeffs: StencilCoefficients) -> CflReport:
    """Stability bound dt_max = 2 / (vmax * sqrt(S * sum(1/d^2)))."""
    if vmax <= 0:
        raise ValueError("vmax must be positive")
    s = coeffs.stability_sum()
    inv = 1.0 / grid.dx**2 + 1.0 / grid.dy**2 + 1.0 / grid.dz**2
    dt_max = 2.0 / (vmax * math.sqrt(s * inv))
    return CflReport(dt=dt, dt_max=dt_max, vmax=vmax)


DAMPING_BETA_TOTAL = 0.3  # beta*nb; per-step face factor exp(-0.09), Cerjan-like


def damping_taper(grid: Grid, free_surface: bool = False) -> np.ndarray:
    """Exponential absorbing taper on the extended grid, 1 in the interior.

    A point d layers into the skirt gets exp(-(beta*d)^2) applied every
    step, with beta = 0.3/nb (the classic 0.015-per-layer profile at 20
    layers).  A much steeper taper would itself act as a reflector.  With a
    free surface the region above the surface plane is not damped.
    """
    if grid.nb == 0:
        return np.ones(grid.extended_shape)
    beta = DAMPING_BETA_TOTAL / grid.nb

    def overhang(n_ext: int, lo: int, n_int: int) -> np.ndarray:
        idx = np.arange(n_ext, dtype=np.float64)
        return np.maximum(0.0, np.maximum(lo - idx, idx - (lo + n_int - 1)))

    ovx = overhang(grid.nxe, grid.nb, grid.nx)
    ovy = overhang(grid.nye, grid.nb, grid.ny)
    ovz = overhang(grid.nze, grid.nb_top, grid.nz)
    if free_surface:
        ovz[:grid.nb_top] = 0.0
    d2 = (ovx[:, None, None] ** 2 + ovy[None, :, None] ** 2 + ovz[None, None, :] ** 2)
    return np.exp(-(beta**2) * d2)


@dataclass
class WaveState:
    """Two pressure time levels plus scratch, rotated in place by step()."""

    p_prev: np.ndarray
    p_curr: np.ndarray
    p_next: np.ndarray
    taper: np.ndarray
    n: int = 0
    maxabs: float = 0.0


def apply_damping(state: WaveState, taper: np.ndarray) -> WaveState:
    """Multiply both stored time levels by the absorbing taper, in place."""
    state.p_prev *= taper
    state.p_curr *= taper
    return state


def apply_free_surface(state: WaveState, surface_index: int, halo: int) -> WaveState:
    """Zero the surface plane of p_curr and mirror it antisymmetrically up."""
    arr = state.p_curr
    arr[:, :, surface_index] = 0.0
    for m in range(1, halo + 1):
        arr[:, :, surface_index - m] = -arr[:, :, surface_index + m]
    return state


class Propagator:
    """Precomputed operator for one grid / velocity / dt combination.

    One instance drives any number of shots sequentially; concurrent shots
    take independent WaveStates (the instance itself is read-only after
    construction).  ``chunk_hint`` is accepted as a loop-scheduling hint for
    auto-tuners and is currently a no-op.
    """

    def __init__(self, grid: Grid, vel: Field3D, dt: float, *,
                 half_width: int = 4, density: Field3D | None = None,
                 free_surface: bool = False, chunk_hint: int | None = None):
        if free_surface and grid.nb_top < 2 * half_width:
            raise ValueError(f"free surface needs nb_top >= twice the stencil "
                             f"half-width ({grid.nb_top} < {2 * half_width})")
        self.grid = grid
        self.dt = float(dt)
        self.half_width = half_width
        self.free_surface = free_surface
        self.chunk_hint = chunk_hint
        self.coeffs = fd_coefficients(half_width)

        self.vel = extend_model(vel)
        self.cfl = check_cfl(grid, dt, float(self.vel.values.max()), self.coeffs)

        self.c2dt2 = (self.vel.values * self.dt) ** 2
        self.cx = self.coeffs.values / grid.dx**2
        self.cy = self.coeffs.values / grid.dy**2
        self.cz = self.coeffs.values / grid.dz**2
        self.c0 = float(self.coeffs.values[0] * (1.0 / grid.dx**2 + 1.0 / grid.dy**2
                                                 + 1.0 / grid.dz**2))

        h = half_width
        z_lo = grid.nb_top if free_surface else h
        self.bounds = (h, grid.nxe - h, h, grid.nye - h, z_lo, grid.nze - h)
        # the transposed step must also fill the mirror halo rows the
        # free-surface transpose reads on the following backward step
        z_lo_adj = grid.nb_top - h if free_surface else z_lo
        self.adjoint_bounds = (h, grid.nxe - h, h, grid.nye - h, z_lo_adj,
                               grid.nze - h)
        self.surface_index = grid.nb_top

        self.taper = damping_taper(grid, free_surface=free_surface)
        self.inv_taper = 1.0 / self.taper
        self.cell_volume = grid.dx * grid.dy * grid.dz

        if density is not None:
            mt = mass_term(extend_model(density), half_width)
            self.mass: MassTerm | None = mt
            self.sqrt_rho = mt.sqrt_rho.values
        else:
            self.mass = None
            self.sqrt_rho = None

    def new_state(self) -> WaveState:
        shape = self.grid.extended_shape
        return WaveState(p_prev=np.zeros(shape), p_curr=np.zeros(shape),
                         p_next=np.zeros(shape), taper=self.taper)

    def source_scale(self, source_index: tuple[int, int, int]) -> float:
        """Injection scale for a unit source sample at an extended-grid node."""
        scale = 1.0 / self.cell_volume
        if self.sqrt_rho is not None:
            scale /= self.sqrt_rho[source_index]
        return scale

    def step(self, state: WaveState, source_sample: float = 0.0,
             source_index: tuple[int, int, int] | None = None) -> WaveState:
        """Advance one timestep in place; rotates and tapers the time levels."""
        if self.mass is None:
            _kernels.leapfrog(state.p_prev, state.p_curr, state.p_next,
                              self.c2dt2, self.cx, self.cy, self.cz, self.c0,
                              self.half_width, self.bounds)
        else:
            _kernels.leapfrog_mass(state.p_prev, state.p_curr, state.p_next,
                                   self.c2dt2, self.mass.field.values,
                                   self.cx, self.cy, self.cz, self.c0,
                                   self.half_width, self.bounds)
        if source_index is not None and source_sample != 0.0:
            state.p_next[source_index] += (self.dt**2 * source_sample
                                           * self.source_scale(source_index))
        state.p_prev, state.p_curr, state.p_next = (state.p_curr, state.p_next,
                                                    state.p_prev)
        if self.free_surface:
            apply_free_surface(state, self.surface_index, self.half_width)
        apply_damping(state, self.taper)
        state.n += 1
        state.maxabs = float(np.abs(state.p_curr).max())
        if not math.isfinite(state.maxabs):
            raise PropagationError(
                f"non-finite wavefield at step {state.n} "
                f"(dt={self.dt:g}, dt_max={self.cfl.dt_max:g}): unstable run")
        return state

    def receiver_indices(self, receivers) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        idx = np.array([self.grid.extended_index_of(c.x, c.y, c.z) for c in receivers],
                       dtype=np.intp).reshape(-1, 3)
        return idx[:, 0], idx[:, 1], idx[:, 2]

    def record(self, state: WaveState, rcv_idx) -> np.ndarray:
        """Sample p_curr at receiver nodes (converted back to pressure in
        density mode)."""
        out = state.p_curr[rcv_idx]
        if self.sqrt_rho is not None:
            out = out * self.sqrt_rho[rcv_idx]
        return out


def forward_shot(shot: ShotRecord, vel: Field3D, wavelet: SourceWavelet,
                 store=None, *, density: Field3D | None = None,
                 free_surface: bool = False, half_width: int = 4,
                 propagator: Propagator | None = None) -> Seismogram:
    """Run one shot from a zero state, recording every receiver each step.

    When a wavefield store is given, every post-step field is offered to it
    (for a later adjoint sweep).  A prebuilt Propagator can be passed to
    amortize setup across shots; it must match vel/density/flags.
    """
    prop = propagator or Propagator(vel.grid, vel, wavelet.dt, half_width=half_width,
                                    density=density, free_surface=free_surface)
    if not prop.cfl.ok:
        raise PropagationError(f"CFL violated: dt={prop.dt:g} > dt_max={prop.cfl.dt_max:g} "
                               f"(vmax={prop.cfl.vmax:g})")
    src_idx = prop.grid.extended_index_of(shot.source.x, shot.source.y, shot.source.z)
    rcv_idx = prop.receiver_indices(shot.receivers)
    ns = len(wavelet.samples)
    data = np.zeros((len(shot.receivers), ns))
    state = prop.new_state()
    for n in range(ns):
        prop.step(state, wavelet.samples[n], src_idx)
        data[:, n] = prop.record(state, rcv_idx)
        if store is not None:
            store.save_wavefield(n, state.p_curr, prev=state.p_prev)
    return Seismogram(shot_id=shot.shot_id, dt=wavelet.dt, data=data)


def interpolate_trace(trace, dt_in: float, dt_out: float,
                      mode: str = "nearest") -> np.ndarray:
    """Resample one trace to a new sampling interval.

    ``nearest`` picks the closest input sample; ``sinc`` reconstructs with a
    Hann-windowed sinc of half-width 8 samples (values beyond the trace are
    taken as zero, so quality degrades within 8 input samples of the ends).
    Output length is floor((len-1)*dt_in/dt_out) + 1.
    """
    trace = np.asarray(trace, dtype=np.float64)
    if trace.size == 0:
        raise ValueError("empty trace")
    if dt_in <= 0 or dt_out <= 0:
        raise ValueError("sampling intervals must be positive")
    if dt_out == dt_in:
        return trace.copy()
    n_out = int(math.floor((trace.size - 1) * dt_in / dt_out)) + 1
    u = np.arange(n_out) * (dt_out / dt_in)  # output times in input-sample units
    if mode == "nearest":
        idx = np.clip(np.rint(u).astype(np.intp), 0, trace.size - 1)
        return trace[idx]
    if mode != "sinc":
        raise ValueError(f"unknown interpolation mode {mode!r}")
    base = np.floor(u).astype(np.intp)
    out = np.zeros(n_out)
    for off in range(-SINC_HALF_WIDTH + 1, SINC_HALF_WIDTH + 1):
        m = base + off
        frac = u - m
        weight = np.sinc(frac) * (0.5 + 0.5 * np.cos(np.pi * frac / SINC_HALF_WIDTH))
        weight[np.abs(frac) > SINC_HALF_WIDTH] = 0.0
        valid = (m >= 0) & (m < trace.size)
        out[valid] += trace[np.clip(m, 0, trace.size - 1)][valid] * weight[valid]
    return out
