"""Full-waveform inversion: misfit, adjoint-state gradients, gradient
post-processing and the bound-constrained quasi-Newton driver.

The backward sweep is the exact transpose of the discrete forward step
(including the damping taper and, when enabled, the free-surface mirror),
so the gradient matches finite differences of the discrete misfit down to
finite-difference truncation error.  Receiver residuals are injected scaled
by dt and the local c^2; the velocity gradient is (2/c^3) times the
accumulated kernel, folded back onto the interior through the adjoint of
the boundary extension.
"""

from __future__ import annotations

import logging
import os
from collections import deque
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

import numpy as np

from wavekit import _kernels
from wavekit.config import Config, validate
from wavekit.model import Field3D, Grid, extend_model, fold_boundary
from wavekit.propagator import Propagator, SourceWavelet, WaveState, forward_shot, interpolate_trace
from wavekit.scheduler import run_pool
from wavekit.seisio import (
    FINAL_MODEL_FILE,
    SOURCE_COORD_FILE,
    SOURCE_WAVELET_FILE,
    Seismogram,
    ShotRecord,
    iteration_model_path,
    observed_data_path,
    read_model,
    read_receiver_coords,
    read_seismogram,
    read_source_coords,
    read_wavelet,
    receiver_coord_path,
    write_model,
)
from wavekit.wavefield import make_store, slots_from_budget

__all__ = [
    "GradientKernel",
    "FwiState",
    "FwiResult",
    "misfit",
    "adjoint_shot",
    "multiply_adjoint",
    "precondition_gradient",
    "zeroes_near_surface",
    "lbfgsb_minimize",
    "fwi_run",
]

logger = logging.getLogger(__name__)

PRECONDITIONING_MODES = {0: "none", 1: "bessel", 2: "laplace"}


@dataclass
class GradientKernel:
    """Cross-correlation kernel of one (or several summed) shots."""

    field: Field3D
    misfit: float


def misfit(dmod: Seismogram, dobs: Seismogram) -> float:
    """Least-squares misfit J = 1/2 * sum((dmod - dobs)^2) * dt."""
    if dmod.data.shape != dobs.data.shape:
        raise ValueError(f"seismogram shapes differ: {dmod.data.shape} vs {dobs.data.shape}")
    r = dmod.data - dobs.data
    return 0.5 * float(np.sum(r * r)) * dmod.dt


def _resample_observed(dobs: Seismogram, dt: float, ns: int) -> Seismogram:
    if dobs.dt == 0.0 or dobs.dt == dt:
        return dobs
    data = np.stack([interpolate_trace(tr, dobs.dt, dt, mode="sinc")[:ns]
                     for tr in dobs.data])
    if data.shape[1] != ns:
        raise ValueError(f"observed data covers {data.shape[1]} samples after "
                         f"resampling, need {ns}")
    return Seismogram(shot_id=dobs.shot_id, dt=dt, data=data)


def _mirror_transpose(arr: np.ndarray, c2: np.ndarray, surface: int, halo: int) -> None:
    """In-place transpose of the free-surface mirror, conjugated by c^2.

    The adjoint sweep propagates the c^2-scaled adjoint field, so the
    transposed mirror picks up the ratio of squared velocities between
    mirrored planes (equal to one for a laterally homogeneous top).
    """
    for m in range(1, halo + 1):
        ratio = c2[:, :, surface + m] / c2[:, :, surface - m]
        arr[:, :, surface + m] -= ratio * arr[:, :, surface - m]
        arr[:, :, surface - m] = 0.0
    arr[:, :, surface] = 0.0


def adjoint_shot(shot: ShotRecord, vel: Field3D, wavelet: SourceWavelet,
                 store, *, propagator: Propagator | None = None,
                 free_surface: bool = False,
                 half_width: int = 4) -> tuple[float, GradientKernel]:
    """One shot of the adjoint-state method: forward sweep saving wavefields,
    then a backward sweep accumulating the gradient kernel.

    Returns the shot misfit and the kernel on the extended grid.  The shot
    must carry its observed seismogram.
    """
    if shot.seismogram is None:
        raise ValueError(f"shot {shot.shot_id} has no observed data")
    prop = propagator or Propagator(vel.grid, vel, wavelet.dt, half_width=half_width,
                                    free_surface=free_surface)
    if prop.mass is not None:
        raise NotImplementedError("gradients are computed in constant-density mode")
    ns = len(wavelet.samples)
    dt = prop.dt

    dmod = forward_shot(shot, vel, wavelet, store, propagator=prop)
    dobs = _resample_observed(shot.seismogram, dt, ns)
    residual = dmod.data - dobs.data
    j_value = 0.5 * float(np.sum(residual * residual)) * dt

    grid = prop.grid
    shape = grid.extended_shape
    src_idx = grid.extended_index_of(shot.source.x, shot.source.y, shot.source.z)
    ri, rj, rk = prop.receiver_indices(shot.receivers)
    c2_rcv = prop.vel.values[ri, rj, rk] ** 2

    mu = np.zeros(shape)
    nu = np.zeros(shape)
    scratch = np.zeros(shape)
    w = np.zeros(shape)
    kernel = np.zeros(shape)
    lap_buf = np.zeros(shape) if prop.free_surface else None
    c2_ext = prop.vel.values**2 if prop.free_surface else None
    zeros = np.zeros(shape)
    src_corr = 0.0

    replay_scratch = [np.zeros(shape)]

    def stepper(prev, curr, t_from, t_to):
        state = WaveState(p_prev=prev, p_curr=curr, p_next=replay_scratch[0],
                          taper=prop.taper)
        for t in range(t_from + 1, t_to + 1):
            prop.step(state, wavelet.samples[t], src_idx)
        replay_scratch[0] = state.p_next
        return state.p_prev, state.p_curr

    np.add.at(mu, (ri, rj, rk), dt * c2_rcv * residual[:, ns - 1])

    b_n = store.retrieve_wavefield(ns - 1, stepper)
    b_nm1 = store.retrieve_wavefield(ns - 2, stepper) if ns >= 2 else zeros

    for n in range(ns - 1, -1, -1):
        b_nm2 = store.retrieve_wavefield(n - 2, stepper) if n >= 2 else zeros

        np.multiply(prop.taper, mu, out=w)
        if prop.free_surface:
            _mirror_transpose(w, c2_ext, prop.surface_index, prop.half_width)
            _kernels.laplacian(b_nm1, lap_buf, prop.cx, prop.cy, prop.cz,
                               prop.c0, prop.half_width, prop.bounds)
            kernel += (dt * dt) * w * lap_buf
        else:
            _kernels.accumulate_kernel(kernel, w, b_n, b_nm1, b_nm2,
                                       prop.taper, prop.inv_taper)
            src_corr += w[src_idx] * wavelet.samples[n]

        # transpose of one leapfrog step: scratch <- 2w + D*nu + dt^2 c^2 Lap(w)
        np.multiply(prop.taper, nu, out=nu)
        np.negative(nu, out=nu)
        _kernels.leapfrog(nu, w, scratch, prop.c2dt2, prop.cx, prop.cy, prop.cz,
                          prop.c0, prop.half_width, prop.adjoint_bounds)
        if n >= 1:
            np.add.at(scratch, (ri, rj, rk), dt * c2_rcv * residual[:, n - 1])

        mu, nu, scratch, w = scratch, w, mu, nu
        np.negative(nu, out=nu)
        b_n, b_nm1 = b_nm1, b_nm2

    store.end_shot()

    if prop.free_surface:
        kernel *= prop.vel.values**2
    else:
        kernel[src_idx] -= src_corr * dt * dt / prop.cell_volume

    return j_value, GradientKernel(field=Field3D(grid, kernel), misfit=j_value)


def multiply_adjoint(kernel: Field3D, vel: Field3D) -> Field3D:
    """Velocity gradient from the kernel: g = (2 / c^3) * kernel."""
    if np.any(vel.values <= 0):
        raise ValueError("velocity must be strictly positive")
    if kernel.values.shape != vel.values.shape:
        raise ValueError("kernel and velocity live on different extents")
    return Field3D(kernel.grid, (2.0 / vel.values**3) * kernel.values)


def _second_difference(values: np.ndarray, axis: int, spacing: float) -> np.ndarray:
    """3-point second derivative with zero-flux (edge-clamped) closure."""
    pad = [(0, 0)] * values.ndim
    pad[axis] = (1, 1)
    padded = np.pad(values, pad, mode="edge")
    lo = [slice(None)] * values.ndim
    hi = [slice(None)] * values.ndim
    mid = [slice(None)] * values.ndim
    lo[axis] = slice(0, values.shape[axis])
    mid[axis] = slice(1, 1 + values.shape[axis])
    hi[axis] = slice(2, 2 + values.shape[axis])
    return (padded[tuple(lo)] - 2.0 * padded[tuple(mid)] + padded[tuple(hi)]) / spacing**2


def precondition_gradient(grad: Field3D, mode: str, lx: float, ly: float,
                          lz: float) -> Field3D:
    """Smooth a gradient field.

    ``bessel`` solves (I - lx^2 d2/dx2 - ly^2 d2/dy2 - lz^2 d2/dz2) s = g
    with zero-flux boundaries by conjugate gradients; the solve is driven
    to relative residual 1e-12 (well past the 1e-6 requirement) so the
    filter behaves linearly to near machine precision.  ``laplace`` applies the explicit pass s = (I + lx^2 d2/dx2 + ...) g,
    split into the fewest sub-steps that keep every mode's amplification in
    [0, 1]; a single unsplit pass would amplify and sign-flip grid-scale
    components (the operator is indefinite for l ~ 2*dx), destroying the
    descent property of a smoothed gradient.  ``none`` is the identity.
    Both filters are linear and conserve the field's total sum.
    """
    if mode == "none":
        return grad.copy()
    if min(lx, ly, lz) < 0:
        raise ValueError("smoothing lengths must be nonnegative")
    g = grad.values
    spac = grad.grid.spacings
    l2 = (lx * lx, ly * ly, lz * lz)

    if mode == "laplace":
        # stiffness of the weighted 3-point operator; substeps keep the
        # per-pass symbol 1 - (1/n) * sum(4 l^2/d^2 sin^2) inside [0, 1]
        stiffness = sum(4.0 * l2[axis] / spac[axis] ** 2 for axis in range(3))
        n_sub = max(1, int(np.ceil(stiffness)))
        s = g.copy()
        for _ in range(n_sub):
            update = np.zeros_like(s)
            for axis in range(3):
                if l2[axis]:
                    update += (l2[axis] / n_sub) * _second_difference(s, axis, spac[axis])
            s += update
        return Field3D(grad.grid, s, grad.unit)

    if mode != "bessel":
        raise ValueError(f"unknown preconditioning mode {mode!r}")

    def apply_op(v: np.ndarray) -> np.ndarray:
        out = v.copy()
        for axis in range(3):
            out -= l2[axis] * _second_difference(v, axis, spac[axis])
        return out

    b_norm = float(np.linalg.norm(g))
    if b_norm == 0.0:
        return grad.copy()
    x = np.zeros_like(g)
    r = g.copy()
    p = r.copy()
    rs = float(np.dot(r.ravel(), r.ravel()))
    max_iter = 10 * g.size
    for _ in range(max_iter):
        ap = apply_op(p)
        alpha = rs / float(np.dot(p.ravel(), ap.ravel()))
        x += alpha * p
        r -= alpha * ap
        rs_new = float(np.dot(r.ravel(), r.ravel()))
        if np.sqrt(rs_new) <= 1e-12 * b_norm:
            return Field3D(grad.grid, x, grad.unit)
        p = r + (rs_new / rs) * p
        rs = rs_new
    raise RuntimeError(f"smoothing solve did not converge in {max_iter} iterations")


def zeroes_near_surface(grad: Field3D, nplanes: int) -> Field3D:
    """Zero the top nplanes interior z-planes of the gradient."""
    if nplanes < 0:
        raise ValueError("nplanes must be nonnegative")
    if nplanes > grad.grid.nz:
        raise ValueError(f"nplanes = {nplanes} exceeds nz = {grad.grid.nz}")
    out = grad.copy()
    if nplanes:
        out.interior()[:, :, :nplanes] = 0.0
    return out


@dataclass
class FwiState:
    """Optimizer-facing state of one inversion."""

    model: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    misfit: float = np.inf
    gradient: np.ndarray | None = None
    iterations: int = 0
    viter: int = 0
    converged: bool = False
    status: str = "new"
    max_iterations: int = 999
    max_updates: int = 100
    memory: deque = dataclass_field(default_factory=lambda: deque(maxlen=5))
    j_history: list = dataclass_field(default_factory=list)

    def project(self, x: np.ndarray) -> np.ndarray:
        lo = -np.inf if self.lower is None else self.lower
        hi = np.inf if self.upper is None else self.upper
        return np.clip(x, lo, hi)

    def projected_gradient(self, x: np.ndarray, g: np.ndarray) -> np.ndarray:
        return x - self.project(x - g)


def _two_loop(g: np.ndarray, memory) -> np.ndarray:
    """Limited-memory BFGS approximation of H*g."""
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(memory):
        a = rho * float(np.dot(s, q))
        q -= a * y
        alphas.append(a)
    if memory:
        s, y, _ = memory[-1]
        q *= float(np.dot(s, y)) / float(np.dot(y, y))
    for (s, y, rho), a in zip(memory, reversed(alphas)):
        beta = rho * float(np.dot(y, q))
        q += (a - beta) * s
    return q


def lbfgsb_minimize(state: FwiState, evaluate, *, c1: float = 1e-4,
                    max_backtracks: int = 20, gtol: float = 1e-8,
                    ftol: float = 1e-12, first_step_scale: float = 0.05,
                    on_update=None, log=None) -> FwiState:
    """Projected limited-memory BFGS with backtracking line search.

    Each iteration asks ``evaluate`` for (J, gradient) at trial points that
    are projected onto the bound box; an accepted point counts as one model
    update.  Terminates on a small projected gradient, a negligible relative
    misfit decrease, the iteration/update caps, or a failed line search.
    """
    x = state.project(np.asarray(state.model, dtype=np.float64))
    j_curr, g = evaluate(x)
    state.model, state.misfit, state.gradient = x, j_curr, g
    state.j_history.append(j_curr)
    if log:
        log(f"iter={state.iterations} viter={state.viter} J={j_curr:.8e} "
            f"pg={np.max(np.abs(state.projected_gradient(x, g))):.3e} action=initial")

    while True:
        pg_norm = float(np.max(np.abs(state.projected_gradient(x, g)))) if x.size else 0.0
        if pg_norm <= gtol * max(1.0, float(np.max(np.abs(x)))):
            state.converged = True
            state.status = "converged: projected gradient below tolerance"
            break
        if state.iterations >= state.max_iterations:
            state.status = "stopped: iteration cap reached"
            break
        if state.viter >= state.max_updates:
            state.status = "stopped: model-update cap reached"
            break

        d = -_two_loop(g, state.memory)
        if float(np.dot(d, g)) >= 0.0:
            d = -g  # safeguard: fall back to steepest descent
        if state.memory:
            alpha = 1.0
        else:
            dmax = float(np.max(np.abs(d)))
            alpha = first_step_scale * max(1.0, float(np.max(np.abs(x)))) / max(dmax, 1e-300)

        accepted = False
        for _ in range(max_backtracks + 1):
            x_new = state.project(x + alpha * d)
            step = x_new - x
            if not np.any(step):
                break
            j_new, g_new = evaluate(x_new)
            slope = float(np.dot(g, step))
            if j_new <= j_curr + c1 * slope and j_new < j_curr:
                s, y = step, g_new - g
                sy = float(np.dot(s, y))
                if sy > 1e-10 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
                    state.memory.append((s, y, 1.0 / sy))
                j_prev = j_curr
                x, j_curr, g = x_new, j_new, g_new
                state.model, state.misfit, state.gradient = x, j_curr, g
                state.viter += 1
                state.j_history.append(j_curr)
                accepted = True
                if on_update:
                    on_update(state.viter, x)
                break
            alpha *= 0.5

        state.iterations += 1
        if log:
            log(f"iter={state.iterations} viter={state.viter} J={j_curr:.8e} "
                f"pg={pg_norm:.3e} step={alpha:g} "
                f"action={'update' if accepted else 'reject'}")
        if not accepted:
            state.status = "stopped: line search failed"
            break
        if j_prev - j_curr <= ftol * max(1.0, abs(j_prev)):
            state.converged = True
            state.status = "converged: misfit decrease below tolerance"
            break

    return state


@dataclass
class FwiResult:
    model: Field3D
    state: FwiState


def fwi_run(cfg: Config, *, workers: int | None = None, store_mode: str = "memory",
            free_surface: bool = False) -> FwiResult:
    """Full inversion: Algorithm-2-style driver around the adjoint sweep.

    Reads all inputs from cfg.proj_dir, writes ``v-iter-k.bin`` on every
    accepted update and ``v-final.bin`` at the end, and returns the final
    model together with the optimizer state.
    """
    report = validate(cfg)
    if not report.ok:
        raise ValueError("invalid configuration: " + "; ".join(report.violations))
    if cfg.density:
        logger.warning("density model is ignored by FWI (constant-density gradients)")

    n_workers = workers or os.cpu_count() or 1
    sched_mode = "ctws" if cfg.ws_flag else "static"
    proj = Path(cfg.proj_dir)
    grid = Grid.from_config(cfg, free_surface)

    src_coords = read_source_coords(proj / SOURCE_COORD_FILE, cfg.n_src)
    wavelet = SourceWavelet(samples=read_wavelet(proj / SOURCE_WAVELET_FILE, cfg.ns),
                            dt=cfg.dt, fpeak=cfg.fpeak, amplitude=cfg.amplitude)
    receivers = [read_receiver_coords(receiver_coord_path(proj, i))
                 for i in range(cfg.n_src)]
    for i in range(cfg.n_src):
        path = observed_data_path(proj, i)
        if not path.exists():
            raise FileNotFoundError(f"missing observed data: {path}")

    v0 = read_model(proj / cfg.vel, grid)

    lower = upper = None
    n_model = cfg.nx * cfg.ny * cfg.nz
    if cfg.lbfgsb in (1, 2):
        lower = np.full(n_model, cfg.lbfgsb_lower_bound)
    if cfg.lbfgsb in (2, 3):
        upper = np.full(n_model, cfg.lbfgsb_upper_bound)

    # The optimizer works on nondimensionalized quantities: the model is
    # scaled by its initial magnitude and the misfit by its initial value,
    # so the generic stopping tests compare O(1) numbers.  Physical units
    # are restored before anything is written or returned.
    x0 = v0.values.ravel().copy()
    x_ref = max(1.0, float(np.max(np.abs(x0))))
    state = FwiState(model=x0 / x_ref,
                     lower=None if lower is None else lower / x_ref,
                     upper=None if upper is None else upper / x_ref,
                     max_iterations=cfg.n_iter, max_updates=cfg.max_viter)

    pair_bytes = 2 * 8 * int(np.prod(grid.extended_shape))
    slots = slots_from_budget(cfg.check_mem, cfg.mem_budget_bytes, pair_bytes)
    verbose_path = proj / "chkbuf.bin" if cfg.chk_verb else None
    mode_name = PRECONDITIONING_MODES[cfg.gradient_preconditioning_mode]

    def evaluate(x: np.ndarray):
        if np.any(x <= 0):
            raise ValueError("trial model contains nonpositive velocities")
        vel = extend_model(Field3D(grid, x.reshape(grid.interior_shape), unit="m/s"))
        prop = Propagator(grid, vel, cfg.dt, half_width=cfg.stencil,
                          free_surface=free_surface)
        if not prop.cfl.ok:
            raise RuntimeError(f"CFL violated by trial model: dt={cfg.dt:g} > "
                               f"dt_max={prop.cfl.dt_max:g}")

        def work(sid: int):
            dobs = read_seismogram(observed_data_path(proj, sid), cfg.ns,
                                   shot_id=sid, dt=cfg.dt)
            shot = ShotRecord(sid, src_coords[sid], receivers[sid], seismogram=dobs)
            store = make_store(store_mode, cfg.ns, scratch_dir=proj / "scratch",
                               shot_id=sid, slots=slots, verbose_path=verbose_path)
            j_s, kern = adjoint_shot(shot, vel, wavelet, store, propagator=prop)
            return j_s, kern.field.values

        results = run_pool(range(cfg.n_src), n_workers, sched_mode, work)
        # fixed-order reduction keeps results identical across worker counts
        j_total = 0.0
        kernel = np.zeros(grid.extended_shape)
        for sid in range(cfg.n_src):
            j_total += results[sid][0]
            kernel += results[sid][1]

        g_ext = multiply_adjoint(Field3D(grid, kernel), vel)
        g_int = fold_boundary(g_ext)
        g_int = precondition_gradient(g_int, mode_name, cfg.bessel_filter_lx,
                                      cfg.bessel_filter_ly, cfg.bessel_filter_lz)
        g_int = zeroes_near_surface(g_int, cfg.zeroes_nplanes_gradient)
        return j_total, g_int.values.ravel()

    def to_physical(xs: np.ndarray) -> np.ndarray:
        x = xs * x_ref
        # rescaling can overshoot the box by an ulp; re-project exactly
        lo = -np.inf if lower is None else lower
        hi = np.inf if upper is None else upper
        return np.clip(x, lo, hi)

    def on_update(k: int, xs: np.ndarray) -> None:
        field = Field3D(grid, to_physical(xs).reshape(grid.interior_shape), unit="m/s")
        write_model(iteration_model_path(proj, k), field)

    j_scale: list[float] = []

    def evaluate_scaled(xs: np.ndarray):
        j, g = evaluate(to_physical(xs))
        if not j_scale:
            j_scale.append(j if j > 0 else 1.0)
        return j / j_scale[0], g * (x_ref / j_scale[0])

    lbfgsb_minimize(state, evaluate_scaled, on_update=on_update, log=logger.info)

    j_ref = j_scale[0] if j_scale else 1.0
    state.model = to_physical(state.model)
    state.lower, state.upper = lower, upper
    state.misfit *= j_ref
    state.j_history = [v * j_ref for v in state.j_history]
    if state.gradient is not None:
        state.gradient = state.gradient * (j_ref / x_ref)
    logger.info("finished: %s (iterations=%d, updates=%d, J=%a)", state.status,
                state.iterations, state.viter, state.misfit)

    final = Field3D(grid, state.model.reshape(grid.interior_shape), unit="m/s")
    write_model(proj / FINAL_MODEL_FILE, final)
    return FwiResult(model=final, state=state)
