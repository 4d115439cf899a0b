"""Desk-scale 3D acoustic wave modeling and full-waveform inversion.

The package covers the whole chain: parameter-file parsing, grid/model
handling, an 8th-order-in-space / 2nd-order-in-time finite-difference
propagator with damping boundaries and optional free surface, forward
wavefield management (memory / disk / optimal checkpointing), adjoint-state
gradients, a bound-constrained limited-memory quasi-Newton driver, and
shot-level schedulers.  Two console entry points, ``modeling`` and ``fwi``,
mirror the classic two-application workflow.
"""

from wavekit.config import Config, ConfigError, ValidationReport, parse_config, validate
from wavekit.model import (
    Field3D,
    Grid,
    MassTerm,
    build_gaussian_sphere_model,
    extend_model,
    fold_boundary,
    gardner_density,
    mass_term,
)
from wavekit.propagator import (
    Propagator,
    SourceWavelet,
    StencilCoefficients,
    WaveState,
    check_cfl,
    fd_coefficients,
    forward_shot,
    interpolate_trace,
    ricker,
)
from wavekit.seisio import Coordinate3, Seismogram, ShotRecord
from wavekit.wavefield import (
    CheckpointPlan,
    WavefieldStore,
    make_store,
    plan_checkpoints,
    slots_from_budget,
)
from wavekit.inversion import (
    FwiResult,
    FwiState,
    GradientKernel,
    adjoint_shot,
    fwi_run,
    lbfgsb_minimize,
    misfit,
    multiply_adjoint,
    precondition_gradient,
    zeroes_near_surface,
)
from wavekit.scheduler import ShotSchedule, next_shot, run_pool, static_assign

__all__ = [
    "Config",
    "ConfigError",
    "ValidationReport",
    "parse_config",
    "validate",
    "Grid",
    "Field3D",
    "MassTerm",
    "build_gaussian_sphere_model",
    "gardner_density",
    "mass_term",
    "extend_model",
    "fold_boundary",
    "StencilCoefficients",
    "SourceWavelet",
    "WaveState",
    "Propagator",
    "fd_coefficients",
    "ricker",
    "check_cfl",
    "forward_shot",
    "interpolate_trace",
    "Coordinate3",
    "Seismogram",
    "ShotRecord",
    "WavefieldStore",
    "CheckpointPlan",
    "make_store",
    "plan_checkpoints",
    "slots_from_budget",
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
    "ShotSchedule",
    "static_assign",
    "next_shot",
    "run_pool",
]
