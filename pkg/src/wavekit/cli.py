"""Command-line entry points: ``modeling <config>`` and ``fwi <config>``.

Progress and diagnostics go to standard error; results go only to the files
in the project directory.  Exit codes: 0 success, 1 usage, 2 validation of
configuration or input files, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

from wavekit.config import ConfigError, parse_config, validate
from wavekit.inversion import fwi_run
from wavekit.model import Field3D, Grid, extend_model
from wavekit.propagator import PropagationError, Propagator, SourceWavelet, forward_shot
from wavekit.scheduler import PoolError, run_pool
from wavekit.seisio import (
    FileFormatError,
    SOURCE_COORD_FILE,
    SOURCE_WAVELET_FILE,
    ShotRecord,
    observed_data_path,
    read_model,
    read_receiver_coords,
    read_source_coords,
    read_wavelet,
    receiver_coord_path,
    write_seismogram,
)

__all__ = ["modeling_main", "fwi_main", "modeling_entry", "fwi_entry"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3

logger = logging.getLogger("wavekit")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser(prog: str, description: str) -> _Parser:
    parser = _Parser(prog=prog, description=description)
    parser.add_argument("config", help="path to the key = value parameter file")
    parser.add_argument("--workers", type=int, default=None,
                        help="worker threads (default: hardware parallelism)")
    parser.add_argument("--store", choices=("memory", "disk", "checkpoint"),
                        default="memory", help="forward-wavefield management strategy")
    parser.add_argument("--free-surface", action="store_true",
                        help="zero-pressure surface at the top instead of damping")
    parser.add_argument("--density", action="store_true",
                        help="variable-density propagation (needs the density parameter)")
    return parser


def _setup_logging() -> None:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", force=True)


def _load_config(path: str):
    cfg_path = Path(path)
    if not cfg_path.exists():
        raise FileNotFoundError(f"missing configuration file: {cfg_path}")
    cfg = parse_config(cfg_path.read_text(encoding="utf-8"))
    report = validate(cfg)
    if not report.ok:
        for violation in report.violations:
            logger.error("invalid configuration: %s", violation)
        raise ConfigError("configuration failed validation")
    return cfg


def modeling_main(argv=None) -> int:
    """Forward-model every shot and write its dobs_<i>.bin seismogram."""
    _setup_logging()
    parser = _build_parser("modeling", "3D acoustic forward modeling")
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        cfg = _load_config(args.config)
        proj = Path(cfg.proj_dir)
        grid = Grid.from_config(cfg, args.free_surface)
        vel = extend_model(read_model(proj / cfg.vel, grid))
        density = None
        if args.density:
            if not cfg.density:
                raise ConfigError("--density requires the 'density' parameter")
            density = extend_model(read_model(proj / cfg.density, grid, unit="kg/m^3"))
        src_coords = read_source_coords(proj / SOURCE_COORD_FILE, cfg.n_src)
        receivers = [read_receiver_coords(receiver_coord_path(proj, i))
                     for i in range(cfg.n_src)]
        wavelet = SourceWavelet(samples=read_wavelet(proj / SOURCE_WAVELET_FILE, cfg.ns),
                                dt=cfg.dt, fpeak=cfg.fpeak, amplitude=cfg.amplitude)

        prop = Propagator(grid, vel, cfg.dt, half_width=cfg.stencil, density=density,
                          free_surface=args.free_surface)
        logger.info("CFL: dt=%.6g s, dt_max=%.6g s, vmax=%.6g m/s -> %s",
                    prop.dt, prop.cfl.dt_max, prop.cfl.vmax,
                    "ok" if prop.cfl.ok else "VIOLATED")
        if not prop.cfl.ok:
            logger.error("timestep rejected by the CFL condition")
            return EXIT_VALIDATION

        workers = args.workers or os.cpu_count() or 1
        mode = "ctws" if cfg.ws_flag else "static"

        def work(sid: int):
            t0 = time.perf_counter()
            shot = ShotRecord(sid, src_coords[sid], receivers[sid])
            seis = forward_shot(shot, vel, wavelet, propagator=prop)
            write_seismogram(observed_data_path(proj, sid), seis)
            elapsed = time.perf_counter() - t0
            logger.info("shot %d: %d traces x %d samples in %.2f s",
                        sid, seis.n_receivers, seis.ns, elapsed)
            return elapsed

        start = time.perf_counter()
        run_pool(range(cfg.n_src), workers, mode, work)
        logger.info("modeled %d shots in %.2f s (%d workers, %s scheduling)",
                    cfg.n_src, time.perf_counter() - start, workers, mode)
        return EXIT_OK
    except (ConfigError, FileNotFoundError, FileFormatError, ValueError) as exc:
        logger.error("%s", exc)
        return EXIT_VALIDATION
    except PoolError as exc:
        logger.error("%s", exc)
        return _classify_pool_error(exc)
    except (PropagationError, RuntimeError, OSError) as exc:
        logger.error("%s", exc)
        return EXIT_RUNTIME


def fwi_main(argv=None) -> int:
    """Invert for the velocity model from previously modeled observed data."""
    _setup_logging()
    parser = _build_parser("fwi", "adjoint-state full-waveform inversion")
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        cfg = _load_config(args.config)
        if args.density:
            logger.warning("--density is ignored by fwi: gradients assume constant density")
        start = time.perf_counter()
        result = fwi_run(cfg, workers=args.workers, store_mode=args.store,
                         free_surface=args.free_surface)
        logger.info("fwi finished in %.2f s: %s", time.perf_counter() - start,
                    result.state.status)
        return EXIT_OK
    except (ConfigError, FileNotFoundError, FileFormatError, ValueError) as exc:
        logger.error("%s", exc)
        return EXIT_VALIDATION
    except PoolError as exc:
        logger.error("%s", exc)
        return _classify_pool_error(exc)
    except (PropagationError, RuntimeError, OSError) as exc:
        logger.error("%s", exc)
        return EXIT_RUNTIME


def _classify_pool_error(exc: PoolError) -> int:
    if isinstance(exc.cause, (FileNotFoundError, FileFormatError, ValueError)):
        return EXIT_VALIDATION
    return EXIT_RUNTIME


def modeling_entry() -> None:
    sys.exit(modeling_main())


def fwi_entry() -> None:
    sys.exit(fwi_main())
