"""Shared fixtures: a miniature project directory for end-to-end runs."""

import numpy as np
import pytest

from wavekit.config import parse_config
from wavekit.model import Field3D, Grid, build_gaussian_sphere_model
from wavekit.propagator import ricker
from wavekit.seisio import (
    Coordinate3,
    write_model,
    write_receiver_coords,
    write_source_coords,
    write_wavelet,
)


def make_project(proj_dir, *, n=13, border=8, ns=120, dt=1e-3, fpeak=14.0,
                 amplitude=1e5, n_src=3, sigma=3.0, extra=""):
    """Write a runnable miniature project; returns the parsed config text."""
    proj_dir.mkdir(parents=True, exist_ok=True)
    d = 10.0
    grid = Grid(n, n, n, d, d, d, nb=border)
    true_model = build_gaussian_sphere_model(grid, 2500.0, sigma)
    write_model(proj_dir / "velocity_model.bin", true_model)
    write_model(proj_dir / "velocity_initial.bin",
                Field3D(grid, np.full(grid.interior_shape, 2500.0)))

    extent = (n - 1) * d
    positions = np.linspace(0.2 * extent, 0.8 * extent, n_src)
    sources = [Coordinate3(x, extent / 2, extent / 2) for x in positions]
    write_source_coords(proj_dir / "src_coord.bin", sources)

    rcv = [Coordinate3(0.1 * extent + 0.35 * extent * i,
                       0.1 * extent + 0.35 * extent * j, d)
           for i in range(3) for j in range(3)]
    for i in range(n_src):
        write_receiver_coords(proj_dir / f"rcv_coord_{i}.bin", rcv)

    write_wavelet(proj_dir / "source.bin", ricker(ns, dt, fpeak, amplitude).samples)

    text = f"""\
nx = {n}
ny = {n}
nz = {n}
dx = 10.0
dy = 10.0
dz = 10.0
ox = 0.0
oy = 0.0
oz = 0.0
border = {border}
ns = {ns}
dt = {dt}
fpeak = {fpeak}
amplitude = {amplitude}
n_src = {n_src}
proj_dir = {proj_dir}
vel = velocity_model.bin
{extra}"""
    config_path = proj_dir / "config.txt"
    config_path.write_text(text)
    return config_path


FWI_EXTRA = """\
lbfgsb = 2
lbfgsb_lower_bound = 2000.0
lbfgsb_upper_bound = 3500.0
n_iter = 6
max_viter = 3
gradient_preconditioning_mode = 2
zeroes_nplanes_gradient = 0
"""


@pytest.fixture
def mini_project(tmp_path):
    return make_project(tmp_path / "proj")


@pytest.fixture
def mini_fwi_config(tmp_path):
    config_path = make_project(tmp_path / "proj", extra=FWI_EXTRA)
    text = config_path.read_text().replace("vel = velocity_model.bin",
                                           "vel = velocity_initial.bin")
    fwi_path = config_path.with_name("config_fwi.txt")
    fwi_path.write_text(text)
    return config_path, fwi_path


def parse(path):
    return parse_config(path.read_text())
