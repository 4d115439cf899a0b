"""Hot loops of the propagator and adjoint sweep, jitted with numba.

All kernels are single-threaded and release the GIL so shot-level thread
pools parallelize across them.  Coefficient arrays arrive already divided
by the squared grid spacing of their axis; ``c0`` is the combined central
weight.  The update is written only on ``[x0:x1, y0:y1, z0:z1]``, the rim
where the stencil does not fit is left untouched (zero by construction).
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["leapfrog", "leapfrog_mass", "laplacian", "accumulate_kernel"]


@njit(cache=True, nogil=True)
def _leapfrog_h4(p_prev, p_curr, p_next, c2dt2, cx, cy, cz, c0,
                 x0, x1, y0, y1, z0, z1):
    for i in range(x0, x1):
        for j in range(y0, y1):
            for k in range(z0, z1):
                lap = (c0 * p_curr[i, j, k]
                       + cx[1] * (p_curr[i - 1, j, k] + p_curr[i + 1, j, k])
                       + cx[2] * (p_curr[i - 2, j, k] + p_curr[i + 2, j, k])
                       + cx[3] * (p_curr[i - 3, j, k] + p_curr[i + 3, j, k])
                       + cx[4] * (p_curr[i - 4, j, k] + p_curr[i + 4, j, k])
                       + cy[1] * (p_curr[i, j - 1, k] + p_curr[i, j + 1, k])
                       + cy[2] * (p_curr[i, j - 2, k] + p_curr[i, j + 2, k])
                       + cy[3] * (p_curr[i, j - 3, k] + p_curr[i, j + 3, k])
                       + cy[4] * (p_curr[i, j - 4, k] + p_curr[i, j + 4, k])
                       + cz[1] * (p_curr[i, j, k - 1] + p_curr[i, j, k + 1])
                       + cz[2] * (p_curr[i, j, k - 2] + p_curr[i, j, k + 2])
                       + cz[3] * (p_curr[i, j, k - 3] + p_curr[i, j, k + 3])
                       + cz[4] * (p_curr[i, j, k - 4] + p_curr[i, j, k + 4]))
                p_next[i, j, k] = (2.0 * p_curr[i, j, k] - p_prev[i, j, k]
                                   + c2dt2[i, j, k] * lap)


@njit(cache=True, nogil=True)
def _leapfrog_hn(p_prev, p_curr, p_next, c2dt2, cx, cy, cz, c0, h,
                 x0, x1, y0, y1, z0, z1):
    for i in range(x0, x1):
        for j in range(y0, y1):
            for k in range(z0, z1):
                lap = c0 * p_curr[i, j, k]
                for m in range(1, h + 1):
                    lap += cx[m] * (p_curr[i - m, j, k] + p_curr[i + m, j, k])
                    lap += cy[m] * (p_curr[i, j - m, k] + p_curr[i, j + m, k])
                    lap += cz[m] * (p_curr[i, j, k - m] + p_curr[i, j, k + m])
                p_next[i, j, k] = (2.0 * p_curr[i, j, k] - p_prev[i, j, k]
                                   + c2dt2[i, j, k] * lap)


@njit(cache=True, nogil=True)
def _leapfrog_mass_h4(p_prev, p_curr, p_next, c2dt2, m2, cx, cy, cz, c0,
                      x0, x1, y0, y1, z0, z1):
    for i in range(x0, x1):
        for j in range(y0, y1):
            for k in range(z0, z1):
                lap = (c0 * p_curr[i, j, k]
                       + cx[1] * (p_curr[i - 1, j, k] + p_curr[i + 1, j, k])
                       + cx[2] * (p_curr[i - 2, j, k] + p_curr[i + 2, j, k])
                       + cx[3] * (p_curr[i - 3, j, k] + p_curr[i + 3, j, k])
                       + cx[4] * (p_curr[i - 4, j, k] + p_curr[i + 4, j, k])
                       + cy[1] * (p_curr[i, j - 1, k] + p_curr[i, j + 1, k])
                       + cy[2] * (p_curr[i, j - 2, k] + p_curr[i, j + 2, k])
                       + cy[3] * (p_curr[i, j - 3, k] + p_curr[i, j + 3, k])
                       + cy[4] * (p_curr[i, j - 4, k] + p_curr[i, j + 4, k])
                       + cz[1] * (p_curr[i, j, k - 1] + p_curr[i, j, k + 1])
                       + cz[2] * (p_curr[i, j, k - 2] + p_curr[i, j, k + 2])
                       + cz[3] * (p_curr[i, j, k - 3] + p_curr[i, j, k + 3])
                       + cz[4] * (p_curr[i, j, k - 4] + p_curr[i, j, k + 4]))
                p_next[i, j, k] = (2.0 * p_curr[i, j, k] - p_prev[i, j, k]
                                   + c2dt2[i, j, k] * (lap - m2[i, j, k] * p_curr[i, j, k]))


@njit(cache=True, nogil=True)
def _leapfrog_mass_hn(p_prev, p_curr, p_next, c2dt2, m2, cx, cy, cz, c0, h,
                      x0, x1, y0, y1, z0, z1):
    for i in range(x0, x1):
        for j in range(y0, y1):
            for k in range(z0, z1):
                lap = c0 * p_curr[i, j, k]
                for m in range(1, h + 1):
                    lap += cx[m] * (p_curr[i - m, j, k] + p_curr[i + m, j, k])
                    lap += cy[m] * (p_curr[i, j - m, k] + p_curr[i, j + m, k])
                    lap += cz[m] * (p_curr[i, j, k - m] + p_curr[i, j, k + m])
                p_next[i, j, k] = (2.0 * p_curr[i, j, k] - p_prev[i, j, k]
                                   + c2dt2[i, j, k] * (lap - m2[i, j, k] * p_curr[i, j, k]))


def leapfrog(p_prev, p_curr, p_next, c2dt2, cx, cy, cz, c0, h, bounds) -> None:
    x0, x1, y0, y1, z0, z1 = bounds
    if h == 4:
        _leapfrog_h4(p_prev, p_curr, p_next, c2dt2, cx, cy, cz, c0,
                     x0, x1, y0, y1, z0, z1)
    else:
        _leapfrog_hn(p_prev, p_curr, p_next, c2dt2, cx, cy, cz, c0, h,
                     x0, x1, y0, y1, z0, z1)


def leapfrog_mass(p_prev, p_curr, p_next, c2dt2, m2, cx, cy, cz, c0, h, bounds) -> None:
    x0, x1, y0, y1, z0, z1 = bounds
    if h == 4:
        _leapfrog_mass_h4(p_prev, p_curr, p_next, c2dt2, m2, cx, cy, cz, c0,
                          x0, x1, y0, y1, z0, z1)
    else:
        _leapfrog_mass_hn(p_prev, p_curr, p_next, c2dt2, m2, cx, cy, cz, c0, h,
                          x0, x1, y0, y1, z0, z1)


@njit(cache=True, nogil=True)
def _laplacian_hn(src, out, cx, cy, cz, c0, h, x0, x1, y0, y1, z0, z1):
    for i in range(x0, x1):
        for j in range(y0, y1):
            for k in range(z0, z1):
                lap = c0 * src[i, j, k]
                for m in range(1, h + 1):
                    lap += cx[m] * (src[i - m, j, k] + src[i + m, j, k])
                    lap += cy[m] * (src[i, j - m, k] + src[i, j + m, k])
                    lap += cz[m] * (src[i, j, k - m] + src[i, j, k + m])
                out[i, j, k] = lap


def laplacian(src, out, cx, cy, cz, c0, h, bounds) -> None:
    """out = stencil Laplacian of src on the compute region (rim untouched)."""
    x0, x1, y0, y1, z0, z1 = bounds
    _laplacian_hn(src, out, cx, cy, cz, c0, h, x0, x1, y0, y1, z0, z1)


@njit(cache=True, nogil=True)
def accumulate_kernel(out, w, b_n, b_nm1, b_nm2, taper, inv_taper):
    """out += w * (b_n / taper - 2*b_nm1 + taper*b_nm2), elementwise."""
    flat_out = out.ravel()
    flat_w = w.ravel()
    f0 = b_n.ravel()
    f1 = b_nm1.ravel()
    f2 = b_nm2.ravel()
    ft = taper.ravel()
    fi = inv_taper.ravel()
    for idx in range(flat_out.size):
        flat_out[idx] += flat_w[idx] * (fi[idx] * f0[idx] - 2.0 * f1[idx]
                                        + ft[idx] * f2[idx])


def warmup() -> None:
    """Compile the kernels on a tiny grid so later timing is clean."""
    shape = (9, 9, 9)
    z = np.zeros(shape)
    c = np.full(shape, 0.1)
    w = np.linspace(0.0, 1.0, 5)
    bounds = (4, 5, 4, 5, 4, 5)
    leapfrog(z.copy(), z.copy(), z.copy(), c, w, w, w, -1.0, 4, bounds)
    leapfrog(z.copy(), z.copy(), z.copy(), c, w[:3], w[:3], w[:3], -1.0, 2, bounds)
    leapfrog_mass(z.copy(), z.copy(), z.copy(), c, c, w, w, w, -1.0, 4, bounds)
    leapfrog_mass(z.copy(), z.copy(), z.copy(), c, c, w[:3], w[:3], w[:3], -1.0, 2, bounds)
    one = np.ones(shape)
    accumulate_kernel(z.copy(), one, one, one, one, one, one)
