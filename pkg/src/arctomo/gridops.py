"""Low-level grid plumbing: bilinear sampling, masked derivatives.

All spatial fields live on cell-centered Cartesian grids.  Sampling outside
the grid returns 0 (fields are extended by zero outside their support).
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import map_coordinates


def sample_bilinear(values, xmin, ymin, dx, dy, x, y, cval=0.0):
    """Bilinear interpolation of a cell-centered field at points (x, y).

    ``values`` is (ny, nx) indexed [iy, ix]; cell centers sit at
    ``xmin + (ix + 1/2) dx``.  Complex fields are interpolated
    component-wise.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    col = (x - xmin) / dx - 0.5
    row = (y - ymin) / dy - 0.5
    coords = np.stack([row.ravel(), col.ravel()])
    if np.iscomplexobj(values):
        out = map_coordinates(values.real, coords, order=1, mode="constant",
                              cval=cval) + 1j * map_coordinates(
            values.imag, coords, order=1, mode="constant", cval=cval)
    else:
        out = map_coordinates(values, coords, order=1, mode="constant",
                              cval=cval)
    return out.reshape(x.shape)


def _shift(arr, n, axis):
    """np.roll without wraparound; vacated slots filled with 0/False."""
    out = np.zeros_like(arr)
    src = [slice(None)] * arr.ndim
    dst = [slice(None)] * arr.ndim
    if n > 0:
        src[axis] = slice(None, -n)
        dst[axis] = slice(n, None)
    elif n < 0:
        src[axis] = slice(-n, None)
        dst[axis] = slice(None, n)
    else:
        return arr.copy()
    out[tuple(dst)] = arr[tuple(src)]
    return out


def masked_gradient(values, mask, h, axis):
    """d/dx_axis of ``values`` restricted to ``mask``.

    Centered differences where both neighbors are inside the mask, one-sided
    at mask edges, 0 where the point has no in-mask neighbor along the axis.
    """
    vp = _shift(values, -1, axis)   # value at i+1
    vm = _shift(values, +1, axis)   # value at i-1
    mp = _shift(mask, -1, axis)
    mm = _shift(mask, +1, axis)

    grad = np.zeros_like(values)
    both = mp & mm
    only_p = mp & ~mm
    only_m = mm & ~mp
    grad[both] = (vp[both] - vm[both]) / (2.0 * h)
    grad[only_p] = (vp[only_p] - values[only_p]) / h
    grad[only_m] = (values[only_m] - vm[only_m]) / h
    grad[~mask] = 0.0
    return grad


def complex_derivatives(values, mask, dx, dy):
    """Return (del, dbar): (d/dx -+ i d/dy)/2 on the masked grid."""
    fx = masked_gradient(values, mask, dx, axis=1)
    fy = masked_gradient(values, mask, dy, axis=0)
    d = 0.5 * (fx - 1j * fy)
    dbar = 0.5 * (fx + 1j * fy)
    return d, dbar
