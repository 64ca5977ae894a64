"""Readers and writers for the on-disk formats.

Three formats, all documented in docs/formats.md:

* binary field: raw little-endian float64, row-major, with a JSON sidecar
  (same path + '.json') holding shape, grid bounds, packed mask, units,
  frame transform, and a provenance hash;
* measurement CSV: columns ``zeta_x, zeta_y, theta, value``, one row per
  (arc node, outgoing direction), node-major, 17 significant digits;
* diagnostics JSON: plain nested dict, sorted keys.

All writers are byte-deterministic for identical inputs.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os

import numpy as np

from .errors import (
    MalformedHeader,
    MeasurementFormatError,
    ShapeMismatch,
    TruncatedPayload,
)
from .forward import BoundaryMeasurement
from .geometry import ScalarField, SpatialGrid

FIELD_FORMAT = "arctomo-field-v1"


def _fmt(x: float) -> str:
    return f"{x:.17g}"


# ---------------------------------------------------------------------------
# binary field + JSON sidecar
# ---------------------------------------------------------------------------


def write_field(path: str, field: ScalarField, units: str = "",
                provenance: str = "", frame: dict | None = None) -> None:
    """Write a scalar field as raw f64 plus a JSON sidecar."""
    g = field.grid
    payload = np.ascontiguousarray(field.values, dtype="<f8")
    mask_bytes = np.packbits(g.mask.astype(np.uint8)).tobytes()
    header = {
        "format": FIELD_FORMAT,
        "nx": g.nx,
        "ny": g.ny,
        "bounds": [g.xmin, g.xmax, g.ymin, g.ymax],
        "dtype": "<f8",
        "order": "row-major",
        "mask_encoding": "packbits-base64",
        "mask": base64.b64encode(mask_bytes).decode("ascii"),
        "units": units,
        "provenance": provenance or _payload_hash(payload),
        "frame": frame or {"rotation": 0.0, "offset": [0.0, 0.0]},
    }
    with open(path, "wb") as fh:
        fh.write(payload.tobytes())
    with open(_sidecar(path), "w") as fh:
        json.dump(header, fh, sort_keys=True, indent=1)
        fh.write("\n")


def read_field(path: str):
    """Read a binary field; returns (ScalarField, header dict)."""
    side = _sidecar(path)
    if not os.path.exists(side):
        raise MalformedHeader(f"missing sidecar {side}")
    try:
        with open(side) as fh:
            header = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedHeader(f"unreadable sidecar {side}: {exc}")
    for key in ("format", "nx", "ny", "bounds", "mask"):
        if key not in header:
            raise MalformedHeader(f"sidecar missing key {key!r}")
    if header["format"] != FIELD_FORMAT:
        raise MalformedHeader(f"unknown format {header['format']!r}")
    nx, ny = int(header["nx"]), int(header["ny"])
    raw = open(path, "rb").read()
    need = nx * ny * 8
    if len(raw) < need:
        raise TruncatedPayload(
            f"payload holds {len(raw)} bytes, header promises {need}")
    if len(raw) > need:
        raise ShapeMismatch(
            f"payload holds {len(raw)} bytes, header promises {need}")
    values = np.frombuffer(raw, dtype="<f8").reshape(ny, nx).copy()
    mask_bits = np.frombuffer(base64.b64decode(header["mask"]),
                              dtype=np.uint8)
    mask = np.unpackbits(mask_bits)[:nx * ny]
    if mask.size != nx * ny:
        raise ShapeMismatch("mask length does not match the grid shape")
    xmin, xmax, ymin, ymax = header["bounds"]
    grid = SpatialGrid(xmin, xmax, ymin, ymax, nx, ny,
                       mask.reshape(ny, nx).astype(bool))
    return ScalarField(grid, values), header


def _sidecar(path: str) -> str:
    return path + ".json"


def _payload_hash(payload) -> str:
    return hashlib.sha256(payload.tobytes()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# measurement CSV
# ---------------------------------------------------------------------------


def write_measurement_csv(path: str, meas: BoundaryMeasurement) -> None:
    """One row per (node, outgoing direction), node-major then by angle."""
    lines = ["zeta_x,zeta_y,theta,value"]
    for i in range(meas.n_nodes):
        z = meas.nodes[i]
        for d in range(meas.n_dir):
            if not meas.outgoing[i, d]:
                continue
            lines.append(",".join([_fmt(z.real), _fmt(z.imag),
                                   _fmt(meas.angles[d]),
                                   _fmt(meas.values[i, d])]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_measurement_csv(path: str) -> BoundaryMeasurement:
    """Rebuild a measurement from its CSV.

    The uniform direction set is inferred from the union of angles; the
    outer normals are recovered by fitting the circle through the nodes.
    """
    with open(path) as fh:
        header = fh.readline().strip()
        if header.split(",") != ["zeta_x", "zeta_y", "theta", "value"]:
            raise MeasurementFormatError(
                f"unexpected columns {header!r}")
        rows = np.loadtxt(fh, delimiter=",", ndmin=2)
    if rows.size == 0:
        raise MeasurementFormatError("measurement file has no samples")
    zs = rows[:, 0] + 1j * rows[:, 1]
    # group rows into nodes preserving file order
    node_change = np.ones(len(zs), dtype=bool)
    node_change[1:] = np.abs(np.diff(zs)) > 1e-14
    starts = np.flatnonzero(node_change)
    nodes = zs[starts]
    if np.unique(np.round(nodes, 12)).size != nodes.size:
        raise MeasurementFormatError("node blocks are not contiguous")
    center = _fit_circle_center(nodes)
    order = np.angle(nodes - center)
    if not np.all(np.diff(order) > 0):
        raise MeasurementFormatError("nodes are not in monotone arc order")

    thetas = np.unique(np.round(rows[:, 2], 12))
    gaps = np.diff(thetas)
    step = gaps.min()
    n_dir = int(round(2 * np.pi / step))
    base = thetas[0] % step
    angles = base + np.arange(n_dir) * step
    values = np.zeros((nodes.size, n_dir))
    filled = np.zeros((nodes.size, n_dir), dtype=bool)
    bounds = np.append(starts, len(zs))
    for i in range(nodes.size):
        blk = rows[bounds[i]:bounds[i + 1]]
        idx = np.rint((blk[:, 2] - base) / step).astype(int) % n_dir
        values[i, idx] = blk[:, 3]
        filled[i, idx] = True
    normals = (nodes - center) / np.abs(nodes - center)
    return BoundaryMeasurement(nodes=nodes, normals=normals, angles=angles,
                               values=values, outgoing=filled)


def _fit_circle_center(nodes: np.ndarray) -> complex:
    """Least-squares circle through the arc nodes."""
    x, y = nodes.real, nodes.imag
    A = np.column_stack([2 * x, 2 * y, np.ones_like(x)])
    b = x * x + y * y
    cx, cy, _ = np.linalg.lstsq(A, b, rcond=None)[0]
    return complex(cx, cy)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------


def write_json(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, sort_keys=True, indent=1)
        fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj
