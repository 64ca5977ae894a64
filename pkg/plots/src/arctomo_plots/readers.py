"""Readers for the documented arctomo file formats.

This package deliberately does not import the solver library: it consumes
the measurement CSV, binary field, and section CSV formats exactly as
documented in the main repo's docs/formats.md.
"""

from __future__ import annotations

import base64
import json

import numpy as np


class Measurement:
    """Parsed measurement CSV: nodes, per-node angles and values."""

    def __init__(self, nodes, blocks):
        self.nodes = nodes                  # complex (n_nodes,)
        self.blocks = blocks                # list of (angles, values)

    @property
    def n_nodes(self):
        return self.nodes.size


def read_measurement(path) -> Measurement:
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if rows.size == 0:
        raise ValueError(f"{path} holds no samples")
    zs = rows[:, 0] + 1j * rows[:, 1]
    change = np.ones(len(zs), dtype=bool)
    change[1:] = np.abs(np.diff(zs)) > 1e-14
    starts = np.flatnonzero(change)
    bounds = np.append(starts, len(zs))
    nodes = zs[starts]
    blocks = [(rows[a:b, 2], rows[a:b, 3]) for a, b in zip(bounds, bounds[1:])]
    return Measurement(nodes, blocks)


class Field:
    def __init__(self, values, mask, bounds):
        self.values = values
        self.mask = mask
        self.bounds = bounds                # (xmin, xmax, ymin, ymax)


def read_field(path) -> Field:
    header = json.load(open(str(path) + ".json"))
    nx, ny = int(header["nx"]), int(header["ny"])
    values = np.fromfile(path, dtype="<f8").reshape(ny, nx)
    bits = np.frombuffer(base64.b64decode(header["mask"]), dtype=np.uint8)
    mask = np.unpackbits(bits)[:nx * ny].reshape(ny, nx).astype(bool)
    return Field(values, mask, tuple(header["bounds"]))


def read_section(path):
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return rows[:, 0], rows[:, 3]
