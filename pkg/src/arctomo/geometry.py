"""Disk domain, measurement arc, chord, grids, and piecewise phantoms.

Conventions
-----------
Points are complex numbers ``z = x + iy``.  The measurement arc Lambda is a
counterclockwise sub-arc of the circle.  "Normalized" coordinates place the
arc in the closed upper half plane with its endpoints at (-l, 0) and (l, 0),
so the convex hull Omega+ of the arc is bounded by Lambda and the chord
L = (-l, l) on the real axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateArc
from .gridops import sample_bilinear

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# domain and rigid normalization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Domain:
    """Disk domain with a counterclockwise measurement arc.

    ``arc_start``/``arc_end`` are angles (radians) on the circle; the arc
    runs counterclockwise from start to end and must be a proper sub-arc.
    """

    center: complex = 0.0 + 0.0j
    radius: float = 1.0
    arc_start: float = 0.0
    arc_end: float = math.pi

    def __post_init__(self):
        if self.radius <= 0:
            raise ConfigError("domain radius must be positive")

    @property
    def aperture(self) -> float:
        """Arc opening angle in (0, 2*pi)."""
        a = (self.arc_end - self.arc_start) % TWO_PI
        return a

    @property
    def half_aperture(self) -> float:
        return 0.5 * self.aperture

    @property
    def chord_half_length(self) -> float:
        """l = R sin(half aperture): half-length of the chord closing the arc."""
        return self.radius * math.sin(self.half_aperture)

    def boundary_point(self, angle):
        return self.center + self.radius * np.exp(1j * np.asarray(angle))


@dataclass(frozen=True)
class RigidTransform:
    """z -> exp(i*rotation) * z + offset, an orientation-preserving isometry."""

    rotation: float
    offset: complex

    def apply(self, z):
        return np.exp(1j * self.rotation) * np.asarray(z) + self.offset

    def apply_direction(self, theta):
        """Direction angles just rotate."""
        return np.asarray(theta) + self.rotation

    def inverse(self) -> "RigidTransform":
        return RigidTransform(-self.rotation,
                              -self.offset * np.exp(-1j * self.rotation))

    @property
    def is_identity(self) -> bool:
        return abs(np.exp(1j * self.rotation) - 1.0) < 1e-15 and \
            abs(self.offset) < 1e-15


def normalize_coordinates(domain: Domain) -> RigidTransform:
    """Rigid map sending the arc endpoints to (-l, 0), (l, 0), arc upward.

    After the map the arc midpoint lies on the positive imaginary axis and
    the disk center sits at ``-i R cos(half aperture)``.
    """
    ap = domain.aperture
    if ap < 1e-12 or ap > TWO_PI - 1e-12:
        raise DegenerateArc(
            f"arc aperture {ap:.3g} must lie strictly between 0 and 2*pi")
    mid_angle = domain.arc_start + domain.half_aperture
    rotation = (math.pi / 2.0 - mid_angle) % TWO_PI
    # center the disk, rotate the arc midpoint onto +i, drop endpoints onto
    # the real axis
    drop = -1j * domain.radius * math.cos(domain.half_aperture)
    offset = -domain.center * np.exp(1j * rotation) + drop
    return RigidTransform(rotation, offset)


def normalized_disk_center(domain: Domain) -> complex:
    """Disk center in normalized coordinates."""
    return -1j * domain.radius * math.cos(domain.half_aperture)


# ---------------------------------------------------------------------------
# boundary mesh of the convex hull Omega+
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryMesh:
    """Midpoint-rule discretization of d(Omega+) = Lambda + L, counterclockwise.

    All node data are in normalized coordinates.  Lambda nodes are ordered by
    increasing polar angle (from (l,0) toward (-l,0)); chord nodes by
    increasing abscissa, so the concatenated sequence traverses the boundary
    of Omega+ counterclockwise.
    """

    lambda_nodes: np.ndarray        # complex (n_lambda,)
    lambda_tangents: np.ndarray     # complex unit tangents
    lambda_weights: np.ndarray      # arclength weights
    lambda_normals: np.ndarray      # outer unit normals
    chord_nodes: np.ndarray         # real (n_chord,)
    chord_weights: np.ndarray
    l: float                        # chord half-length
    radius: float
    disk_center: complex            # normalized-frame disk center

    @property
    def n_lambda(self) -> int:
        return self.lambda_nodes.size

    @property
    def n_chord(self) -> int:
        return self.chord_nodes.size

    @property
    def chord_spacing(self) -> float:
        return 2.0 * self.l / self.n_chord

    def all_nodes(self) -> np.ndarray:
        return np.concatenate([self.lambda_nodes,
                               self.chord_nodes.astype(complex)])

    def all_dzeta(self) -> np.ndarray:
        """Complex quadrature elements tangent * weight along the boundary."""
        return np.concatenate([self.lambda_tangents * self.lambda_weights,
                               self.chord_weights.astype(complex)])


def build_boundary_mesh(domain: Domain, n_lambda: int = 157,
                        n_chord: int = 100) -> BoundaryMesh:
    """Composite-midpoint nodes on the arc and on the chord.

    Both families are cell midpoints of uniform partitions, so no node ever
    coincides with the corner points (+-l, 0).
    """
    if n_lambda < 8 or n_chord < 8:
        raise ConfigError("need at least 8 nodes on the arc and on the chord")
    R = domain.radius
    half = domain.half_aperture
    l = domain.chord_half_length
    c = normalized_disk_center(domain)

    # normalized arc spans polar angles (pi/2 - half, pi/2 + half) about the
    # shifted disk center; traverse from the (l, 0) end toward (-l, 0)
    a0 = math.pi / 2.0 - half
    dphi = 2.0 * half / n_lambda
    phi = a0 + (np.arange(n_lambda) + 0.5) * dphi
    nodes = c + R * np.exp(1j * phi)
    tangents = 1j * np.exp(1j * phi)
    weights = np.full(n_lambda, R * dphi)
    normals = np.exp(1j * phi)

    dx = 2.0 * l / n_chord
    xs = -l + (np.arange(n_chord) + 0.5) * dx
    return BoundaryMesh(
        lambda_nodes=nodes, lambda_tangents=tangents, lambda_weights=weights,
        lambda_normals=normals, chord_nodes=xs,
        chord_weights=np.full(n_chord, dx), l=l, radius=R, disk_center=c)


# ---------------------------------------------------------------------------
# spatial grids and fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpatialGrid:
    """Cell-centered Cartesian grid with an inside-domain mask."""

    xmin: float
    xmax: float
    ymin: float
    ymax: float
    nx: int
    ny: int
    mask: np.ndarray = field(repr=False)  # bool (ny, nx)

    @property
    def dx(self) -> float:
        return (self.xmax - self.xmin) / self.nx

    @property
    def dy(self) -> float:
        return (self.ymax - self.ymin) / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def x(self) -> np.ndarray:
        return self.xmin + (np.arange(self.nx) + 0.5) * self.dx

    @property
    def y(self) -> np.ndarray:
        return self.ymin + (np.arange(self.ny) + 0.5) * self.dy

    def meshgrid(self):
        return np.meshgrid(self.x, self.y)

    def points(self) -> np.ndarray:
        """Complex coordinates of all cell centers, shape (ny, nx)."""
        xx, yy = self.meshgrid()
        return xx + 1j * yy

    def interior_points(self) -> np.ndarray:
        return self.points()[self.mask]

    def sample(self, values, z, cval=0.0):
        z = np.asarray(z)
        return sample_bilinear(values, self.xmin, self.ymin, self.dx,
                               self.dy, z.real, z.imag, cval=cval)


def disk_grid(domain: Domain, n: int, normalized: bool = True,
              margin_cells: int = 2) -> SpatialGrid:
    """Square n x n grid covering the (normalized) disk with an inside mask.

    A small margin of cells extends past the disk so that boundary points
    always lie strictly inside the cell-center hull (bilinear traces at the
    circle never hit the zero fill value).
    """
    c = normalized_disk_center(domain) if normalized else domain.center
    R = domain.radius
    h = 2.0 * R / (n - 2 * margin_cells)
    ext = R + margin_cells * h
    xmin, xmax = c.real - ext, c.real + ext
    ymin, ymax = c.imag - ext, c.imag + ext
    dx = (xmax - xmin) / n
    xs = xmin + (np.arange(n) + 0.5) * dx
    ys = ymin + (np.arange(n) + 0.5) * dx
    xx, yy = np.meshgrid(xs, ys)
    mask = (xx - c.real) ** 2 + (yy - c.imag) ** 2 < R ** 2
    return SpatialGrid(xmin, xmax, ymin, ymax, n, n, mask)


def hull_grid(domain: Domain, nx: int) -> SpatialGrid:
    """Grid covering the convex hull Omega+ (normalized frame) with equal
    spacing in x and y.  ``nx`` counts cells across the chord [-l, l]."""
    l = domain.chord_half_length
    c = normalized_disk_center(domain)
    R = domain.radius
    h = 2.0 * l / nx
    height = c.imag + R          # top of the arc above the chord
    ny = max(int(math.ceil(height / h)), 4)
    xmin, xmax = -l, l
    ymin, ymax = 0.0, ny * h
    xs = xmin + (np.arange(nx) + 0.5) * h
    ys = ymin + (np.arange(ny) + 0.5) * h
    xx, yy = np.meshgrid(xs, ys)
    mask = ((xx - c.real) ** 2 + (yy - c.imag) ** 2 < R ** 2) & (yy > 0)
    return SpatialGrid(xmin, xmax, ymin, ymax, nx, ny, mask)


@dataclass
class ScalarField:
    """Real or complex values sampled at the cell centers of a grid."""

    grid: SpatialGrid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.grid.ny, self.grid.nx):
            raise ShapeError(self.values.shape, (self.grid.ny, self.grid.nx))

    def masked(self) -> np.ndarray:
        """Values with everything outside the domain mask forced to zero."""
        return np.where(self.grid.mask, self.values, 0.0)

    def sample(self, z, cval=0.0):
        return self.grid.sample(self.masked(), z, cval=cval)


class ShapeError(ValueError):
    def __init__(self, got, want):
        super().__init__(f"field shape {got} does not match grid {want}")


# ---------------------------------------------------------------------------
# piecewise phantoms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Region:
    """One region of a piecewise-constant field.

    ``shape`` is 'rect' (params xmin, xmax, ymin, ymax) or 'disk'
    (params cx, cy, r).
    """

    shape: str
    params: dict
    value: float

    def contains(self, xx, yy):
        p = self.params
        if self.shape == "rect":
            return ((xx > p["xmin"]) & (xx < p["xmax"]) &
                    (yy > p["ymin"]) & (yy < p["ymax"]))
        if self.shape == "disk":
            return (xx - p["cx"]) ** 2 + (yy - p["cy"]) ** 2 < p["r"] ** 2
        raise ConfigError(f"unknown region shape {self.shape!r}")

    def signed_radial(self, xx, yy):
        """Distance to the disk center minus radius (disks only)."""
        p = self.params
        if self.shape != "disk":
            raise ConfigError("mollification only supported for disk regions")
        return np.hypot(xx - p["cx"], yy - p["cy"]) - p["r"]


@dataclass(frozen=True)
class Phantom:
    """Piecewise-constant source and absorption, optionally mollified.

    Region lists are evaluated with first-match priority.  The absorption
    entries may carry a C^2 mollification of width ``mollify_eps`` applied
    over the radial collar [r - eps, r + eps] of each disk region; outside
    the collars the mollified field agrees with the piecewise values.
    """

    source_regions: tuple
    absorption_regions: tuple
    absorption_background: float = 0.0
    source_background: float = 0.0
    mollify_eps: float = 0.0


def quintic_step(t):
    """C^2 monotone transition 1 -> 0 on [0, 1].

    Uses the quintic -(t-1)^3 (6 t^2 + 3 t + 1), which has vanishing first
    and second derivatives at both ends.
    """
    t = np.clip(t, 0.0, 1.0)
    return -((t - 1.0) ** 3) * (6.0 * t * t + 3.0 * t + 1.0)


def _first_match(regions, background, xx, yy):
    out = np.full(xx.shape, background, dtype=float)
    assigned = np.zeros(xx.shape, dtype=bool)
    for reg in regions:
        inside = reg.contains(xx, yy) & ~assigned
        out[inside] = reg.value
        assigned |= inside
    return out

def _mollified(regions, background, eps, xx, yy):
    # additive blend of C^2 bumps; identical to first-match outside the
    # collars for disjoint regions (the only case the phantom menagerie uses)
    out = np.full(xx.shape, background, dtype=float)
    for reg in regions:
        d = reg.signed_radial(xx, yy)
        t = (d + eps) / (2.0 * eps)
        out += (reg.value - background) * quintic_step(t)
    return out


def eval_phantom_at(phantom: Phantom, xx, yy):
    """Pointwise (source, absorption) at arbitrary coordinates."""
    xx = np.asarray(xx, dtype=float)
    yy = np.asarray(yy, dtype=float)
    src = _first_match(phantom.source_regions, phantom.source_background,
                       xx, yy)
    if phantom.mollify_eps > 0 and phantom.absorption_regions:
        absn = _mollified(phantom.absorption_regions,
                          phantom.absorption_background,
                          phantom.mollify_eps, xx, yy)
    else:
        absn = _first_match(phantom.absorption_regions,
                            phantom.absorption_background, xx, yy)
    return src, absn


def eval_phantom(phantom: Phantom, grid: SpatialGrid):
    """Sample the phantom on a grid; returns (source, absorption) fields."""
    xx, yy = grid.meshgrid()
    src, absn = eval_phantom_at(phantom, xx, yy)
    return ScalarField(grid, src), ScalarField(grid, absn)


def paper_phantom(smooth_absorption: bool = True, eps: float = 0.05,
                  background_absorption: float = 0.1) -> Phantom:
    """The rectangular-plus-disks phantom used throughout the experiments.

    Sources: 2 on the rectangle R, 1 on the disks B2 and B3.  Absorption:
    2 on B1, 1 on B2 over a 0.1 background, either sharp or C^2-mollified
    with collar width ``eps``.
    """
    s3_4 = math.sqrt(3.0) / 4.0
    src = (
        Region("rect", {"xmin": -0.25, "xmax": 0.5,
                        "ymin": -0.15, "ymax": 0.15}, 2.0),
        Region("disk", {"cx": -0.25, "cy": s3_4, "r": 0.2}, 1.0),
        Region("disk", {"cx": 0.0, "cy": -0.6, "r": 0.3}, 1.0),
    )
    absn = (
        Region("disk", {"cx": 0.5, "cy": 0.0, "r": 0.3}, 2.0),
        Region("disk", {"cx": -0.25, "cy": s3_4, "r": 0.2}, 1.0),
    )
    return Phantom(source_regions=src, absorption_regions=absn,
                   absorption_background=background_absorption,
                   mollify_eps=eps if smooth_absorption else 0.0)
