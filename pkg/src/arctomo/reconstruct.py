"""Six-step source reconstruction from arc measurements.

Given the exiting radiation on the arc, the known attenuation, and a
scattering kernel of finite angular degree M, the interior source on the
convex hull of the arc is recovered by:

  1. converting the measured angular modes into conjugate-analytic ones
     with the integrating factors (arc trace);
  2. recovering the missing chord traces of modes -M and deeper from
     finite-Hilbert systems whose right-hand sides come from the arc alone;
  3. extending those modes inside with the Cauchy-type integral;
  4. converting back to transport modes in the interior;
  5. climbing the mode ladder -M+1, ..., -1, 0 by solving an inhomogeneous
     dbar Cauchy problem per rung (chord data from a compatibility
     condition, interior values from the Cauchy-Pompeiu formula);
  6. assembling the source from the two shallowest modes.

The chord systems are marginally invertible (the implicit regularization of
the collocation is what keeps them solvable at all), so by default every
chord solve is augmented with collocations of the same boundary
characterization at arc points, which stabilizes the spectral-edge content
of the solutions; see ``aanalytic.AugmentedChordSystem``.  Boundary
quadratures run on a spline-refined copy of the arc trace.

Every stage records residuals and timings; the map from measurement values
to the reconstructed field is linear.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .aanalytic import AugmentedChordSystem, ChordSystem, ModeTrace, bukhgeim_cauchy
from .atten import IntegratingFactors, compute_factors_for
from .errors import ArctomoError, InsufficientAngles
from .forward import BoundaryMeasurement
from .geometry import (
    BoundaryMesh,
    Domain,
    ScalarField,
    SpatialGrid,
    build_boundary_mesh,
    disk_grid,
)
from .gridops import complex_derivatives
from .kernels import ScatteringKernel, coupling_modes

TWO_PI = 2.0 * math.pi


@dataclass
class ReconstructionConfig:
    """Knobs of the inversion pipeline (resolution-independent)."""

    M: int = 1
    n_modes: int | None = None      # default: min(M + 22, angular budget)
    lambda_reg: float = 0.0
    collar: float = 0.1             # metric exclusion band above the chord
    chord_residual_tol: float = 1e-3
    factor_nx: int = 256            # attenuation grid for the h-field
    factor_n_angles: int = 360
    factor_n_s: int | None = None
    factor_tail_tol: float = 1e-4
    arc_refine: int = 3             # spline refinement of arc quadratures
    use_arc_rows: bool = True       # augment chord solves with arc rows
    corner_exclusion: float = 0.08  # arc rows keep distance from corners
    arc_weight: float = 1.0
    closure_margin: int = 8         # deepest modes skip the arc rows


@dataclass
class ReconstructionResult:
    f_hat: ScalarField
    diagnostics: dict
    timings: dict
    interior_modes: np.ndarray = field(default=None, repr=False)
    trace: ModeTrace = field(default=None, repr=False)


# ---------------------------------------------------------------------------
# step 0: measured angular modes on the arc
# ---------------------------------------------------------------------------


def measurement_to_mode_trace(meas: BoundaryMeasurement, mesh: BoundaryMesh,
                              n_modes: int) -> ModeTrace:
    """Non-positive Fourier modes of the boundary flux at every arc node.

    Incoming directions carry zero flux by the boundary condition, so the
    full angular integral reduces to the outgoing samples:

        u_{-n}(zeta) = (1/2 pi) int u(zeta, theta) e^{i n theta} dtheta.
    """
    if not np.allclose(meas.nodes, mesh.lambda_nodes, atol=1e-12):
        raise ArctomoError("measurement nodes do not match the arc mesh")
    n_out = int(meas.outgoing.sum(axis=1).min())
    if n_out < 4 * n_modes:
        raise InsufficientAngles(
            f"{n_out} outgoing samples per node cannot support "
            f"{n_modes} modes (need at least {4 * n_modes})")
    phases = np.exp(1j * np.outer(np.arange(n_modes + 1), meas.angles))
    vals = (phases @ meas.values.T) / meas.n_dir
    return ModeTrace(nodes=mesh.lambda_nodes.copy(),
                     dzeta=mesh.lambda_tangents * mesh.lambda_weights,
                     values=vals, n_lambda=mesh.n_lambda, l=mesh.l)


def angular_budget(meas: BoundaryMeasurement) -> int:
    """Largest mode depth the outgoing angular sampling supports."""
    return int(meas.outgoing.sum(axis=1).min()) // 4


def refine_arc_trace(trace: ModeTrace, mesh: BoundaryMesh,
                     mesh_fine: BoundaryMesh) -> ModeTrace:
    """Spline the arc trace onto a finer midpoint mesh (quadrature only).

    The mode values are smooth along the arc; resampling adds no
    information but lets the boundary quadratures resolve near-corner
    kernels.
    """
    phi_c = np.angle(mesh.lambda_nodes - mesh.disk_center)
    phi_f = np.angle(mesh_fine.lambda_nodes - mesh_fine.disk_center)
    vals = np.empty((trace.values.shape[0], mesh_fine.n_lambda),
                    dtype=complex)
    for k in range(trace.values.shape[0]):
        re = CubicSpline(phi_c, trace.values[k].real, bc_type="natural")
        im = CubicSpline(phi_c, trace.values[k].imag, bc_type="natural")
        vals[k] = re(phi_f) + 1j * im(phi_f)
    return ModeTrace(nodes=mesh_fine.lambda_nodes.copy(),
                     dzeta=mesh_fine.lambda_tangents *
                     mesh_fine.lambda_weights,
                     values=vals, n_lambda=mesh_fine.n_lambda, l=mesh_fine.l)


# ---------------------------------------------------------------------------
# step 1 / step 4: convolution with the integrating factors
# ---------------------------------------------------------------------------


def u_to_v(values: np.ndarray, factors: IntegratingFactors) -> np.ndarray:
    """v_{-n} = sum_j alpha_j u_{-n-j}, truncated at the stored depth."""
    return _factor_convolve(values, factors.alpha)


def v_to_u(values: np.ndarray, factors: IntegratingFactors) -> np.ndarray:
    """u_{-n} = sum_j beta_j v_{-n-j}, truncated at the stored depth."""
    return _factor_convolve(values, factors.beta)


def _factor_convolve(values, coef):
    n_modes = values.shape[0] - 1
    out = np.zeros_like(values)
    depth = min(coef.shape[0] - 1, n_modes)
    for k in range(n_modes + 1):
        jmax = min(depth, n_modes - k)
        out[k] = np.einsum("jp,jp->p", coef[:jmax + 1],
                           values[k:k + jmax + 1])
    return out


# ---------------------------------------------------------------------------
# arc-row assembly shared by the chord solves
# ---------------------------------------------------------------------------


class _ArcRowAssembler:
    """Precomputed kernels for collocating the hull characterization at arc
    points, with the chord values as the only unknowns."""

    def __init__(self, trace_fine: ModeTrace, chord_nodes: np.ndarray):
        zeta = trace_fine.nodes
        dz = trace_fine.dzeta
        t = zeta                           # targets = fine arc nodes
        diff = zeta[None, :] - t[:, None]
        np.fill_diagonal(diff, np.inf)
        self.C_aa = dz[None, :] / diff
        self.E_aa = 2j * self.C_aa.imag
        with np.errstate(invalid="ignore"):
            rho = np.conj(diff) / diff
        rho[np.abs(diff) == np.inf] = 0.0
        self.rho_aa = rho

        x = chord_nodes.astype(complex)
        dxc = float(chord_nodes[1] - chord_nodes[0])
        diff_l = x[None, :] - t[:, None]
        C_la = dxc / diff_l
        self.E_la = 2j * C_la.imag
        self.rho_la = np.conj(diff_l) / diff_l
        self.chord_block = (1j / math.pi) * C_la
        self.targets = t

    def chord_cauchy(self, w):
        """Arc-row contribution of a known chord function (full targets)."""
        return self.chord_block @ np.asarray(w, dtype=complex)

    def analytic_rhs(self, vals_fine, chord_vals, k):
        """Known part of the arc row for trace mode -k (step 2).

        Row: (i/pi) sum_j w_j dx/(x_j - t) + rhs = 0 with
        rhs = v_{-k}(t) + (i/pi)[pv arc Cauchy + arc series + chord series].
        """
        acc = self.C_aa @ vals_fine[k]
        n_modes = vals_fine.shape[0] - 1
        m_max = (n_modes - k) // 2
        if m_max >= 1:
            s = np.zeros_like(self.rho_aa)
            sl = np.zeros_like(self.rho_la)
            for m in range(m_max, 0, -1):
                s = self.rho_aa * (s + vals_fine[k + 2 * m][None, :])
                sl = self.rho_la * (sl + chord_vals[k + 2 * m][None, :])
            acc = acc + (self.E_aa * s).sum(axis=1) + \
                (self.E_la * sl).sum(axis=1)
        return vals_fine[k][:len(self.targets)] + (1j / math.pi) * acc

    def ladder_rhs(self, g_fine, area_at_targets):
        """Known part of the arc row for a dbar rung.

        The Plemelj compatibility at an arc point z0 reads
        (1/2) g(z0) = (1/2 pi i)[pv arc Cauchy of g + chord Cauchy of w]
                      - (1/pi) area(z0);
        normalized to the shared coefficient block it becomes
        (i/pi) sum_j w_j dx/(x_j - z0) + [g + (i/pi) pv arc Cauchy
                                          + (2/pi) area] = 0.
        """
        return g_fine + (1j / math.pi) * (self.C_aa @ g_fine) + \
            (2.0 / math.pi) * area_at_targets


# ---------------------------------------------------------------------------
# step 2: chord traces of the deep modes
# ---------------------------------------------------------------------------


def recover_chord_traces(trace_fine: ModeTrace, mesh: BoundaryMesh, M: int,
                         solver, lambda_reg: float = 0.0,
                         assembler: _ArcRowAssembler | None = None,
                         fine_chord_nodes: np.ndarray | None = None,
                         closure_margin: int = 8,
                         alpha_chord: np.ndarray | None = None):
    """Solve (I - i H_t) v_{-n} = F_{-n} on the chord for every n >= M.

    Modes are solved deepest first so that, with an augmented solver, the
    chord series in the arc rows can use the already-recovered deeper
    modes.  When ``alpha_chord`` (integrating-factor modes at the chord
    nodes) is supplied, the unknowns are reparametrized as the transport
    modes u_{-n}|_L with v = alpha (*) u folded in: the zeroth factor mode
    is identically 1, so the collocation matrices are unchanged while the
    unknowns keep the physical scale, which avoids amplifying solve errors
    by the (exponentially large) factor coefficients downstream.

    The solves run on the mesh chord nodes; for downstream quadratures the
    solved values may be spline-refined onto ``fine_chord_nodes``.
    Returns the combined hull-boundary trace and per-mode residuals.
    """
    from .aanalytic import compute_F

    n_modes = trace_fine.n_modes
    nl = trace_fine.n_lambda
    chord_vals = np.zeros((n_modes + 1, mesh.n_chord), dtype=complex)
    u_chord = np.zeros_like(chord_vals)
    residuals = {}
    thr = 0.45 * mesh.chord_spacing
    augmented = isinstance(solver, AugmentedChordSystem)
    base = solver.base if augmented else solver
    for k in range(n_modes, M - 1, -1):
        F = compute_F(trace_fine, mesh.chord_nodes, k,
                      min_endpoint_distance=thr)
        if alpha_chord is not None:
            # known alpha-tail of deeper transport modes moves to the RHS
            jmax = n_modes - k
            tail = np.einsum("jp,jp->p", alpha_chord[1:jmax + 1],
                             u_chord[k + 1:k + jmax + 1]) if jmax >= 1 \
                else np.zeros(mesh.n_chord, dtype=complex)
            F = F - base.apply(tail)
        # arc rows are consistent only when their mode series is adequately
        # closed by already-solved deeper modes; near the truncation depth
        # fall back to the plain square collocation
        if augmented and n_modes - k >= closure_margin:
            arc_rhs = assembler.analytic_rhs(trace_fine.values, chord_vals, k)
            if alpha_chord is not None:
                arc_rhs = arc_rhs + assembler.chord_cauchy(tail)
            w, residuals[k] = solver.solve(F, arc_rhs, mode=k)
        else:
            w, residuals[k] = base.solve(F, lambda_reg=lambda_reg, mode=k)
        if alpha_chord is not None:
            u_chord[k] = w
            chord_vals[k] = w + tail
        else:
            chord_vals[k] = w
    if fine_chord_nodes is not None:
        out_vals = _refine_chord_values(chord_vals, mesh.chord_nodes,
                                        fine_chord_nodes)
        x_out = fine_chord_nodes
        w_out = np.full(fine_chord_nodes.size,
                        fine_chord_nodes[1] - fine_chord_nodes[0])
    else:
        out_vals, x_out, w_out = chord_vals, mesh.chord_nodes, \
            mesh.chord_weights
    full = np.concatenate([trace_fine.values, out_vals], axis=1)
    nodes = np.concatenate([trace_fine.nodes, x_out.astype(complex)])
    dz = np.concatenate([trace_fine.dzeta, w_out.astype(complex)])
    trace = ModeTrace(nodes=nodes, dzeta=dz, values=full, n_lambda=nl,
                      l=mesh.l)
    return trace, residuals


def _refine_chord_values(values, x_coarse, x_fine):
    out = np.empty((values.shape[0], x_fine.size), dtype=complex)
    for k in range(values.shape[0]):
        re = CubicSpline(x_coarse, values[k].real, bc_type="natural")
        im = CubicSpline(x_coarse, values[k].imag, bc_type="natural")
        out[k] = re(x_fine) + 1j * im(x_fine)
    return out


# ---------------------------------------------------------------------------
# step 3: interior extension
# ---------------------------------------------------------------------------


def _near_boundary_split(points, boundary_nodes, spacing):
    dist = np.abs(boundary_nodes[None, :] - points[:, None]).min(axis=1)
    return dist <= spacing


def _nearest_fill(points, near, values_far):
    """Nearest-neighbor extrapolation from far points onto near points."""
    far_pts = points[~near]
    idx = np.abs(far_pts[None, :] - points[near][:, None]).argmin(axis=1)
    return values_far[..., idx]


def _boundary_blend_fill(points, near, values_far, bnd_nodes, bnd_values):
    """Fill near-boundary points by blending the known boundary trace with
    the nearest well-resolved interior value.

    Plain nearest-neighbor filling flattens the field over the guard band,
    destroying the normal derivative right where the source assembly needs
    it; interpolating between the boundary value and the nearest interior
    value keeps the gradient.
    """
    p = points[near]
    far_pts = points[~near]
    i_far = np.abs(far_pts[None, :] - p[:, None]).argmin(axis=1)
    d_bnd_all = np.abs(bnd_nodes[None, :] - p[:, None])
    i_bnd = d_bnd_all.argmin(axis=1)
    d_bnd = d_bnd_all[np.arange(p.size), i_bnd]
    d_far = np.abs(far_pts[i_far] - p)
    t = d_bnd / np.maximum(d_bnd + d_far, 1e-300)
    vb = bnd_values[..., i_bnd]
    vf = values_far[..., i_far]
    return vb + t * (vf - vb)


def extend_v_interior(full_trace: ModeTrace, grid: SpatialGrid, M: int,
                      guard_spacing: float | None = None):
    """Cauchy-type extension of modes -M..-N to the grid interior.

    Nodes within one boundary spacing of the hull boundary are filled by
    nearest-neighbor extrapolation and flagged.
    """
    n_modes = full_trace.n_modes
    pts = grid.interior_points()
    spacing = guard_spacing if guard_spacing is not None \
        else full_trace.spacing()
    near = _near_boundary_split(pts, full_trace.nodes, spacing)
    mode_list = list(range(M, n_modes + 1))
    far_vals = bukhgeim_cauchy(full_trace, pts[~near], modes=mode_list,
                               guard=False)
    vals = np.zeros((n_modes + 1, pts.size), dtype=complex)
    vals[M:, ~near] = far_vals
    if near.any():
        vals[M:, near] = _boundary_blend_fill(
            pts, near, far_vals, full_trace.nodes, full_trace.values[M:])
    fields = np.zeros((n_modes + 1, grid.ny, grid.nx), dtype=complex)
    fields[:, grid.mask] = vals
    flags = np.zeros((grid.ny, grid.nx), dtype=bool)
    flags[grid.mask] = near
    return fields, flags


# ---------------------------------------------------------------------------
# step 5 engine: inhomogeneous dbar Cauchy problem with arc data
# ---------------------------------------------------------------------------


def solve_dbar_cauchy(psi: np.ndarray, g_on_lambda: np.ndarray,
                      mesh: BoundaryMesh, grid: SpatialGrid,
                      solver, lambda_reg: float = 0.0,
                      near_flags: np.ndarray | None = None,
                      mode: int | None = None,
                      trace_nodes=None, trace_dzeta=None,
                      assembler: _ArcRowAssembler | None = None,
                      fine_chord_nodes: np.ndarray | None = None):
    """Solve dbar w = psi in the hull with w = g on the arc.

    The missing chord data solves the finite-Hilbert compatibility equation

        (I - i H_t) w(x) = (1/pi i) int_arc g/(zeta-x) dzeta
                         - (2/pi) iint psi/(zeta-x) dA,

    after which the Cauchy-Pompeiu formula evaluates w on the grid.  Area
    integrals use cell midpoints; the singular self-cell integral of the
    kernel vanishes by symmetry and is omitted.  ``g_on_lambda`` must be
    sampled at ``trace_nodes`` (default: the mesh arc nodes).
    """
    if trace_nodes is None:
        trace_nodes = mesh.lambda_nodes
        trace_dzeta = mesh.lambda_tangents * mesh.lambda_weights
    cells = grid.interior_points()
    area = grid.cell_area
    psi_c = psi[grid.mask]
    x = mesh.chord_nodes

    cauchy_arc = (trace_dzeta[None, :] /
                  (trace_nodes[None, :] - x[:, None])) @ g_on_lambda
    area_x = (1.0 / (cells[None, :] - x[:, None])) @ psi_c * area
    rhs = cauchy_arc / (1j * math.pi) - (2.0 / math.pi) * area_x
    if isinstance(solver, AugmentedChordSystem):
        area_t = (1.0 / (cells[None, :] -
                         assembler.targets[:, None])) @ psi_c * area
        arc_rhs = assembler.ladder_rhs(g_on_lambda, area_t)
        w_chord, res = solver.solve(rhs, arc_rhs, mode=mode)
    else:
        w_chord, res = solver.solve(rhs, lambda_reg=lambda_reg, mode=mode)

    if fine_chord_nodes is not None:
        w_quad = _refine_chord_values(w_chord[None, :], x,
                                      fine_chord_nodes)[0]
        x_quad = fine_chord_nodes
        w_weights = np.full(x_quad.size, x_quad[1] - x_quad[0])
    else:
        w_quad, x_quad, w_weights = w_chord, x, mesh.chord_weights
    w_bnd = np.concatenate([g_on_lambda, w_quad])
    nodes = np.concatenate([trace_nodes, x_quad.astype(complex)])
    dz = np.concatenate([trace_dzeta, w_weights.astype(complex)])

    pts = grid.interior_points()
    if near_flags is None:
        near = _near_boundary_split(pts, nodes, float(np.abs(dz).max()))
    else:
        near = near_flags[grid.mask]
    far = pts[~near]
    bnd_term = (dz[None, :] / (nodes[None, :] - far[:, None])) @ w_bnd
    diff = cells[None, :] - far[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        kern = 1.0 / diff
    kern[~np.isfinite(kern)] = 0.0       # exact self-cell integral is zero
    area_term = kern @ psi_c * area
    w_far = bnd_term / (2j * math.pi) - area_term / math.pi

    w_pts = np.zeros(pts.size, dtype=complex)
    w_pts[~near] = w_far
    if near.any():
        w_pts[near] = _boundary_blend_fill(pts, near, w_far, nodes, w_bnd)
    w = np.zeros((grid.ny, grid.nx), dtype=complex)
    w[grid.mask] = w_pts
    return w, w_chord, res


def recover_low_modes(u_fields: np.ndarray, g_fine: np.ndarray,
                      a_hull: np.ndarray, kappa: np.ndarray,
                      mesh: BoundaryMesh, grid: SpatialGrid,
                      solver, M: int, lambda_reg: float = 0.0,
                      near_flags: np.ndarray | None = None,
                      trace_nodes=None, trace_dzeta=None,
                      assembler: _ArcRowAssembler | None = None,
                      fine_chord_nodes: np.ndarray | None = None):
    """Climb the mode ladder from -M up to 0 (procedure step 5).

    Each rung solves dbar u_{-M+j} = -d u_{-M+j-2} - (a - k_{-(M-j+1)})
    u_{-M+j-1} with its arc data ``g_fine[M-j]``; the freshly recovered
    mode feeds the next right-hand side.  Returns per-rung residuals.
    """
    residuals = {}
    for j in range(1, M + 1):
        k_new = M - j                       # index of mode -(M-j)
        d_prev2, _ = complex_derivatives(u_fields[k_new + 2], grid.mask,
                                         grid.dx, grid.dy)
        coupling = a_hull - kappa[M - j + 1]
        psi = -d_prev2 - coupling * u_fields[k_new + 1]
        psi = np.where(grid.mask, psi, 0.0)
        w, _, res = solve_dbar_cauchy(
            psi, g_fine[k_new], mesh, grid, solver, lambda_reg=lambda_reg,
            near_flags=near_flags, mode=k_new, trace_nodes=trace_nodes,
            trace_dzeta=trace_dzeta, assembler=assembler,
            fine_chord_nodes=fine_chord_nodes)
        u_fields[k_new] = w
        residuals[k_new] = res
    return residuals


# ---------------------------------------------------------------------------
# step 6: the source
# ---------------------------------------------------------------------------


def assemble_source(u_minus1: np.ndarray, u0: np.ndarray, a_hull: np.ndarray,
                    kappa0: float, grid: SpatialGrid):
    """f = 2 Re(d u_{-1}) + (a - k_0) u_0 on the hull grid.

    Returns the real source field and the relative imaginary residue of the
    complex assembly (a realness diagnostic).
    """
    d_u1, _ = complex_derivatives(u_minus1, grid.mask, grid.dx, grid.dy)
    f_complex = 2.0 * d_u1.real + (a_hull - kappa0) * u0
    f = np.where(grid.mask, f_complex.real, 0.0)
    imag = np.where(grid.mask, f_complex.imag, 0.0)
    denom = float(np.linalg.norm(f))
    residue = float(np.linalg.norm(imag)) / denom if denom > 0 else 0.0
    return ScalarField(grid, f), residue


# ---------------------------------------------------------------------------
# the full pipeline
# ---------------------------------------------------------------------------


def reconstruct(measurement: BoundaryMeasurement, attenuation,
                kernel: ScatteringKernel, domain: Domain,
                mesh: BoundaryMesh, grid: SpatialGrid,
                config: ReconstructionConfig | None = None
                ) -> ReconstructionResult:
    """Run the full inversion on one measurement.

    ``attenuation`` is the total attenuation a = absorption + scattering,
    given either as a callable (x, y) -> a or as a ScalarField on a disk
    grid.  The kernel must be polynomial of degree ``config.M`` (truncate
    infinite-content kernels first).
    """
    cfg = config or ReconstructionConfig()
    if kernel.variant != "polynomial":
        raise ArctomoError(
            "reconstruction needs a polynomial kernel; use "
            "truncate_to_polynomial first")
    M = cfg.M
    diagnostics: dict = {"M": M}
    timings: dict = {}
    clock = time.perf_counter

    n_modes = cfg.n_modes
    budget = angular_budget(measurement)
    if n_modes is None:
        n_modes = min(M + 22, budget)
        diagnostics["n_modes_clamped"] = bool(M + 22 > budget)
    if n_modes < M + 2:
        raise InsufficientAngles(
            f"angular budget supports only {budget} modes; "
            f"need at least M+2={M + 2}")
    diagnostics["n_modes"] = n_modes

    t0 = clock()
    trace_u = measurement_to_mode_trace(measurement, mesh, n_modes)
    diagnostics["trace_l11"] = trace_u.l11_norm()
    diagnostics["trace_tail"] = trace_u.tail_ratio()
    timings["mode_trace"] = clock() - t0

    # integrating factors at the arc nodes and the grid interior, one pass
    t0 = clock()
    a_disk, a_hull = _attenuation_fields(attenuation, domain, cfg.factor_nx,
                                         grid)
    interior_pts = grid.interior_points()
    all_pts = np.concatenate([mesh.lambda_nodes, interior_pts,
                              mesh.chord_nodes.astype(complex)])
    factors = compute_factors_for(a_disk, all_pts, n_modes=n_modes,
                                  n_angles=cfg.factor_n_angles,
                                  n_s=cfg.factor_n_s,
                                  tail_tol=cfg.factor_tail_tol)
    n_int = interior_pts.size
    fac_lambda = _slice_factors(factors, slice(0, mesh.n_lambda))
    fac_grid = _slice_factors(
        factors, slice(mesh.n_lambda, mesh.n_lambda + n_int))
    alpha_chord = factors.alpha[:, mesh.n_lambda + n_int:]
    diagnostics["h_negative_mode_max"] = factors.negative_mode_max
    timings["integrating_factors"] = clock() - t0

    t0 = clock()
    v_lambda_vals = u_to_v(trace_u.values, fac_lambda)
    trace_v = ModeTrace(trace_u.nodes, trace_u.dzeta, v_lambda_vals,
                        n_lambda=mesh.n_lambda, l=mesh.l)
    refine = max(cfg.arc_refine, 1)
    mesh_fine = build_boundary_mesh(
        domain, n_lambda=mesh.n_lambda * refine,
        n_chord=mesh.n_chord * refine)
    trace_v_fine = refine_arc_trace(trace_v, mesh, mesh_fine)
    g_fine = refine_arc_trace(trace_u, mesh, mesh_fine).values
    timings["u_to_v"] = clock() - t0

    t0 = clock()
    if cfg.use_arc_rows:
        assembler = _ArcRowAssembler(trace_v_fine, mesh.chord_nodes)
        solver = AugmentedChordSystem(
            mesh.chord_nodes, assembler.targets,
            corner_exclusion=cfg.corner_exclusion, l=mesh.l,
            arc_weight=cfg.arc_weight,
            residual_tol=cfg.chord_residual_tol)
    else:
        assembler = None
        solver = ChordSystem(mesh.chord_nodes,
                             residual_tol=cfg.chord_residual_tol)
    full_trace, chord_res = recover_chord_traces(
        trace_v_fine, mesh, M, solver, lambda_reg=cfg.lambda_reg,
        assembler=assembler,
        fine_chord_nodes=mesh_fine.chord_nodes if refine > 1 else None,
        closure_margin=cfg.closure_margin, alpha_chord=alpha_chord)
    diagnostics["chord_residuals"] = chord_res
    timings["chord_traces"] = clock() - t0

    t0 = clock()
    v_fields, near_flags = extend_v_interior(
        full_trace, grid, M, guard_spacing=float(mesh.lambda_weights.max()))
    diagnostics["near_boundary_filled"] = int(near_flags.sum())
    timings["interior_extension"] = clock() - t0

    t0 = clock()
    u_fields = np.zeros_like(v_fields)
    u_interior = v_to_u(v_fields[:, grid.mask], fac_grid)
    u_fields[:, grid.mask] = u_interior
    u_fields[:M] = 0.0                    # only modes >= M are valid so far
    timings["v_to_u"] = clock() - t0

    t0 = clock()
    kappa = coupling_modes(kernel, n_max=max(M, 1))
    ladder_res = recover_low_modes(
        u_fields, g_fine, a_hull, kappa, mesh, grid, solver, M,
        lambda_reg=cfg.lambda_reg, near_flags=near_flags,
        trace_nodes=trace_v_fine.nodes, trace_dzeta=trace_v_fine.dzeta,
        assembler=assembler,
        fine_chord_nodes=mesh_fine.chord_nodes if refine > 1 else None)
    diagnostics["ladder_residuals"] = ladder_res
    timings["mode_ladder"] = clock() - t0

    t0 = clock()
    f_hat, imag_residue = assemble_source(u_fields[1], u_fields[0], a_hull,
                                          float(kappa[0]), grid)
    diagnostics["imag_residue"] = imag_residue
    timings["assemble"] = clock() - t0

    return ReconstructionResult(f_hat=f_hat, diagnostics=diagnostics,
                                timings=timings, interior_modes=u_fields,
                                trace=full_trace)


def _slice_factors(factors: IntegratingFactors, sl) -> IntegratingFactors:
    return IntegratingFactors(
        points=factors.points[sl], alpha=factors.alpha[:, sl],
        beta=factors.beta[:, sl],
        negative_mode_max=factors.negative_mode_max,
        attenuation_fingerprint=factors.attenuation_fingerprint)


def _attenuation_fields(attenuation, domain, factor_nx, grid):
    """(disk ScalarField for the h-machinery, hull-grid values array)."""
    xx, yy = grid.meshgrid()
    if callable(attenuation):
        dg = disk_grid(domain, factor_nx)
        dxx, dyy = dg.meshgrid()
        a_disk = ScalarField(dg, np.asarray(attenuation(dxx, dyy),
                                            dtype=float))
        a_hull = np.where(grid.mask, attenuation(xx, yy), 0.0)
    else:
        a_disk = attenuation
        a_hull = np.where(grid.mask, attenuation.sample(xx + 1j * yy), 0.0)
    return a_disk, a_hull
