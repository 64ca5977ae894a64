"""Command-line entry point.

Subcommands: forward, reconstruct, compare, section, kernels.  All file
formats are documented in docs/formats.md.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import io_formats as iof
from .config import RunConfig
from .errors import ArctomoError, ConfigError
from .forward import (
    BoundaryMeasurement,
    DirectionQuadrature,
    extract_measurement,
    solve_forward,
)
from .geometry import (
    Domain,
    Region,
    ScalarField,
    build_boundary_mesh,
    disk_grid,
    eval_phantom_at,
    hull_grid,
    normalize_coordinates,
)
from .kernels import coupling_modes, kernel_modes, truncate_to_polynomial
from .metrics import compare_fields, section_values
from .reconstruct import ReconstructionConfig, reconstruct

SECTION_PRESETS = {
    # the diagonal cut used in the reference experiments: y = -sqrt(3) x
    "sqrt3": (-0.5 + math.sqrt(3) / 2 * 1j, 0.5 - math.sqrt(3) / 2 * 1j),
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ArctomoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _build_parser():
    p = argparse.ArgumentParser(
        prog="arctomo",
        description="transport source reconstruction from arc measurements")
    sub = p.add_subparsers(required=True)

    f = sub.add_parser("forward", help="synthesize boundary measurements")
    f.add_argument("--config", required=True)
    f.add_argument("--out", required=True)
    f.add_argument("--allow-inverse-crime", action="store_true")
    f.add_argument("--noise-sigma", type=float, default=None)
    f.add_argument("--seed", type=int, default=None)
    f.add_argument("--save-flux", action="store_true",
                   help="also dump the full angular flux")
    f.set_defaults(func=cmd_forward)

    r = sub.add_parser("reconstruct", help="invert a measurement file")
    r.add_argument("--config", required=True)
    r.add_argument("--measurement", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_reconstruct)

    c = sub.add_parser("compare", help="score a reconstruction against truth")
    c.add_argument("--reconstruction", required=True)
    c.add_argument("--truth", required=True)
    c.add_argument("--collar", type=float, default=0.1)
    c.add_argument("--config", default=None,
                   help="optional config with metric thresholds for gating")
    c.set_defaults(func=cmd_compare)

    s = sub.add_parser("section", help="sample a field along a line")
    s.add_argument("--field", required=True)
    s.add_argument("--line", default="preset:sqrt3",
                   help="preset:NAME or 'x0,y0,x1,y1'")
    s.add_argument("--out", required=True)
    s.add_argument("--samples", type=int, default=200)
    s.set_defaults(func=cmd_section)

    k = sub.add_parser("kernels", help="print kernel mode tables")
    k.add_argument("--config", required=True)
    k.add_argument("--n-modes", type=int, default=12)
    k.set_defaults(func=cmd_kernels)
    return p


def _load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config)
    if getattr(args, "allow_inverse_crime", False):
        cfg.data["allow_inverse_crime"] = True
        cfg.validate()
    if getattr(args, "noise_sigma", None) is not None:
        cfg.data["noise_sigma"] = args.noise_sigma
    if getattr(args, "seed", None) is not None:
        cfg.data["seed"] = args.seed
    return cfg


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_forward(args) -> int:
    cfg = _load_config(args)
    os.makedirs(args.out, exist_ok=True)
    dom = cfg.domain()
    phantom = cfg.phantom()
    kernel = cfg.kernel()
    fwd = cfg.data["forward"]
    rec = cfg.data["reconstruction"]

    grid = disk_grid(dom, int(fwd["grid_n"]), normalized=False)
    quad = DirectionQuadrature(int(fwd["n_dir"]))
    flux = solve_forward(phantom, kernel, grid, quad,
                         tol=float(fwd["tol"]),
                         max_iter=int(fwd["max_iter"]))
    mesh = build_boundary_mesh(dom, int(rec["n_lambda"]),
                               int(rec["n_chord"]))
    transform = normalize_coordinates(dom)
    meas = extract_measurement(flux, _original_frame_mesh(mesh, transform))

    sigma = float(cfg.data["noise_sigma"])
    if sigma > 0:
        rng = np.random.default_rng(int(cfg.data["seed"]))
        noise = rng.normal(0.0, sigma, size=meas.values.shape)
        meas.values = np.where(meas.outgoing, meas.values + noise, 0.0)

    meas_path = os.path.join(args.out, "measurement.csv")
    iof.write_measurement_csv(meas_path, meas)
    iof.write_json(os.path.join(args.out, "measurement.meta.json"), {
        "config": cfg.data,
        "n_iterations": flux.n_iterations,
        "final_diff": flux.final_diff,
        "monotone": flux.monotone,
    })
    if args.save_flux:
        mean_flux = ScalarField(grid, flux.values.mean(axis=0))
        iof.write_field(os.path.join(args.out, "flux_mean.bin"), mean_flux,
                        units="mean angular flux")
    print(f"wrote {meas_path} ({meas.n_nodes} nodes x "
          f"{int(meas.outgoing.sum(axis=1).min())}+ outgoing directions)")
    return 0


def _original_frame_mesh(mesh, transform):
    """Mesh nodes mapped back to original coordinates for extraction."""
    inv = transform.inverse()
    import dataclasses

    return dataclasses.replace(
        mesh,
        lambda_nodes=inv.apply(mesh.lambda_nodes),
        lambda_tangents=mesh.lambda_tangents *
        np.exp(1j * inv.rotation),
        lambda_normals=mesh.lambda_normals * np.exp(1j * inv.rotation),
    )


def cmd_reconstruct(args) -> int:
    cfg = _load_config(args)
    os.makedirs(args.out, exist_ok=True)
    dom = cfg.domain()
    phantom = cfg.phantom()
    kernel = cfg.kernel()
    rec = cfg.data["reconstruction"]
    M = cfg.reconstruction_M()
    if kernel.variant != "polynomial":
        kernel = truncate_to_polynomial(kernel, M)

    meas = iof.read_measurement_csv(args.measurement)
    transform = normalize_coordinates(dom)
    meas_n = BoundaryMeasurement(
        nodes=transform.apply(meas.nodes),
        normals=meas.normals * np.exp(1j * transform.rotation),
        angles=transform.apply_direction(meas.angles),
        values=meas.values, outgoing=meas.outgoing)

    mesh = build_boundary_mesh(dom, int(rec["n_lambda"]),
                               int(rec["n_chord"]))
    grid = hull_grid(dom, int(rec["grid_n"]))
    mu_s = float(coupling_modes(kernel, n_max=0)[0])
    inv = transform.inverse()

    def attenuation(xx, yy):
        z = inv.apply(xx + 1j * yy)
        return eval_phantom_at(phantom, z.real, z.imag)[1] + mu_s

    rcfg = ReconstructionConfig(
        M=M, n_modes=rec["n_modes"], lambda_reg=float(rec["lambda_reg"]),
        collar=float(rec["collar"]), factor_nx=int(rec["factor_nx"]),
        factor_n_angles=int(rec["factor_n_angles"]),
        arc_refine=int(rec["arc_refine"]),
        use_arc_rows=bool(rec["use_arc_rows"]),
        closure_margin=int(rec["closure_margin"]))
    result = reconstruct(meas_n, attenuation, kernel, dom, mesh, grid, rcfg)

    frame = {"rotation": transform.rotation,
             "offset": [transform.offset.real, transform.offset.imag]}
    field_path = os.path.join(args.out, "f_hat.bin")
    iof.write_field(field_path, result.f_hat, units="source density",
                    provenance=cfg.to_json() and
                    __import__("hashlib").sha256(
                        cfg.to_json().encode()).hexdigest()[:16],
                    frame=frame)
    _write_field_csv(os.path.join(args.out, "f_hat.csv"), result.f_hat)
    iof.write_json(os.path.join(args.out, "diagnostics.json"), {
        "diagnostics": result.diagnostics,
        "timings": result.timings,
    })
    print(f"wrote {field_path}")
    return 0


def _write_field_csv(path, field: ScalarField) -> None:
    g = field.grid
    xx, yy = g.meshgrid()
    lines = ["x,y,value"]
    for x, y, v, m in zip(xx.ravel(), yy.ravel(), field.values.ravel(),
                          g.mask.ravel()):
        if m:
            lines.append(f"{x:.17g},{y:.17g},{v:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_compare(args) -> int:
    f_hat, _ = iof.read_field(args.reconstruction)
    truth, _ = iof.read_field(args.truth)
    regions = {
        "R_upper": Region("rect", {"xmin": -0.25, "xmax": 0.5,
                                   "ymin": 0.075, "ymax": 0.15}, 2.0),
        "B2": Region("disk", {"cx": -0.25, "cy": math.sqrt(3) / 4,
                              "r": 0.2}, 1.0),
    }
    m = compare_fields(f_hat, truth, collar=args.collar, regions=regions)
    print(json.dumps(m.as_dict(), sort_keys=True, indent=1))
    if args.config:
        thresholds = RunConfig.load(args.config).data.get("thresholds", {})
        if thresholds.get("max_rel_l2") is not None and \
                m.rel_l2 > float(thresholds["max_rel_l2"]):
            print(f"FAIL rel_l2 {m.rel_l2:.4f} > "
                  f"{thresholds['max_rel_l2']}", file=sys.stderr)
            return 1
        if thresholds.get("min_jaccard") is not None and \
                m.support_jaccard < float(thresholds["min_jaccard"]):
            print(f"FAIL jaccard {m.support_jaccard:.4f} < "
                  f"{thresholds['min_jaccard']}", file=sys.stderr)
            return 1
    return 0


def cmd_section(args) -> int:
    field, _ = iof.read_field(args.field)
    line = args.line
    if line.startswith("preset:"):
        name = line.split(":", 1)[1]
        if name not in SECTION_PRESETS:
            raise ConfigError(f"unknown section preset {name!r}")
        p0, p1 = SECTION_PRESETS[name]
    else:
        x0, y0, x1, y1 = (float(t) for t in line.split(","))
        p0, p1 = complex(x0, y0), complex(x1, y1)
    t, xs, ys, vals = section_values(field, p0, p1, n=args.samples)
    with open(args.out, "w") as fh:
        fh.write("t,x,y,value\n")
        for row in zip(t, xs, ys, vals):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    print(f"wrote {args.out}")
    return 0


def cmd_kernels(args) -> int:
    cfg = _load_config(args)
    kernel = cfg.kernel()
    n = args.n_modes
    plain = kernel_modes(kernel, n_max=max(n, kernel.degree, 1))
    coup = coupling_modes(kernel, n_max=max(n, kernel.degree, 1))
    print(f"kernel: {kernel.variant} (mu_s={kernel.mu_s}, g={kernel.g})")
    print(f"{'n':>4} {'k_-n (plain)':>18} {'2 pi k_-n':>18}")
    for i in range(min(n, len(plain) - 1) + 1):
        print(f"{i:>4} {plain[i]:>18.12f} {coup[i]:>18.12f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
