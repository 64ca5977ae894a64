"""Run configuration: JSON schema, parsing, and object construction.

The config file drives every CLI subcommand; its schema is documented in
docs/formats.md.  Parsing normalizes defaults so that parse -> serialize ->
parse is the identity.
"""

from __future__ import annotations

import copy
import json
import math

from .errors import ConfigError
from .geometry import Domain, Phantom, Region, paper_phantom
from .kernels import (
    ScatteringKernel,
    henyey_greenstein,
    polynomial_kernel,
    quadratic_kernel,
    zero_kernel,
)

_DEFAULKS = {
    "domain": {"center": [0.0, 0.0], "radius": 1.0,
               "arc": {"start": 0.0, "end": math.pi}},
    "phantom": "paper",
    "kernel": {"type": "none"},
    "forward": {"grid_n": 256, "n_dir": 180, "tol": 1e-6, "max_iter": 500},
    "reconstruction": {
        "grid_n": 96, "n_lambda": 157, "n_chord": 100, "M": None,
        "n_modes": None, "lambda_reg": 0.0, "collar": 0.1,
        "factor_nx": 256, "factor_n_angles": 360, "arc_refine": 3,
        "use_arc_rows": True, "closure_margin": 8,
    },
    "thresholds": {},
    "seed": 0,
    "noise_sigma": 0.0,
    "allow_inverse_crime": False,
}


class RunConfig:
    """Validated run configuration with normalized defaults."""

    def __init__(self, data: dict):
        self.data = _merge(copy.deepcopy(_DEFAULKS), data)
        self.validate()

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        with open(path) as fh:
            return cls(json.load(fh))

    def dump(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())
            fh.write("\n")

    def to_json(self) -> str:
        return json.dumps(self.data, sort_keys=True, indent=1)

    def validate(self) -> None:
        fwd = self.data["forward"]
        rec = self.data["reconstruction"]
        if fwd["grid_n"] == rec["grid_n"] and \
                not self.data["allow_inverse_crime"]:
            raise ConfigError(
                "forward and reconstruction grids have equal resolution; "
                "pass allow_inverse_crime to permit this deliberately")
        if self.data["kernel"].get("type") not in (
                "none", "henyey_greenstein", "polynomial", "quadratic"):
            raise ConfigError(f"unknown kernel.type "
                              f"{self.data['kernel'].get('type')!r}")

    # -- constructors -----------------------------------------------------

    def domain(self) -> Domain:
        d = self.data["domain"]
        return Domain(center=complex(d["center"][0], d["center"][1]),
                      radius=float(d["radius"]),
                      arc_start=float(d["arc"]["start"]),
                      arc_end=float(d["arc"]["end"]))

    def phantom(self) -> Phantom:
        p = self.data["phantom"]
        if p == "paper":
            return paper_phantom()
        if p == "paper_sharp":
            return paper_phantom(smooth_absorption=False)
        return Phantom(
            source_regions=tuple(_region(r) for r in
                                 p["source"].get("regions", [])),
            source_background=float(p["source"].get("background", 0.0)),
            absorption_regions=tuple(_region(r) for r in
                                     p["absorption"].get("regions", [])),
            absorption_background=float(
                p["absorption"].get("background", 0.0)),
            mollify_eps=float(p["absorption"].get("mollify_eps", 0.0)))

    def kernel(self) -> ScatteringKernel:
        k = self.data["kernel"]
        kind = k.get("type", "none")
        if kind == "none":
            return zero_kernel()
        if kind == "henyey_greenstein":
            return henyey_greenstein(float(k["mu_s"]), float(k["g"]))
        if kind == "quadratic":
            return quadratic_kernel(float(k["mu_s"]), float(k["g"]))
        return polynomial_kernel(k["coeffs"])

    def reconstruction_M(self) -> int:
        rec = self.data["reconstruction"]
        if rec.get("M") is not None:
            return int(rec["M"])
        kern = self.kernel()
        if kern.variant == "polynomial":
            return max(kern.degree, 1)
        return int(self.data["kernel"].get("M", 10))


def _region(r: dict) -> Region:
    return Region(shape=r["shape"], params=dict(r["params"]),
                  value=float(r["value"]))


def _merge(base, override):
    if not isinstance(override, dict) or not isinstance(base, dict):
        return override
    out = dict(base)
    for key, val in override.items():
        out[key] = _merge(base.get(key), val) if key in base else val
    return out
