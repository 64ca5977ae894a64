"""Reconstruction quality metrics against a known ground truth.

The underlying study reports only figures, so these definitions are ours:
relative L2 error outside a collar above the chord, per-region plateau
means, and a support Jaccard index at half the smallest plateau value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatch
from .geometry import Region, ScalarField


@dataclass
class Metrics:
    rel_l2: float
    support_jaccard: float
    support_threshold: float
    plateau_means: dict = field(default_factory=dict)
    max_plateau_error: float = float("nan")
    background_mean: float = float("nan")
    collar: float = 0.0

    def as_dict(self) -> dict:
        return {
            "rel_l2": self.rel_l2,
            "support_jaccard": self.support_jaccard,
            "support_threshold": self.support_threshold,
            "plateau_means": self.plateau_means,
            "max_plateau_error": self.max_plateau_error,
            "background_mean": self.background_mean,
            "collar": self.collar,
        }


def compare_fields(f_hat: ScalarField, truth: ScalarField,
                   collar: float = 0.1,
                   regions: dict[str, Region] | None = None,
                   threshold_frac: float = 0.5) -> Metrics:
    """Compare a reconstruction with the ground truth on its own grid.

    The truth is resampled bilinearly when the grids differ; all statistics
    exclude the band within ``collar`` of the chord (Im z < collar), the
    acknowledged degradation zone of the method.
    """
    g = f_hat.grid
    if truth.grid is g or (truth.grid.nx == g.nx and truth.grid.ny == g.ny
                           and truth.grid.xmin == g.xmin
                           and truth.grid.ymin == g.ymin):
        tv = truth.values
        if tv.shape != f_hat.values.shape:
            raise ShapeMismatch(
                f"truth {tv.shape} vs reconstruction {f_hat.values.shape}")
    else:
        tv = truth.sample(g.points())
    xx, yy = g.meshgrid()
    sel = g.mask & (yy > collar)
    if not sel.any():
        raise ShapeMismatch("collar excludes the whole comparison region")

    fh = f_hat.values
    denom = float(np.linalg.norm(tv[sel]))
    rel_l2 = float(np.linalg.norm((fh - tv)[sel])) / denom if denom > 0 \
        else float(np.linalg.norm(fh[sel]))

    # smallest solid plateau value (robust to resampled edge smear)
    tmax = float(tv[sel].max())
    plateau_vals = tv[sel][tv[sel] > 0.25 * tmax] if tmax > 0 else \
        np.array([])
    thr = threshold_frac * (plateau_vals.min() if plateau_vals.size else 1.0)
    a = (fh >= thr) & sel
    b = (tv >= thr) & sel
    union = int((a | b).sum())
    jacc = float((a & b).sum()) / union if union else 1.0

    plateau = {}
    max_err = 0.0
    if regions:
        for name, reg in regions.items():
            inside = sel & reg.contains(xx, yy)
            if not inside.any():
                continue
            mean = float(fh[inside].mean())
            plateau[name] = mean
            if reg.value != 0:
                max_err = max(max_err, abs(mean - reg.value) / abs(reg.value))
    background = sel & (tv == 0)
    bg_mean = float(fh[background].mean()) if background.any() else 0.0

    return Metrics(rel_l2=rel_l2, support_jaccard=jacc,
                   support_threshold=float(thr), plateau_means=plateau,
                   max_plateau_error=max_err if regions else float("nan"),
                   background_mean=bg_mean, collar=collar)


def section_values(field: ScalarField, p0: complex, p1: complex,
                   n: int = 200):
    """Samples along the segment p0 -> p1; returns (arclength t, x, y, v)."""
    t = (np.arange(n) + 0.5) / n
    zs = p0 + (p1 - p0) * t
    vals = field.sample(zs)
    return t * abs(p1 - p0), zs.real, zs.imag, vals
