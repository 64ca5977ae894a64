"""Rendering in the reference figures' styles."""

from __future__ import annotations

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .readers import Field, Measurement  # noqa: E402


def rose_curves(meas: Measurement, scale: float = 2.0):
    """One closed curve per node: zeta + scale * u(zeta, theta) * theta.

    With zero incoming flux every curve stays outside the domain circle.
    """
    curves = []
    for node, (angles, values) in zip(meas.nodes, meas.blocks):
        pts = node + scale * values * np.exp(1j * angles)
        closed = np.append(pts, pts[0])
        curves.append(closed)
    return curves


def plot_measurement_rose(meas: Measurement, out_path: str,
                          scale: float = 2.0, subsample: int = 4) -> None:
    fig, ax = plt.subplots(figsize=(6, 6))
    phi = np.linspace(0, 2 * np.pi, 400)
    radius = np.abs(meas.nodes).mean()
    ax.plot(radius * np.cos(phi), radius * np.sin(phi), "k-", lw=1.5)
    for i, curve in enumerate(rose_curves(meas, scale)):
        if i % subsample:
            continue
        ax.plot(curve.real, curve.imag, "r-", lw=0.7)
        ax.plot(meas.nodes[i].real, meas.nodes[i].imag, "kx", ms=4)
    ax.set_aspect("equal")
    ax.set_title(f"boundary measurement, curves at scale {scale}")
    fig.savefig(out_path, dpi=110)
    plt.close(fig)


def plot_heatmap(field: Field, out_path: str, cmap: str = "viridis") -> None:
    fig, ax = plt.subplots(figsize=(7, 4.2))
    shown = np.where(field.mask, field.values, np.nan)
    xmin, xmax, ymin, ymax = field.bounds
    im = ax.imshow(shown, origin="lower", extent=(xmin, xmax, ymin, ymax),
                   cmap=cmap, interpolation="nearest")
    fig.colorbar(im, ax=ax, shrink=0.85)
    ax.set_aspect("equal")
    ax.set_title("reconstructed source")
    fig.savefig(out_path, dpi=110)
    plt.close(fig)


def plot_section(t, values, out_path: str, truth=None) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.plot(t, values, "b-", lw=1.2, label="reconstruction")
    if truth is not None:
        ax.plot(t, truth, "k--", lw=1.0, label="truth")
        ax.legend()
    ax.set_xlabel("arclength along the section")
    ax.set_ylabel("value")
    ax.grid(alpha=0.3)
    fig.savefig(out_path, dpi=110)
    plt.close(fig)
