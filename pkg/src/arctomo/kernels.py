"""Scattering kernels and their angular Fourier modes.

A kernel is an even function k(z, cos(theta)) of the angle between incoming
and outgoing directions.  Its Fourier coefficients

    k_{-n}(z) = (1/2 pi) * integral k(z, cos t) exp(i n t) dt

are real, even in n, and drive the mode-coupled transport system.  Two
variants are supported: a finite cosine polynomial of degree M, and the 2D
Henyey-Greenstein (Poisson) kernel

    k(cos t) = (mu_s / 2 pi) (1 - g^2) / (1 - 2 g cos t + g^2),

whose modes are (mu_s / 2 pi) g^n.

Measure convention: angular integrals in the transport operator use the
plain arclength measure on the circle (total 2 pi) with the 1/(2 pi)
normalization carried inside the kernel, so an isotropic kernel integrates
to mu_s.  ``kernel_modes`` returns the literal Fourier coefficients above;
``measure_convention="normalized"`` rescales them by 2 pi, which is also the
coupling strength entering the mode system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ScatteringKernel:
    """Immutable kernel model.

    ``variant`` is 'polynomial' or 'henyey_greenstein'.  Polynomial kernels
    store their mode values ``coeffs[n] = k_{-n}``, n = 0..M (plain
    convention, constant in z).  Spatially varying polynomial coefficients
    may be supplied as callables z -> value in ``coeff_fields``.
    """

    variant: str
    mu_s: float = 0.0
    g: float = 0.0
    coeffs: tuple = ()
    coeff_fields: tuple = ()
    measure_convention: str = "plain"

    def __post_init__(self):
        if self.variant not in ("polynomial", "henyey_greenstein"):
            raise ConfigError(f"unknown kernel variant {self.variant!r}")
        if self.variant == "henyey_greenstein":
            if not -1.0 < self.g < 1.0:
                raise ConfigError("anisotropy factor g must lie in (-1, 1)")
            if self.mu_s < 0:
                raise ConfigError("mu_s must be nonnegative")
        if self.measure_convention not in ("plain", "normalized"):
            raise ConfigError("measure_convention must be plain|normalized")

    @property
    def degree(self) -> int:
        """Highest retained mode M (polynomial), or -1 for infinite content."""
        if self.variant == "polynomial":
            n = len(self.coeff_fields) or len(self.coeffs)
            return n - 1
        return -1

    @property
    def is_zero(self) -> bool:
        if self.variant == "polynomial" and not self.coeff_fields:
            return all(c == 0.0 for c in self.coeffs)
        return self.variant == "henyey_greenstein" and self.mu_s == 0.0


def henyey_greenstein(mu_s: float, g: float) -> ScatteringKernel:
    return ScatteringKernel("henyey_greenstein", mu_s=mu_s, g=g)


def polynomial_kernel(coeffs) -> ScatteringKernel:
    coeffs = tuple(float(c) for c in coeffs)
    if len(coeffs) < 2:
        # degree M >= 1 by convention; pad the isotropic case with a zero mode
        coeffs = coeffs + (0.0,) * (2 - len(coeffs))
    return ScatteringKernel("polynomial", coeffs=coeffs)


def zero_kernel() -> ScatteringKernel:
    """No scattering (ballistic regime)."""
    return polynomial_kernel((0.0, 0.0))


def quadratic_kernel(mu_s: float, g: float) -> ScatteringKernel:
    """Degree-2 cosine polynomial matching the first three HG modes."""
    k0 = mu_s / TWO_PI
    return polynomial_kernel((k0, k0 * g, k0 * g * g))


def kernel_eval(kernel: ScatteringKernel, z, cosangle):
    """k(z, theta . theta') for cosangle = theta . theta' in [-1, 1]."""
    t = np.clip(np.asarray(cosangle, dtype=float), -1.0, 1.0)
    if kernel.variant == "henyey_greenstein":
        g = kernel.g
        return (kernel.mu_s / TWO_PI) * (1.0 - g * g) / \
            (1.0 - 2.0 * g * t + g * g)
    # cosine polynomial: k0 + 2 sum k_n cos(n t); cos(n acos x) = T_n(x)
    ang = np.arccos(t)
    out = np.zeros_like(t)
    for n, kn in enumerate(_coeff_values(kernel, z)):
        term = kn * np.cos(n * ang)
        out = out + (term if n == 0 else 2.0 * term)
    return out


def _coeff_values(kernel: ScatteringKernel, z):
    if kernel.coeff_fields:
        return [f(z) for f in kernel.coeff_fields]
    return list(kernel.coeffs)


def kernel_modes(kernel: ScatteringKernel, z=0.0 + 0.0j, n_max: int = 0):
    """Fourier modes k_0 .. k_{-n_max} at the point z.

    Polynomial kernels return their stored coefficients exactly (zeros
    beyond degree M); the HG kernel uses the closed form k_0 g^n.
    """
    if kernel.variant == "polynomial" and n_max < kernel.degree:
        raise ConfigError(
            f"n_max={n_max} below polynomial degree {kernel.degree}")
    if kernel.variant == "henyey_greenstein":
        k0 = kernel.mu_s / TWO_PI
        modes = k0 * np.power(kernel.g, np.arange(n_max + 1))
    else:
        cs = np.asarray(_coeff_values(kernel, z), dtype=float)
        modes = np.zeros(n_max + 1)
        modes[:cs.size] = cs
    if kernel.measure_convention == "normalized":
        modes = modes * TWO_PI
    return modes


def coupling_modes(kernel: ScatteringKernel, z=0.0 + 0.0j, n_max: int = 0):
    """Mode-coupling coefficients of the transport system (2 pi x plain)."""
    base = ScatteringKernel(kernel.variant, mu_s=kernel.mu_s, g=kernel.g,
                            coeffs=kernel.coeffs,
                            coeff_fields=kernel.coeff_fields,
                            measure_convention="plain")
    full = TWO_PI * kernel_modes(base, z, max(n_max, base.degree, 1))
    return full[:n_max + 1]


def truncate_to_polynomial(kernel: ScatteringKernel, M: int) -> ScatteringKernel:
    """Polynomial kernel matching the input's modes 0..M; identity when the
    input is already polynomial of degree <= M."""
    if M < 1:
        raise ConfigError("truncation order M must be >= 1")
    if kernel.variant == "polynomial":
        if kernel.degree <= M:
            return kernel
        if kernel.coeff_fields:
            return ScatteringKernel(
                "polynomial", coeff_fields=kernel.coeff_fields[:M + 1],
                measure_convention=kernel.measure_convention)
        return ScatteringKernel("polynomial", coeffs=kernel.coeffs[:M + 1],
                                measure_convention=kernel.measure_convention)
    modes = kernel_modes(
        ScatteringKernel("henyey_greenstein", mu_s=kernel.mu_s, g=kernel.g),
        n_max=M)
    return ScatteringKernel("polynomial", coeffs=tuple(modes),
                            measure_convention=kernel.measure_convention)
