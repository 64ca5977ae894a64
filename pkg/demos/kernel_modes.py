"""Scattering kernels and their angular mode structure.

The Henyey-Greenstein kernel has geometric modes k_0 g^n; its degree-2
truncation is the quadratic kernel of the first reference experiment.
"""

import numpy as np

from arctomo import (
    coupling_modes,
    henyey_greenstein,
    kernel_eval,
    kernel_modes,
    quadratic_kernel,
    truncate_to_polynomial,
)

hg = henyey_greenstein(mu_s=5.0, g=0.5)
quad = quadratic_kernel(5.0, 0.5)

print("forward peak k(1):  HG", kernel_eval(hg, 0j, 1.0),
      " quadratic", kernel_eval(quad, 0j, 1.0))
print("\nmodes (plain convention, k_-n = (1/2pi) int k e^{int} dt):")
print("  n      HG          quadratic    2pi*HG (coupling)")
m_hg = kernel_modes(hg, n_max=6)
m_q = kernel_modes(quad, n_max=6)
m_c = coupling_modes(hg, n_max=6)
for n in range(7):
    print(f"  {n}  {m_hg[n]:10.6f}  {m_q[n]:10.6f}  {m_c[n]:10.6f}")

print("\nquadrature oracle check (4096-point trapezoid):")
t = np.arange(4096) * 2 * np.pi / 4096
k = kernel_eval(hg, 0j, np.cos(t))
oracle = np.array([np.mean(k * np.exp(1j * n * t)).real for n in range(7)])
print("  max |closed form - quadrature| =", np.abs(oracle - m_hg).max())

trunc = truncate_to_polynomial(hg, 10)
print("\nHG truncated to M=10: degree", trunc.degree,
      "; dropped tail k_-11/k_0 =", 0.5 ** 11)
