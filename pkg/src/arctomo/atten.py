"""Attenuation preprocessing: h-field and integrating factors.

For a known attenuation a supported in the disk, the complex field

    h(z, theta) = Da(z, theta) - (1/2) (I - i H) Ra(z . theta_perp, theta_perp)

combines the divergent beam transform Da, the Radon transform Ra, and the
Hilbert transform H on the line (in the offset variable).  Its defining
property is that, as a function of the direction angle, h has vanishing
negative Fourier modes, so exp(-h) and exp(+h) expand in non-negative modes
only:

    exp(-+ h)(z, theta) = sum_{m>=0} alpha_m(z) / beta_m(z) e^{i m theta}.

The coefficient sequences alpha and beta convert attenuated transport modes
into conjugate-analytic ones and back; by construction they are convolution
inverses of each other.
"""

from __future__ import annotations

import hashlib
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import AliasWarning, ConfigError
from .geometry import ScalarField

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# reference ray transforms (pointwise, used by tests and small evaluations)
# ---------------------------------------------------------------------------


def divergent_beam(a: ScalarField, z: complex, theta: float,
                   step: float | None = None) -> float:
    """Ray integral of a from z forward along direction angle theta.

    Trapezoidal rule at fixed step; the integrand is the grid field extended
    by zero outside its domain mask.
    """
    g = a.grid
    if step is None:
        step = 0.5 * min(g.dx, g.dy)
    reach = math.hypot(g.xmax - g.xmin, g.ymax - g.ymin)
    t = np.arange(0.0, reach + step, step)
    pts = z + t * np.exp(1j * theta)
    vals = a.sample(pts)
    return float(np.trapezoid(vals, dx=step))


def radon_line(a: ScalarField, s: float, theta_perp: float,
               step: float | None = None) -> float:
    """Full line integral of a over the line {s * perp + t * theta}.

    ``theta_perp`` is the angle of the offset direction; the integration
    direction theta is perp rotated by -pi/2.
    """
    g = a.grid
    if step is None:
        step = 0.5 * min(g.dx, g.dy)
    reach = math.hypot(g.xmax - g.xmin, g.ymax - g.ymin)
    t = np.arange(-reach, reach + step, step)
    perp = np.exp(1j * theta_perp)
    theta = -1j * perp
    pts = s * perp + t * theta
    vals = a.sample(pts)
    return float(np.trapezoid(vals, dx=step))


def hilbert_infinite(samples) -> np.ndarray:
    """Discrete Hilbert transform H f(x) = (1/pi) pv-int f(s)/(x-s) ds on a
    uniform grid, for compactly supported samples.

    Midpoint principal-value sum with even-odd pairing: the value at node i
    sums over nodes of opposite parity with doubled weight,

        H f(x_i) ~= (2/pi) sum_{m odd} f(x_{i-m}) / m,

    which is exact on band-limited functions (the grid spacing cancels).
    """
    f = np.asarray(samples, dtype=float)
    n = f.size
    m = np.arange(-(n - 1), n)
    kern = np.zeros(2 * n - 1)
    odd = (m % 2) != 0
    kern[odd] = (2.0 / math.pi) / m[odd]
    return np.convolve(f, kern, mode="valid") if n < 256 else _fftconv(f, kern)


def _fftconv(f, kern):
    from scipy.signal import fftconvolve
    return fftconvolve(f, kern, mode="valid")


# ---------------------------------------------------------------------------
# h-field on a set of evaluation points
# ---------------------------------------------------------------------------


@dataclass
class HField:
    """h sampled at evaluation points x direction quadrature angles."""

    points: np.ndarray          # complex (npts,)
    angles: np.ndarray          # (n_angles,)
    values: np.ndarray          # complex (npts, n_angles)

    @property
    def n_angles(self) -> int:
        return self.angles.size

    def angular_modes(self) -> np.ndarray:
        """DFT modes over the angle axis; index m holds mode m (mod n)."""
        return np.fft.fft(self.values, axis=1) / self.n_angles

    def negative_mode_max(self) -> float:
        """max over points and m >= 1 of |mode_{-m}(h)|; should vanish."""
        modes = self.angular_modes()
        half = self.n_angles // 2
        neg = modes[:, self.n_angles - half + 1:]  # modes -half+1 .. -1
        return float(np.abs(neg).max()) if neg.size else 0.0


def compute_h(a: ScalarField, points, n_angles: int = 360,
              n_s: int | None = None, step: float | None = None) -> HField:
    """Evaluate h(z, theta) at the given points over an equi-spaced angle set.

    Per angle, the attenuation is resampled on a rotated frame; the beam
    transform is a reverse cumulative trapezoid along rays, the Radon data a
    full row sum, and the Hilbert transform acts on the uniform offset grid.
    """
    pts = np.asarray(points, dtype=complex).ravel()
    g = a.grid
    if step is None:
        step = 0.5 * min(g.dx, g.dy)
    if n_s is None:
        n_s = max(128, 2 * max(g.nx, g.ny))
    cx = 0.5 * (g.xmin + g.xmax)
    cy = 0.5 * (g.ymin + g.ymax)
    c0 = cx + 1j * cy
    reach = 0.5 * math.hypot(g.xmax - g.xmin, g.ymax - g.ymin) + 2 * step

    angles = np.arange(n_angles) * TWO_PI / n_angles
    avals = a.masked()
    h = np.empty((pts.size, n_angles), dtype=complex)

    xi = np.arange(-reach, reach + step, step)
    n_xi = xi.size
    ds = 2.0 * reach / n_s
    s_rel = -reach + (np.arange(n_s) + 0.5) * ds

    for q, phi in enumerate(angles):
        theta = complex(math.cos(phi), math.sin(phi))
        perp = 1j * theta
        # frame centered on the grid so the support is always covered
        off_xi = (c0 * theta.conjugate()).real
        off_s = (c0 * perp.conjugate()).real
        xi_q = xi + off_xi
        s_q = s_rel + off_s
        zz = xi_q[None, :] * theta + s_q[:, None] * perp
        arot = g.sample(avals, zz)                       # (n_s, n_xi)

        avg = 0.5 * (arot[:, :-1] + arot[:, 1:]) * step
        tail = np.zeros_like(arot)
        tail[:, :-1] = np.cumsum(avg[:, ::-1], axis=1)[:, ::-1]
        ra = tail[:, 0]
        hra = hilbert_infinite(ra)

        xi_p = (pts * theta.conjugate()).real
        s_p = (pts * perp.conjugate()).real
        # bilinear in the (s, xi) frame for Da; 1D linear in s for Ra, HRa
        col = (xi_p - xi_q[0]) / step
        row = (s_p - s_q[0]) / ds
        da_p = _bilinear_2d(tail, row, col)
        ra_p = np.interp(s_p, s_q, ra)
        hra_p = np.interp(s_p, s_q, hra)
        h[:, q] = da_p - 0.5 * ra_p + 0.5j * hra_p
    return HField(points=pts, angles=angles, values=h)


def _bilinear_2d(arr, row, col):
    nr, nc = arr.shape
    r0 = np.clip(np.floor(row).astype(int), 0, nr - 2)
    c0 = np.clip(np.floor(col).astype(int), 0, nc - 2)
    fr = np.clip(row - r0, 0.0, 1.0)
    fc = np.clip(col - c0, 0.0, 1.0)
    return ((1 - fr) * (1 - fc) * arr[r0, c0] +
            (1 - fr) * fc * arr[r0, c0 + 1] +
            fr * (1 - fc) * arr[r0 + 1, c0] +
            fr * fc * arr[r0 + 1, c0 + 1])


# ---------------------------------------------------------------------------
# integrating factors
# ---------------------------------------------------------------------------


@dataclass
class IntegratingFactors:
    """Non-negative Fourier modes of exp(-+h) at each evaluation point.

    ``alpha[m, p]`` and ``beta[m, p]`` hold modes m = 0..n_modes at point p.
    The sequences are exact convolution inverses: their Cauchy product is
    the delta sequence.
    """

    points: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    negative_mode_max: float
    attenuation_fingerprint: str

    @property
    def n_modes(self) -> int:
        return self.alpha.shape[0] - 1


def _series_exp(c):
    """Coefficients of exp(sum c_m w^m) as a power series in w.

    Standard recurrence: e_0 = exp(c_0), e_m = (1/m) sum_{j=1}^m j c_j e_{m-j}.
    """
    M = c.shape[0] - 1
    out = np.zeros_like(c)
    out[0] = np.exp(c[0])
    for m in range(1, M + 1):
        j = np.arange(1, m + 1)
        out[m] = np.einsum("j,jp,jp->p", j, c[1:m + 1], out[m - 1::-1][:m]) \
            / m
    return out


def compute_factors(h: HField, n_modes: int = 32,
                    tail_tol: float = 1e-4) -> IntegratingFactors:
    """Integrating factor modes from the h-field.

    The angular FFT of h is projected on its non-negative modes (the
    negative ones vanish analytically and are reported as a diagnostic);
    exp(-+h) is then expanded as an exact power series in e^{i theta}, which
    preserves the convolution-inverse identity to rounding.
    """
    n_ang = h.n_angles
    if n_modes > n_ang // 4:
        raise ConfigError(
            f"n_modes={n_modes} exceeds the anti-aliasing margin "
            f"({n_ang // 4}) of a {n_ang}-angle quadrature")
    modes = h.angular_modes()              # (npts, n_ang)
    half = n_ang // 2
    neg_max = float(np.abs(modes[:, n_ang - half + 1:]).max()) if half > 1 \
        else 0.0

    c = modes[:, :n_modes + 1].T.copy()    # (n_modes+1, npts)
    alpha = _series_exp(-c)
    beta = _series_exp(c)

    # dropped-tail check: compare the truncated series of exp(-+h_plus)
    # against the pointwise exponential of the non-negative-mode part of h
    keep = np.zeros((modes.shape[0], n_ang), dtype=complex)
    keep[:, :half + 1] = modes[:, :half + 1]
    h_plus = np.fft.ifft(keep, axis=1) * n_ang
    rel = 0.0
    for coef, sign in ((alpha, -1.0), (beta, 1.0)):
        truth = np.exp(sign * h_plus)
        series = np.fft.ifft(_pad_modes(coef.T, n_ang), axis=1) * n_ang
        rel = max(rel, float(np.abs(series - truth).max() /
                             np.abs(truth).max()))
    if rel > tail_tol:
        warnings.warn(
            f"mode truncation at {n_modes} drops {rel:.2e} relative tail "
            f"energy of exp(+-h)", AliasWarning, stacklevel=2)

    return IntegratingFactors(
        points=h.points, alpha=alpha, beta=beta, negative_mode_max=neg_max,
        attenuation_fingerprint="", )


def _pad_modes(coef, n_ang):
    out = np.zeros((coef.shape[0], n_ang), dtype=complex)
    out[:, :coef.shape[1]] = coef / n_ang * n_ang
    return out


def attenuation_fingerprint(a: ScalarField) -> str:
    g = a.grid
    hsh = hashlib.sha256()
    hsh.update(np.asarray(
        [g.xmin, g.xmax, g.ymin, g.ymax, g.nx, g.ny], dtype=float).tobytes())
    hsh.update(a.masked().tobytes())
    return hsh.hexdigest()[:16]


def compute_factors_for(a: ScalarField, points, n_modes: int = 32,
                        n_angles: int = 360, n_s: int | None = None,
                        tail_tol: float = 1e-4) -> IntegratingFactors:
    """Convenience wrapper: h-field then factors, with provenance hash."""
    h = compute_h(a, points, n_angles=n_angles, n_s=n_s)
    fac = compute_factors(h, n_modes=n_modes, tail_tol=tail_tol)
    return IntegratingFactors(
        points=fac.points, alpha=fac.alpha, beta=fac.beta,
        negative_mode_max=fac.negative_mode_max,
        attenuation_fingerprint=attenuation_fingerprint(a))
