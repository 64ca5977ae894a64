import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arctomo.kernels import (
    coupling_modes,
    henyey_greenstein,
    kernel_eval,
    kernel_modes,
    polynomial_kernel,
    quadratic_kernel,
    truncate_to_polynomial,
    zero_kernel,
)

TWO_PI = 2 * math.pi


def modes_by_quadrature(kernel, n_max, n_theta=4096):
    """Independent oracle: (1/2pi) integral k(cos t) e^{i n t} dt by the
    trapezoid rule on the periodic integrand."""
    t = np.arange(n_theta) * TWO_PI / n_theta
    k = kernel_eval(kernel, 0j, np.cos(t))
    return np.array([np.mean(k * np.exp(1j * n * t)) for n in range(n_max + 1)])


class TestEval:
    def test_hg_forward_peak(self):
        k = henyey_greenstein(5.0, 0.5)
        # (5/2pi)(1-g^2)/(1-g)^2 = (5/2pi) * 3
        assert kernel_eval(k, 0j, 1.0) == pytest.approx(15.0 / TWO_PI)
        assert kernel_eval(k, 0j, 1.0) == pytest.approx(2.3873, abs=1e-4)

    def test_hg_series_summation_oracle(self):
        # closed form vs summed Fourier series k0 (1 + 2 sum g^n cos n t)
        k = henyey_greenstein(5.0, 0.5)
        for t in (0.0, 0.7, 2.2, math.pi):
            series = (5.0 / TWO_PI) * (1 + 2 * sum(
                0.5 ** n * math.cos(n * t) for n in range(1, 60)))
            assert kernel_eval(k, 0j, math.cos(t)) == pytest.approx(series)

    def test_isotropic_limit(self):
        k = henyey_greenstein(5.0, 0.0)
        vals = kernel_eval(k, 0j, np.linspace(-1, 1, 7))
        assert np.allclose(vals, 5.0 / TWO_PI)

    def test_quadratic_forward_peak(self):
        k = quadratic_kernel(5.0, 0.5)
        assert kernel_eval(k, 0j, 1.0) == pytest.approx(
            (5.0 / TWO_PI) * 2.5)
        assert kernel_eval(k, 0j, 1.0) == pytest.approx(1.9894, abs=1e-4)


class TestModes:
    def test_hg_modes_closed_form(self):
        modes = kernel_modes(henyey_greenstein(5.0, 0.5), n_max=5)
        assert modes[0] == pytest.approx(0.7957747154594768)
        assert modes[1] == pytest.approx(0.3978873577297384)
        assert np.allclose(modes, (5.0 / TWO_PI) * 0.5 ** np.arange(6))

    def test_hg_modes_match_quadrature_oracle(self):
        k = henyey_greenstein(5.0, 0.5)
        oracle = modes_by_quadrature(k, 8)
        assert np.max(np.abs(oracle.imag)) < 1e-12
        assert np.allclose(kernel_modes(k, n_max=8), oracle.real, atol=1e-10)

    def test_quadratic_matches_hg_through_degree_2(self):
        kq = quadratic_kernel(5.0, 0.5)
        khg = henyey_greenstein(5.0, 0.5)
        mq = kernel_modes(kq, n_max=6)
        mh = kernel_modes(khg, n_max=6)
        assert np.allclose(mq[:3], mh[:3])
        assert np.all(mq[3:] == 0.0)

    def test_isotropic_modes(self):
        modes = kernel_modes(henyey_greenstein(5.0, 0.0), n_max=4)
        assert modes[0] == pytest.approx(5.0 / TWO_PI)
        assert np.all(modes[1:] == 0.0)

    def test_polynomial_returns_stored_exactly(self):
        k = polynomial_kernel((0.3, 0.1, 0.05))
        assert np.array_equal(kernel_modes(k, n_max=5),
                              [0.3, 0.1, 0.05, 0, 0, 0])

    def test_normalized_convention_scales_by_2pi(self):
        k = henyey_greenstein(5.0, 0.5)
        kn = type(k)(k.variant, mu_s=k.mu_s, g=k.g,
                     measure_convention="normalized")
        assert np.allclose(kernel_modes(kn, n_max=3),
                           TWO_PI * kernel_modes(k, n_max=3))

    def test_coupling_modes_give_total_scattering(self):
        # zeroth coupling coefficient equals mu_s for both experiment kernels
        assert coupling_modes(henyey_greenstein(5.0, 0.5), n_max=2)[0] == \
            pytest.approx(5.0)
        assert coupling_modes(quadratic_kernel(5.0, 0.5), n_max=2)[0] == \
            pytest.approx(5.0)

    @given(g=st.floats(-0.9, 0.9), mu_s=st.floats(0.1, 10.0))
    @settings(max_examples=25, deadline=None)
    def test_hg_mode_decay_property(self, g, mu_s):
        modes = kernel_modes(henyey_greenstein(mu_s, g), n_max=6)
        k0 = mu_s / TWO_PI
        assert np.allclose(np.abs(modes), k0 * np.abs(g) ** np.arange(7),
                           rtol=1e-10, atol=1e-14)


class TestTruncate:
    def test_hg_truncated_to_quadratic(self):
        k = truncate_to_polynomial(henyey_greenstein(5.0, 0.5), 2)
        assert k.variant == "polynomial"
        assert np.allclose(kernel_modes(k, n_max=4),
                           kernel_modes(quadratic_kernel(5.0, 0.5), n_max=4))

    def test_identity_on_polynomial(self):
        k = quadratic_kernel(5.0, 0.5)
        assert truncate_to_polynomial(k, 2) is k
        assert truncate_to_polynomial(k, 7) is k

    def test_dropped_tail_is_geometric(self):
        k = truncate_to_polynomial(henyey_greenstein(5.0, 0.5), 10)
        modes_full = kernel_modes(henyey_greenstein(5.0, 0.5), n_max=11)
        assert kernel_modes(k, n_max=11)[11] == 0.0
        assert modes_full[11] / modes_full[0] == pytest.approx(2.0 ** -11)


class TestConsistency:
    @pytest.mark.parametrize("kernel", [
        henyey_greenstein(5.0, 0.5),
        quadratic_kernel(5.0, 0.5),
        polynomial_kernel((0.2, -0.05, 0.01, 0.004)),
        zero_kernel(),
    ])
    def test_eval_mode_consistency(self, kernel):
        oracle = modes_by_quadrature(kernel, 6)
        assert np.max(np.abs(oracle.imag)) < 1e-12
        assert np.allclose(kernel_modes(kernel, n_max=6), oracle.real,
                           atol=1e-8)

    def test_eval_depends_only_on_cosangle(self):
        k = henyey_greenstein(5.0, 0.5)
        t = np.linspace(-1, 1, 11)
        assert np.array_equal(kernel_eval(k, 0j, t), kernel_eval(k, 1 + 1j, t))
