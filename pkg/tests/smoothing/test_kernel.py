import numpy as np
import pytest
from scipy import integrate

from diffusion_el.smoothing.kernel import BIWEIGHT, Kernel, kernel_constant


@pytest.fixture()
def kernel() -> Kernel:
    return Kernel()


def test_kernel_is_a_density(kernel: Kernel):
    total, _ = integrate.quad(kernel, -1, 1)
    assert total == pytest.approx(1.0)
    assert kernel(1.5) == 0.0
    assert kernel.scaled(0.0, 0.5) == pytest.approx(2 * 0.9375)


def test_moments(kernel: Kernel):
    assert kernel.R == pytest.approx(5 / 7, abs=1e-14)
    assert kernel.sigma2 == pytest.approx(1 / 7, abs=1e-14)


class TestConvolution:

    def test_k2_at_zero_is_r(self, kernel: Kernel):
        assert kernel.k2(0.0, 1.0) == pytest.approx(kernel.R, abs=1e-14)

    def test_k2_against_quadrature(self, kernel: Kernel):
        expected, _ = integrate.quad(lambda u: kernel(u) * kernel(0.3 + 0.7 * u), -1, 1, points=[-1.0, 1.0])
        assert kernel.k2(0.3, 0.7) == pytest.approx(expected, abs=1e-12)

    def test_k2_support(self, kernel: Kernel):
        assert kernel.k2(2.5, 1.0) == 0.0
        np.testing.assert_allclose(kernel.k2(np.array([-0.4, 0.4]), 1.0), kernel.k2(0.4, 1.0))

    def test_k2_needs_positive_c(self, kernel: Kernel):
        with pytest.raises(ValueError):
            kernel.k2(0.0, 0.0)

    def test_k4_zero(self, kernel: Kernel):
        expected, _ = integrate.quad(lambda v: kernel.k2(v, 1.0) ** 2, -2, 2, points=[0.0], limit=200)
        assert kernel.k4_zero == pytest.approx(expected, rel=1e-10)

    def test_nu(self, kernel: Kernel):
        assert kernel.nu(1.0) == pytest.approx(kernel.k4_zero**2)
        t = 0.8
        assert kernel.nu(t) == pytest.approx(kernel.k2_square_integral(t) ** 2 / t)

    def test_mk2_is_odd(self, kernel: Kernel):
        assert abs(kernel.mk2(0.0)) < 1e-15
        assert kernel.mk2(0.5) < 0
        assert kernel.mk2(-0.5) == pytest.approx(-kernel.mk2(0.5))


class TestKernelConstant:

    def test_by_name(self):
        assert kernel_constant("R") == BIWEIGHT.R
        assert kernel_constant("sigma2") == BIWEIGHT.sigma2
        assert kernel_constant("K4_zero") == BIWEIGHT.k4_zero
        assert kernel_constant("K2_of", z=0.2, c=1.0) == BIWEIGHT.k2(0.2, 1.0)
        assert kernel_constant("nu_of", t=0.9) == BIWEIGHT.nu(0.9)
        assert kernel_constant("MK2_of", t=0.3) == BIWEIGHT.mk2(0.3)

    @pytest.mark.parametrize("which, arguments", [("K2_of", {"z": 0.1}), ("nu_of", {}), ("MK2_of", {})])
    def test_missing_arguments(self, which, arguments):
        with pytest.raises(ValueError):
            kernel_constant(which, **arguments)

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            kernel_constant("K3")
