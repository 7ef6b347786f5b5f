import numpy as np
import pytest

from diffusion_el.models.path import ObservedPath
from diffusion_el.smoothing.kernel import BIWEIGHT
from diffusion_el.statistic.asymptotic import AsymptoticRef, asymptotic_ref, beta_plugin, sigma_matrix
from diffusion_el.statistic.bandwidth import BandwidthSet
from diffusion_el.statistic.region import Region
from diffusion_el.utils.helper_functions import derive_rng

BANDWIDTHS = [0.016, 0.017, 0.019, 0.020, 0.022, 0.024]


class TestSigmaMatrix:

    def test_diagonal(self, vasicek_region: Region):
        sigma = sigma_matrix(BANDWIDTHS, vasicek_region)
        expected = 2 / BIWEIGHT.R**4 * BIWEIGHT.k4_zero**2 / vasicek_region.area
        np.testing.assert_allclose(np.diag(sigma), expected, rtol=1e-10)

    def test_symmetric_positive_semidefinite(self, vasicek_region: Region):
        sigma = sigma_matrix(BANDWIDTHS, vasicek_region)
        np.testing.assert_allclose(sigma, sigma.T)
        assert np.linalg.eigvalsh(sigma).min() > 0
        assert np.all(np.abs(sigma) <= sigma[0, 0] * (1 + 1e-10))

    def test_order_does_not_matter(self, vasicek_region: Region):
        np.testing.assert_allclose(
            sigma_matrix(BANDWIDTHS[::-1], vasicek_region), sigma_matrix(BANDWIDTHS, vasicek_region)
        )

    def test_geometric_set_is_toeplitz(self, vasicek_region: Region):
        h_set = BandwidthSet.geometric(0.02, 0.9, 4)
        sigma = sigma_matrix(h_set.values, vasicek_region)
        assert sigma[0, 1] == pytest.approx(sigma[2, 3], rel=1e-9)
        assert sigma[0, 2] == pytest.approx(sigma[1, 3], rel=1e-9)


class TestAsymptoticRef:

    @pytest.fixture()
    def reference(self, vasicek_path: ObservedPath, vasicek_region: Region) -> AsymptoticRef:
        return asymptotic_ref(vasicek_path, BANDWIDTHS, vasicek_region, grid=(20, 20), rng=derive_rng(9), n_draws=20000)

    def test_beta(self, reference: AsymptoticRef, vasicek_path: ObservedPath, vasicek_region: Region):
        assert reference.beta > 0
        assert reference.beta_alternative == pytest.approx(np.sqrt(2) * reference.beta)
        single, _ = beta_plugin(vasicek_path, BANDWIDTHS[0], vasicek_region, grid=(20, 20))
        assert single == pytest.approx(reference.beta, rel=0.5)

    def test_draws(self, reference: AsymptoticRef):
        assert reference.max_draws.size == 20000
        assert np.all(np.diff(reference.max_draws) >= 0)
        assert reference.max_draws.mean() > reference.beta

    def test_reproducible(self, reference: AsymptoticRef, vasicek_path: ObservedPath, vasicek_region: Region):
        again = asymptotic_ref(
            vasicek_path, BandwidthSet(BANDWIDTHS, is_geometric=False), vasicek_region, (20, 20), derive_rng(9), 20000
        )
        np.testing.assert_array_equal(again.max_draws, reference.max_draws)

    def test_critical_values(self, reference: AsymptoticRef):
        assert reference.max_critical_value(0.05) > reference.max_critical_value(0.1)
        single = reference.single_critical_value(0, 0.05)
        assert single == pytest.approx(reference.beta + 1.6448536 * np.sqrt(reference.sigma_J[0, 0]), rel=1e-6)
        assert reference.max_critical_value(0.05) > single

    def test_decisions(self, reference: AsymptoticRef):
        assert reference.reject_max(np.inf, 0.05)
        assert not reference.reject_max(-np.inf, 0.05)
        assert reference.reject_single(np.inf, 2, 0.05)
        assert not reference.reject_single(reference.beta, 2, 0.05)

    def test_to_dict(self, reference: AsymptoticRef):
        content = reference.to_dict()
        assert set(content) == {"beta", "beta_alternative", "sigma_J", "bandwidths"}
        assert len(content["sigma_J"]) == len(BANDWIDTHS)
        assert content["bandwidths"] == pytest.approx(BANDWIDTHS)
