import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tuplewise.data import DiscreteAUCDistribution, DiscreteTwoSampleDistribution, GaussianProductDistribution
from tuplewise.hoeffding import (
    UnsupportedDistributionError,
    VarianceComponents,
    closed_auc_mean,
    enumerated_mean,
    hoeffding_components_closed_auc,
    hoeffding_components_closed_product,
    hoeffding_components_enumerated,
    hoeffding_projections,
)
from tuplewise.kernels import AUCKernel, ConstantKernel, ProductKernel

probs = st.floats(0.001, 0.999)


class TestReferenceValues:
    def test_auc_model(self):
        c = hoeffding_components_closed_auc(0.1, 0.9)
        assert c.sigma1_sq == pytest.approx(9e-4, rel=1e-12)
        assert c.sigma2_sq == pytest.approx(9e-4, rel=1e-12)
        assert c.sigma0_sq == pytest.approx(8.1e-3, rel=1e-12)
        assert c.sigma_sq == pytest.approx(9.9e-3, rel=1e-12)
        assert closed_auc_mean(0.1, 0.9) == pytest.approx(0.99)

    def test_constant_kernel_has_no_variance(self):
        c = hoeffding_components_enumerated(ConstantKernel(3.0), DiscreteAUCDistribution(0.3, 0.6))
        assert (c.sigma0_sq, c.sigma1_sq, c.sigma2_sq, c.sigma_sq) == (0.0, 0.0, 0.0, 0.0)

    def test_product_closed_form(self):
        c = hoeffding_components_closed_product(GaussianProductDistribution(0.0, 1.0, 1.0, 1.0))
        assert (c.sigma0_sq, c.sigma1_sq, c.sigma2_sq) == (1.0, 1.0, 0.0)


class TestEnumeration:
    @settings(max_examples=100)
    @given(probs, probs)
    def test_closed_matches_enumeration(self, p, q):
        a = hoeffding_components_closed_auc(p, q)
        b = hoeffding_components_enumerated(AUCKernel(), DiscreteAUCDistribution(p, q))
        for u, v in ((a.sigma0_sq, b.sigma0_sq), (a.sigma1_sq, b.sigma1_sq),
                     (a.sigma2_sq, b.sigma2_sq), (a.sigma_sq, b.sigma_sq)):
            assert u == pytest.approx(v, rel=1e-10, abs=1e-300)
        assert closed_auc_mean(p, q) == pytest.approx(enumerated_mean(AUCKernel(), DiscreteAUCDistribution(p, q)))

    @settings(max_examples=50)
    @given(probs, probs)
    def test_identity(self, p, q):
        b = hoeffding_components_enumerated(AUCKernel(), DiscreteAUCDistribution(p, q))
        assert b.identity_error() <= 1e-12

    def test_projections_are_centred(self):
        dist = DiscreteTwoSampleDistribution([0.0, 1.0, 3.0], [0.2, 0.5, 0.3], [0.5, 2.0], [0.6, 0.4])
        pr = hoeffding_projections(ProductKernel(), dist)
        assert abs(float(pr.x_probs @ pr.h1)) < 1e-15
        assert abs(float(pr.z_probs @ pr.h2)) < 1e-15
        # the pairwise term is degenerate: zero conditional mean given either argument
        np.testing.assert_allclose(pr.h0 @ pr.z_probs, 0.0, atol=1e-15)
        np.testing.assert_allclose(pr.x_probs @ pr.h0, 0.0, atol=1e-15)

    def test_gaussian_not_enumerable(self):
        with pytest.raises(UnsupportedDistributionError):
            hoeffding_components_enumerated(AUCKernel(), GaussianProductDistribution(0, 1, 0, 1))


class TestValidation:
    def test_negative_component(self):
        with pytest.raises(ValueError):
            VarianceComponents.from_parts(-1.0, 0.0, 0.0)

    def test_identity_violation(self):
        with pytest.raises(ValueError):
            VarianceComponents(1.0, 1.0, 1.0, 5.0)

    def test_bad_prob(self):
        with pytest.raises(ValueError):
            hoeffding_components_closed_auc(-0.1, 0.5)
