import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tuplewise.kernels import (
    AUCHalfTieKernel,
    AUCKernel,
    ConstantKernel,
    GiniKernel,
    HingeKernel,
    KendallKernel,
    ProductKernel,
    SampleVarianceKernel,
    VUSKernel,
    eval_kernel,
)

finite = st.floats(-1e6, 1e6, allow_nan=False)


class TestPairwise:
    def test_auc_strict_indicator(self):
        k = AUCKernel()
        assert k(2.0, 1.0) == 1.0
        assert k(1.0, 2.0) == 0.0
        assert k(1.0, 1.0) == 0.0

    def test_half_tie(self):
        assert AUCHalfTieKernel()(1.0, 1.0) == 0.5

    def test_product_and_constant(self):
        assert ProductKernel()([1.0, 2.0], [3.0, 4.0]) == 11.0
        assert ConstantKernel(2.5)(7.0, -3.0) == 2.5

    def test_kendall(self):
        k = KendallKernel()
        assert k([0, 0], [1, 1]) == 1.0
        assert k([0, 1], [1, 0]) == 0.0

    def test_hinge_orientation(self):
        k = HingeKernel([1.0])
        # positive scored well above the negative: no loss
        assert k(3.0, 0.0) == 0.0
        assert k(0.0, 0.0) == 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            eval_kernel(ProductKernel(), [1.0, 2.0], [1.0])
        with pytest.raises(ValueError):
            AUCKernel()([1.0, 2.0], [1.0, 2.0])

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            AUCKernel()(np.nan, 1.0)

    def test_generalized_kernel_is_not_pairwise(self):
        with pytest.raises(TypeError):
            eval_kernel(GiniKernel(), 1.0, 2.0)

    def test_matrix_matches_pointwise(self):
        rng = np.random.default_rng(0)
        xs, zs = rng.standard_normal((5, 1)), rng.standard_normal((4, 1))
        M = AUCKernel().matrix(xs, zs)
        assert M.shape == (5, 4)
        for i in range(5):
            for j in range(4):
                assert M[i, j] == AUCKernel()(xs[i], zs[j])

    def test_block_matrix(self):
        rng = np.random.default_rng(1)
        xb, zb = rng.standard_normal((3, 4, 2)), rng.standard_normal((3, 5, 2))
        B = ProductKernel().block_matrix(xb, zb)
        for w in range(3):
            np.testing.assert_array_equal(B[w], ProductKernel().matrix(xb[w], zb[w]))

    @given(finite, finite)
    def test_auc_complementary(self, x, z):
        k = AUCKernel()
        assert k(x, z) + k(z, x) == (0.0 if x == z else 1.0)


class TestGeneralized:
    def test_degrees(self):
        assert GiniKernel().degrees == (2,)
        assert VUSKernel(3).degrees == (1, 1, 1)

    def test_gini_symmetric(self):
        assert GiniKernel().evaluate_tuple([1.0, 4.0]) == 3.0
        assert GiniKernel().evaluate_tuple([4.0, 1.0]) == 3.0

    def test_sample_variance_kernel(self):
        assert SampleVarianceKernel().evaluate_tuple([1.0, 3.0]) == 4.0

    def test_vus(self):
        k = VUSKernel(3)
        assert k.evaluate_tuple([0.0], [1.0], [2.0]) == 1.0
        assert k.evaluate_tuple([0.0], [2.0], [1.0]) == 0.0

    def test_vus_needs_two_samples(self):
        with pytest.raises(ValueError):
            VUSKernel(1)

    def test_wrong_block_size(self):
        with pytest.raises(ValueError, match="needs 2 points"):
            GiniKernel().evaluate_tuple([1.0])

    @settings(max_examples=50)
    @given(st.lists(finite, min_size=2, max_size=2))
    def test_gini_permutation_invariant(self, pts):
        k = GiniKernel()
        assert k.evaluate_tuple(pts) == k.evaluate_tuple(pts[::-1])
