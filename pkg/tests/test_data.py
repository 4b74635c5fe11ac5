import numpy as np
import pytest

from tuplewise.data import (
    DataFormatError,
    DiscreteAUCDistribution,
    DiscreteTwoSampleDistribution,
    GaussianClassesDistribution,
    GaussianProductDistribution,
    GeneralizedSamples,
    TwoSampleDataset,
    load_two_sample_csv,
    sample_dataset,
    standardize,
    train_test_split,
)


@pytest.fixture
def rng():
    return np.random.default_rng(42)


class TestDataset:
    def test_shapes(self):
        ds = TwoSampleDataset([1.0, 2.0, 3.0], [0.0, 1.0])
        assert (ds.n, ds.m, ds.dim) == (3, 2, 1)

    def test_read_only(self):
        ds = TwoSampleDataset([1.0, 2.0], [0.0])
        with pytest.raises(ValueError):
            ds.xs[0, 0] = 5.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            TwoSampleDataset(np.zeros((2, 2)), np.zeros((2, 3)))

    def test_non_finite(self):
        with pytest.raises(ValueError):
            TwoSampleDataset([np.inf], [0.0])

    def test_truncate(self):
        ds = TwoSampleDataset(np.arange(10.0), np.arange(7.0))
        t = ds.truncate_to_divisible(3)
        assert (t.n, t.m) == (9, 6)
        with pytest.raises(ValueError):
            ds.truncate_to_divisible(8)

    def test_generalized_from_two_sample(self):
        g = GeneralizedSamples.from_two_sample(TwoSampleDataset([1.0, 2.0], [3.0]))
        assert g.sizes == (2, 1)


class TestDistributions:
    def test_discrete_auc_support(self, rng):
        ds = DiscreteAUCDistribution(0.1, 0.9).sample(2000, 2000, rng)
        assert set(np.unique(ds.xs)) <= {0.0, 2.0}
        assert set(np.unique(ds.zs)) <= {-1.0, 1.0}
        assert abs(np.mean(ds.xs == 2.0) - 0.9) < 0.03
        assert abs(np.mean(ds.zs == 1.0) - 0.1) < 0.03

    def test_from_epsilon(self):
        d = DiscreteAUCDistribution.from_epsilon(0.02)
        assert (d.p, d.q) == (0.02, 0.98)

    def test_discrete_general(self, rng):
        d = DiscreteTwoSampleDistribution([0.0, 1.0], [0.25, 0.75], [5.0], [1.0])
        ds = d.sample(4000, 3, rng)
        assert abs(ds.xs.mean() - 0.75) < 0.03
        assert np.all(ds.zs == 5.0)

    def test_bad_probabilities(self):
        with pytest.raises(ValueError):
            DiscreteAUCDistribution(1.5, 0.5)

    def test_gaussian_product(self, rng):
        ds = GaussianProductDistribution(1.0, 2.0, -1.0, 0.5).sample(20000, 20000, rng)
        assert abs(ds.xs.mean() - 1.0) < 0.05 and abs(ds.zs.std() - 0.5) < 0.02

    def test_gaussian_classes_separation(self, rng):
        ds = GaussianClassesDistribution(dim=9, separation=3.0).sample(20000, 20000, rng)
        gap = np.linalg.norm(ds.xs.mean(axis=0) - ds.zs.mean(axis=0))
        assert abs(gap - 3.0) < 0.05

    def test_sample_dataset_validates(self, rng):
        with pytest.raises(ValueError):
            sample_dataset(DiscreteAUCDistribution(0.1, 0.9), 0, 5, rng)


class TestCsv:
    def test_whitespace_and_labels(self, tmp_path):
        p = tmp_path / "d.txt"
        p.write_text("1 2 0\n3 4 1\n5 6 1\n")
        ds = load_two_sample_csv(p, positive_labels=[1])
        assert (ds.n, ds.m, ds.dim) == (2, 1, 2)

    def test_comma_and_header(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("a,b,label\n1,2,1\n3,4,0\n")
        ds = load_two_sample_csv(p, positive_labels=[1], header=True)
        np.testing.assert_array_equal(ds.xs, [[1.0, 2.0]])

    def test_bad_row_names_line(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("1,2,1\n3,x,0\n")
        with pytest.raises(DataFormatError, match=":2"):
            load_two_sample_csv(p, positive_labels=[1])

    def test_missing_class(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("1,2,1\n3,4,1\n")
        with pytest.raises(DataFormatError, match="negative"):
            load_two_sample_csv(p, positive_labels=[1])


class TestPreprocessing:
    def test_standardize_uses_train_stats(self, rng):
        tr = TwoSampleDataset(rng.normal(5, 2, (50, 3)), rng.normal(5, 2, (60, 3)))
        te = TwoSampleDataset(rng.normal(5, 2, (10, 3)), rng.normal(5, 2, (10, 3)))
        s_tr, s_te = standardize(tr, te)
        pooled = np.vstack([s_tr.xs, s_tr.zs])
        np.testing.assert_allclose(pooled.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(pooled.std(axis=0), 1.0, atol=1e-12)
        assert s_te.n == 10

    def test_split_is_stratified(self, rng):
        ds = TwoSampleDataset(np.arange(100.0), np.arange(1000.0))
        tr, te = train_test_split(ds, 0.2, rng)
        assert (te.n, te.m) == (20, 200)
        assert (tr.n, tr.m) == (80, 800)
        assert not set(tr.xs.ravel()) & set(te.xs.ravel())
