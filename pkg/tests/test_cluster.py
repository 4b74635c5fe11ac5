import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tuplewise.cluster import (
    EstimationConfig,
    MonteCarloResult,
    evaluate_estimators,
    jackknife_variance_se,
    monte_carlo,
    monte_carlo_many,
    relative_variance_study,
    run_estimation,
)
from tuplewise.data import DiscreteAUCDistribution, TwoSampleDataset
from tuplewise.estimators import repartitioned_complete, repartitioned_incomplete
from tuplewise.kernels import AUCKernel, ProductKernel
from tuplewise.sampling import SchemeKind, SeedProtocol


@st.composite
def sim_configs(draw):
    N = draw(st.integers(1, 6))
    scheme = draw(st.sampled_from([SchemeKind.PropSWOR, SchemeKind.PropSWR, SchemeKind.DeterministicShuffle]))
    n, m = N * draw(st.integers(1, 6)), N * draw(st.integers(1, 4))
    return draw(st.integers(0, 2**63)), scheme, n, m, N, draw(st.integers(1, 4)), draw(st.integers(1, 9))


class TestSimulation:
    @settings(max_examples=50, deadline=None)
    @given(sim_configs())
    def test_matches_estimators_bitwise(self, cfg):
        seed, scheme, n, m, N, T, B = cfg
        rng = np.random.default_rng(seed % 2**32)
        d = TwoSampleDataset(rng.standard_normal((n, 2)), rng.standard_normal((m, 2)))
        p = SeedProtocol(seed)
        k = ProductKernel()
        rc, _ = run_estimation(d, scheme, N, T, "complete", k, p)
        ri, ledger = run_estimation(d, scheme, N, T, "incomplete", k, p, B=B)
        assert rc == repartitioned_complete(d, scheme, N, T, k, p)
        assert ri == repartitioned_incomplete(d, scheme, N, T, B, k, p)
        assert ledger.pairs_evaluated == N * B * T
        assert ledger.messages_to_master == N * T
        assert ledger.broadcasts == T

    def test_swor_matches_too(self):
        rng = np.random.default_rng(0)
        d = TwoSampleDataset(rng.standard_normal(9), rng.standard_normal(3))
        p = SeedProtocol(3)
        r, led = run_estimation(d, SchemeKind.SWOR, 4, 3, "incomplete", AUCKernel(), p, B=5)
        assert r == repartitioned_incomplete(d, SchemeKind.SWOR, 4, 3, 5, AUCKernel(), p)

    def test_ledger_records(self):
        d = TwoSampleDataset(np.arange(8.0), np.arange(4.0))
        _, led = run_estimation(d, SchemeKind.PropSWOR, 2, 3, "complete", AUCKernel(), SeedProtocol(1))
        assert led.repartitions == 2
        assert led.records_moved >= 12

    def test_mode_validation(self):
        d = TwoSampleDataset(np.arange(4.0), np.arange(2.0))
        with pytest.raises(ValueError):
            run_estimation(d, SchemeKind.PropSWOR, 2, 1, "partial", AUCKernel(), SeedProtocol(0))
        with pytest.raises(ValueError):
            run_estimation(d, SchemeKind.PropSWOR, 2, 1, "incomplete", AUCKernel(), SeedProtocol(0))


class TestJackknife:
    def test_against_brute_force(self):
        x = np.random.default_rng(0).standard_normal(30)
        loo = np.array([np.var(np.delete(x, i), ddof=1) for i in range(30)])
        brute = np.sqrt(29 / 30 * np.sum((loo - loo.mean()) ** 2))
        assert jackknife_variance_se(x) == pytest.approx(brute, rel=1e-10)

    def test_summary(self):
        r = MonteCarloResult.from_values([1.0, 2.0, 3.0, 4.0])
        assert r.mean == 2.5 and r.variance == pytest.approx(np.var([1, 2, 3, 4], ddof=1))
        assert r.runs == 4


class TestMonteCarlo:
    CFG = EstimationConfig(dist=DiscreteAUCDistribution(0.3, 0.7), n=16, m=8, N=4, T=2, B=3,
                           estimators=("complete", "local-complete", "repart-incomplete", "bootstrap-single"))

    def test_lanes_do_not_change_results(self):
        a = monte_carlo_many(self.CFG, 40, 9, lanes=1)
        b = monte_carlo_many(self.CFG, 40, 9, lanes=3)
        for k in a:
            np.testing.assert_array_equal(a[k].run_values, b[k].run_values)

    def test_prefix_stable(self):
        a = monte_carlo_many(self.CFG, 20, 9)
        b = monte_carlo_many(self.CFG, 40, 9)
        np.testing.assert_array_equal(a["complete"].run_values, b["complete"].run_values[:20])

    def test_single_estimator_api(self):
        with pytest.raises(ValueError):
            monte_carlo(self.CFG, 10, 0)

    def test_estimators_share_dataset(self):
        d = DiscreteAUCDistribution(0.3, 0.7).sample(16, 8, np.random.default_rng(0))
        vals = evaluate_estimators(d, self.CFG, SeedProtocol(1))
        assert len(vals) == 4

    def test_unknown_estimator(self):
        with pytest.raises(ValueError):
            EstimationConfig(estimators=("median",))

    def test_relative_variance_rows(self):
        rows = relative_variance_study([0.1], ["complete", "repart-complete"], 40, 8, 4, 2, 50, 1)
        assert [r.estimator for r in rows] == ["complete", "repart-complete"]
        assert rows[0].theoretical_rel_var == 1.0
        with pytest.raises(ValueError):
            relative_variance_study([0.7], ["complete"], 40, 8, 4, 2, 50, 1)
