import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tuplewise.hoeffding import VarianceComponents, hoeffding_components_closed_auc
from tuplewise.sampling import DivisibilityError, SchemeKind
from tuplewise.variance import (
    CLOSED_FORMS,
    BudgetError,
    Strategy,
    closed_form_variance,
    dominance_gap,
    dominance_gap_unconstrained,
    pair_budget,
    var_bootstrap_single,
    var_complete,
    var_incomplete_single,
    var_local_complete_propswor,
    var_local_complete_propswor_explicit,
    var_local_complete_propswr,
    var_local_complete_propswr_explicit,
    var_local_incomplete_propswor,
    var_local_incomplete_propswr,
    var_repart_complete_propswor,
    var_repart_complete_propswr,
    var_repart_incomplete_propswor,
    var_repart_incomplete_propswor_expanded,
    var_repart_incomplete_propswr,
    var_worker_local_propswr,
    variance_curves,
)

AUC = hoeffding_components_closed_auc(0.1, 0.9)
comp = st.floats(1e-4, 1.0)
workers = st.integers(1, 12)
mult = st.integers(1, 30)


@st.composite
def setups(draw):
    c = VarianceComponents.from_parts(draw(comp), draw(comp), draw(comp))
    N = draw(workers)
    return c, N * draw(mult), N * draw(mult), N, draw(st.integers(1, 200)), draw(st.integers(1, 50))


class TestReferenceValues:
    def test_var_complete(self):
        # 9e-4/400 + 9e-4/40 + 8.1e-3/16000
        assert var_complete(AUC, 400, 40) == pytest.approx(2.5256250e-05, rel=1e-12)

    def test_local_complete(self):
        assert var_local_complete_propswor(AUC, 400, 40, 8) == pytest.approx(2.88e-05, rel=1e-12)

    def test_local_with_one_worker_is_complete(self):
        assert var_local_complete_propswor(AUC, 400, 40, 1) == var_complete(AUC, 400, 40)

    def test_incomplete_single_limits(self):
        assert var_incomplete_single(AUC, 400, 40, 1) == pytest.approx(AUC.sigma_sq)

    def test_repart_T1_is_local(self):
        assert var_repart_complete_propswor(AUC, 400, 40, 8, 1) == pytest.approx(
            var_local_complete_propswor(AUC, 400, 40, 8), rel=1e-15)


class TestAlgebra:
    @settings(max_examples=200)
    @given(setups())
    def test_explicit_forms(self, s):
        c, n, m, N, B, T = s
        assert var_local_complete_propswor_explicit(c, n, m, N) == pytest.approx(
            var_local_complete_propswor(c, n, m, N), rel=1e-12)
        assert var_local_complete_propswr_explicit(c, n, m, N) == pytest.approx(
            var_local_complete_propswr(c, n, m, N), rel=1e-12)
        assert var_repart_incomplete_propswor_expanded(c, n, m, N, B, T) == pytest.approx(
            var_repart_incomplete_propswor(c, n, m, N, B, T), rel=1e-12)

    @settings(max_examples=200)
    @given(setups())
    def test_monotone_in_T_and_B(self, s):
        c, n, m, N, B, T = s
        assert var_repart_complete_propswor(c, n, m, N, T + 1) <= var_repart_complete_propswor(c, n, m, N, T)
        assert var_repart_incomplete_propswor(c, n, m, N, B + 1, T) <= var_repart_incomplete_propswor(c, n, m, N, B, T) * (1 + 1e-12)
        assert var_repart_complete_propswor(c, n, m, N, T) >= var_complete(c, n, m)

    @settings(max_examples=200)
    @given(setups())
    def test_dominance_codings(self, s):
        c, n, m, N, _, T0 = s
        n0m0 = (n // N) * (m // N)
        if n0m0 < 2:
            return
        total = n0m0 * T0
        B = next(b for b in range(2, total + 1) if total % b == 0)
        T = total // B
        d2 = dominance_gap(c, n, m, N, T, T0, B)
        d1 = dominance_gap_unconstrained(c, n, m, N, T, T0, B)
        diff = var_repart_incomplete_propswor(c, n, m, N, B, T) - var_repart_complete_propswor(c, n, m, N, T0)
        assert d2 > 0
        assert d1 == pytest.approx(d2, rel=1e-12)
        assert abs(diff - d2) <= 1e-12 * var_repart_incomplete_propswor(c, n, m, N, B, T)

    def test_budget_mismatch(self):
        with pytest.raises(BudgetError):
            dominance_gap(AUC, 400, 40, 8, 3, 1, 10)

    def test_propswr_worker_variance_exact_form(self):
        # a worker resamples n/N points out of n, not out of n/N
        assert var_worker_local_propswr(AUC, 400, 40, 8) == pytest.approx(2.582109e-4, rel=1e-6)
        assert var_bootstrap_single(AUC, 50, 5) == pytest.approx(4.751136e-4, rel=1e-6)
        exact = var_local_incomplete_propswr(AUC, 400, 40, 8, 10, "exact")
        bootstrap = var_local_incomplete_propswr(AUC, 400, 40, 8, 10)
        assert exact == pytest.approx(1.74898e-4, rel=1e-5)
        assert bootstrap == pytest.approx(1.72187e-4, rel=1e-5)

    def test_worker_variance_with_one_worker_is_bootstrap(self):
        assert var_worker_local_propswr(AUC, 400, 40, 1) == pytest.approx(var_bootstrap_single(AUC, 400, 40), rel=1e-12)

    def test_bad_worker_variance(self):
        with pytest.raises(ValueError):
            var_local_incomplete_propswr(AUC, 400, 40, 8, 10, "guess")


class TestDispatch:
    def test_pair_budgets(self):
        assert pair_budget("repart-complete", 400, 40, N=8, T=3) == 3 * 400 * 40 // 8
        assert pair_budget("repart-incomplete", 400, 40, N=8, B=10, T=3) == 240
        assert pair_budget("complete", 5, 6) == 30

    @pytest.mark.parametrize("s", list(Strategy))
    @pytest.mark.parametrize("scheme", [SchemeKind.PropSWOR, SchemeKind.PropSWR])
    def test_every_strategy(self, s, scheme):
        r = closed_form_variance(s, scheme, AUC, 400, 40, 8, 10, 4)
        assert r.variance > 0 and r.pair_budget > 0

    def test_swor_has_no_closed_form(self):
        with pytest.raises(ValueError):
            closed_form_variance("local-complete", "swor", AUC, 400, 40, 8)

    def test_divisibility(self):
        with pytest.raises(DivisibilityError):
            var_local_complete_propswor(AUC, 401, 40, 8)

    def test_registry_lists_functions(self):
        assert all(callable(f) for f in CLOSED_FORMS.values())
        assert "dominance_gap" in CLOSED_FORMS

    def test_curves(self):
        pts = variance_curves(AUC, 100_000, 200, 100, [1, 10], [1, 100])
        strategies = {(p.strategy, p.scheme) for p in pts}
        assert (Strategy.BootstrapSingle, SchemeKind.PropSWR) in strategies
        rc = [p for p in pts if p.strategy is Strategy.RepartComplete and p.scheme is SchemeKind.PropSWOR]
        assert [p.pair_budget for p in rc] == [200_000, 2_000_000]
        with pytest.raises(ValueError):
            variance_curves(AUC, 100, 20, 10, [], [1])
        with pytest.raises(ValueError):
            variance_curves(AUC, 100, 20, 10, [0], [1])
