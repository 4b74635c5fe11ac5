import math

import pytest

from tuplewise.checks import (CHECK_GROUPS, CheckRow, SgdCheckConfig, TheoryCheckConfig,
                              covered_closed_forms, run_checks, run_group)
from tuplewise.variance import CLOSED_FORMS

QUICK = dict(seed=7, hoeffding_draws=10, mc_runs=200, unbiased_runs=200, eq4_runs=200,
             dominance_configs=50, fig3_runs=100, swor_runs=20, swor_bias_runs=20,
             include_sgd=False)


@pytest.fixture(scope="module")
def quick_rows():
    return run_checks(TheoryCheckConfig(**QUICK))


class TestConfig:
    @pytest.mark.parametrize("field", ["mc_runs", "unbiased_runs", "dominance_configs", "swor_runs"])
    def test_rejects_nonpositive(self, field):
        with pytest.raises(ValueError):
            TheoryCheckConfig(**{field: 0})

    def test_unbiased_runs_bounded_by_mc_runs(self):
        with pytest.raises(ValueError):
            TheoryCheckConfig(mc_runs=10, unbiased_runs=20)


class TestRows:
    def test_group_order(self, quick_rows):
        groups = [r.group for r in quick_rows]
        order = [g for g in CHECK_GROUPS if g in groups] + ["coverage"]
        assert list(dict.fromkeys(groups)) == order

    def test_unique_names(self, quick_rows):
        names = [r.check_name for r in quick_rows]
        assert len(names) == len(set(names))

    def test_coverage_complete(self, quick_rows):
        assert covered_closed_forms(quick_rows) >= set(CLOSED_FORMS)
        last = quick_rows[-1]
        assert last.check_name == "closed_form_coverage" and last.passed

    def test_exact_groups_pass_at_any_run_count(self, quick_rows):
        # groups without sampling do not depend on run counts
        exact = {"hoeffding", "dominance", "alternate-forms", "subgradient", "protocol"}
        assert all(r.passed for r in quick_rows if r.group in exact)

    def test_finite_fields(self, quick_rows):
        for r in quick_rows:
            assert isinstance(r, CheckRow)
            assert math.isfinite(r.tolerance)

    def test_deterministic(self):
        cfg = TheoryCheckConfig(**QUICK)
        assert run_group("unbiased", cfg) == run_group("unbiased", cfg)

    def test_subset_has_no_coverage_row(self):
        rows = run_checks(TheoryCheckConfig(**QUICK), groups=["protocol"])
        assert {r.group for r in rows} == {"protocol"}


class TestSgdGroup:
    def test_disabled(self):
        assert run_group("sgd", TheoryCheckConfig(**QUICK)) == []

    def test_small_study_rows(self):
        cfg = TheoryCheckConfig(**{**QUICK, "include_sgd": True},
                                sgd=SgdCheckConfig(runs=3, total_iterations=20, n_total=300))
        rows = run_group("sgd", cfg)
        assert [r.check_name for r in rows] == ["sgd_synthetic_median_nr25_ge_nrinf",
                                                 "sgd_synthetic_iqr_nrinf_ge_nr25"]
