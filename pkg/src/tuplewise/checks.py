"""Theory checks: closed forms against enumeration, algebra and Monte Carlo.

Each check group returns :class:`CheckRow` objects. The ``rel_error`` column
holds the statistic compared with ``tolerance``: a relative error for
closed-form comparisons, a z-score (in standard errors) for band checks, and
a signed margin for ordering checks. A row passes when ``rel_error <=
tolerance`` unless its name says otherwise (``..._exceeds_...`` rows pass when
the statistic is above the tolerance).

All randomness derives from :attr:`TheoryCheckConfig.seed`, so the rows are a
deterministic function of the configuration. The number of processes never
changes a value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .cluster import EstimationConfig, MonteCarloResult, monte_carlo_many, relative_variance_study
from .data import (
    DiscreteAUCDistribution,
    GaussianClassesDistribution,
    GaussianProductDistribution,
    TwoSampleDataset,
    load_two_sample_csv,
)
from .hoeffding import (
    VarianceComponents,
    closed_auc_mean,
    enumerated_mean,
    hoeffding_components_closed_auc,
    hoeffding_components_closed_product,
    hoeffding_components_enumerated,
)
from .kernels import AUCKernel, ProductKernel
from .sampling import SchemeKind, SeedProtocol, Tag, assign, derive_seed, simulate_coordination_free
from .sgd import LinearScorer, SgdConfig, pair_gradient, pair_objective, prepare_task, repartition_study, subsample
from .variance import (
    CLOSED_FORMS,
    dominance_gap,
    dominance_gap_unconstrained,
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
)

__all__ = [
    "CheckRow",
    "TheoryCheckConfig",
    "SgdCheckConfig",
    "CHECK_GROUPS",
    "run_checks",
    "run_group",
    "covered_closed_forms",
]

#: Two-sided 99% normal quantile used for the jackknife band.
Z99 = 2.5758293035489004

_MC_ESTIMATORS = ("local-complete", "local-incomplete", "repart-complete", "repart-incomplete")


@dataclass(frozen=True)
class CheckRow:
    check_name: str
    closed_form: float
    empirical: float
    rel_error: float
    tolerance: float
    passed: bool
    group: str = ""
    covers: tuple = ()


@dataclass(frozen=True)
class SgdCheckConfig:
    """Synthetic learning task and training settings of the repartition check."""

    n_total: int = 1000
    positive_fraction: float = 0.07
    dim: int = 9
    separation: float = 2.5
    test_fraction: float = 0.2
    N: int = 10
    B: int = 20
    total_iterations: int = 500
    step_size: float = 0.001
    momentum: float = 0.9
    l2_coeff: float = 0.05
    monitor_pairs: int = 500
    runs: int = 20
    n_r_values: tuple = (1, 25, math.inf)
    shuttle_path: str | None = None
    shuttle_positive_labels: tuple = (1,)
    shuttle_fraction: float = 0.1


@dataclass(frozen=True)
class TheoryCheckConfig:
    """Run counts and seed of every check group."""

    seed: int = 12345
    hoeffding_draws: int = 100
    mc_runs: int = 20000
    unbiased_runs: int = 5000
    eq4_runs: int = 20000
    dominance_configs: int = 1000
    fig3_runs: int = 2000
    fig3_epsilons: tuple = (0.1, 0.02, 0.004)
    gradient_points: int = 20
    convexity_probes: int = 100
    protocol_pairs: int = 20
    swor_runs: int = 500
    swor_bias_runs: int = 500
    include_sgd: bool = True
    sgd: SgdCheckConfig = field(default_factory=SgdCheckConfig)

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, int) and not isinstance(v, bool) and f.name != "seed" and v < 1:
                raise ValueError(f"{f.name} must be positive, got {v}")
        if self.mc_runs < 3 or self.fig3_runs < 3:
            raise ValueError("Monte Carlo groups need at least three runs")
        if self.unbiased_runs > self.mc_runs:
            raise ValueError("unbiased_runs cannot exceed mc_runs; the runs are shared")


def _rel(a: float, b: float) -> float:
    """|a - b| / |b|, with 0/0 = 0."""
    if a == b:
        return 0.0
    return abs(a - b) / abs(b) if b != 0 else math.inf


def _row(name, closed, emp, err, tol, passed=None, group="", covers=()):
    if passed is None:
        passed = bool(err <= tol)
    return CheckRow(name, float(closed), float(emp), float(err), float(tol), bool(passed), group, tuple(covers))


def _rng(cfg: TheoryCheckConfig, key: int) -> np.random.Generator:
    return SeedProtocol(derive_seed(cfg.seed, key)).generator(0, Tag.EVAL)


# -- Hoeffding components --------------------------------------------------------


def check_hoeffding(cfg: TheoryCheckConfig, lanes: int = 1) -> list[CheckRow]:
    rng = _rng(cfg, 1)
    kernel = AUCKernel()
    worst_comp, worst_mean, worst_id = (0.0, None), (0.0, None), 0.0
    for _ in range(cfg.hoeffding_draws):
        p, q = rng.uniform(0.01, 0.99, 2)
        dist = DiscreteAUCDistribution(float(p), float(q))
        closed = hoeffding_components_closed_auc(dist.p, dist.q)
        enum_ = hoeffding_components_enumerated(kernel, dist)
        for a, b in zip(
            (closed.sigma0_sq, closed.sigma1_sq, closed.sigma2_sq, closed.sigma_sq),
            (enum_.sigma0_sq, enum_.sigma1_sq, enum_.sigma2_sq, enum_.sigma_sq),
        ):
            e = _rel(a, b)
            if e >= worst_comp[0]:
                worst_comp = (e, (a, b))
        e = _rel(closed_auc_mean(dist.p, dist.q), enumerated_mean(kernel, dist))
        if e >= worst_mean[0]:
            worst_mean = (e, (closed_auc_mean(dist.p, dist.q), enumerated_mean(kernel, dist)))
        worst_id = max(worst_id, closed.identity_error(), enum_.identity_error())
    a, b = worst_comp[1]
    ma, mb = worst_mean[1]
    return [
        _row("hoeffding_closed_vs_enumeration", a, b, worst_comp[0], 1e-10),
        _row("auc_mean_closed_vs_enumeration", ma, mb, worst_mean[0], 1e-10),
        _row("hoeffding_identity", 0.0, worst_id, worst_id, 1e-12),
    ]


# -- shared Monte Carlo groups ------------------------------------------------------

_MC_CACHE: dict = {}

MODEL = DiscreteAUCDistribution(0.1, 0.9)
MC_SIZES = dict(n=400, m=40, N=8, T=4, B=10)


def _mc_group(cfg: TheoryCheckConfig, scheme: SchemeKind, lanes: int) -> dict[str, MonteCarloResult]:
    key = (cfg.seed, cfg.mc_runs, scheme)
    if key not in _MC_CACHE:
        ests = _MC_ESTIMATORS + (("bootstrap-single",) if scheme is SchemeKind.PropSWR else ())
        ec = EstimationConfig(dist=MODEL, kernel=AUCKernel(), scheme=scheme, estimators=ests, **MC_SIZES)
        tag = 2 if scheme is SchemeKind.PropSWOR else 5
        _MC_CACHE[key] = monte_carlo_many(ec, cfg.mc_runs, derive_seed(cfg.seed, tag), lanes)
    return _MC_CACHE[key]


def _mc_rows(name: str, theory: float, res: MonteCarloResult, band: bool, covers, group) -> list[CheckRow]:
    emp = res.variance
    rows = [_row(name, theory, emp, _rel(emp, theory), 0.05, group=group, covers=covers)]
    if band:
        z = abs(emp - theory) / res.variance_se
        rows.append(_row(name + "_jackknife_band", theory, emp, z, Z99, group=group))
    return rows


def _model_components() -> VarianceComponents:
    return hoeffding_components_closed_auc(MODEL.p, MODEL.q)


def check_local_estimators(cfg: TheoryCheckConfig, lanes: int = 1) -> list[CheckRow]:
    res = _mc_group(cfg, SchemeKind.PropSWOR, lanes)
    c, s = _model_components(), MC_SIZES
    n, m, N, B = s["n"], s["m"], s["N"], s["B"]
    return _mc_rows(
        "propswor_local_complete", var_local_complete_propswor(c, n, m, N), res["local-complete"],
        True, ("var_local_complete_propswor",), "local-estimators",
    ) + _mc_rows(
        "propswor_local_incomplete", var_local_incomplete_propswor(c, n, m, N, B), res["local-incomplete"],
        True, ("var_local_incomplete_propswor",), "local-estimators",
    )


def check_repart_estimators(cfg: TheoryCheckConfig, lanes: int = 1) -> list[CheckRow]:
    res = _mc_group(cfg, SchemeKind.PropSWOR, lanes)
    c, s = _model_components(), MC_SIZES
    n, m, N, B, T = s["n"], s["m"], s["N"], s["B"], s["T"]
    return _mc_rows(
        "propswor_repart_complete", var_repart_complete_propswor(c, n, m, N, T), res["repart-complete"],
        True, ("var_repart_complete_propswor",), "repart-estimators",
    ) + _mc_rows(
        "propswor_repart_incomplete", var_repart_incomplete_propswor(c, n, m, N, B, T),
        res["repart-incomplete"], True, ("var_repart_incomplete_propswor",), "repart-estimators",
    )


def check_incomplete_single(cfg: TheoryCheckConfig, lanes: int = 1) -> list[CheckRow]:
    # balanced model: at p = 0.1 a single pair is almost always 1 and the
    # variance estimate at B = 1 is too noisy for a 5% comparison
    dist = DiscreteAUCDistribution(0.5, 0.5)
    c = hoeffding_components_closed_auc(0.5, 0.5)
    n, m = 200, 40
    rows = []
    for i, B in enumerate((1, 10, 100)):
        ests = ("incomplete-single", "complete") if B == 1 else ("incomplete-single",)
        ec = EstimationConfig(dist=dist, kernel=AUCKernel(), n=n, m=m, N=1, B=B, estimators=ests)
        res = monte_carlo_many(ec, cfg.eq4_runs, derive_seed(cfg.seed, 4, i), lanes)
        rows += _mc_rows(
            f"incomplete_single_B{B}", var_incomplete_single(c, n, m, B), res["incomplete-single"],
            False, ("var_incomplete_single",), "incomplete-single",
        )
        if "complete" in res:
            rows += _mc_rows("complete_single", var_complete(c, n, m), res["complete"], False,
                             ("var_complete",), "incomplete-single")
    return rows


def check_propswr(cfg: TheoryCheckConfig, lanes: int = 1) -> list[CheckRow]:
    res = _mc_group(cfg, SchemeKind.PropSWR, lanes)
    c, s = _model_components(), MC_SIZES
    n, m, N, B, T = s["n"], s["m"], s["N"], s["B"], s["T"]
    g = "propswr"
    rows = _mc_rows("propswr_bootstrap_single", var_bootstrap_single(c, n, m), res["bootstrap-single"],
                    False, ("var_bootstrap_single",), g)
    rows += _mc_rows("propswr_local_complete", var_local_complete_propswr(c, n, m, N),
                     res["local-complete"], False, ("var_local_complete_propswr",), g)
    rows += _mc_rows("propswr_local_incomplete", var_local_incomplete_propswr(c, n, m, N, B),
                     res["local-incomplete"], False, ("var_local_incomplete_propswr",), g)
    rows += _mc_rows("propswr_repart_complete", var_repart_complete_propswr(c, n, m, N, T),
                     res["repart-complete"], False, ("var_repart_complete_propswr",), g)
    rows += _mc_rows("propswr_repart_incomplete", var_repart_incomplete_propswr(c, n, m, N, B, T),
                     res["repart-incomplete"], False, ("var_repart_incomplete_propswr",), g)
    rows += _mc_rows(
        "propswr_local_incomplete_exact_worker",
        var_local_incomplete_propswr(c, n, m, N, B, "exact"), res["local-incomplete"], False,
        ("var_worker_local_propswr",), g,
    )
    rows += _mc_rows(
        "propswr_repart_incomplete_exact_worker",
        var_repart_incomplete_propswr(c, n, m, N, B, T, "exact"), res["repart-incomplete"], False,
        ("var_worker_local_propswr",), g,
    )
    return rows


def check_unbiased(cfg: TheoryCheckConfig, lanes: int = 1) -> list[CheckRow]:
    target = enumerated_mean(AUCKernel(), MODEL)
    R = cfg.unbiased_runs
    rows = []
    for scheme in (SchemeKind.PropSWOR, SchemeKind.PropSWR):
        res = _mc_group(cfg, scheme, lanes)
        for e in _MC_ESTIMATORS:
            v = res[e].run_values[:R]
            mean = math.fsum(v.tolist()) / R
            se = float(np.std(v, ddof=1)) / math.sqrt(R)
            z = abs(mean - target) / se
            name = f"unbiased_{scheme.value}_{e}".replace("-", "_")
            rows.append(_row(name, target, mean, z, 3.0, group="unbiased"))
    return rows


# -- closed-form algebra -------------------------------------------------------------


def _random_components(rng) -> VarianceComponents:
    s0, s1, s2 = rng.uniform(0.01, 1.0, 3)
    return VarianceComponents.from_parts(float(s0), float(s1), float(s2))


def check_dominance(cfg: TheoryCheckConfig, lanes: int = 1) -> list[CheckRow]:
    rng = _rng(cfg, 6)
    min_gap, min_margin = math.inf, math.inf
    worst_codings, worst_diff = (0.0, 0.0, 0.0), 0.0
    done = 0
    while done < cfg.dominance_configs:
        N = int(rng.integers(2, 21))
        n0, m0 = int(rng.integers(1, 61)), int(rng.integers(1, 31))
        if n0 * m0 < 2:
            # one pair per worker: incomplete and complete coincide and the gap is 0
            continue
        T0 = int(rng.integers(1, 6))
        total = n0 * m0 * T0
        divisors = [b for b in range(1, total + 1) if total % b == 0]
        B = int(divisors[int(rng.integers(0, len(divisors)))])
        T = total // B
        n, m = N * n0, N * m0
        c = _random_components(rng)
        gap = dominance_gap(c, n, m, N, T, T0, B)
        gap1 = dominance_gap_unconstrained(c, n, m, N, T, T0, B)
        v_rc = var_repart_complete_propswor(c, n, m, N, T0)
        v_ri = var_repart_incomplete_propswor(c, n, m, N, B, T)
        min_gap = min(min_gap, gap)
        min_margin = min(min_margin, gap / v_rc)
        e = _rel(gap1, gap)
        if e >= worst_codings[0]:
            worst_codings = (e, gap, gap1)
        # measured on the variance scale: the subtraction cancels leading digits
        worst_diff = max(worst_diff, abs((v_ri - v_rc) - gap) / v_ri)
        done += 1
    return [
        _row("dominance_gap_min_positive", 0.0, min_gap, -min_margin, 0.0, passed=min_gap > 0,
             group="dominance", covers=("dominance_gap",)),
        _row("dominance_gap_codings_agree", worst_codings[1], worst_codings[2], worst_codings[0], 1e-12,
             group="dominance", covers=("dominance_gap_unconstrained",)),
        _row("dominance_gap_equals_variance_difference", 0.0, worst_diff, worst_diff, 1e-12,
             group="dominance"),
    ]


def check_alternate_forms(cfg: TheoryCheckConfig, lanes: int = 1) -> list[CheckRow]:
    rng = _rng(cfg, 16)
    pairs = {
        "local_complete_propswor_explicit": [0.0, 0.0, 0.0],
        "local_complete_propswr_explicit": [0.0, 0.0, 0.0],
        "repart_incomplete_propswor_expanded": [0.0, 0.0, 0.0],
    }

    def track(key, a, b):
        e = _rel(b, a)
        if e >= pairs[key][0]:
            pairs[key] = [e, a, b]

    for _ in range(200):
        N = int(rng.integers(1, 21))
        n, m = N * int(rng.integers(1, 60)), N * int(rng.integers(1, 30))
        B, T = int(rng.integers(1, 50)), int(rng.integers(1, 20))
        c = _random_components(rng)
        track("local_complete_propswor_explicit", var_local_complete_propswor(c, n, m, N),
              var_local_complete_propswor_explicit(c, n, m, N))
        track("local_complete_propswr_explicit", var_local_complete_propswr(c, n, m, N),
              var_local_complete_propswr_explicit(c, n, m, N))
        track("repart_incomplete_propswor_expanded", var_repart_incomplete_propswor(c, n, m, N, B, T),
              var_repart_incomplete_propswor_expanded(c, n, m, N, B, T))
    covers = {
        "local_complete_propswor_explicit": ("var_local_complete_propswor_explicit",),
        "local_complete_propswr_explicit": ("var_local_complete_propswr_explicit",),
        "repart_incomplete_propswor_expanded": ("var_repart_incomplete_propswor_expanded",),
    }
    return [
        _row(k, a, b, e, 1e-12, group="alternate-forms", covers=covers[k]) for k, (e, a, b) in pairs.items()
    ]


CURVE_COMPONENTS = {
    "auc": hoeffding_components_closed_auc(0.1, 0.9),
    "pairwise-dominant": VarianceComponents.from_parts(1.0, 1e-3, 1e-3),
    "linear-dominant": VarianceComponents.from_parts(1e-3, 1.0, 1.0),
}


def check_curves(cfg: TheoryCheckConfig, lanes: int = 1) -> list[CheckRow]:
    n, m, N = 100_000, 200, 100
    per_worker = n * m // (N * N)
    rows = []
    for scheme in (SchemeKind.PropSWOR, SchemeKind.PropSWR):
        worst = (math.inf, 0.0, 0.0)
        for c in CURVE_COMPONENTS.values():
            for T0 in range(1, 21):
                if scheme is SchemeKind.PropSWOR:
                    v_rc = var_repart_complete_propswor(c, n, m, N, T0)
                else:
                    v_rc = var_repart_complete_propswr(c, n, m, N, T0)
                total = per_worker * T0
                for B in (b for b in range(1, total + 1) if total % b == 0):
                    T = total // B
                    if scheme is SchemeKind.PropSWOR:
                        v_ri = var_repart_incomplete_propswor(c, n, m, N, B, T)
                    else:
                        v_ri = var_repart_incomplete_propswr(c, n, m, N, B, T)
                    margin = (v_ri - v_rc) / v_rc
                    if margin < worst[0]:
                        worst = (margin, v_rc, v_ri)
        margin, v_rc, v_ri = worst
        rows.append(_row(
            f"curves_{scheme.value}_complete_le_incomplete".replace("-", "_"),
            v_rc, v_ri, -margin, 0.0, group="curves",
        ))
    c = CURVE_COMPONENTS["auc"]
    lim = var_repart_complete_propswor(c, n, m, N, 10_000)
    base = var_complete(c, n, m)
    rows.append(_row("propswor_repart_complete_limit", base, lim, _rel(lim, base), 1e-3,
                     group="curves", covers=("var_complete",)))
    return rows


# -- relative variance study ----------------------------------------------------------------


def check_relative_variance(cfg: TheoryCheckConfig, lanes: int = 1) -> list[CheckRow]:
    rows_in = relative_variance_study(
        cfg.fig3_epsilons, ("complete", "local-complete", "repart-complete"),
        n=1000, m=40, N=8, T=4, R=cfg.fig3_runs, master_seed=derive_seed(cfg.seed, 8), lanes=lanes,
    )
    rows, gaps = [], {}
    for r in rows_in:
        z = abs(r.empirical_rel_var - r.theoretical_rel_var) / r.stderr
        name = f"relvar_eps{r.epsilon:g}_{r.estimator}".replace("-", "_")
        rows.append(_row(name, r.theoretical_rel_var, r.empirical_rel_var, z, 3.0, group="relative-variance"))
        gaps.setdefault(r.epsilon, {})[r.estimator] = r.empirical_rel_var
    ordered = sorted(gaps, reverse=True)
    g = [gaps[e]["local-complete"] / gaps[e]["repart-complete"] for e in ordered]
    steps = [b - a for a, b in zip(g, g[1:])]
    worst = min(steps) if steps else 0.0
    rows.append(_row("relvar_gap_increases_as_eps_decreases", g[0], g[-1], -worst, 0.0,
                     passed=all(s > 0 for s in steps), group="relative-variance"))
    return rows


# -- gradient and protocol --------------------------------------------------------------------


def check_subgradient(cfg: TheoryCheckConfig, lanes: int = 1) -> list[CheckRow]:
    rng = _rng(cfg, 11)
    d, lam, h = 3, 0.05, 1e-6
    worst = 0.0
    done = 0
    while done < cfg.gradient_points:
        theta = rng.standard_normal(d + 1)
        x, z = rng.standard_normal(d), rng.standard_normal(d)
        scorer = LinearScorer.from_theta(theta)
        if abs(1.0 - (x - z) @ scorer.w) < 1e-3:
            continue
        gw, gb = pair_gradient(scorer, x, z, lam)
        g = np.append(gw, gb)
        fd = np.empty(d + 1)
        for j in range(d + 1):
            e = np.zeros(d + 1)
            e[j] = h
            fp = pair_objective(LinearScorer.from_theta(theta + e), x, z, lam)
            fm = pair_objective(LinearScorer.from_theta(theta - e), x, z, lam)
            fd[j] = (fp - fm) / (2 * h)
        worst = max(worst, float(np.max(np.abs(fd - g)) / np.max(np.abs(g))))
        done += 1
    slack = math.inf
    for _ in range(cfg.convexity_probes):
        t0, t1 = rng.standard_normal(d + 1), rng.standard_normal(d + 1)
        x, z = rng.standard_normal(d), rng.standard_normal(d)
        s0 = LinearScorer.from_theta(t0)
        gw, gb = pair_gradient(s0, x, z, lam)
        lower = pair_objective(s0, x, z, lam) + float(np.append(gw, gb) @ (t1 - t0))
        slack = min(slack, pair_objective(LinearScorer.from_theta(t1), x, z, lam) - lower)
    return [
        _row("subgradient_finite_difference", 0.0, worst, worst, 1e-6, group="subgradient"),
        _row("subgradient_convexity_lower_bound", 0.0, slack, max(0.0, -slack), 1e-12, group="subgradient"),
    ]


def check_protocol(cfg: TheoryCheckConfig, lanes: int = 1) -> list[CheckRow]:
    rng = _rng(cfg, 13)
    agree = sizes_ok = 0
    for _ in range(cfg.protocol_pairs):
        seed = int(rng.integers(0, 2**63))
        epoch = int(rng.integers(0, 2**32))
        N = int(rng.integers(1, 17))
        n, m = N * int(rng.integers(1, 50)), N * int(rng.integers(1, 10))
        protocol = SeedProtocol(seed)
        agree += simulate_coordination_free(4, protocol, epoch, n, m, N)
        a = assign(SchemeKind.PropSWOR, n, m, N, protocol, epoch)
        sizes_ok += all(s == (n // N, m // N) for s in a.sizes())
    k = cfg.protocol_pairs
    return [
        _row("propswor_coordination_free", k, agree, (k - agree) / k, 0.0, group="protocol"),
        _row("propswor_partition_sizes", k, sizes_ok, (k - sizes_ok) / k, 0.0, group="protocol"),
    ]


# -- SWOR ----------------------------------------------------------------------------------------


def check_swor(cfg: TheoryCheckConfig, lanes: int = 1) -> list[CheckRow]:
    dist = GaussianProductDistribution(mu_x=0.0, sigma_x=1.0, mu_z=1.0, sigma_z=1.0)
    c = hoeffding_components_closed_product(dist)
    n, m, N, T, B = 10_000, 100, 10, 4, 1000
    ec = EstimationConfig(dist=dist, kernel=ProductKernel(), n=n, m=m, N=N, T=T, B=B,
                          scheme=SchemeKind.SWOR, estimators=_MC_ESTIMATORS)
    res = monte_carlo_many(ec, cfg.swor_runs, derive_seed(cfg.seed, 14), lanes)
    theory = {
        "local-complete": var_local_complete_propswor(c, n, m, N),
        "local-incomplete": var_local_incomplete_propswor(c, n, m, N, B),
        "repart-complete": var_repart_complete_propswor(c, n, m, N, T),
        "repart-incomplete": var_repart_incomplete_propswor(c, n, m, N, B, T),
    }
    rows = []
    for e, th in theory.items():
        emp = res[e].variance
        rows.append(_row(f"swor_{e}_near_propswor".replace("-", "_"), th, emp, _rel(emp, th), 0.2, group="swor"))
    ec = EstimationConfig(dist=MODEL, kernel=AUCKernel(), n=1000, m=10, N=10, T=1,
                          scheme=SchemeKind.SWOR, estimators=("local-complete",))
    r = monte_carlo_many(ec, cfg.swor_bias_runs, derive_seed(cfg.seed, 15), lanes)["local-complete"]
    target = enumerated_mean(AUCKernel(), MODEL)
    z = abs(r.mean - target) / r.standard_error_of_mean
    rows.append(_row("swor_local_complete_bias_exceeds_3se", target, r.mean, z, 3.0, passed=z > 3.0, group="swor"))
    return rows


# -- learning ----------------------------------------------------------------------------------------


def _sgd_rows(prefix: str, study: dict) -> list[CheckRow]:
    finals = {nr: np.array([t.final_test_auc for t in traces]) for nr, traces in study.items()}
    q = {nr: np.percentile(v, [25, 50, 75]) for nr, v in finals.items()}
    med25, medinf = q[25][1], q[math.inf][1]
    iqr25, iqrinf = q[25][2] - q[25][0], q[math.inf][2] - q[math.inf][0]
    return [
        _row(f"{prefix}_median_nr25_ge_nrinf", med25, medinf, medinf - med25, 0.0, group="sgd"),
        _row(f"{prefix}_iqr_nrinf_ge_nr25", iqr25, iqrinf, iqr25 - iqrinf, 0.0, group="sgd"),
    ]


def _sgd_base(s: SgdCheckConfig) -> SgdConfig:
    return SgdConfig(
        N=s.N, B=s.B, step_size=s.step_size, momentum=s.momentum, l2_coeff=s.l2_coeff,
        total_iterations=s.total_iterations, monitor_pairs=s.monitor_pairs,
        test_every=s.total_iterations,
    )


def synthetic_task(s: SgdCheckConfig, seed: int) -> tuple[TwoSampleDataset, TwoSampleDataset]:
    """Gaussian two-class data split into standardized train and test sets."""
    rng = SeedProtocol(seed).generator(0, Tag.DATA)
    npos = int(round(s.positive_fraction * s.n_total))
    full = GaussianClassesDistribution(dim=s.dim, separation=s.separation).sample(npos, s.n_total - npos, rng)
    return prepare_task(full, s.test_fraction, s.N, rng)


def check_sgd(cfg: TheoryCheckConfig, lanes: int = 1) -> list[CheckRow]:
    if not cfg.include_sgd:
        return []
    s = cfg.sgd
    tr, te = synthetic_task(s, derive_seed(cfg.seed, 9))
    rows = _sgd_rows("sgd_synthetic", repartition_study(
        tr, te, _sgd_base(s), s.n_r_values, s.runs, derive_seed(cfg.seed, 9, 1), lanes))
    if s.shuttle_path:
        rng = SeedProtocol(derive_seed(cfg.seed, 10)).generator(0, Tag.DATA)
        full = load_two_sample_csv(s.shuttle_path, s.shuttle_positive_labels)
        tr, te = prepare_task(subsample(full, s.shuttle_fraction, rng), s.test_fraction, s.N, rng)
        rows += _sgd_rows("sgd_shuttle", repartition_study(
            tr, te, _sgd_base(s), s.n_r_values, s.runs, derive_seed(cfg.seed, 10, 1), lanes))
    return rows


#: Check groups keyed by name, in output order.
CHECK_GROUPS = {
    "hoeffding": check_hoeffding,
    "local-estimators": check_local_estimators,
    "repart-estimators": check_repart_estimators,
    "incomplete-single": check_incomplete_single,
    "propswr": check_propswr,
    "dominance": check_dominance,
    "alternate-forms": check_alternate_forms,
    "curves": check_curves,
    "relative-variance": check_relative_variance,
    "sgd": check_sgd,
    "unbiased": check_unbiased,
    "subgradient": check_subgradient,
    "protocol": check_protocol,
    "swor": check_swor,
}

# closed forms exercised inside check_curves and the row helpers beyond their `covers`
_IMPLICIT_COVERS = {
    "curves": ("var_repart_complete_propswr", "var_repart_incomplete_propswr",
               "var_repart_complete_propswor", "var_repart_incomplete_propswor"),
}


def run_group(name: str, cfg: TheoryCheckConfig, lanes: int = 1) -> list[CheckRow]:
    rows = CHECK_GROUPS[name](cfg, lanes)
    return [r if r.group else CheckRow(**{**r.__dict__, "group": name}) for r in rows]


def covered_closed_forms(rows) -> set[str]:
    names = set()
    for r in rows:
        names.update(r.covers)
        names.update(_IMPLICIT_COVERS.get(r.group, ()))
    return names


def run_checks(cfg: TheoryCheckConfig, lanes: int = 1, groups=None) -> list[CheckRow]:
    """Run the selected groups (all by default) and append the coverage row."""
    names = list(CHECK_GROUPS) if groups is None else list(groups)
    rows = []
    for g in names:
        rows += run_group(g, cfg, lanes)
    if groups is None:
        covered = covered_closed_forms(rows) & set(CLOSED_FORMS)
        missing = sorted(set(CLOSED_FORMS) - covered)
        rows.append(_row("closed_form_coverage", len(CLOSED_FORMS), len(covered), len(missing), 0,
                         group="coverage"))
    return rows
