"""Closed-form variances of the single-machine and distributed estimators.

All functions take a :class:`~tuplewise.hoeffding.VarianceComponents` and the
sample sizes ``n`` (X sample) and ``m`` (Z sample). Where a long formula has a
second, independently reorganized expression, both are coded here and the
tests assert that they agree.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .hoeffding import VarianceComponents
from .sampling import DivisibilityError, SchemeKind

__all__ = [
    "Strategy",
    "StrategyVariance",
    "BudgetError",
    "var_complete",
    "var_incomplete_single",
    "var_local_complete_propswor",
    "var_local_complete_propswor_explicit",
    "var_local_incomplete_propswor",
    "var_repart_complete_propswor",
    "var_repart_incomplete_propswor",
    "var_repart_incomplete_propswor_expanded",
    "var_bootstrap_single",
    "var_local_complete_propswr",
    "var_local_complete_propswr_explicit",
    "var_worker_local_propswr",
    "var_local_incomplete_propswr",
    "var_repart_complete_propswr",
    "var_repart_incomplete_propswr",
    "pair_budget",
    "dominance_gap",
    "dominance_gap_unconstrained",
    "closed_form_variance",
    "CurvePoint",
    "variance_curves",
    "CLOSED_FORMS",
]


class Strategy(enum.Enum):
    Complete = "complete"
    IncompleteSingle = "incomplete-single"
    LocalComplete = "local-complete"
    LocalIncomplete = "local-incomplete"
    RepartComplete = "repart-complete"
    RepartIncomplete = "repart-incomplete"
    BootstrapSingle = "bootstrap-single"

    @classmethod
    def parse(cls, value) -> "Strategy":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        for member in cls:
            if key in (member.value, member.name.lower()):
                return member
        raise ValueError(f"unknown strategy {value!r}; choose from {[s.value for s in cls]}")


class BudgetError(ValueError):
    """The pair budgets of two strategies are not exactly equal."""


@dataclass(frozen=True)
class StrategyVariance:
    strategy: Strategy
    scheme: SchemeKind
    variance: float
    pair_budget: int

    def __post_init__(self):
        if self.variance < 0:
            raise ValueError(f"variance must be nonnegative, got {self.variance}")


def _check_sizes(n: int, m: int) -> None:
    if n < 1 or m < 1:
        raise ValueError(f"sample sizes must be positive, got n={n}, m={m}")


def _check_workers(n: int, m: int, N: int) -> None:
    _check_sizes(n, m)
    if N < 1:
        raise ValueError(f"N must be positive, got {N}")
    if n % N or m % N:
        raise DivisibilityError(f"N={N} must divide n={n} and m={m}")


def _check_pos(name: str, v: int) -> None:
    if v < 1:
        raise ValueError(f"{name} must be at least 1, got {v}")


# -- single machine -----------------------------------------------------------


def var_complete(c: VarianceComponents, n: int, m: int) -> float:
    """Var(U_n) = sigma1^2/n + sigma2^2/m + sigma0^2/(nm)."""
    _check_sizes(n, m)
    return c.sigma1_sq / n + c.sigma2_sq / m + c.sigma0_sq / (n * m)


def var_incomplete_single(c: VarianceComponents, n: int, m: int, B: int) -> float:
    """Variance of the incomplete statistic built from B pairs drawn with replacement."""
    _check_pos("B", B)
    return (1 - 1 / B) * var_complete(c, n, m) + c.sigma_sq / B


# -- prop-SWOR ----------------------------------------------------------------


def var_local_complete_propswor(c: VarianceComponents, n: int, m: int, N: int) -> float:
    """Average of the N worker-local complete statistics, no repartitioning."""
    _check_workers(n, m, N)
    return var_complete(c, n, m) + (N - 1) * c.sigma0_sq / (n * m)


def var_local_complete_propswor_explicit(c: VarianceComponents, n: int, m: int, N: int) -> float:
    """Same quantity from the worker sizes: Var(U_{R_i}) / N with |R_i| = (n/N, m/N)."""
    _check_workers(n, m, N)
    n0, m0 = n // N, m // N
    return (c.sigma1_sq / n0 + c.sigma2_sq / m0 + c.sigma0_sq / (n0 * m0)) / N


def var_local_incomplete_propswor(c: VarianceComponents, n: int, m: int, N: int, B: int) -> float:
    """Average of N worker-local incomplete statistics with B pairs each."""
    _check_pos("B", B)
    return (1 - 1 / B) * var_local_complete_propswor(c, n, m, N) + c.sigma_sq / (N * B)


def var_repart_complete_propswor(c: VarianceComponents, n: int, m: int, N: int, T: int) -> float:
    """Local complete statistics averaged over T prop-SWOR repartitions."""
    _check_workers(n, m, N)
    _check_pos("T", T)
    return var_complete(c, n, m) + (N - 1) * c.sigma0_sq / (n * m * T)


def var_repart_incomplete_propswor(
    c: VarianceComponents, n: int, m: int, N: int, B: int, T: int
) -> float:
    """Local incomplete statistics (B pairs per worker) over T repartitions."""
    _check_pos("B", B)
    _check_pos("T", T)
    return (
        var_repart_complete_propswor(c, n, m, N, T)
        - var_local_complete_propswor(c, n, m, N) / (T * B)
        + c.sigma_sq / (N * T * B)
    )


def var_repart_incomplete_propswor_expanded(
    c: VarianceComponents, n: int, m: int, N: int, B: int, T: int
) -> float:
    """Term-by-term reorganization of :func:`var_repart_incomplete_propswor`."""
    _check_workers(n, m, N)
    _check_pos("B", B)
    _check_pos("T", T)
    TB = T * B
    return (
        c.sigma_sq / (N * TB)
        + (1 - 1 / TB) * (c.sigma1_sq / n + c.sigma2_sq / m)
        + c.sigma0_sq / (n * m) * (1 + (N - 1) / T - N / TB)
    )


# -- prop-SWR -----------------------------------------------------------------


def var_bootstrap_single(c: VarianceComponents, n: int, m: int) -> float:
    """Complete statistic on one with-replacement resample of sizes (n, m)."""
    _check_sizes(n, m)
    return (
        c.sigma1_sq / n * (2 - 1 / n)
        + c.sigma2_sq / m * (2 - 1 / m)
        + c.sigma0_sq / (n * m) * (4 - 2 * (1 / n + 1 / m) + 1 / (n * m))
    )


def var_local_complete_propswr(c: VarianceComponents, n: int, m: int, N: int) -> float:
    """Average of N worker-local complete statistics under prop-SWR."""
    _check_workers(n, m, N)
    return var_bootstrap_single(c, n, m) + c.sigma0_sq / (n * m) * (N - 1) * (1 - 1 / n) * (
        1 - 1 / m
    )


def var_local_complete_propswr_explicit(c: VarianceComponents, n: int, m: int, N: int) -> float:
    """Explicit form of :func:`var_local_complete_propswr` grouped by component."""
    _check_workers(n, m, N)
    return (
        c.sigma1_sq / n * (2 - 1 / n)
        + c.sigma2_sq / m * (2 - 1 / m)
        + c.sigma0_sq / (n * m) * ((3 - 1 / n - 1 / m) + N * (1 - 1 / n) * (1 - 1 / m))
    )


def var_worker_local_propswr(c: VarianceComponents, n: int, m: int, N: int) -> float:
    """Exact variance of one worker's complete statistic under prop-SWR.

    A worker holds n/N draws with replacement from the n X points and m/N
    draws from the m Z points. Conditioning on the data gives

    ``sigma1^2/n (1 + N(1 - 1/n)) + sigma2^2/m (1 + N(1 - 1/m))
    + sigma0^2/(nm) (N(1 - 1/n) + 1)(N(1 - 1/m) + 1)``.

    This differs from ``var_bootstrap_single(c, n/N, m/N)``, which resamples
    n/N points out of n/N rather than out of n.
    """
    _check_workers(n, m, N)
    a = N * (1 - 1 / n)
    b = N * (1 - 1 / m)
    return (
        c.sigma1_sq / n * (1 + a)
        + c.sigma2_sq / m * (1 + b)
        + c.sigma0_sq / (n * m) * (a + 1) * (b + 1)
    )


def _propswr_worker_term(c, n, m, N, worker_variance: str) -> float:
    if worker_variance == "bootstrap":
        return var_bootstrap_single(c, n // N, m // N)
    if worker_variance == "exact":
        return var_worker_local_propswr(c, n, m, N)
    raise ValueError(f"worker_variance must be 'bootstrap' or 'exact', got {worker_variance!r}")


def var_local_incomplete_propswr(
    c: VarianceComponents, n: int, m: int, N: int, B: int, worker_variance: str = "bootstrap"
) -> float:
    """Average of N worker-local incomplete statistics under prop-SWR.

    Parameters
    ----------
    worker_variance : {'bootstrap', 'exact'}
        How the variance of one worker's complete statistic is evaluated.
        ``'bootstrap'`` uses ``var_bootstrap_single`` at ``(n/N, m/N)``;
        ``'exact'`` uses :func:`var_worker_local_propswr`. See that function
        for why the two differ.
    """
    _check_pos("B", B)
    w = _propswr_worker_term(c, n, m, N, worker_variance)
    return var_local_complete_propswr(c, n, m, N) + (c.sigma_sq - w) / (N * B)


def var_repart_complete_propswr(c: VarianceComponents, n: int, m: int, N: int, T: int) -> float:
    """Local complete statistics averaged over T prop-SWR repartitions."""
    _check_pos("T", T)
    base = var_complete(c, n, m)
    return base + (var_local_complete_propswr(c, n, m, N) - base) / T


def var_repart_incomplete_propswr(
    c: VarianceComponents,
    n: int,
    m: int,
    N: int,
    B: int,
    T: int,
    worker_variance: str = "bootstrap",
) -> float:
    """Local incomplete statistics over T prop-SWR repartitions."""
    _check_pos("B", B)
    _check_pos("T", T)
    w = _propswr_worker_term(c, n, m, N, worker_variance)
    return var_repart_complete_propswr(c, n, m, N, T) + (c.sigma_sq - w) / (N * B * T)


# -- budgets and dominance ----------------------------------------------------


def pair_budget(strategy, n: int, m: int, N: int = 1, B: int = 1, T: int = 1) -> int:
    """Number of kernel evaluations a strategy consumes."""
    s = Strategy.parse(strategy)
    if s is Strategy.Complete or s is Strategy.BootstrapSingle:
        return n * m
    if s is Strategy.IncompleteSingle:
        return B
    if s is Strategy.LocalComplete:
        return (n * m) // N
    if s is Strategy.LocalIncomplete:
        return N * B
    if s is Strategy.RepartComplete:
        return T * (n * m) // N
    return N * B * T


def _check_budget(n, m, N, T, T0, B) -> None:
    for name, v in (("N", N), ("T", T), ("T0", T0), ("B", B)):
        _check_pos(name, v)
    # N B T = n m T0 / N, compared without division
    if N * N * B * T != n * m * T0:
        raise BudgetError(
            f"unequal pair budgets: N*B*T={N * B * T} but n*m*T0/N={n * m * T0 / N}"
        )


def dominance_gap(c: VarianceComponents, n: int, m: int, N: int, T: int, T0: int, B: int) -> float:
    """Variance excess of the repartitioned incomplete estimator at equal budget.

    Returns Var(incomplete, B pairs per worker, T rounds) minus
    Var(complete, T0 rounds) under prop-SWOR, with the budget constraint
    ``N B T = n m T0 / N`` substituted.

    Raises
    ------
    BudgetError
        If the two pair budgets differ.
    """
    _check_workers(n, m, N)
    _check_budget(n, m, N, T, T0, B)
    TB = T * B
    s0 = c.sigma0_sq * ((N - 1) / (n * m * T) * (1 - 1 / B) + (1 / N**2 - 1 / (n * m)) / TB)
    s1 = c.sigma1_sq / TB * (1 / N - 1 / n)
    s2 = c.sigma2_sq / TB * (1 / N - 1 / m)
    return s0 + s1 + s2


def dominance_gap_unconstrained(
    c: VarianceComponents, n: int, m: int, N: int, T: int, T0: int, B: int
) -> float:
    """Same difference before the budget constraint is substituted.

    Valid for any (T, T0, B); equals :func:`dominance_gap` when the budgets match.
    """
    _check_workers(n, m, N)
    TB = T * B
    s0 = c.sigma0_sq * (
        (N - 1) / (n * m) * (1 / T - 1 / T0) - N / (n * m * TB) + 1 / (N * TB)
    )
    s1 = c.sigma1_sq / TB * (1 / N - 1 / n)
    s2 = c.sigma2_sq / TB * (1 / N - 1 / m)
    return s0 + s1 + s2


# -- dispatch -----------------------------------------------------------------


def closed_form_variance(
    strategy,
    scheme,
    c: VarianceComponents,
    n: int,
    m: int,
    N: int = 1,
    B: int = 1,
    T: int = 1,
    worker_variance: str = "bootstrap",
) -> StrategyVariance:
    """Closed-form variance and pair budget of a strategy under a scheme.

    Single-machine strategies ignore the scheme. Distributed strategies accept
    ``PropSWOR`` and ``PropSWR``; no closed form exists for SWOR.
    """
    s = Strategy.parse(strategy)
    sch = SchemeKind.parse(scheme)
    if s is Strategy.Complete:
        v = var_complete(c, n, m)
    elif s is Strategy.IncompleteSingle:
        v = var_incomplete_single(c, n, m, B)
    elif s is Strategy.BootstrapSingle:
        v = var_bootstrap_single(c, n, m)
    elif sch is SchemeKind.PropSWOR:
        v = {
            Strategy.LocalComplete: lambda: var_local_complete_propswor(c, n, m, N),
            Strategy.LocalIncomplete: lambda: var_local_incomplete_propswor(c, n, m, N, B),
            Strategy.RepartComplete: lambda: var_repart_complete_propswor(c, n, m, N, T),
            Strategy.RepartIncomplete: lambda: var_repart_incomplete_propswor(c, n, m, N, B, T),
        }[s]()
    elif sch is SchemeKind.PropSWR:
        v = {
            Strategy.LocalComplete: lambda: var_local_complete_propswr(c, n, m, N),
            Strategy.LocalIncomplete: lambda: var_local_incomplete_propswr(
                c, n, m, N, B, worker_variance
            ),
            Strategy.RepartComplete: lambda: var_repart_complete_propswr(c, n, m, N, T),
            Strategy.RepartIncomplete: lambda: var_repart_incomplete_propswr(
                c, n, m, N, B, T, worker_variance
            ),
        }[s]()
    else:
        raise ValueError(f"no closed-form variance for scheme {sch.value}")
    return StrategyVariance(s, sch, float(v), pair_budget(s, n, m, N, B, T))


@dataclass(frozen=True)
class CurvePoint:
    """One point of a variance versus pair-budget curve. ``B`` is None for complete strategies."""

    strategy: Strategy
    scheme: SchemeKind
    T: int
    B: int | None
    pair_budget: int
    variance: float


def variance_curves(
    c: VarianceComponents,
    n: int,
    m: int,
    N: int,
    T_values,
    B_values,
    schemes=(SchemeKind.PropSWOR, SchemeKind.PropSWR),
    worker_variance: str = "bootstrap",
) -> list[CurvePoint]:
    """Closed-form variance curves of the repartitioned estimators.

    For each scheme: the complete statistic, the repartitioned complete
    estimator for every T and the repartitioned incomplete estimator for every
    (B, T). Under prop-SWR the single bootstrap statistic is added as a
    reference point.

    Raises
    ------
    ValueError
        If a sweep list is empty or holds a value below 1.
    """
    T_values = [int(t) for t in T_values]
    B_values = [int(b) for b in B_values]
    if not T_values or not B_values:
        raise ValueError("T_values and B_values must be nonempty")
    if min(T_values) < 1 or min(B_values) < 1:
        raise ValueError("every T and B must be at least 1")
    out = []

    def add(strategy, scheme, T, B):
        r = closed_form_variance(strategy, scheme, c, n, m, N, B or 1, T, worker_variance)
        out.append(CurvePoint(r.strategy, r.scheme, T, B, r.pair_budget, r.variance))

    for scheme in schemes:
        scheme = SchemeKind.parse(scheme)
        add(Strategy.Complete, scheme, 1, None)
        if scheme is SchemeKind.PropSWR:
            add(Strategy.BootstrapSingle, scheme, 1, None)
        for T in T_values:
            add(Strategy.RepartComplete, scheme, T, None)
        for B in B_values:
            for T in T_values:
                add(Strategy.RepartIncomplete, scheme, T, B)
    return out


#: Every closed-form function, keyed by name. The theory-check harness asserts
#: it covers each entry.
CLOSED_FORMS = {
    f.__name__: f
    for f in (
        var_complete,
        var_incomplete_single,
        var_local_complete_propswor,
        var_local_complete_propswor_explicit,
        var_local_incomplete_propswor,
        var_repart_complete_propswor,
        var_repart_incomplete_propswor,
        var_repart_incomplete_propswor_expanded,
        var_bootstrap_single,
        var_local_complete_propswr,
        var_local_complete_propswr_explicit,
        var_worker_local_propswr,
        var_local_incomplete_propswr,
        var_repart_complete_propswr,
        var_repart_incomplete_propswr,
        dominance_gap,
        dominance_gap_unconstrained,
    )
}
