"""Simulated master/worker estimation and replicated Monte Carlo studies.

The simulation is logical: communication is counted in a :class:`CostLedger`
rather than timed. Monte Carlo replications derive every seed from
``(master_seed, run index)``, so results do not depend on how runs are spread
over processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import DiscreteAUCDistribution, TwoSampleDataset
from .estimators import (
    EstimateReport,
    complete_two_sample,
    incomplete_two_sample,
    local_complete_average,
    pair_uniforms,
    repartitioned_complete,
    repartitioned_incomplete,
    worker_complete,
    worker_incomplete,
)
from .hoeffding import hoeffding_components_closed_auc
from .kernels import AUCKernel, Kernel
from .sampling import SchemeKind, SeedProtocol, Tag, assign, derive_seed, records_moved
from .variance import Strategy, closed_form_variance, var_complete

__all__ = [
    "CostLedger",
    "Worker",
    "Master",
    "run_estimation",
    "EstimationConfig",
    "MonteCarloResult",
    "evaluate_estimators",
    "monte_carlo",
    "monte_carlo_many",
    "jackknife_variance_se",
    "relative_variance_study",
    "RelativeVarianceRow",
]


@dataclass
class CostLedger:
    """Counters for one simulated estimation run."""

    pairs_evaluated: int = 0
    messages_to_master: int = 0
    broadcasts: int = 0
    records_moved: int = 0
    repartitions: int = 0

    def __post_init__(self):
        for name in ("pairs_evaluated", "messages_to_master", "broadcasts", "records_moved", "repartitions"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


class Worker:
    """One simulated worker holding index sets into the shared dataset."""

    def __init__(self, wid: int, ds: TwoSampleDataset, kernel: Kernel, protocol: SeedProtocol):
        self.wid = wid
        self.ds = ds
        self.kernel = kernel
        self.protocol = protocol
        self.xi = np.empty(0, dtype=np.int64)
        self.zi = np.empty(0, dtype=np.int64)

    def receive(self, xi: np.ndarray, zi: np.ndarray) -> None:
        self.xi, self.zi = xi, zi

    def compute(self, epoch: int, N: int, B: int | None):
        """Local statistic for this epoch; ``B=None`` means complete."""
        if B is None:
            return worker_complete(self.kernel, self.ds, self.xi, self.zi)
        # every worker rebuilds the epoch's uniform block from the shared seed
        # and keeps its own row, so no draw is communicated
        u = pair_uniforms(self.protocol.generator(epoch, Tag.PAIRS), N, B)[self.wid]
        return worker_incomplete(self.kernel, self.ds, self.xi, self.zi, u)


class Master:
    """Drives repartitioning, collects one scalar per worker per round."""

    def __init__(self, ds, scheme, N, kernel, protocol):
        self.ds = ds
        self.scheme = SchemeKind.parse(scheme)
        self.N = N
        self.protocol = protocol
        self.workers = [Worker(i, ds, kernel, protocol) for i in range(N)]
        self.ledger = CostLedger()
        self._current = None

    def repartition(self, epoch: int) -> None:
        a = assign(self.scheme, self.ds.n, self.ds.m, self.N, self.protocol, epoch)
        self.ledger.records_moved += records_moved(self._current, a)
        if self._current is not None:
            self.ledger.repartitions += 1
        for w, (xi, zi) in zip(self.workers, a.per_worker):
            w.receive(xi, zi)
        self._current = a

    def round(self, epoch: int, B: int | None) -> tuple[float, int]:
        self.ledger.broadcasts += 1
        values = []
        for w in self.workers:
            v, p = w.compute(epoch, self.N, B)
            self.ledger.messages_to_master += 1
            self.ledger.pairs_evaluated += p
            values.append(v)
        zeros = sum(v is None for v in values)
        return math.fsum(0.0 if v is None else v for v in values) / self.N, zeros


def run_estimation(
    ds: TwoSampleDataset,
    scheme: SchemeKind,
    N: int,
    T: int,
    mode: str,
    kernel: Kernel,
    protocol: SeedProtocol,
    B: int | None = None,
) -> tuple[EstimateReport, CostLedger]:
    """Run the master/worker protocol for T rounds.

    Parameters
    ----------
    mode : {'complete', 'incomplete'}
        Whether workers compute complete local statistics or draw ``B`` pairs.

    Returns
    -------
    report : EstimateReport
        Bitwise equal to :func:`~tuplewise.estimators.repartitioned_complete`
        or :func:`~tuplewise.estimators.repartitioned_incomplete`.
    ledger : CostLedger
        ``records_moved`` includes the initial distribution of all records.
    """
    if mode not in ("complete", "incomplete"):
        raise ValueError(f"mode must be 'complete' or 'incomplete', got {mode!r}")
    if mode == "incomplete" and (B is None or B < 1):
        raise ValueError("incomplete mode needs B >= 1")
    if T < 1:
        raise ValueError(f"T must be at least 1, got {T}")
    master = Master(ds, scheme, N, kernel, protocol)
    per_round, zeros = [], 0
    for t in range(T):
        master.repartition(t)
        v, z = master.round(t, None if mode == "complete" else int(B))
        per_round.append(v)
        zeros += z
    report = EstimateReport(
        value=math.fsum(per_round) / T,
        pairs_evaluated=master.ledger.pairs_evaluated,
        rounds=T,
        per_round_values=tuple(per_round),
        scheme=master.scheme,
        zero_partition_rounds=zeros,
    )
    return report, master.ledger


# -- Monte Carlo --------------------------------------------------------------

_ESTIMATORS = tuple(s.value for s in Strategy)


@dataclass(frozen=True)
class EstimationConfig:
    """One replicated estimation experiment.

    ``estimators`` lists :class:`~tuplewise.variance.Strategy` values; all of
    them are evaluated on the same dataset within a replication.
    """

    dist: object = field(default_factory=lambda: DiscreteAUCDistribution(0.1, 0.9))
    kernel: Kernel = field(default_factory=AUCKernel)
    n: int = 400
    m: int = 40
    N: int = 8
    T: int = 1
    B: int = 10
    scheme: SchemeKind = SchemeKind.PropSWOR
    estimators: tuple = ("local-complete",)

    def __post_init__(self):
        object.__setattr__(self, "scheme", SchemeKind.parse(self.scheme))
        ests = tuple(Strategy.parse(e).value for e in self.estimators)
        if not ests:
            raise ValueError("at least one estimator is required")
        object.__setattr__(self, "estimators", ests)
        for name in ("n", "m", "N", "T", "B"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be positive")


def evaluate_estimators(ds: TwoSampleDataset, config: EstimationConfig, protocol: SeedProtocol) -> list[float]:
    """Value of every configured estimator on one dataset, in config order."""
    c = config
    needs_rc = {"repart-complete", "local-complete"} & set(c.estimators)
    needs_ri = {"repart-incomplete", "local-incomplete"} & set(c.estimators)
    assignments = None
    if needs_rc or needs_ri:
        assignments = [assign(c.scheme, ds.n, ds.m, c.N, protocol, t) for t in range(c.T)]
    rc = ri = None
    if needs_rc:
        rc = repartitioned_complete(ds, c.scheme, c.N, c.T, c.kernel, protocol, assignments)
    if needs_ri:
        ri = repartitioned_incomplete(ds, c.scheme, c.N, c.T, c.B, c.kernel, protocol, assignments)
    out = []
    for e in c.estimators:
        if e == "complete":
            out.append(complete_two_sample(ds, c.kernel))
        elif e == "incomplete-single":
            out.append(incomplete_two_sample(ds, c.kernel, c.B, protocol.generator(0, Tag.EVAL)))
        elif e == "bootstrap-single":
            boot = SeedProtocol(derive_seed(protocol.master_seed, 1))
            a = assign(SchemeKind.PropSWR, ds.n, ds.m, 1, boot, 0)
            out.append(local_complete_average(ds, a, c.kernel).value)
        elif e == "local-complete":
            out.append(rc.per_round_values[0])
        elif e == "local-incomplete":
            out.append(ri.per_round_values[0])
        elif e == "repart-complete":
            out.append(rc.value)
        else:
            out.append(ri.value)
    return out


def _run_chunk(config: EstimationConfig, master_seed: int, start: int, stop: int) -> np.ndarray:
    out = np.empty((stop - start, len(config.estimators)))
    for r in range(start, stop):
        protocol = SeedProtocol(derive_seed(master_seed, r))
        ds = config.dist.sample(config.n, config.m, protocol.generator(0, Tag.DATA))
        out[r - start] = evaluate_estimators(ds, config, protocol)
    return out


def jackknife_variance_se(values: np.ndarray) -> float:
    """Jackknife standard error of the unbiased sample variance.

    The leave-one-out variances have a closed form, so this is O(R).
    """
    x = np.asarray(values, dtype=float)
    R = x.shape[0]
    if R < 3:
        raise ValueError("need at least three values")
    d = x - x.mean()
    ss = float(np.sum(d * d))
    loo = (ss - d * d * R / (R - 1)) / (R - 2)
    return float(np.sqrt((R - 1) / R * np.sum((loo - loo.mean()) ** 2)))


@dataclass(frozen=True)
class MonteCarloResult:
    """Replication values of one estimator and their summary statistics."""

    run_values: np.ndarray
    mean: float
    variance: float
    standard_error_of_mean: float
    variance_se: float

    @classmethod
    def from_values(cls, values) -> "MonteCarloResult":
        v = np.array(values, dtype=float)
        v.setflags(write=False)
        R = v.shape[0]
        if R < 2:
            raise ValueError("need at least two runs")
        mean = math.fsum(v.tolist()) / R
        var = math.fsum(((v - mean) ** 2).tolist()) / (R - 1)
        vse = jackknife_variance_se(v) if R >= 3 else float("nan")
        return cls(v, mean, var, math.sqrt(var / R), vse)

    @property
    def runs(self) -> int:
        return self.run_values.shape[0]


def monte_carlo_many(
    config: EstimationConfig, R: int, master_seed: int, lanes: int = 1
) -> dict[str, MonteCarloResult]:
    """R replications of every estimator in ``config``.

    Each replication draws a fresh dataset and fresh partition randomness from
    ``derive_seed(master_seed, r)``. With ``lanes > 1`` contiguous blocks of
    runs go to worker processes and are reassembled in run order, so the
    output is identical for any lane count.
    """
    if R < 2:
        raise ValueError("R must be at least 2")
    lanes = max(1, int(lanes))
    if lanes == 1 or R < 2 * lanes:
        vals = _run_chunk(config, master_seed, 0, R)
    else:
        bounds = np.linspace(0, R, lanes + 1).astype(int)
        with ProcessPoolExecutor(max_workers=lanes) as ex:
            parts = list(
                ex.map(
                    _run_chunk,
                    [config] * lanes,
                    [master_seed] * lanes,
                    bounds[:-1].tolist(),
                    bounds[1:].tolist(),
                )
            )
        vals = np.concatenate(parts)
    return {e: MonteCarloResult.from_values(vals[:, j]) for j, e in enumerate(config.estimators)}


def monte_carlo(config: EstimationConfig, R: int, master_seed: int, lanes: int = 1) -> MonteCarloResult:
    """Monte Carlo result of a single-estimator config."""
    if len(config.estimators) != 1:
        raise ValueError("monte_carlo takes one estimator; use monte_carlo_many for several")
    return next(iter(monte_carlo_many(config, R, master_seed, lanes).values()))


@dataclass(frozen=True)
class RelativeVarianceRow:
    epsilon: float
    estimator: str
    empirical_rel_var: float
    theoretical_rel_var: float
    stderr: float
    runs: int


def relative_variance_study(
    eps_grid,
    estimators,
    n: int,
    m: int,
    N: int,
    T: int,
    R: int,
    master_seed: int,
    B: int = 1,
    lanes: int = 1,
) -> list[RelativeVarianceRow]:
    """Empirical and closed-form variances relative to Var(U_n) on the p = 1 - q = eps family.

    ``stderr`` is the jackknife standard error of the empirical variance,
    divided by Var(U_n) as well.
    """
    rows = []
    for i, eps in enumerate(eps_grid):
        eps = float(eps)
        if not 0.0 < eps <= 0.5:
            raise ValueError(f"epsilon must lie in (0, 0.5], got {eps}")
        dist = DiscreteAUCDistribution.from_epsilon(eps)
        cfg = EstimationConfig(
            dist=dist, kernel=AUCKernel(), n=n, m=m, N=N, T=T, B=B,
            scheme=SchemeKind.PropSWOR, estimators=tuple(estimators),
        )
        res = monte_carlo_many(cfg, R, derive_seed(master_seed, 0xE5, i), lanes)
        comps = hoeffding_components_closed_auc(dist.p, dist.q)
        vu = var_complete(comps, n, m)
        for e, r in res.items():
            th = closed_form_variance(e, SchemeKind.PropSWOR, comps, n, m, N, B, T).variance
            rows.append(RelativeVarianceRow(eps, e, r.variance / vu, th / vu, r.variance_se / vu, R))
    return rows

