"""Complete, incomplete and distributed U-statistic estimators.

Distributed estimators average worker-local statistics. The per-worker
computations live in :func:`worker_complete` and :func:`worker_incomplete`;
the simulated cluster calls the same two functions, which is what makes its
results bitwise equal to the ones computed here.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .data import GeneralizedSamples, TwoSampleDataset
from .kernels import GeneralizedKernel, Kernel
from .sampling import PartitionAssignment, SchemeKind, SeedProtocol, Tag, assign

__all__ = [
    "EstimateReport",
    "TupleBudgetError",
    "complete_generalized",
    "incomplete_generalized",
    "complete_two_sample",
    "incomplete_two_sample",
    "workers_complete",
    "workers_incomplete",
    "worker_complete",
    "worker_incomplete",
    "pair_uniforms",
    "local_complete_average",
    "local_incomplete_average",
    "repartitioned_complete",
    "repartitioned_incomplete",
    "DEFAULT_MAX_TUPLES",
]

DEFAULT_MAX_TUPLES = 50_000_000
_CHUNK = 1 << 20


class TupleBudgetError(ValueError):
    """The complete statistic would need more kernel evaluations than allowed."""


@dataclass(frozen=True)
class EstimateReport:
    """Value of a distributed estimator plus its accounting.

    Attributes
    ----------
    value : float
        The estimate.
    pairs_evaluated : int
        Kernel evaluations performed.
    rounds : int
        Number of repartition epochs T.
    per_round_values : tuple of float or None
        Estimate of each epoch, when more than one epoch is involved.
    scheme : SchemeKind
    zero_partition_rounds : int
        Number of (worker, epoch) pairs where a worker held no pair and
        contributed 0 to the average.
    """

    value: float
    pairs_evaluated: int
    rounds: int
    per_round_values: tuple | None
    scheme: SchemeKind
    zero_partition_rounds: int = 0

    def __post_init__(self):
        if self.pairs_evaluated < 0:
            raise ValueError("pairs_evaluated must be nonnegative")
        if self.per_round_values is not None and len(self.per_round_values) != self.rounds:
            raise ValueError("per_round_values must have one entry per round")


def _mean_of_chunks(chunk_sums, total: int) -> float:
    return math.fsum(chunk_sums) / total


def _flat_mean(values: np.ndarray) -> float:
    flat = values.reshape(-1)
    sums = [float(np.sum(flat[i : i + _CHUNK])) for i in range(0, flat.size, _CHUNK)]
    return _mean_of_chunks(sums, flat.size)


def _check_kernel_fits(kernel: GeneralizedKernel, samples: GeneralizedSamples) -> None:
    if tuple(kernel.degrees) != samples.degrees:
        raise ValueError(f"kernel degrees {kernel.degrees} do not match samples {samples.degrees}")
    for s in samples.samples:
        kernel.check_dim(s.shape[1])


def complete_generalized(
    samples: GeneralizedSamples,
    kernel: GeneralizedKernel,
    max_tuples: int = DEFAULT_MAX_TUPLES,
) -> float:
    """Average of the kernel over every tuple of index combinations.

    Tuples are enumerated in row-major order over the samples, each sample's
    combinations in lexicographic order.

    Raises
    ------
    TupleBudgetError
        If the number of tuples exceeds ``max_tuples``; use
        :func:`incomplete_generalized` instead.
    """
    _check_kernel_fits(kernel, samples)
    counts = [math.comb(nk, dk) for nk, dk in zip(samples.sizes, samples.degrees)]
    total = math.prod(counts)
    if total > max_tuples:
        raise TupleBudgetError(
            f"{total} tuples exceed the budget of {max_tuples}; "
            "use incomplete_generalized with a pair budget B"
        )
    combos = [
        np.array(list(itertools.combinations(range(nk), dk)), dtype=np.int64).reshape(-1, dk)
        for nk, dk in zip(samples.sizes, samples.degrees)
    ]
    sums = []
    for start in range(0, total, _CHUNK):
        flat = np.arange(start, min(start + _CHUNK, total))
        idx = np.unravel_index(flat, counts)
        blocks = [s[c[i]] for s, c, i in zip(samples.samples, combos, idx)]
        sums.append(float(np.sum(kernel.evaluate_blocks(blocks))))
    return _mean_of_chunks(sums, total)


def _uniform_subsets(n: int, d: int, B: int, rng: np.random.Generator) -> np.ndarray:
    """B uniform d-subsets of range(n), by rejection of tuples with repeats."""
    out = rng.integers(0, n, size=(B, d))
    if d == 1:
        return out
    bad = np.ones(B, dtype=bool)
    while True:
        s = np.sort(out, axis=1)
        bad = np.any(s[:, 1:] == s[:, :-1], axis=1)
        if not bad.any():
            return out
        out[bad] = rng.integers(0, n, size=(int(bad.sum()), d))


def incomplete_generalized(
    samples: GeneralizedSamples,
    kernel: GeneralizedKernel,
    B: int,
    rng: np.random.Generator,
) -> float:
    """Average of the kernel over B tuples drawn uniformly with replacement."""
    if B < 1:
        raise ValueError(f"B must be at least 1, got {B}")
    _check_kernel_fits(kernel, samples)
    blocks = [
        s[_uniform_subsets(nk, dk, int(B), rng)]
        for s, nk, dk in zip(samples.samples, samples.sizes, samples.degrees)
    ]
    return _flat_mean(np.asarray(kernel.evaluate_blocks(blocks), dtype=float))


def complete_two_sample(ds: TwoSampleDataset, kernel: Kernel) -> float:
    """(1/nm) times the sum of h over every (X_k, Z_l) pair."""
    return _flat_mean(np.ascontiguousarray(kernel.matrix(ds.xs, ds.zs)))


def incomplete_two_sample(
    ds: TwoSampleDataset, kernel: Kernel, B: int, rng: np.random.Generator
) -> float:
    """Mean of h over B pairs drawn uniformly with replacement from all nm pairs."""
    return incomplete_generalized(GeneralizedSamples.from_two_sample(ds), kernel, B, rng)


# -- worker-local pieces ------------------------------------------------------

_BLOCK_CELLS = 1 << 22


def workers_complete(kernel: Kernel, ds: TwoSampleDataset, XI: np.ndarray, ZI: np.ndarray) -> np.ndarray:
    """Complete statistics of W equal-size workers given ``(W, n_i)`` and ``(W, m_i)`` indices.

    Each worker's pair matrix is reduced on its own row, so a worker evaluated
    alone gets bitwise the same value as inside a batch.
    """
    W, n0 = XI.shape
    m0 = ZI.shape[1]
    if W * n0 * m0 > _BLOCK_CELLS and W > 1:
        return np.concatenate(
            [workers_complete(kernel, ds, XI[i : i + 1], ZI[i : i + 1]) for i in range(W)]
        )
    H = np.ascontiguousarray(kernel.block_matrix(ds.xs[XI], ds.zs[ZI])).reshape(W, n0 * m0)
    return np.add.reduce(H, axis=1) / (n0 * m0)


def workers_incomplete(
    kernel: Kernel, ds: TwoSampleDataset, XI: np.ndarray, ZI: np.ndarray, U: np.ndarray
) -> np.ndarray:
    """Incomplete statistics of W equal-size workers from a ``(W, B)`` block of uniforms.

    Uniform ``u`` selects local pair ``floor(u * n_i * m_i)`` in row-major order
    (X index major).
    """
    n0, m0 = XI.shape[1], ZI.shape[1]
    P = n0 * m0
    flat = np.minimum((U * P).astype(np.int64), P - 1)
    k, l = np.divmod(flat, m0)
    xr = np.take_along_axis(XI, k, axis=1)
    zr = np.take_along_axis(ZI, l, axis=1)
    vals = np.ascontiguousarray(kernel.paired(ds.xs[xr], ds.zs[zr]), dtype=float)
    return np.add.reduce(vals, axis=1) / U.shape[1]


def worker_complete(kernel: Kernel, ds: TwoSampleDataset, xi: np.ndarray, zi: np.ndarray):
    """Complete statistic on one worker's records.

    Returns ``(value, pairs)``; ``value`` is ``None`` when the worker holds no pair.
    """
    if len(xi) == 0 or len(zi) == 0:
        return None, 0
    v = workers_complete(kernel, ds, np.asarray(xi)[None], np.asarray(zi)[None])
    return float(v[0]), len(xi) * len(zi)


def pair_uniforms(rng: np.random.Generator, N: int, B: int) -> np.ndarray:
    """The ``(N, B)`` block of uniforms driving local pair draws; row i is worker i's."""
    return rng.random((N, B))


def worker_incomplete(
    kernel: Kernel, ds: TwoSampleDataset, xi: np.ndarray, zi: np.ndarray, u: np.ndarray
):
    """Incomplete statistic on one worker from its row of pair uniforms.

    Returns ``(value, pairs)``, with ``None`` for a worker holding no pair.
    """
    if len(xi) == 0 or len(zi) == 0:
        return None, 0
    v = workers_incomplete(
        kernel, ds, np.asarray(xi)[None], np.asarray(zi)[None], np.asarray(u)[None]
    )
    return float(v[0]), len(u)


def _combine(values, N: int) -> tuple[float, int]:
    zeros = sum(v is None for v in values)
    return math.fsum(0.0 if v is None else v for v in values) / N, zeros


def _check_cover(ds: TwoSampleDataset, a: PartitionAssignment) -> None:
    if (a.n, a.m) != (ds.n, ds.m):
        raise ValueError(f"assignment is for (n, m)=({a.n}, {a.m}), dataset has ({ds.n}, {ds.m})")


def local_complete_average(
    ds: TwoSampleDataset, assignment: PartitionAssignment, kernel: Kernel
) -> EstimateReport:
    """Mean of the N worker-local complete statistics.

    A worker missing either class contributes 0 and is counted in
    ``zero_partition_rounds``.
    """
    _check_cover(ds, assignment)
    blocks = assignment.blocks()
    if blocks is not None and blocks[0].shape[1] and blocks[1].shape[1]:
        vals = [float(v) for v in workers_complete(kernel, ds, *blocks)]
        pairs = int(assignment.pair_counts().sum())
    else:
        out = [worker_complete(kernel, ds, xi, zi) for xi, zi in assignment.per_worker]
        vals = [v for v, _ in out]
        pairs = sum(p for _, p in out)
    value, zeros = _combine(vals, assignment.N)
    return EstimateReport(value, pairs, 1, None, assignment.scheme, zeros)


def local_incomplete_average(
    ds: TwoSampleDataset,
    assignment: PartitionAssignment,
    kernel: Kernel,
    B: int,
    rng: np.random.Generator,
) -> EstimateReport:
    """Mean of N worker-local incomplete statistics with B pairs each.

    ``rng`` produces an ``(N, B)`` block of uniforms; row ``i`` drives worker
    ``i``, so the workers' draws are independent. Empty workers contribute 0.
    """
    if B < 1:
        raise ValueError(f"B must be at least 1, got {B}")
    _check_cover(ds, assignment)
    U = pair_uniforms(rng, assignment.N, int(B))
    blocks = assignment.blocks()
    if blocks is not None and blocks[0].shape[1] and blocks[1].shape[1]:
        vals = [float(v) for v in workers_incomplete(kernel, ds, *blocks, U)]
        pairs = assignment.N * int(B)
    else:
        out = [
            worker_incomplete(kernel, ds, xi, zi, U[i])
            for i, (xi, zi) in enumerate(assignment.per_worker)
        ]
        vals = [v for v, _ in out]
        pairs = sum(p for _, p in out)
    value, zeros = _combine(vals, assignment.N)
    return EstimateReport(value, pairs, 1, None, assignment.scheme, zeros)


def _repartitioned(ds, scheme, N, T, protocol, round_fn, assignments) -> EstimateReport:
    if T < 1:
        raise ValueError(f"T must be at least 1, got {T}")
    scheme = SchemeKind.parse(scheme)
    if assignments is None:
        assignments = [assign(scheme, ds.n, ds.m, N, protocol, t) for t in range(T)]
    elif len(assignments) < T or any(a.epoch != t for t, a in enumerate(assignments[:T])):
        raise ValueError("assignments must list epochs 0..T-1 in order")
    reports = [round_fn(assignments[t], t) for t in range(T)]
    per_round = tuple(r.value for r in reports)
    return EstimateReport(
        value=math.fsum(per_round) / T,
        pairs_evaluated=sum(r.pairs_evaluated for r in reports),
        rounds=T,
        per_round_values=per_round,
        scheme=scheme,
        zero_partition_rounds=sum(r.zero_partition_rounds for r in reports),
    )


def repartitioned_complete(
    ds: TwoSampleDataset,
    scheme: SchemeKind,
    N: int,
    T: int,
    kernel: Kernel,
    protocol: SeedProtocol,
    assignments: list | None = None,
) -> EstimateReport:
    """Local complete averages over epochs 0..T-1, averaged again over epochs.

    ``assignments`` may pass precomputed epoch assignments (they must be the
    ones :func:`assign` gives for this protocol) to avoid rebuilding them.
    """
    return _repartitioned(
        ds, scheme, N, T, protocol, lambda a, t: local_complete_average(ds, a, kernel), assignments
    )


def repartitioned_incomplete(
    ds: TwoSampleDataset,
    scheme: SchemeKind,
    N: int,
    T: int,
    B: int,
    kernel: Kernel,
    protocol: SeedProtocol,
    assignments: list | None = None,
) -> EstimateReport:
    """Local incomplete averages over epochs 0..T-1.

    Epoch ``t`` draws its pairs from the protocol stream ``(t, PAIRS)``.
    """
    return _repartitioned(
        ds,
        scheme,
        N,
        T,
        protocol,
        lambda a, t: local_incomplete_average(ds, a, kernel, B, protocol.generator(t, Tag.PAIRS)),
        assignments,
    )
