"""Distributed mini-batch SGD on a pairwise hinge surrogate of the AUC.

Each iteration, every worker samples B pairs with replacement from its local
partition and averages their hinge subgradients. The master averages the N
worker gradients, adds the L2 term, applies a momentum step and broadcasts
the new model. The data are repartitioned every ``n_r`` iterations.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .data import TwoSampleDataset, standardize, train_test_split
from .sampling import PartitionAssignment, SchemeKind, SeedProtocol, Tag, assign, derive_seed

__all__ = [
    "LinearScorer",
    "SgdConfig",
    "TrainingTrace",
    "TrainingDivergedError",
    "hinge_pair_loss",
    "pair_gradient",
    "pair_objective",
    "global_gradient_estimate",
    "full_batch_gradient",
    "train",
    "evaluate_auc",
    "repartition_epoch",
    "prepare_task",
    "subsample",
    "repartition_study",
]

DIVERGENCE_LIMIT = 1e6


@dataclass(frozen=True)
class LinearScorer:
    """Score ``s(x) = w . x + b``."""

    w: np.ndarray
    b: float = 0.0

    def __post_init__(self):
        w = np.array(self.w, dtype=float).ravel()
        if not np.all(np.isfinite(w)) or not math.isfinite(self.b):
            raise ValueError("scorer parameters must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b", float(self.b))

    @property
    def dim(self) -> int:
        return self.w.shape[0]

    def score(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.dim:
            raise ValueError(f"points have dimension {X.shape[-1]}, scorer expects {self.dim}")
        return X @ self.w + self.b

    @property
    def theta(self) -> np.ndarray:
        return np.append(self.w, self.b)

    @classmethod
    def from_theta(cls, theta) -> "LinearScorer":
        theta = np.asarray(theta, dtype=float)
        return cls(theta[:-1], float(theta[-1]))

    @classmethod
    def zeros(cls, d: int) -> "LinearScorer":
        return cls(np.zeros(d), 0.0)


def _pair_arrays(scorer, x_pos, z_neg):
    x = np.asarray(x_pos, dtype=float)
    z = np.asarray(z_neg, dtype=float)
    if x.ndim == 0:
        x = x[None]
    if z.ndim == 0:
        z = z[None]
    if x.shape[-1] != scorer.dim or z.shape[-1] != scorer.dim:
        raise ValueError(
            f"dimension mismatch: scorer {scorer.dim}, x {x.shape[-1]}, z {z.shape[-1]}"
        )
    return x, z


def hinge_pair_loss(scorer: LinearScorer, x_pos, z_neg) -> float:
    """``max(0, 1 - (s(x_pos) - s(z_neg)))``; zero once positives lead by a margin of 1."""
    x, z = _pair_arrays(scorer, x_pos, z_neg)
    margin = float((x - z) @ scorer.w)
    return max(0.0, 1.0 - margin)


def pair_objective(scorer: LinearScorer, x_pos, z_neg, lam: float = 0.0) -> float:
    """Pair hinge loss plus ``lam * |w|^2``."""
    return hinge_pair_loss(scorer, x_pos, z_neg) + lam * float(scorer.w @ scorer.w)


def pair_gradient(scorer: LinearScorer, x_pos, z_neg, lam: float = 0.0):
    """Subgradient of :func:`pair_objective` with respect to ``(w, b)``.

    The hinge part is ``z_neg - x_pos`` while the margin is violated and zero
    otherwise, including at the kink. ``b`` cancels in the margin and gets no
    gradient.

    Returns
    -------
    grad_w : ndarray
    grad_b : float
    """
    x, z = _pair_arrays(scorer, x_pos, z_neg)
    margin = float((x - z) @ scorer.w)
    g = (z - x) if margin < 1.0 else np.zeros(scorer.dim)
    return g + 2.0 * lam * scorer.w, 0.0


def _local_pairs(ds, assignment, U):
    """Gather sampled local pairs; returns (X, Z, valid) with X, Z of shape (N, B, d)."""
    blocks = assignment.blocks()
    N, B = U.shape
    if blocks is not None and blocks[0].shape[1] and blocks[1].shape[1]:
        XI, ZI = blocks
        n0, m0 = XI.shape[1], ZI.shape[1]
        flat = np.minimum((U * (n0 * m0)).astype(np.int64), n0 * m0 - 1)
        k, l = np.divmod(flat, m0)
        xr = np.take_along_axis(XI, k, axis=1)
        zr = np.take_along_axis(ZI, l, axis=1)
        return ds.xs[xr], ds.zs[zr], np.ones(N, dtype=bool)
    X = np.zeros((N, B, ds.dim))
    Z = np.zeros((N, B, ds.dim))
    valid = np.zeros(N, dtype=bool)
    for i, (xi, zi) in enumerate(assignment.per_worker):
        P = len(xi) * len(zi)
        if P == 0:
            continue
        flat = np.minimum((U[i] * P).astype(np.int64), P - 1)
        k, l = np.divmod(flat, len(zi))
        X[i], Z[i] = ds.xs[xi[k]], ds.zs[zi[l]]
        valid[i] = True
    return X, Z, valid


def global_gradient_estimate(
    ds: TwoSampleDataset,
    assignment: PartitionAssignment,
    scorer: LinearScorer,
    B: int,
    lam: float,
    rng: np.random.Generator,
    return_empty: bool = False,
):
    """Average over workers of the mean subgradient on B local pairs, plus ``2 lam w``.

    Row ``i`` of an ``(N, B)`` uniform block drawn from ``rng`` selects worker
    ``i``'s pairs. A worker with no pair contributes a zero gradient.

    Returns
    -------
    grad : ndarray of shape (d + 1,)
        Gradient for ``(w, b)``; the last entry is always 0.
    empty : int
        Number of workers without pairs, when ``return_empty`` is true.
    """
    if B < 1:
        raise ValueError(f"B must be at least 1, got {B}")
    U = rng.random((assignment.N, int(B)))
    X, Z, valid = _local_pairs(ds, assignment, U)
    D = X - Z
    active = (D @ scorer.w) < 1.0
    G = np.where(active[..., None], -D, 0.0)
    G[~valid] = 0.0
    g_worker = np.add.reduce(G, axis=1) / B
    g = np.add.reduce(g_worker, axis=0) / assignment.N + 2.0 * lam * scorer.w
    out = np.append(g, 0.0)
    if return_empty:
        return out, int((~valid).sum())
    return out


def full_batch_gradient(ds: TwoSampleDataset, scorer: LinearScorer, lam: float) -> np.ndarray:
    """Subgradient of the complete empirical objective over all n m pairs."""
    sx = ds.xs @ scorer.w
    sz = ds.zs @ scorer.w
    active = (sx[:, None] - sz[None, :]) < 1.0
    # sum over active pairs of (z - x) = sum_l c_l z_l - sum_k r_k x_k
    g = (active.sum(axis=0) @ ds.zs - active.sum(axis=1) @ ds.xs) / (ds.n * ds.m)
    return np.append(g + 2.0 * lam * scorer.w, 0.0)


@dataclass(frozen=True)
class SgdConfig:
    """Settings of one training run.

    ``n_r`` is the number of iterations between repartitions; ``math.inf``
    keeps the initial partition for the whole run.
    """

    N: int = 100
    B: int = 100
    n_r: float = math.inf
    step_size: float = 0.01
    momentum: float = 0.9
    l2_coeff: float = 0.05
    total_iterations: int = 1000
    scheme: SchemeKind = SchemeKind.PropSWOR
    monitor_pairs: int = 2000
    test_every: int = 10

    def __post_init__(self):
        object.__setattr__(self, "scheme", SchemeKind.parse(self.scheme))
        if self.N < 1 or self.B < 1 or self.total_iterations < 1:
            raise ValueError("N, B and total_iterations must be positive")
        if not (self.n_r >= 1):
            raise ValueError(f"n_r must be at least 1 or inf, got {self.n_r}")
        if self.n_r != math.inf and self.n_r != int(self.n_r):
            raise ValueError(f"n_r must be an integer or inf, got {self.n_r}")
        if self.step_size < 0:
            raise ValueError("step_size must be nonnegative")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.l2_coeff < 0:
            raise ValueError("l2_coeff must be nonnegative")
        if self.monitor_pairs < 1 or self.test_every < 1:
            raise ValueError("monitor_pairs and test_every must be positive")


def repartition_epoch(s: int, n_r: float) -> int:
    """Epoch used at iteration ``s`` (1-based): ``ceil(s / n_r) - 1``; 0 forever when n_r is inf."""
    if n_r == math.inf:
        return 0
    return -(-int(s) // int(n_r)) - 1


@dataclass
class TrainingTrace:
    """Per-iteration metrics of one run. ``test_auc`` is NaN between evaluations."""

    monitor_loss: np.ndarray
    monitor_auc: np.ndarray
    test_auc: np.ndarray
    repartition_iterations: list = field(default_factory=list)
    final_scorer: LinearScorer | None = None
    pairs_consumed: int = 0

    @property
    def iterations(self) -> int:
        return self.monitor_loss.shape[0]

    @property
    def final_test_auc(self) -> float:
        return float(self.test_auc[-1])


class TrainingDivergedError(RuntimeError):
    """The monitored loss exceeded the divergence limit."""


def _auc_from_scores(sx: np.ndarray, sz: np.ndarray) -> float:
    sz_sorted = np.sort(sz)
    below = np.searchsorted(sz_sorted, sx, side="left")  # count of z strictly below
    return math.fsum(below.tolist()) / (sx.shape[0] * sz.shape[0])


def evaluate_auc(scorer: LinearScorer, ds: TwoSampleDataset, budget="complete", seed: int | None = None) -> float:
    """AUC of the scorer on ``ds``: the fraction of pairs with s(z) < s(x).

    Parameters
    ----------
    budget : 'complete' or int
        ``'complete'`` uses all n m pairs. An integer B averages over B pairs
        drawn with replacement using ``seed``.
    """
    sx = scorer.score(ds.xs)
    sz = scorer.score(ds.zs)
    if budget == "complete":
        return _auc_from_scores(sx, sz)
    B = int(budget)
    if B < 1:
        raise ValueError("sampled budget must be positive")
    rng = SeedProtocol(0 if seed is None else seed).generator(0, Tag.EVAL)
    k = rng.integers(0, ds.n, B)
    l = rng.integers(0, ds.m, B)
    return float(np.mean(sz[l] < sx[k]))


def train(
    ds_train: TwoSampleDataset,
    ds_test: TwoSampleDataset,
    config: SgdConfig,
    master_seed: int,
    init: LinearScorer | None = None,
) -> TrainingTrace:
    """Run repartitioned distributed SGD and record the learning curve.

    Iteration ``s`` uses the partition of epoch :func:`repartition_epoch` and
    draws its pairs from the protocol stream ``(s, SGD)``. Monitor pairs are a
    fixed sample of training pairs drawn once from ``(0, MONITOR)``. The test
    AUC is computed every ``test_every`` iterations and at the last one.

    Raises
    ------
    TrainingDivergedError
        If the monitored loss becomes non-finite or exceeds 1e6.
    """
    if ds_train.dim != ds_test.dim:
        raise ValueError(f"train dimension {ds_train.dim} differs from test {ds_test.dim}")
    c = config
    protocol = SeedProtocol(master_seed)
    d = ds_train.dim
    theta = np.zeros(d + 1) if init is None else init.theta.copy()
    if theta.shape[0] != d + 1:
        raise ValueError("initial scorer dimension does not match the data")
    vel = np.zeros(d + 1)

    mrng = protocol.generator(0, Tag.MONITOR)
    mk = mrng.integers(0, ds_train.n, c.monitor_pairs)
    ml = mrng.integers(0, ds_train.m, c.monitor_pairs)
    mD = ds_train.xs[mk] - ds_train.zs[ml]

    S = c.total_iterations
    loss = np.empty(S)
    mauc = np.empty(S)
    tauc = np.full(S, np.nan)
    events = []
    epoch = -1
    assignment = None
    for s in range(1, S + 1):
        e = repartition_epoch(s, c.n_r)
        if e != epoch:
            assignment = assign(c.scheme, ds_train.n, ds_train.m, c.N, protocol, e)
            if epoch >= 0:
                events.append(s)
            epoch = e
        scorer = LinearScorer.from_theta(theta)
        g = global_gradient_estimate(
            ds_train, assignment, scorer, c.B, c.l2_coeff, protocol.generator(s, Tag.SGD)
        )
        vel = c.momentum * vel + g
        theta = theta - c.step_size * vel

        w = theta[:-1]
        margins = mD @ w
        obj = float(np.mean(np.maximum(0.0, 1.0 - margins))) + c.l2_coeff * float(w @ w)
        if not math.isfinite(obj) or obj > DIVERGENCE_LIMIT:
            raise TrainingDivergedError(
                f"monitor loss {obj:.3g} at iteration {s} (step_size={c.step_size}, "
                f"momentum={c.momentum}); lower the step size"
            )
        loss[s - 1] = obj
        mauc[s - 1] = float(np.mean(margins > 0))
        if s % c.test_every == 0 or s == S:
            tauc[s - 1] = evaluate_auc(LinearScorer.from_theta(theta), ds_test)
    return TrainingTrace(
        loss, mauc, tauc, events, LinearScorer.from_theta(theta), S * c.N * c.B
    )


def subsample(ds: TwoSampleDataset, fraction: float, rng: np.random.Generator) -> TwoSampleDataset:
    """Keep ``fraction`` of each class, at least one point per class."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must lie in (0, 1]")

    def keep(a):
        k = max(1, int(round(fraction * a.shape[0])))
        return a[np.sort(rng.permutation(a.shape[0])[:k])]

    return TwoSampleDataset(keep(ds.xs), keep(ds.zs))


def prepare_task(
    ds: TwoSampleDataset, test_fraction: float, N: int, rng: np.random.Generator
) -> tuple[TwoSampleDataset, TwoSampleDataset]:
    """Stratified split, truncation of the training set to multiples of N, standardization.

    Standardization uses training statistics only.
    """
    train_ds, test_ds = train_test_split(ds, test_fraction, rng)
    train_ds = train_ds.truncate_to_divisible(N)
    return standardize(train_ds, test_ds)


def _train_job(args):
    ds_train, ds_test, config, seed = args
    return train(ds_train, ds_test, config, seed)


def repartition_study(
    ds_train: TwoSampleDataset,
    ds_test: TwoSampleDataset,
    base: SgdConfig,
    n_r_values,
    runs: int,
    master_seed: int,
    lanes: int = 1,
) -> dict[float, list[TrainingTrace]]:
    """Train ``runs`` models for every repartition frequency.

    Run ``r`` uses seed ``derive_seed(master_seed, r)`` for every ``n_r``, so
    the frequencies are compared on common random numbers. Results do not
    depend on ``lanes``.
    """
    if runs < 1:
        raise ValueError("runs must be positive")
    n_r_values = [float(v) if v == math.inf else int(v) for v in n_r_values]
    jobs = [
        (ds_train, ds_test, replace(base, n_r=nr), derive_seed(master_seed, r))
        for nr in n_r_values
        for r in range(runs)
    ]
    lanes = max(1, int(lanes))
    if lanes == 1:
        traces = [_train_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=lanes) as ex:
            traces = list(ex.map(_train_job, jobs, chunksize=max(1, len(jobs) // (4 * lanes))))
    return {nr: traces[i * runs : (i + 1) * runs] for i, nr in enumerate(n_r_values)}
