"""Kernel functions for one-, two- and K-sample U-statistics.

Points are represented as 1-D float arrays of length ``d`` and samples as
``(n, d)`` arrays. Every kernel evaluates with numpy broadcasting over the
leading axes, so the same code path serves single pairs, full pair matrices
and batches of sampled pairs.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Sequence

import numpy as np

__all__ = [
    "GeneralizedKernel",
    "Kernel",
    "AUCKernel",
    "AUCHalfTieKernel",
    "ProductKernel",
    "ConstantKernel",
    "KendallKernel",
    "HingeKernel",
    "GiniKernel",
    "SampleVarianceKernel",
    "VUSKernel",
    "eval_kernel",
    "as_point",
]


def as_point(x) -> np.ndarray:
    """Coerce a scalar or sequence to a finite 1-D float point."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"a point must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point coordinates must be finite")
    return arr


class GeneralizedKernel(ABC):
    """Kernel of a K-sample U-statistic with degrees ``(d_1, ..., d_K)``.

    Subclasses implement :meth:`evaluate_blocks`, which receives one array per
    sample of shape ``(batch, d_k, p)`` and returns ``batch`` kernel values.
    The value must be symmetric under permutation of the points inside any
    single block.
    """

    name: str = "generalized"
    #: Expected point dimension, or ``None`` when any dimension is accepted.
    dim: int | None = None

    @property
    @abstractmethod
    def degrees(self) -> tuple[int, ...]:
        """Number of arguments taken from each sample."""

    @abstractmethod
    def evaluate_blocks(self, blocks: Sequence[np.ndarray]) -> np.ndarray:
        """Evaluate on a batch of tuples, one ``(batch, d_k, p)`` array per sample."""

    def check_dim(self, p: int) -> None:
        if self.dim is not None and p != self.dim:
            raise ValueError(
                f"kernel {self.name!r} expects points of dimension {self.dim}, got {p}"
            )

    def evaluate_tuple(self, *blocks) -> float:
        """Evaluate a single tuple given as K sequences of points."""
        if len(blocks) != len(self.degrees):
            raise ValueError(f"expected {len(self.degrees)} blocks, got {len(blocks)}")
        arrs = []
        for blk, dk in zip(blocks, self.degrees):
            a = np.asarray(blk, dtype=float)
            if a.ndim == 1:
                a = a[:, None]
            if a.shape[0] != dk:
                raise ValueError(f"block needs {dk} points, got {a.shape[0]}")
            self.check_dim(a.shape[1])
            arrs.append(a[None])
        return float(self.evaluate_blocks(arrs)[0])


class Kernel(GeneralizedKernel):
    """Pairwise kernel ``h(x, z)`` of a two-sample U-statistic of degrees (1, 1)."""

    name = "pairwise"

    @property
    def degrees(self) -> tuple[int, ...]:
        return (1, 1)

    @abstractmethod
    def _evaluate(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Broadcasting evaluation; the last axis of ``x`` and ``z`` holds coordinates."""

    def evaluate_blocks(self, blocks: Sequence[np.ndarray]) -> np.ndarray:
        xb, zb = blocks
        return np.asarray(self._evaluate(xb[:, 0, :], zb[:, 0, :]), dtype=float)

    def __call__(self, x, z) -> float:
        return eval_kernel(self, x, z)

    def matrix(self, xs: np.ndarray, zs: np.ndarray) -> np.ndarray:
        """All pair values as an ``(n, m)`` float array, rows indexed by ``xs``."""
        xs = np.asarray(xs, dtype=float)
        zs = np.asarray(zs, dtype=float)
        if xs.shape[-1] != zs.shape[-1]:
            raise ValueError(f"dimension mismatch: {xs.shape[-1]} vs {zs.shape[-1]}")
        self.check_dim(xs.shape[-1])
        out = self._evaluate(xs[:, None, :], zs[None, :, :])
        return np.broadcast_to(np.asarray(out, dtype=float), (xs.shape[0], zs.shape[0]))

    def block_matrix(self, xb: np.ndarray, zb: np.ndarray) -> np.ndarray:
        """Per-block pair matrices: ``(W, n0, d)`` and ``(W, m0, d)`` give ``(W, n0, m0)``."""
        self.check_dim(xb.shape[-1])
        out = self._evaluate(xb[:, :, None, :], zb[:, None, :, :])
        return np.broadcast_to(np.asarray(out, dtype=float), xb.shape[:2] + zb.shape[1:2])

    def paired(self, xs: np.ndarray, zs: np.ndarray) -> np.ndarray:
        """Values ``h(xs[b], zs[b])`` for aligned rows."""
        xs = np.asarray(xs, dtype=float)
        zs = np.asarray(zs, dtype=float)
        if xs.shape != zs.shape:
            raise ValueError(f"paired arrays must share a shape: {xs.shape} vs {zs.shape}")
        self.check_dim(xs.shape[-1])
        out = self._evaluate(xs, zs)
        return np.broadcast_to(np.asarray(out, dtype=float), xs.shape[:-1])


class AUCKernel(Kernel):
    """Indicator ``I{z < x}`` on scalar scores. Ties contribute 0."""

    name = "auc"
    dim = 1

    def _evaluate(self, x, z):
        return (z[..., 0] < x[..., 0]).astype(float)


class AUCHalfTieKernel(Kernel):
    """``I{z < x} + 0.5 I{z = x}``, the usual empirical AUC with ties split.

    Intended for real scores with ties. Not used by the variance checks, which
    rely on the strict indicator.
    """

    name = "auc_half_tie"
    dim = 1

    def _evaluate(self, x, z):
        xs, zs = x[..., 0], z[..., 0]
        return (zs < xs).astype(float) + 0.5 * (zs == xs)


class ProductKernel(Kernel):
    """Inner product ``h(x, z) = x . z`` (plain product for scalars)."""

    name = "product"

    def _evaluate(self, x, z):
        return np.sum(x * z, axis=-1)


class ConstantKernel(Kernel):
    """``h(x, z) = c`` for every pair."""

    name = "constant"

    def __init__(self, c: float = 1.0):
        self.c = float(c)

    def _evaluate(self, x, z):
        shape = np.broadcast_shapes(x.shape[:-1], z.shape[:-1])
        return np.full(shape, self.c)


class KendallKernel(Kernel):
    """Concordance indicator ``I{(x1 - x2)(y1 - y2) > 0}`` on 2-D points ``(x, y)``."""

    name = "kendall"
    dim = 2

    def _evaluate(self, a, b):
        return ((a[..., 0] - b[..., 0]) * (a[..., 1] - b[..., 1]) > 0).astype(float)


class HingeKernel(Kernel):
    """Pairwise hinge surrogate ``max(0, 1 + s(z) - s(x))`` of a linear scorer.

    ``x`` is a positive point and ``z`` a negative one, so small values mean
    positives are ranked above negatives with margin.
    """

    name = "hinge"

    def __init__(self, w, b: float = 0.0):
        self.w = np.asarray(w, dtype=float).ravel()
        self.b = float(b)
        self.dim = self.w.shape[0]

    def _evaluate(self, x, z):
        margin = (x - z) @ self.w
        return np.maximum(0.0, 1.0 - margin)


class GiniKernel(GeneralizedKernel):
    """One-sample kernel ``|x1 - x2|``; its U-statistic is the Gini mean difference."""

    name = "gini"
    dim = 1

    @property
    def degrees(self) -> tuple[int, ...]:
        return (2,)

    def evaluate_blocks(self, blocks):
        (b,) = blocks
        return np.abs(b[:, 0, 0] - b[:, 1, 0])


class SampleVarianceKernel(GeneralizedKernel):
    """One-sample kernel ``(x1 - x2)^2``.

    The resulting U-statistic equals twice the unbiased sample variance; the
    conventional kernel carries an extra factor 1/2.
    """

    name = "sample_variance"
    dim = 1

    @property
    def degrees(self) -> tuple[int, ...]:
        return (2,)

    def evaluate_blocks(self, blocks):
        (b,) = blocks
        return (b[:, 0, 0] - b[:, 1, 0]) ** 2


class VUSKernel(GeneralizedKernel):
    """K-sample ordering indicator ``I{s_1 < s_2 < ... < s_K}`` on scalar scores."""

    name = "vus"
    dim = 1

    def __init__(self, K: int = 3):
        if K < 2:
            raise ValueError("VUS needs at least two samples")
        self.K = int(K)

    @property
    def degrees(self) -> tuple[int, ...]:
        return (1,) * self.K

    def evaluate_blocks(self, blocks):
        if len(blocks) != self.K:
            raise ValueError(f"expected {self.K} blocks, got {len(blocks)}")
        s = np.stack([b[:, 0, 0] for b in blocks], axis=1)
        return np.all(s[:, :-1] < s[:, 1:], axis=1).astype(float)


def eval_kernel(kernel: Kernel, x, z) -> float:
    """Evaluate a pairwise kernel on one pair of points.

    Raises
    ------
    ValueError
        If the two points differ in dimension, the kernel expects another
        dimension, or a coordinate is not finite.
    """
    if not isinstance(kernel, Kernel):
        raise TypeError(f"{type(kernel).__name__} is not a pairwise kernel")
    xp, zp = as_point(x), as_point(z)
    if xp.shape != zp.shape:
        raise ValueError(f"dimension mismatch: {xp.shape[0]} vs {zp.shape[0]}")
    kernel.check_dim(xp.shape[0])
    return float(kernel._evaluate(xp, zp))
