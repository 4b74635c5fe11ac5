"""Datasets, generating distributions and CSV ingestion."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "TwoSampleDataset",
    "GeneralizedSamples",
    "DiscreteTwoSampleDistribution",
    "DiscreteAUCDistribution",
    "GaussianProductDistribution",
    "GaussianClassesDistribution",
    "DataFormatError",
    "sample_dataset",
    "load_two_sample_csv",
    "standardize",
    "train_test_split",
]


class DataFormatError(ValueError):
    """Raised when an input file cannot be turned into a dataset."""


def _as_sample(a, name: str) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 1-D or 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise ValueError(f"{name} must hold at least one point")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite coordinates")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TwoSampleDataset:
    """Two independent samples: ``xs`` (size n) and ``zs`` (size m).

    Both are stored as read-only ``(size, d)`` float arrays. One-dimensional
    inputs are promoted to a single column.
    """

    xs: np.ndarray
    zs: np.ndarray

    def __post_init__(self):
        xs = _as_sample(self.xs, "xs")
        zs = _as_sample(self.zs, "zs")
        if xs.shape[1] != zs.shape[1]:
            raise ValueError(f"xs and zs differ in dimension: {xs.shape[1]} vs {zs.shape[1]}")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "zs", zs)

    @property
    def n(self) -> int:
        return self.xs.shape[0]

    @property
    def m(self) -> int:
        return self.zs.shape[0]

    @property
    def dim(self) -> int:
        return self.xs.shape[1]

    def truncate_to_divisible(self, N: int) -> "TwoSampleDataset":
        """Drop trailing records so that N divides both sample sizes."""
        n, m = (self.n // N) * N, (self.m // N) * N
        if n == 0 or m == 0:
            raise ValueError(f"cannot truncate n={self.n}, m={self.m} to multiples of {N}")
        return TwoSampleDataset(self.xs[:n], self.zs[:m])


@dataclass(frozen=True)
class GeneralizedSamples:
    """K samples with the kernel degree taken from each."""

    samples: tuple
    degrees: tuple

    def __post_init__(self):
        samples = tuple(_as_sample(s, f"sample {k}") for k, s in enumerate(self.samples))
        degrees = tuple(int(d) for d in self.degrees)
        if len(samples) < 1:
            raise ValueError("need at least one sample")
        if len(samples) != len(degrees):
            raise ValueError(f"{len(samples)} samples but {len(degrees)} degrees")
        for k, (s, d) in enumerate(zip(samples, degrees)):
            if d < 1:
                raise ValueError(f"degree {k} must be positive, got {d}")
            if s.shape[0] < d:
                raise ValueError(f"sample {k} has {s.shape[0]} points, degree is {d}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "degrees", degrees)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(s.shape[0] for s in self.samples)

    @classmethod
    def from_two_sample(cls, ds: TwoSampleDataset) -> "GeneralizedSamples":
        return cls((ds.xs, ds.zs), (1, 1))


@dataclass(frozen=True)
class DiscreteTwoSampleDistribution:
    """Independent X and Z with finite supports.

    Parameters
    ----------
    x_values, z_values : array_like
        Support points, one row per point.
    x_probs, z_probs : array_like
        Probabilities summing to one.
    """

    x_values: np.ndarray
    x_probs: np.ndarray
    z_values: np.ndarray
    z_probs: np.ndarray

    def __post_init__(self):
        for vname, pname in (("x_values", "x_probs"), ("z_values", "z_probs")):
            v = _as_sample(getattr(self, vname), vname)
            p = np.array(getattr(self, pname), dtype=float).ravel()
            if p.shape[0] != v.shape[0]:
                raise ValueError(f"{pname} has {p.shape[0]} entries for {v.shape[0]} points")
            if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
                raise ValueError(f"{pname} must be a probability vector")
            p.setflags(write=False)
            object.__setattr__(self, vname, v)
            object.__setattr__(self, pname, p)

    def sample(self, n: int, m: int, rng: np.random.Generator) -> TwoSampleDataset:
        xi = _categorical(self.x_probs, n, rng)
        zi = _categorical(self.z_probs, m, rng)
        return TwoSampleDataset(self.x_values[xi], self.z_values[zi])


def _categorical(probs: np.ndarray, size: int, rng: np.random.Generator) -> np.ndarray:
    # inverse-CDF on uniforms; the final edge is pinned to 1 so p=1 atoms are exact
    edges = np.cumsum(probs)
    edges[-1] = 1.0
    u = rng.random(size)
    return np.minimum(np.searchsorted(edges, u, side="right"), len(probs) - 1)


@dataclass(frozen=True)
class DiscreteAUCDistribution:
    """X on {0, 2} with P(X=2) = q and Z on {-1, +1} with P(Z=+1) = p."""

    p: float
    q: float

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    def as_discrete(self) -> DiscreteTwoSampleDistribution:
        return DiscreteTwoSampleDistribution(
            x_values=[[0.0], [2.0]],
            x_probs=[1.0 - self.q, self.q],
            z_values=[[-1.0], [1.0]],
            z_probs=[1.0 - self.p, self.p],
        )

    def sample(self, n: int, m: int, rng: np.random.Generator) -> TwoSampleDataset:
        xs = np.where(rng.random(n) < self.q, 2.0, 0.0)
        zs = np.where(rng.random(m) < self.p, 1.0, -1.0)
        return TwoSampleDataset(xs, zs)

    @classmethod
    def from_epsilon(cls, eps: float) -> "DiscreteAUCDistribution":
        """The one-parameter family p = 1 - q = eps."""
        return cls(p=eps, q=1.0 - eps)


@dataclass(frozen=True)
class GaussianProductDistribution:
    """Independent scalar Gaussians X ~ N(mu_x, sigma_x^2), Z ~ N(mu_z, sigma_z^2)."""

    mu_x: float
    sigma_x: float
    mu_z: float
    sigma_z: float

    def __post_init__(self):
        if not (self.sigma_x > 0 and self.sigma_z > 0):
            raise ValueError("standard deviations must be strictly positive")

    def sample(self, n: int, m: int, rng: np.random.Generator) -> TwoSampleDataset:
        xs = self.mu_x + self.sigma_x * rng.standard_normal(n)
        zs = self.mu_z + self.sigma_z * rng.standard_normal(m)
        return TwoSampleDataset(xs, zs)


@dataclass(frozen=True)
class GaussianClassesDistribution:
    """Two isotropic Gaussian classes in ``dim`` dimensions.

    Positives are centred at ``separation / sqrt(dim)`` on every coordinate and
    negatives at the origin, so the class means sit ``separation`` apart.
    """

    dim: int = 9
    separation: float = 2.0
    pos_scale: float = 1.0
    neg_scale: float = 1.0
    mean_direction: tuple = field(default=())

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        if self.pos_scale <= 0 or self.neg_scale <= 0:
            raise ValueError("scales must be positive")

    def _direction(self) -> np.ndarray:
        if self.mean_direction:
            u = np.asarray(self.mean_direction, dtype=float)
            return u / np.linalg.norm(u)
        return np.full(self.dim, 1.0 / np.sqrt(self.dim))

    def sample(self, n: int, m: int, rng: np.random.Generator) -> TwoSampleDataset:
        mu = self.separation * self._direction()
        xs = mu + self.pos_scale * rng.standard_normal((n, self.dim))
        zs = self.neg_scale * rng.standard_normal((m, self.dim))
        return TwoSampleDataset(xs, zs)


def sample_dataset(dist, n: int, m: int, rng: np.random.Generator) -> TwoSampleDataset:
    """Draw ``n`` i.i.d. X points and ``m`` i.i.d. Z points from ``dist``."""
    if n < 1 or m < 1:
        raise ValueError(f"sample sizes must be positive, got n={n}, m={m}")
    return dist.sample(int(n), int(m), rng)


def _label_key(raw: str):
    s = raw.strip()
    try:
        return float(s)
    except ValueError:
        return s


def load_two_sample_csv(
    path,
    positive_labels: Iterable,
    feature_columns: Sequence[int] | None = None,
    label_column: int = -1,
    header: bool = False,
    delimiter: str | None = None,
) -> TwoSampleDataset:
    """Read a labelled table and split it into positives (xs) and the rest (zs).

    Parameters
    ----------
    path : path-like
        Comma- or whitespace-delimited text file.
    positive_labels : iterable
        Labels routed to ``xs``. Numeric-looking labels compare numerically,
        so ``1`` matches ``"1.0"``.
    feature_columns : sequence of int, optional
        Column indices used as features. Defaults to every column except the
        label column.
    label_column : int
        Index of the label column (negative values count from the end).
    header : bool
        Skip the first non-empty line.
    delimiter : str, optional
        Field separator. When omitted, a comma in the first data line selects
        comma-separated parsing and whitespace splitting is used otherwise.

    Raises
    ------
    DataFormatError
        On a row that cannot be parsed (the message names the line) or when
        either class ends up empty.
    """
    path = Path(path)
    positives = {_label_key(str(v)) for v in positive_labels}
    with path.open(newline="") as fh:
        lines = [(i + 1, ln) for i, ln in enumerate(fh) if ln.strip()]
    if header and lines:
        lines = lines[1:]
    if not lines:
        raise DataFormatError(f"{path}: no data rows")
    if delimiter is None:
        delimiter = "," if "," in lines[0][1] else None

    pos_rows, neg_rows = [], []
    width = None
    for lineno, text in lines:
        if delimiter is None:
            fields = text.split()
        else:
            fields = [f.strip() for f in next(csv.reader([text], delimiter=delimiter))]
        if width is None:
            width = len(fields)
        if len(fields) != width:
            raise DataFormatError(
                f"{path}:{lineno}: expected {width} fields, found {len(fields)}"
            )
        try:
            label = _label_key(fields[label_column])
            lab_idx = label_column % width
            cols = feature_columns if feature_columns is not None else [
                j for j in range(width) if j != lab_idx
            ]
            row = [float(fields[j]) for j in cols]
        except (ValueError, IndexError) as exc:
            raise DataFormatError(f"{path}:{lineno}: cannot parse row ({exc})") from None
        if not all(np.isfinite(row)):
            raise DataFormatError(f"{path}:{lineno}: non-finite feature value")
        (pos_rows if label in positives else neg_rows).append(row)

    if not pos_rows:
        raise DataFormatError(f"{path}: no rows carry a positive label")
    if not neg_rows:
        raise DataFormatError(f"{path}: no rows carry a negative label")
    return TwoSampleDataset(np.array(pos_rows), np.array(neg_rows))


def standardize(train: TwoSampleDataset, *others: TwoSampleDataset):
    """Centre and scale features using statistics of the pooled training data.

    Returns the transformed training set followed by every dataset in
    ``others`` mapped with the same affine transform. Constant features are
    left unscaled.
    """
    pooled = np.vstack([train.xs, train.zs])
    mu = pooled.mean(axis=0)
    sd = pooled.std(axis=0)
    sd[sd == 0] = 1.0
    out = [TwoSampleDataset((d.xs - mu) / sd, (d.zs - mu) / sd) for d in (train, *others)]
    return out[0] if not others else tuple(out)


def train_test_split(ds: TwoSampleDataset, test_fraction: float, rng: np.random.Generator):
    """Split each class independently, keeping ``test_fraction`` of it for testing."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")

    def split(a):
        perm = rng.permutation(a.shape[0])
        k = int(round(test_fraction * a.shape[0]))
        k = min(max(k, 1), a.shape[0] - 1)
        return a[np.sort(perm[k:])], a[np.sort(perm[:k])]

    xtr, xte = split(ds.xs)
    ztr, zte = split(ds.zs)
    return TwoSampleDataset(xtr, ztr), TwoSampleDataset(xte, zte)
