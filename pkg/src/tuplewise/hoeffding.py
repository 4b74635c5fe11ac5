"""Hoeffding decomposition of a two-sample kernel.

For independent X and Z and a kernel h with mean U(h), write

* h1(x) = E[h(x, Z)] - U(h),
* h2(z) = E[h(X, z)] - U(h),
* h0(x, z) = h(x, z) - U(h) - h1(x) - h2(z).

The three terms are orthogonal, so Var h(X, Z) splits as
sigma0^2 + sigma1^2 + sigma2^2 with sigma1^2 = Var h1(X), sigma2^2 = Var h2(Z)
and sigma0^2 = Var h0(X, Z).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DiscreteAUCDistribution, DiscreteTwoSampleDistribution, GaussianProductDistribution
from .kernels import Kernel

__all__ = [
    "VarianceComponents",
    "Projections",
    "UnsupportedDistributionError",
    "hoeffding_projections",
    "hoeffding_components_enumerated",
    "hoeffding_components_closed_auc",
    "hoeffding_components_closed_product",
    "enumerated_mean",
    "closed_auc_mean",
]

IDENTITY_RTOL = 1e-12


class UnsupportedDistributionError(TypeError):
    """The distribution has no finite support to enumerate."""


@dataclass(frozen=True)
class VarianceComponents:
    """Hoeffding variance components of a kernel under a data distribution.

    Attributes
    ----------
    sigma0_sq : float
        Variance of the degenerate term h0(X, Z).
    sigma1_sq, sigma2_sq : float
        Variances of the first-order projections h1(X) and h2(Z).
    sigma_sq : float
        Total variance Var h(X, Z); must equal the sum of the other three.
    """

    sigma0_sq: float
    sigma1_sq: float
    sigma2_sq: float
    sigma_sq: float

    def __post_init__(self):
        vals = (self.sigma0_sq, self.sigma1_sq, self.sigma2_sq, self.sigma_sq)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("variance components must be finite")
        if any(v < 0 for v in vals):
            raise ValueError(f"variance components must be nonnegative, got {vals}")
        total = self.sigma0_sq + self.sigma1_sq + self.sigma2_sq
        if abs(self.sigma_sq - total) > IDENTITY_RTOL * max(self.sigma_sq, total):
            raise ValueError(
                f"sigma_sq={self.sigma_sq!r} differs from the component sum {total!r}"
            )

    @classmethod
    def from_parts(cls, sigma0_sq: float, sigma1_sq: float, sigma2_sq: float) -> "VarianceComponents":
        return cls(sigma0_sq, sigma1_sq, sigma2_sq, sigma0_sq + sigma1_sq + sigma2_sq)

    def identity_error(self) -> float:
        """Relative gap between sigma_sq and the component sum."""
        total = self.sigma0_sq + self.sigma1_sq + self.sigma2_sq
        scale = max(self.sigma_sq, total)
        return 0.0 if scale == 0 else abs(self.sigma_sq - total) / scale


@dataclass(frozen=True)
class Projections:
    """Exact Hoeffding projections on a finite support."""

    mean: float
    h1: np.ndarray
    h2: np.ndarray
    h0: np.ndarray
    x_probs: np.ndarray
    z_probs: np.ndarray


def _as_discrete(dist) -> DiscreteTwoSampleDistribution:
    if isinstance(dist, DiscreteTwoSampleDistribution):
        return dist
    if isinstance(dist, DiscreteAUCDistribution):
        return dist.as_discrete()
    raise UnsupportedDistributionError(
        f"{type(dist).__name__} has no finite support; enumeration needs a discrete distribution"
    )


def hoeffding_projections(kernel: Kernel, dist) -> Projections:
    """Compute h1, h2 and h0 on the support of ``dist`` by enumeration."""
    d = _as_discrete(dist)
    H = np.asarray(kernel.matrix(d.x_values, d.z_values), dtype=float)
    px, pz = d.x_probs, d.z_probs
    row = H @ pz  # E[h(x, Z)]
    col = px @ H  # E[h(X, z)]
    mean = float(px @ row)
    h1 = row - mean
    h2 = col - mean
    h0 = H - mean - h1[:, None] - h2[None, :]
    return Projections(mean, h1, h2, h0, px, pz)


def hoeffding_components_enumerated(kernel: Kernel, dist) -> VarianceComponents:
    """Exact variance components by summation over the finite support.

    Raises
    ------
    UnsupportedDistributionError
        If ``dist`` is not discrete.
    """
    pr = hoeffding_projections(kernel, dist)
    s1 = float(pr.x_probs @ pr.h1**2)
    s2 = float(pr.z_probs @ pr.h2**2)
    s0 = float(pr.x_probs @ pr.h0**2 @ pr.z_probs)
    # the total is computed independently of the parts so the identity is a real check
    d = _as_discrete(dist)
    H = np.asarray(kernel.matrix(d.x_values, d.z_values), dtype=float)
    s = float(pr.x_probs @ (H - pr.mean) ** 2 @ pr.z_probs)
    return VarianceComponents(s0, s1, s2, s)


def enumerated_mean(kernel: Kernel, dist) -> float:
    """U(h) = E[h(X, Z)] by enumeration."""
    return hoeffding_projections(kernel, dist).mean


def _check_prob(name: str, v: float) -> None:
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {v}")


def hoeffding_components_closed_auc(p: float, q: float) -> VarianceComponents:
    """Closed-form components of I{z < x} for the discrete AUC model.

    With X on {0, 2}, P(X=2) = q and Z on {-1, +1}, P(Z=+1) = p.
    """
    _check_prob("p", p)
    _check_prob("q", q)
    s1 = p * p * q * (1 - q)
    s2 = (1 - q) ** 2 * p * (1 - p)
    s0 = p * q * (1 - p) * (1 - q)
    s = p * (1 - p + p * q) * (1 - q)
    # s equals s0 + s1 + s2 algebraically; rounding may leave it a few ulps off
    return VarianceComponents(s0, s1, s2, s)


def closed_auc_mean(p: float, q: float) -> float:
    """U(h) = P(Z < X) = q + (1 - q)(1 - p) for the discrete AUC model."""
    _check_prob("p", p)
    _check_prob("q", q)
    return q + (1 - q) * (1 - p)


def hoeffding_components_closed_product(dist: GaussianProductDistribution) -> VarianceComponents:
    """Components of h(x, z) = x z under independent Gaussians."""
    if not (dist.sigma_x > 0 and dist.sigma_z > 0):
        raise ValueError("standard deviations must be strictly positive")
    vx, vz = dist.sigma_x**2, dist.sigma_z**2
    return VarianceComponents.from_parts(vx * vz, dist.mu_z**2 * vx, dist.mu_x**2 * vz)
