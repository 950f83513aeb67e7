"""Kernel-density differential entropy estimation (nats).

The residual/marginal entropy estimator is the resubstitution form

    H = -(1/n) * sum_i ln p(v_i),   p(t) = 1/(n*sigma) * sum_j K((v_j - t)/sigma)

with the KDE built on the same values it is evaluated at.  The density is
normalized by the KDE bandwidth sigma so it integrates to one.  Supported
kernels: biweight (default; unit integral, bounded derivative, support in
[-1, 1]), epanechnikov (derivative kink at +-1), gaussian (unbounded
support -- coupled-mode use draws a CompactSupportWarning at config time).

Compact-kernel sums are computed exactly via sorted windows: small
bandwidths gather the few in-window points directly, large bandwidths use
prefix power sums of the (centered) values, which is algebraically exact
for polynomial kernels.  Cost is O(n log n) per bandwidth, so leave-one-out
grid tuning is cheap at n = 1e4.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .model import ConfigError, DegenerateSample, ScheduleViolation

__all__ = [
    "KernelSpec",
    "DensityEstimate",
    "EntropyEstimate",
    "kde_eval",
    "resubstitution_entropy",
    "tune_sigma_loo",
    "theory_bandwidths",
    "default_sigma_grid",
]

_GAUSSIAN_CUTOFF = 8.0  # ignore contributions beyond this many sigmas


class KernelSpec(enum.Enum):
    BIWEIGHT = "biweight"
    EPANECHNIKOV = "epanechnikov"
    GAUSSIAN = "gaussian"

    @classmethod
    def from_name(cls, name) -> "KernelSpec":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ConfigError(f"unknown entropy kernel {name!r}") from None

    @property
    def support_radius(self) -> float:
        """Radius beyond which K is (numerically) zero, in kernel units."""
        return math.inf if self is KernelSpec.GAUSSIAN else 1.0

    def pdf(self, u):
        """Kernel density K(u); vectorized."""
        u = np.asarray(u, dtype=np.float64)
        if self is KernelSpec.BIWEIGHT:
            inside = np.abs(u) < 1.0
            t = 1.0 - u * u
            return np.where(inside, 0.9375 * t * t, 0.0)
        if self is KernelSpec.EPANECHNIKOV:
            inside = np.abs(u) < 1.0
            return np.where(inside, 0.75 * (1.0 - u * u), 0.0)
        return np.exp(-0.5 * u * u) / math.sqrt(2.0 * math.pi)

    def at_zero(self) -> float:
        if self is KernelSpec.BIWEIGHT:
            return 0.9375
        if self is KernelSpec.EPANECHNIKOV:
            return 0.75
        return 1.0 / math.sqrt(2.0 * math.pi)


class _SortedCenters:
    """Sorted, mean-centered centers with prefix power sums.

    Centering keeps the prefix-sum expansions of the polynomial kernels
    well conditioned for desk-scale data.
    """

    def __init__(self, values: np.ndarray):
        values = np.asarray(values, dtype=np.float64)
        self.shift = float(values.mean())
        v = np.sort(values - self.shift)
        self.v = v
        self.n = v.shape[0]
        self.range = float(v[-1] - v[0]) if self.n > 1 else 0.0
        self._prefix = None

    def prefix(self):
        # prefix[k][i] = sum of v**k over the first i sorted entries
        if self._prefix is None:
            n = self.n
            p = np.zeros((5, n + 1))
            powers = np.ones_like(self.v)
            p[0, 1:] = np.arange(1, n + 1)
            for k in range(1, 5):
                powers = powers * self.v
                p[k, 1:] = np.cumsum(powers)
            self._prefix = p
        return self._prefix

    def kernel_sums(self, queries: np.ndarray, sigma: float, kernel: KernelSpec) -> np.ndarray:
        """sum_j K((v_j - q)/sigma) for each query q (queries in original units)."""
        q = np.asarray(queries, dtype=np.float64) - self.shift
        radius = sigma * (1.0 if kernel.support_radius == 1.0 else _GAUSSIAN_CUTOFF)
        lo = np.searchsorted(self.v, q - radius, side="right")
        hi = np.searchsorted(self.v, q + radius, side="left")
        counts = hi - lo
        # Wide windows: exact prefix-moment evaluation for polynomial kernels,
        # dense chunks for the Gaussian.  Narrow windows: direct gather.
        wide = self.range > 0 and 2.0 * radius >= self.range / 8.0
        if wide and kernel is not KernelSpec.GAUSSIAN:
            return self._moment_sums(q, lo, hi, counts, sigma, kernel)
        if wide:
            return self._dense_gaussian_sums(q, sigma)
        return self._gather_sums(q, lo, hi, counts, sigma, kernel)

    def _moment_sums(self, q, lo, hi, counts, sigma, kernel):
        p = self.prefix()
        s1 = p[1][hi] - p[1][lo]
        s2 = p[2][hi] - p[2][lo]
        d2 = s2 - 2.0 * q * s1 + counts * q * q
        if kernel is KernelSpec.EPANECHNIKOV:
            return 0.75 * (counts - d2 / (sigma * sigma))
        s3 = p[3][hi] - p[3][lo]
        s4 = p[4][hi] - p[4][lo]
        q2 = q * q
        d4 = s4 - 4.0 * q * s3 + 6.0 * q2 * s2 - 4.0 * q * q2 * s1 + counts * q2 * q2
        sig2 = sigma * sigma
        return 0.9375 * (counts - 2.0 * d2 / sig2 + d4 / (sig2 * sig2))

    def _gather_sums(self, q, lo, hi, counts, sigma, kernel, budget: int = 4_000_000):
        out = np.zeros(q.shape[0])
        start = 0
        while start < q.shape[0]:
            stop = start
            total = 0
            while stop < q.shape[0] and (total == 0 or total + counts[stop] <= budget):
                total += counts[stop]
                stop += 1
            cq, clo, ccnt = q[start:stop], lo[start:stop], counts[start:stop]
            if total > 0:
                rows = np.repeat(np.arange(stop - start), ccnt)
                offsets = np.arange(total) - np.repeat(np.cumsum(ccnt) - ccnt, ccnt)
                idx = offsets + np.repeat(clo, ccnt)
                u = (self.v[idx] - cq[rows]) / sigma
                out[start:stop] = np.bincount(rows, weights=kernel.pdf(u), minlength=stop - start)
            start = stop
        return out

    def _dense_gaussian_sums(self, q, sigma, chunk: int = 512):
        out = np.empty(q.shape[0])
        for start in range(0, q.shape[0], chunk):
            block = q[start:start + chunk]
            u = (self.v[None, :] - block[:, None]) / sigma
            out[start:start + chunk] = np.exp(-0.5 * u * u).sum(axis=1) / math.sqrt(2.0 * math.pi)
        return out


@dataclass(frozen=True)
class DensityEstimate:
    """A one-dimensional KDE: centers, bandwidth sigma, kernel."""

    centers: np.ndarray
    sigma: float
    kernel: KernelSpec

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=np.float64)
        if centers.ndim != 1 or centers.shape[0] == 0:
            raise ValueError("centers must be a non-empty 1-d sequence")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "kernel", KernelSpec.from_name(self.kernel))
        object.__setattr__(self, "_sorted", _SortedCenters(centers))

    @property
    def n(self) -> int:
        return self.centers.shape[0]


@dataclass(frozen=True)
class EntropyEstimate:
    value: float
    sigma_used: float
    n: int
    method: str = "resubstitution"


def kde_eval(estimate: DensityEstimate, t):
    """Density of the KDE at t (scalar or array)."""
    scalar = np.isscalar(t)
    queries = np.atleast_1d(np.asarray(t, dtype=np.float64))
    sums = estimate._sorted.kernel_sums(queries, estimate.sigma, estimate.kernel)
    dens = np.maximum(sums, 0.0) / (estimate.n * estimate.sigma)
    return float(dens[0]) if scalar else dens


def resubstitution_entropy(values, sigma: float, kernel) -> EntropyEstimate:
    """-(1/n) sum_i ln p(v_i) with p the KDE built on the same values.

    Each point is its own center, so the log argument is always at least
    K(0)/(n*sigma) > 0.  Raises DegenerateSample when every value is
    identical (the estimate diverges to -inf as sigma shrinks and carries
    no information at any sigma).
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.shape[0] < 2:
        raise ValueError("need a 1-d sequence with at least 2 values")
    if not (np.isfinite(sigma) and sigma > 0):
        raise ValueError(f"sigma must be positive, got {sigma}")
    if np.all(values == values[0]):
        raise DegenerateSample("all values identical; entropy diverges")
    kernel = KernelSpec.from_name(kernel)
    n = values.shape[0]
    sc = _SortedCenters(values)
    sums = sc.kernel_sums(values, sigma, kernel)
    sums = np.maximum(sums, kernel.at_zero())  # own center always contributes
    value = float(np.mean(np.log(n * sigma) - np.log(sums)))
    return EntropyEstimate(value=value, sigma_used=float(sigma), n=n)


def tune_sigma_loo(values, kernel, grid=None) -> float:
    """Grid sigma maximizing the leave-one-out log-likelihood.

    The KDE is rebuilt without point i for each term:
    sum_i ln p_{-i}(v_i), p_{-i}(v_i) = (S_i - K(0)) / ((n-1)*sigma) where
    S_i is the full kernel sum at v_i.  Ties break toward the larger sigma;
    if every grid point scores -inf (compact kernel, isolated points) the
    largest grid value is returned.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.shape[0] < 3:
        raise ValueError("need a 1-d sequence with at least 3 values")
    kernel = KernelSpec.from_name(kernel)
    if grid is None:
        grid = default_sigma_grid(values)
    grid = [float(s) for s in grid]
    if not grid or any(s <= 0 for s in grid):
        raise ValueError("grid must be non-empty with positive entries")
    n = values.shape[0]
    sc = _SortedCenters(values)
    k0 = kernel.at_zero()
    best_sigma = max(grid)
    best_ll = -math.inf
    for sigma in sorted(grid):
        sums = sc.kernel_sums(values, sigma, kernel) - k0
        if np.any(sums <= 0.0):
            continue  # some point sees no neighbor: -inf log-likelihood
        ll = float(np.sum(np.log(sums) - math.log((n - 1) * sigma)))
        if ll >= best_ll:  # >= : ties go to the larger sigma
            best_ll = ll
            best_sigma = sigma
    return best_sigma


def default_sigma_grid(values, points: int = 30) -> np.ndarray:
    """30 geometric points spanning [1e-3, 10] x sample standard deviation."""
    scale = float(np.std(np.asarray(values, dtype=np.float64)))
    if scale <= 0 or not np.isfinite(scale):
        scale = 1.0
    return np.geomspace(1e-3 * scale, 10.0 * scale, points)


def theory_bandwidths(n: int, c1: float, alpha: float, c2: float, beta: float):
    """Schedule (h, sigma) = (c1 * n**-alpha, c2 * n**-beta).

    beta must lie in (0, min{(1-alpha)/4, alpha/2}); outside that interval
    the coupled-mode consistency guarantee is void and ScheduleViolation
    is raised.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not (0 < alpha < 1):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if c1 <= 0 or c2 <= 0:
        raise ValueError("schedule constants must be positive")
    beta_max = min((1.0 - alpha) / 4.0, alpha / 2.0)
    if not (0 < beta < beta_max):
        raise ScheduleViolation(
            f"beta={beta} outside (0, {beta_max}) for alpha={alpha}"
        )
    return c1 * float(n) ** (-alpha), c2 * float(n) ** (-beta)
