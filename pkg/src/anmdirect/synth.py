"""Synthetic additive-noise generators and noise-tail diagnostics.

The benchmark generator draws X uniformly on (-2.5, 2.5) and sets
Y = b*X^3 + X + eta with eta = |N|^q * sign(N) for a standard normal N:
q = 1 is exactly Gaussian noise, q > 1 super-Gaussian, q < 1 sub-Gaussian.
The noise is deliberately not re-standardized across q (its variance grows
with q, e.g. 3 at q = 2), so a q-sweep changes tail shape and scale
together.

Student-t and Laplace noises are extensions beyond the benchmark family;
they exercise the polynomial-tail regime directly.

Child seeds come from model.derive_seed, so the X stream and the noise
stream never interact and adding a generator never perturbs existing draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .model import (
    ConfigError,
    PairedSample,
    SampleTooSmall,
    STREAM_NOISE,
    STREAM_X,
    derive_seed,
)

__all__ = [
    "Uniform",
    "Gaussian",
    "PoweredGaussian",
    "Laplace",
    "StudentT",
    "Cubic",
    "Linear",
    "PiecewiseLinear",
    "NoiseSpec",
    "AnmSpec",
    "TailDiagnostic",
    "benchmark_spec",
    "linear_gaussian_spec",
    "sample_noise",
    "sample_anm",
    "tail_diagnostic",
    "parse_anm_spec",
    "load_anm_spec",
]


# ---------------------------------------------------------------------------
# Distribution / function specs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class Gaussian:
    sd: float

    def __post_init__(self):
        if not self.sd > 0:
            raise ValueError(f"sd must be positive, got {self.sd}")


@dataclass(frozen=True)
class PoweredGaussian:
    """|N|^q * sign(N) for standard normal N."""

    q: float

    def __post_init__(self):
        if not self.q > 0:
            raise ValueError(f"q must be positive, got {self.q}")


@dataclass(frozen=True)
class Laplace:
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")


@dataclass(frozen=True)
class StudentT:
    dof: float

    def __post_init__(self):
        # dof > 2 keeps the variance finite
        if not self.dof > 2:
            raise ValueError(f"dof must exceed 2, got {self.dof}")


@dataclass(frozen=True)
class Cubic:
    """f(x) = b*x^3 + x."""

    b: float

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        return self.b * x**3 + x


@dataclass(frozen=True)
class Linear:
    """f(x) = a*x."""

    a: float

    def __call__(self, x):
        return self.a * np.asarray(x, dtype=np.float64)


@dataclass(frozen=True)
class PiecewiseLinear:
    """Tabulated function, linearly interpolated, constant beyond the table."""

    knots_x: tuple
    knots_y: tuple

    def __post_init__(self):
        kx = tuple(float(v) for v in self.knots_x)
        ky = tuple(float(v) for v in self.knots_y)
        if len(kx) != len(ky) or len(kx) < 2:
            raise ValueError("need at least two knots with matching lengths")
        if any(b <= a for a, b in zip(kx, kx[1:])):
            raise ValueError("knot abscissae must be strictly increasing")
        object.__setattr__(self, "knots_x", kx)
        object.__setattr__(self, "knots_y", ky)

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=np.float64), self.knots_x, self.knots_y)


NoiseSpec = Union[PoweredGaussian, Gaussian, Laplace, StudentT]
XDist = Union[Uniform, Gaussian]
FSpec = Union[Cubic, Linear, PiecewiseLinear]


@dataclass(frozen=True)
class AnmSpec:
    """Ground-truth additive-noise model: Y = f(X) + eta, eta independent of X."""

    x_dist: XDist = Uniform(-2.5, 2.5)
    f: FSpec = Cubic(1.0)
    noise: NoiseSpec = PoweredGaussian(1.0)


def benchmark_spec(b: float = 1.0, q: float = 1.0) -> AnmSpec:
    """The cubic benchmark family: X ~ U(-2.5, 2.5), Y = b*X^3 + X + |N|^q sign(N)."""
    return AnmSpec(x_dist=Uniform(-2.5, 2.5), f=Cubic(b), noise=PoweredGaussian(q))


def linear_gaussian_spec(a: float = 1.0, s: float = 1.0) -> AnmSpec:
    """X ~ N(0,1), Y = a*X + N(0, s^2); both directions admit an additive model."""
    return AnmSpec(x_dist=Gaussian(1.0), f=Linear(a), noise=Gaussian(s))


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def sample_noise(spec: NoiseSpec, n: int, seed: int) -> np.ndarray:
    """n i.i.d. noise draws; deterministic in (spec, n, seed)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    if isinstance(spec, PoweredGaussian):
        z = rng.standard_normal(n)
        return np.abs(z) ** spec.q * np.sign(z)
    if isinstance(spec, Gaussian):
        return spec.sd * rng.standard_normal(n)
    if isinstance(spec, Laplace):
        return rng.laplace(0.0, spec.scale, n)
    if isinstance(spec, StudentT):
        return rng.standard_t(spec.dof, n)
    raise TypeError(f"not a noise spec: {spec!r}")


def _sample_x(dist: XDist, n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    if isinstance(dist, Uniform):
        # half-open [lo, hi); the open-interval endpoint is measure zero
        return rng.uniform(dist.lo, dist.hi, n)
    if isinstance(dist, Gaussian):
        return dist.sd * rng.standard_normal(n)
    raise TypeError(f"not an x distribution: {dist!r}")


def sample_anm(spec: AnmSpec, n: int, seed: int) -> PairedSample:
    """Draw a PairedSample from the model; X and noise use independent streams."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    xs = _sample_x(spec.x_dist, n, derive_seed(seed, STREAM_X))
    eta = sample_noise(spec.noise, n, derive_seed(seed, STREAM_NOISE))
    return PairedSample(xs, np.asarray(spec.f(xs)) + eta)


# ---------------------------------------------------------------------------
# Generator spec files (flat key=value, same format as inference configs)
# ---------------------------------------------------------------------------

def parse_anm_spec(text: str) -> AnmSpec:
    """Parse a generator description.

    Keys: ``x_dist`` (uniform:<lo>,<hi> | gaussian:<sd>), ``f``
    (cubic:<b> | linear:<a> | piecewise:<x>:<y>;<x>:<y>;...), ``noise``
    (powered-gaussian:<q> | gaussian:<sd> | laplace:<scale> |
    student-t:<dof>).  Unknown keys are an error; missing keys keep
    the benchmark defaults.
    """
    fields: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise ConfigError(f"expected key=value on line {lineno}")
        head, _, rest = value.partition(":")
        head = head.lower()
        try:
            if key == "x_dist":
                if head == "uniform":
                    lo, hi = (float(v) for v in rest.split(","))
                    fields["x_dist"] = Uniform(lo, hi)
                elif head == "gaussian":
                    fields["x_dist"] = Gaussian(float(rest))
                else:
                    raise ConfigError(f"unknown x distribution {head!r}")
            elif key == "f":
                if head == "cubic":
                    fields["f"] = Cubic(float(rest))
                elif head == "linear":
                    fields["f"] = Linear(float(rest))
                elif head == "piecewise":
                    pts = [tuple(float(v) for v in knot.split(":"))
                           for knot in rest.split(";") if knot]
                    fields["f"] = PiecewiseLinear(tuple(p[0] for p in pts),
                                                  tuple(p[1] for p in pts))
                else:
                    raise ConfigError(f"unknown function family {head!r}")
            elif key == "noise":
                if head == "powered-gaussian":
                    fields["noise"] = PoweredGaussian(float(rest))
                elif head == "gaussian":
                    fields["noise"] = Gaussian(float(rest))
                elif head == "laplace":
                    fields["noise"] = Laplace(float(rest))
                elif head == "student-t":
                    fields["noise"] = StudentT(float(rest))
                else:
                    raise ConfigError(f"unknown noise family {head!r}")
            else:
                raise ConfigError(f"unknown generator key {key!r} (line {lineno})")
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r} (line {lineno}): {exc}") from exc
    return AnmSpec(**fields)


def load_anm_spec(path) -> AnmSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_anm_spec(fh.read())


# ---------------------------------------------------------------------------
# Tail diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TailDiagnostic:
    """Hill-type tail exponent plus an exponential-tail indicator.

    Diagnostic only; inference never gates on it.  exponent is +inf when
    the sample has no spread.
    """

    exponent: float
    exponential_tail: bool
    per_fraction: tuple


DEFAULT_TAIL_FRACTIONS = (0.005, 0.01, 0.02)


def tail_diagnostic(values, fractions=DEFAULT_TAIL_FRACTIONS) -> TailDiagnostic:
    """Estimate the survival-function tail exponent of |values - median|.

    A Hill estimate is computed at each upper-order fraction k/n in
    ``fractions`` and the median of those estimates is reported.  The
    exponential-tail flag is set when the empirical -log survival curve
    bends upward in t (decays faster than any polynomial would allow).
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] < 1000:
        raise SampleTooSmall("tail estimation needs at least 1000 values")
    a = np.sort(np.abs(v - np.median(v)))[::-1]  # descending magnitudes
    if a[0] <= 0:
        return TailDiagnostic(math.inf, True, tuple(math.inf for _ in fractions))
    n = a.shape[0]
    estimates = []
    for frac in fractions:
        k = max(10, int(frac * n))
        top, pivot = a[:k], a[k]
        if pivot <= 0:
            estimates.append(math.inf)
            continue
        logs = np.log(top / pivot)
        mean_log = float(np.mean(logs))
        estimates.append(math.inf if mean_log <= 0 else 1.0 / mean_log)
    exponent = float(np.median(estimates))

    # -log S(t) at geometric survival levels; slopes rise iff the decay is
    # superlinear in t (Gaussian-like), stay flat for exponential tails,
    # and fall for polynomial tails.
    levels = np.array([0.1, 0.03, 0.01, 0.003, 0.001])
    t = np.quantile(a, 1.0 - levels)
    neg_log_s = -np.log(levels)
    slopes = np.diff(neg_log_s) / np.diff(t)
    superlinear = bool(slopes[-1] > 1.1 * slopes[0])
    return TailDiagnostic(exponent, superlinear, tuple(estimates))
