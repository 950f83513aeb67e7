"""Core domain types, configuration schema, and seed discipline.

Everything downstream (regression, entropy estimation, direction scoring,
simulation sweeps) builds on the types defined here.  All types are frozen
after construction and safe to share across threads/processes.

Config files are flat UTF-8 ``key=value`` lines.  Recognized keys (all
optional, unknown keys are an error)::

    mode                 coupled | decoupled | decoupled:<split_seed>
    regressor            box | nw | nw:<kernel> | krr | krr:<lambda>
    regression_bandwidth fixed:<h> | theory:<c>,<alpha> | cv | cv:<folds>
                         | cv:<folds>:<g1,g2,...>
    entropy_bandwidth    loo | loo:<g1,g2,...> | fixed:<s> | theory:<c>,<beta>
                         | cv[:<folds>[:<grid>]]
    entropy_kernel       biweight | epanechnikov | gaussian
    truncation_bound     auto | <positive float>
    tau0                 <float >= 0>
    tau_exponent         <float in (0, 1]>
    seed                 <unsigned 64-bit integer>

Blank lines and lines starting with ``#`` are ignored.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np

__all__ = [
    "AnmdirectError",
    "EmptySample",
    "NonFiniteValue",
    "LengthMismatch",
    "SampleTooSmall",
    "DegenerateSample",
    "ScheduleViolation",
    "SingularSystem",
    "ParseError",
    "ConfigError",
    "CompactSupportWarning",
    "Direction",
    "PairedSample",
    "EstimationMode",
    "Fixed",
    "TheorySchedule",
    "CrossValidation",
    "LooLikelihood",
    "BandwidthSpec",
    "InferenceConfig",
    "DirectionScore",
    "validate_sample",
    "compute_tau",
    "derive_seed",
    "parse_bandwidth",
    "format_bandwidth",
    "parse_config",
    "load_config",
]


# ---------------------------------------------------------------------------
# Errors and warnings
# ---------------------------------------------------------------------------

class AnmdirectError(Exception):
    """Base class for all semantic errors raised by this package."""


class EmptySample(AnmdirectError):
    """The input sample has no rows."""


class NonFiniteValue(AnmdirectError):
    """A NaN or infinity was found; carries the offending row index."""

    def __init__(self, row: int, value=None):
        self.row = row
        super().__init__(f"non-finite value at row {row}" + (f": {value!r}" if value is not None else ""))


class LengthMismatch(AnmdirectError):
    """xs/ys lengths differ, or a row does not have exactly two entries."""


class SampleTooSmall(AnmdirectError):
    """Not enough points for the requested operation."""


class DegenerateSample(AnmdirectError):
    """All values identical; differential entropy diverges to -inf."""


class ScheduleViolation(AnmdirectError):
    """Bandwidth schedule exponents outside the admissible region."""


class SingularSystem(AnmdirectError):
    """Kernel ridge linear solve failed even after jitter retry."""


class ParseError(AnmdirectError):
    """Malformed CSV or config input; carries a 1-based line number."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class ConfigError(AnmdirectError):
    """Invalid or unknown configuration key/value."""


class CompactSupportWarning(UserWarning):
    """Coupled estimation with a kernel whose support is unbounded.

    The consistency guarantee for coupled estimation is stated for density
    kernels that vanish outside [-1, 1]; the Gaussian kernel does not.
    """


# ---------------------------------------------------------------------------
# Directions and samples
# ---------------------------------------------------------------------------

class Direction(enum.Enum):
    XtoY = "x->y"
    YtoX = "y->x"
    Abstain = "abstain"

    @classmethod
    def from_label(cls, label: str) -> "Direction":
        for member in cls:
            if member.value == label:
                return member
        raise ValueError(f"unknown direction label {label!r}")


@dataclass(frozen=True)
class PairedSample:
    """An ordered sample of (x, y) pairs, stored as two float64 arrays."""

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=np.float64)
        ys = np.asarray(self.ys, dtype=np.float64)
        if xs.ndim != 1 or ys.ndim != 1:
            raise LengthMismatch("xs and ys must be one-dimensional")
        if xs.shape[0] != ys.shape[0]:
            raise LengthMismatch(f"xs has {xs.shape[0]} entries, ys has {ys.shape[0]}")
        if xs.shape[0] == 0:
            raise EmptySample("sample has no rows")
        bad_x = ~np.isfinite(xs)
        bad_y = ~np.isfinite(ys)
        if bad_x.any() or bad_y.any():
            row = int(np.argmax(bad_x | bad_y))
            raise NonFiniteValue(row)
        xs.flags.writeable = False
        ys.flags.writeable = False
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def n(self) -> int:
        return self.xs.shape[0]

    def swapped(self) -> "PairedSample":
        """The same sample with the roles of x and y exchanged."""
        return PairedSample(self.ys, self.xs)


def validate_sample(raw: Sequence) -> PairedSample:
    """Validate a sequence of (x, y) pairs into a PairedSample.

    Raises EmptySample, LengthMismatch (row without exactly two entries,
    reported by index), or NonFiniteValue (reported by row index).
    """
    rows = list(raw)
    if not rows:
        raise EmptySample("sample has no rows")
    xs = np.empty(len(rows))
    ys = np.empty(len(rows))
    for i, row in enumerate(rows):
        try:
            x, y = row
        except (TypeError, ValueError):
            raise LengthMismatch(f"row {i} does not have exactly two entries") from None
        x = float(x)
        y = float(y)
        if not (np.isfinite(x) and np.isfinite(y)):
            raise NonFiniteValue(i)
        xs[i] = x
        ys[i] = y
    return PairedSample(xs, ys)


# ---------------------------------------------------------------------------
# Estimation mode and bandwidth policies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EstimationMode:
    """Coupled (everything on the full sample) or decoupled (fit on one
    half, residual entropies on the other half).

    ``split_seed`` pins the decoupled half-split permutation; when None the
    split seed is derived from the inference seed.
    """

    kind: str = "coupled"
    split_seed: int | None = None

    def __post_init__(self):
        if self.kind not in ("coupled", "decoupled"):
            raise ConfigError(f"unknown estimation mode {self.kind!r}")

    @property
    def decoupled(self) -> bool:
        return self.kind == "decoupled"


@dataclass(frozen=True)
class Fixed:
    value: float

    def __post_init__(self):
        if not (np.isfinite(self.value) and self.value > 0):
            raise ConfigError(f"fixed bandwidth must be positive, got {self.value}")


@dataclass(frozen=True)
class TheorySchedule:
    """Polynomial-decay schedule c * n**(-exponent)."""

    c: float
    exponent: float

    def __post_init__(self):
        if not (np.isfinite(self.c) and self.c > 0):
            raise ConfigError(f"schedule constant must be positive, got {self.c}")
        if not (0 < self.exponent < 1):
            raise ConfigError(f"schedule exponent must lie in (0, 1), got {self.exponent}")


def _check_grid(grid):
    if grid is None:
        return None
    g = tuple(float(v) for v in grid)
    if not g:
        raise ConfigError("bandwidth grid is empty")
    if any(not np.isfinite(v) or v <= 0 for v in g):
        raise ConfigError("bandwidth grid entries must be positive and finite")
    if any(b <= a for a, b in zip(g, g[1:])):
        raise ConfigError("bandwidth grid must be strictly increasing")
    return g


@dataclass(frozen=True)
class CrossValidation:
    """k-fold cross-validated selection over a grid (None = data-driven grid)."""

    folds: int = 5
    grid: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.folds < 2:
            raise ConfigError(f"cross-validation needs >= 2 folds, got {self.folds}")
        object.__setattr__(self, "grid", _check_grid(self.grid))


@dataclass(frozen=True)
class LooLikelihood:
    """Leave-one-out log-likelihood selection over a grid (None = data-driven)."""

    grid: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "grid", _check_grid(self.grid))


BandwidthSpec = Union[Fixed, TheorySchedule, CrossValidation, LooLikelihood]


def parse_bandwidth(text: str) -> BandwidthSpec:
    """Parse the config-file rendering of a bandwidth policy."""
    head, _, rest = text.strip().partition(":")
    head = head.lower()
    if head == "fixed":
        return Fixed(float(rest))
    if head == "theory":
        parts = rest.split(",")
        if len(parts) != 2:
            raise ConfigError(f"theory schedule needs 'c,exponent', got {text!r}")
        return TheorySchedule(float(parts[0]), float(parts[1]))
    if head == "cv":
        if not rest:
            return CrossValidation()
        parts = rest.split(":", 1)
        folds = int(parts[0])
        grid = tuple(float(v) for v in parts[1].split(",")) if len(parts) > 1 else None
        return CrossValidation(folds, grid)
    if head == "loo":
        grid = tuple(float(v) for v in rest.split(",")) if rest else None
        return LooLikelihood(grid)
    raise ConfigError(f"unknown bandwidth policy {text!r}")


def format_bandwidth(spec: BandwidthSpec) -> str:
    if isinstance(spec, Fixed):
        return f"fixed:{spec.value:.17g}"
    if isinstance(spec, TheorySchedule):
        return f"theory:{spec.c:.17g},{spec.exponent:.17g}"
    if isinstance(spec, CrossValidation):
        out = f"cv:{spec.folds}"
        if spec.grid is not None:
            out += ":" + ",".join(f"{v:.17g}" for v in spec.grid)
        return out
    if isinstance(spec, LooLikelihood):
        if spec.grid is None:
            return "loo"
        return "loo:" + ",".join(f"{v:.17g}" for v in spec.grid)
    raise TypeError(f"not a bandwidth spec: {spec!r}")


# ---------------------------------------------------------------------------
# Inference configuration
# ---------------------------------------------------------------------------

_REGRESSORS = ("box", "nw", "krr")
_ENTROPY_KERNELS = ("biweight", "epanechnikov", "gaussian")
_NW_KERNELS = ("box", "biweight", "epanechnikov", "gaussian")

DEFAULT_RIDGE_LAMBDA = 0.1


@dataclass(frozen=True)
class InferenceConfig:
    """Everything score_direction needs besides the data.

    tau0 defaults to 0 so library calls report the raw score gap; the CLI
    applies its own decision default (tau0=0.5, tau_exponent=0.25).  The
    threshold schedule tau0 * n**(-tau_exponent) only has to vanish as n
    grows; the particular rate is a reporting choice, not canonical.
    """

    mode: EstimationMode = field(default_factory=EstimationMode)
    regressor: str = "box"
    nw_kernel: str = "epanechnikov"
    ridge_lambda: float = DEFAULT_RIDGE_LAMBDA
    regression_bandwidth: BandwidthSpec = field(default_factory=CrossValidation)
    entropy_bandwidth: BandwidthSpec = field(default_factory=LooLikelihood)
    entropy_kernel: str = "biweight"
    truncation_bound: float | None = None  # None = auto: 3 * max|response|
    tau0: float = 0.0
    tau_exponent: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.regressor not in _REGRESSORS:
            raise ConfigError(f"unknown regressor {self.regressor!r}")
        if self.nw_kernel not in _NW_KERNELS:
            raise ConfigError(f"unknown regression kernel {self.nw_kernel!r}")
        if self.entropy_kernel not in _ENTROPY_KERNELS:
            raise ConfigError(f"unknown entropy kernel {self.entropy_kernel!r}")
        if not self.ridge_lambda > 0:
            raise ConfigError("ridge penalty must be positive")
        if self.truncation_bound is not None and not self.truncation_bound > 0:
            raise ConfigError("truncation bound must be positive or auto")
        if self.tau0 < 0:
            raise ConfigError("tau0 must be non-negative")
        if not (0 < self.tau_exponent <= 1):
            raise ConfigError("tau_exponent must lie in (0, 1]")
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        if self.entropy_kernel == "gaussian" and not self.mode.decoupled:
            warnings.warn(
                "coupled estimation with a Gaussian entropy kernel: the "
                "coupled-mode guarantee assumes a kernel supported in [-1, 1]",
                CompactSupportWarning,
                stacklevel=2,
            )

    def with_seed(self, seed: int) -> "InferenceConfig":
        return replace(self, seed=seed)


_CONFIG_KEYS = (
    "mode",
    "regressor",
    "regression_bandwidth",
    "entropy_bandwidth",
    "entropy_kernel",
    "truncation_bound",
    "tau0",
    "tau_exponent",
    "seed",
)


def parse_config(text: str, base: InferenceConfig | None = None) -> InferenceConfig:
    """Parse flat key=value lines into an InferenceConfig.

    Unknown keys are an error; missing keys keep the values from ``base``
    (or the defaults).
    """
    fields: dict = {}
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParseError(lineno, f"expected key=value, got {rawline!r}")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r} (line {lineno})")
        try:
            _apply_config_key(fields, key, value)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"bad value for {key!r} (line {lineno}): {exc}") from exc
    base = base if base is not None else InferenceConfig()
    return replace(base, **fields)


def _apply_config_key(fields: dict, key: str, value: str) -> None:
    if key == "mode":
        head, _, rest = value.lower().partition(":")
        fields["mode"] = EstimationMode(head, int(rest) if rest else None)
    elif key == "regressor":
        head, _, rest = value.lower().partition(":")
        fields["regressor"] = head
        if head == "nw" and rest:
            fields["nw_kernel"] = rest
        elif head == "krr" and rest:
            fields["ridge_lambda"] = float(rest)
        elif rest:
            raise ConfigError(f"regressor {head!r} takes no parameter")
    elif key in ("regression_bandwidth", "entropy_bandwidth"):
        fields[key] = parse_bandwidth(value)
    elif key == "entropy_kernel":
        fields[key] = value.lower()
    elif key == "truncation_bound":
        fields[key] = None if value.lower() == "auto" else float(value)
    elif key == "tau0":
        fields[key] = float(value)
    elif key == "tau_exponent":
        fields[key] = float(value)
    elif key == "seed":
        fields[key] = int(value)


def load_config(path, base: InferenceConfig | None = None) -> InferenceConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), base=base)


# ---------------------------------------------------------------------------
# Scores
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DirectionScore:
    """The two complexity scores, their components, and the decision.

    c_xy = h_x + h_res_fwd and c_yx = h_y + h_res_bwd hold by construction;
    gap = c_yx - c_xy, so a positive gap favors the x -> y direction.
    """

    h_x: float
    h_y: float
    h_res_fwd: float
    h_res_bwd: float
    c_xy: float
    c_yx: float
    gap: float
    tau: float
    decision: Direction
    n: int = 0
    mode: str = "coupled"
    h_fwd: float = float("nan")
    h_bwd: float = float("nan")
    sigma_fwd: float = float("nan")
    sigma_bwd: float = float("nan")
    sigma_x: float = float("nan")
    sigma_y: float = float("nan")

    def as_lines(self) -> list[str]:
        """key=value rendering used by the CLI."""
        out = []
        for name in (
            "decision", "gap", "tau", "c_xy", "c_yx", "h_x", "h_y",
            "h_res_fwd", "h_res_bwd", "n", "mode",
            "h_fwd", "h_bwd", "sigma_fwd", "sigma_bwd", "sigma_x", "sigma_y",
        ):
            value = getattr(self, name)
            if isinstance(value, Direction):
                value = value.value
            elif isinstance(value, float):
                value = f"{value:.17g}"
            out.append(f"{name}={value}")
        return out


# ---------------------------------------------------------------------------
# Thresholds and seed streams
# ---------------------------------------------------------------------------

def compute_tau(n: int, tau0: float, tau_exponent: float) -> float:
    """Abstention threshold tau0 * n**(-tau_exponent); vanishes as n grows."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return tau0 * float(n) ** (-tau_exponent)


_MASK64 = (1 << 64) - 1

# Named seed streams; adding a stream never perturbs existing ones.
STREAM_X = 0
STREAM_NOISE = 1
STREAM_SPLIT = 2


def derive_seed(seed: int, stream: int) -> int:
    """Derive an independent child seed via a splitmix64-style finalizer.

    Deterministic in (seed, stream); distinct streams give decorrelated
    generators, so generators added later never shift existing draws.
    """
    z = (int(seed) + 0x9E3779B97F4A7C15 * (int(stream) + 1)) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64
