"""Sweep harness: replicated experiments over one axis, CSV in/out.

A sweep runs score_direction over a grid of one experimental axis
(regressor bandwidth, sample size, noise power q, or nonlinearity b), for
one or both estimation modes, with ``repetitions`` replicates per cell.
Replicate r regenerates its data and scores it with seed base_seed + r, so
two runs of the same spec produce byte-identical rows.csv.

A failed replicate (degenerate residuals, schedule violation, ...) is
recorded as a row with decision ``error:<Type>`` and NaN scores instead of
aborting the sweep; aggregates are computed over the clean rows only and
are exact functions of rows.csv.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np

from .model import (
    AnmdirectError,
    ConfigError,
    Direction,
    EstimationMode,
    Fixed,
    InferenceConfig,
    ParseError,
    PairedSample,
    parse_config,
    validate_sample,
)
from .infer import score_direction
from .synth import AnmSpec, Cubic, PoweredGaussian, sample_anm
from . import synth

__all__ = [
    "BandwidthGeometric",
    "SampleSize",
    "NoisePower",
    "Nonlinearity",
    "SweepSpec",
    "SweepRow",
    "SweepAggregate",
    "SweepResult",
    "run_sweep",
    "aggregate_rows",
    "emit_results",
    "read_rows",
    "ingest_csv",
    "parse_sweep_spec",
    "load_sweep_spec",
]


# ---------------------------------------------------------------------------
# Sweep specification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BandwidthGeometric:
    """Regression bandwidths start * factor**k, k = 0..steps-1.

    start=None resolves at sweep time to 0.05 x the covariate standard
    deviation of the first replicate (deliberately undersmoothed).
    """

    start: float | None
    factor: float = 1.5
    steps: int = 10

    def __post_init__(self):
        if self.start is not None and not self.start > 0:
            raise ConfigError("bandwidth start must be positive or auto")
        if not self.factor > 0:
            raise ConfigError("bandwidth factor must be positive")
        if self.steps < 1:
            raise ConfigError("need at least one bandwidth step")


@dataclass(frozen=True)
class SampleSize:
    values: tuple

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        if not vals:
            raise ConfigError("sample-size axis needs at least one value")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class NoisePower:
    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals or any(v <= 0 for v in vals):
            raise ConfigError("noise-power axis needs positive values")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class Nonlinearity:
    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ConfigError("nonlinearity axis needs at least one value")
        object.__setattr__(self, "values", vals)


SweepAxis = Union[BandwidthGeometric, SampleSize, NoisePower, Nonlinearity]


@dataclass(frozen=True)
class SweepSpec:
    axis: SweepAxis
    base: AnmSpec = field(default_factory=AnmSpec)
    infer_config: InferenceConfig = field(default_factory=InferenceConfig)
    n: int = 1000
    repetitions: int = 10
    compare_modes: bool = False
    out_dir: str | None = None

    def __post_init__(self):
        if self.repetitions < 1:
            raise ConfigError("need at least one repetition")
        if self.n < 1:
            raise ConfigError("base sample size must be positive")


@dataclass(frozen=True)
class SweepRow:
    axis_value: float
    mode: str
    repetition: int
    seed: int
    c_xy: float
    c_yx: float
    gap: float
    decision: str


@dataclass(frozen=True)
class SweepAggregate:
    axis_value: float
    mode: str
    mean_gap: float
    sd_gap: float
    frac_xtoy: float
    n_rows: int


@dataclass(frozen=True)
class SweepResult:
    rows: tuple
    aggregates: tuple


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------

def _axis_cells(spec: SweepSpec):
    """(axis_value, anm_spec, n, config_patch) per axis point, in order."""
    axis = spec.axis
    if isinstance(axis, SampleSize):
        return [(float(v), spec.base, int(v), {}) for v in axis.values]
    if isinstance(axis, NoisePower):
        return [(q, replace(spec.base, noise=PoweredGaussian(q)), spec.n, {})
                for q in axis.values]
    if isinstance(axis, Nonlinearity):
        if not isinstance(spec.base.f, Cubic):
            raise ConfigError("nonlinearity axis needs a cubic base model")
        return [(b, replace(spec.base, f=Cubic(b)), spec.n, {}) for b in axis.values]
    start = axis.start
    if start is None:
        preview = sample_anm(spec.base, spec.n, spec.infer_config.seed)
        start = 0.05 * float(np.std(preview.xs))
    return [
        (start * axis.factor**k, spec.base, spec.n,
         {"regression_bandwidth": Fixed(start * axis.factor**k)})
        for k in range(axis.steps)
    ]


def _run_case(case):
    axis_value, anm_spec, n, config, mode_kind, repetition = case
    seed = config.seed + repetition
    row_config = replace(config, seed=seed, mode=EstimationMode(mode_kind))
    try:
        sample = sample_anm(anm_spec, n, seed)
        score = score_direction(sample, row_config)
        return SweepRow(axis_value, mode_kind, repetition, seed,
                        score.c_xy, score.c_yx, score.gap, score.decision.value)
    except AnmdirectError as exc:
        nan = float("nan")
        return SweepRow(axis_value, mode_kind, repetition, seed,
                        nan, nan, nan, f"error:{type(exc).__name__}")


def run_sweep(spec: SweepSpec, jobs: int = 1) -> SweepResult:
    """Execute the sweep; rows are ordered (axis, mode, repetition)."""
    modes = ["coupled", "decoupled"] if spec.compare_modes else [spec.infer_config.mode.kind]
    cases = []
    for axis_value, anm_spec, n, patch in _axis_cells(spec):
        config = replace(spec.infer_config, **patch) if patch else spec.infer_config
        for mode_kind in modes:
            for rep in range(spec.repetitions):
                cases.append((axis_value, anm_spec, n, config, mode_kind, rep))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_case, cases, chunksize=1))
    else:
        rows = [_run_case(case) for case in cases]
    return SweepResult(rows=tuple(rows), aggregates=tuple(aggregate_rows(rows)))


def aggregate_rows(rows: Sequence[SweepRow]):
    """Per (axis_value, mode) mean/sd of gap and XtoY fraction over clean rows.

    sd is the population standard deviation, so a singleton cell reports 0.
    Error rows are excluded; n_rows counts the rows actually aggregated.
    """
    order = []
    groups = {}
    for row in rows:
        key = (row.axis_value, row.mode)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row)
    out = []
    for key in order:
        clean = [r for r in groups[key] if not r.decision.startswith("error:")]
        if clean:
            gaps = np.array([r.gap for r in clean])
            mean_gap = float(np.mean(gaps))
            sd_gap = float(np.std(gaps))
            frac = sum(r.decision == Direction.XtoY.value for r in clean) / len(clean)
        else:
            mean_gap = sd_gap = frac = float("nan")
        out.append(SweepAggregate(key[0], key[1], mean_gap, sd_gap, float(frac), len(clean)))
    return out


# ---------------------------------------------------------------------------
# CSV persistence
# ---------------------------------------------------------------------------

_ROWS_HEADER = "axis_value,mode,repetition,seed,c_xy,c_yx,gap,decision"
_AGG_HEADER = "axis_value,mode,mean_gap,sd_gap,frac_xtoy,n_rows"


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def emit_results(result: SweepResult, out_dir) -> tuple[str, str]:
    """Write rows.csv and aggregates.csv (17-significant-digit reals)."""
    os.makedirs(out_dir, exist_ok=True)
    rows_path = os.path.join(out_dir, "rows.csv")
    agg_path = os.path.join(out_dir, "aggregates.csv")
    with open(rows_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(_ROWS_HEADER + "\n")
        for r in result.rows:
            fh.write(f"{_fmt(r.axis_value)},{r.mode},{r.repetition},{r.seed},"
                     f"{_fmt(r.c_xy)},{_fmt(r.c_yx)},{_fmt(r.gap)},{r.decision}\n")
    with open(agg_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(_AGG_HEADER + "\n")
        for a in result.aggregates:
            fh.write(f"{_fmt(a.axis_value)},{a.mode},{_fmt(a.mean_gap)},"
                     f"{_fmt(a.sd_gap)},{_fmt(a.frac_xtoy)},{a.n_rows}\n")
    return rows_path, agg_path


def read_rows(path) -> list[SweepRow]:
    """Parse rows.csv back into SweepRow records."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != _ROWS_HEADER:
            raise ParseError(1, f"unexpected rows header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 8:
                raise ParseError(lineno, f"expected 8 columns, got {len(parts)}")
            try:
                rows.append(SweepRow(float(parts[0]), parts[1], int(parts[2]),
                                     int(parts[3]), float(parts[4]), float(parts[5]),
                                     float(parts[6]), parts[7]))
            except ValueError as exc:
                raise ParseError(lineno, str(exc)) from exc
    return rows


def ingest_csv(path) -> PairedSample:
    """Two numeric comma-separated columns; an optional leading `x,y` header."""
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if lineno == 1 and line.lower().replace(" ", "") == "x,y":
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise ParseError(lineno, f"expected two columns, got {len(parts)}")
            try:
                pairs.append((float(parts[0]), float(parts[1])))
            except ValueError:
                raise ParseError(lineno, f"non-numeric value in {line!r}") from None
    return validate_sample(pairs)


# ---------------------------------------------------------------------------
# Sweep spec files
# ---------------------------------------------------------------------------

_SWEEP_KEYS = ("axis", "axis_values", "generator", "b", "q", "n",
               "repetitions", "compare_modes", "out_dir")

_AXIS_NAMES = ("bandwidth-geometric", "sample-size", "noise-power", "nonlinearity")


def parse_sweep_spec(text: str) -> SweepSpec:
    """Sweep file = inference-config keys plus the sweep keys.

    axis=bandwidth-geometric takes axis_values=<start|auto>,<factor>,<steps>;
    the other axes take a plain comma-separated value list.  generator is
    ``cubic`` (parameterized by b, q), ``linear-gaussian`` (slope 1, unit
    noise), or ``custom:<path>`` pointing at a generator spec file.
    """
    sweep_lines = {}
    config_lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key = line.partition("=")[0].strip()
        if key in _SWEEP_KEYS:
            value = line.partition("=")[2].strip()
            sweep_lines[key] = (lineno, value)
        else:
            config_lines.append(raw)
    config = parse_config("\n".join(config_lines))

    if "axis" not in sweep_lines:
        raise ConfigError("sweep spec needs an axis key")
    axis_name = sweep_lines["axis"][1].lower()
    if axis_name not in _AXIS_NAMES:
        raise ConfigError(f"unknown axis {axis_name!r}")
    if "axis_values" not in sweep_lines:
        raise ConfigError("sweep spec needs axis_values")
    values = [v.strip() for v in sweep_lines["axis_values"][1].split(",") if v.strip()]

    if axis_name == "bandwidth-geometric":
        if len(values) != 3:
            raise ConfigError("bandwidth-geometric takes start,factor,steps")
        start = None if values[0].lower() == "auto" else float(values[0])
        axis: SweepAxis = BandwidthGeometric(start, float(values[1]), int(values[2]))
    elif axis_name == "sample-size":
        axis = SampleSize(tuple(int(v) for v in values))
    elif axis_name == "noise-power":
        axis = NoisePower(tuple(float(v) for v in values))
    else:
        axis = Nonlinearity(tuple(float(v) for v in values))

    b = float(sweep_lines["b"][1]) if "b" in sweep_lines else 1.0
    q = float(sweep_lines["q"][1]) if "q" in sweep_lines else 1.0
    generator = sweep_lines["generator"][1] if "generator" in sweep_lines else "cubic"
    if generator == "cubic":
        base = synth.benchmark_spec(b, q)
    elif generator == "linear-gaussian":
        base = synth.linear_gaussian_spec()
    elif generator.startswith("custom:"):
        base = synth.load_anm_spec(generator.partition(":")[2])
    else:
        raise ConfigError(f"unknown generator {generator!r}")

    compare = False
    if "compare_modes" in sweep_lines:
        token = sweep_lines["compare_modes"][1].lower()
        if token not in ("true", "false"):
            raise ConfigError(f"compare_modes must be true or false, got {token!r}")
        compare = token == "true"

    return SweepSpec(
        axis=axis,
        base=base,
        infer_config=config,
        n=int(sweep_lines["n"][1]) if "n" in sweep_lines else 1000,
        repetitions=int(sweep_lines["repetitions"][1]) if "repetitions" in sweep_lines else 10,
        compare_modes=compare,
        out_dir=sweep_lines["out_dir"][1] if "out_dir" in sweep_lines else None,
    )


def load_sweep_spec(path) -> SweepSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_sweep_spec(fh.read())
