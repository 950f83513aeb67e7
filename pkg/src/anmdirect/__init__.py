"""Causal direction inference for variable pairs under additive noise.

Score both candidate directions by summing a marginal entropy with the
entropy of the corresponding regression residual; the direction with the
smaller sum wins once it leads by a vanishing threshold, otherwise the
call abstains.  The package bundles the scoring pipeline, the kernel
regressors and KDE entropy estimators it runs on, synthetic benchmark
generators, closed-form/numeric oracles, and a replicated sweep harness
with a CLI front end.
"""

from .model import (
    AnmdirectError,
    CompactSupportWarning,
    ConfigError,
    CrossValidation,
    DegenerateSample,
    Direction,
    DirectionScore,
    EmptySample,
    EstimationMode,
    Fixed,
    InferenceConfig,
    LengthMismatch,
    LooLikelihood,
    NonFiniteValue,
    PairedSample,
    ParseError,
    SampleTooSmall,
    ScheduleViolation,
    SingularSystem,
    TheorySchedule,
    compute_tau,
    derive_seed,
    load_config,
    parse_config,
    validate_sample,
)
from .entropy import (
    DensityEstimate,
    EntropyEstimate,
    KernelSpec,
    kde_eval,
    resubstitution_entropy,
    theory_bandwidths,
    tune_sigma_loo,
)
from .regress import (
    RegressionFit,
    ResidualSeries,
    average_excess_risk,
    fit_box_kernel,
    fit_kernel_ridge,
    fit_nadaraya_watson,
    residuals,
    select_bandwidth_cv,
)
from .infer import SplitPlan, decide, make_split, score_direction
from .synth import (
    AnmSpec,
    Cubic,
    Gaussian,
    Laplace,
    Linear,
    PoweredGaussian,
    StudentT,
    Uniform,
    benchmark_spec,
    linear_gaussian_spec,
    sample_anm,
    sample_noise,
    tail_diagnostic,
)
from .oracle import (
    analytic_entropy,
    histogram_mutual_information,
    lemma1_check_linear_gaussian,
    lemma1_check_numeric,
    numeric_entropy,
)
from .bench import (
    BandwidthGeometric,
    NoisePower,
    Nonlinearity,
    SampleSize,
    SweepResult,
    SweepSpec,
    emit_results,
    ingest_csv,
    run_sweep,
)

__version__ = "0.1.0"
