"""Direction scoring: fit both directions, compare entropy sums.

The score of the x -> y candidate is C_XY = H(X) + H(Y - f(X)) and
symmetrically C_YX = H(Y) + H(X - g(Y)); the smaller score wins once it
leads by the threshold tau, otherwise the call is abstained.

Coupled estimation fits and evaluates everything on the full sample.
Decoupled estimation fits f and g on one random half and estimates the
residual entropies on the other half, which stops the entropy estimator
from chasing the in-sample regression error; marginal entropies always use
the full sample (lowest variance).  Bandwidth tuning respects the split:
regression cross-validation sees only the fitting half, the residual-KDE
likelihood tuning sees only the evaluation half.

The forward and backward pipelines draw their tuning seeds from
(seed, seed^1), so scoring the swapped sample with the mirrored seed
reproduces the opposite direction bit for bit (gap' = -gap).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import entropy as ent
from . import regress
from .model import (
    ConfigError,
    Direction,
    DirectionScore,
    EstimationMode,
    Fixed,
    CrossValidation,
    InferenceConfig,
    LooLikelihood,
    PairedSample,
    SampleTooSmall,
    STREAM_SPLIT,
    TheorySchedule,
    compute_tau,
    derive_seed,
)

__all__ = ["SplitPlan", "make_split", "decide", "score_direction"]


@dataclass(frozen=True)
class SplitPlan:
    """Index sets for fitting, residual-entropy evaluation, and marginals."""

    fit_indices: np.ndarray
    entropy_indices: np.ndarray
    marginal_indices: np.ndarray


def make_split(n: int, mode: EstimationMode, seed: int) -> SplitPlan:
    """Build the coupled (everything) or decoupled (seeded half/half) plan.

    Decoupled mode needs n >= 4 so both halves hold at least two points.
    The explicit split_seed on the mode, when set, overrides ``seed``.
    """
    if n < 1:
        raise SampleTooSmall(f"n must be >= 1, got {n}")
    full = np.arange(n)
    if not mode.decoupled:
        return SplitPlan(full, full, full)
    if n < 4:
        raise SampleTooSmall(f"decoupled estimation needs n >= 4, got {n}")
    split_seed = mode.split_seed if mode.split_seed is not None else seed
    perm = np.random.default_rng(split_seed).permutation(n)
    half = (n + 1) // 2
    return SplitPlan(np.sort(perm[:half]), np.sort(perm[half:]), full)


def decide(c_xy: float, c_yx: float, tau: float) -> Direction:
    """Three-way rule; at tau = 0 an exact tie abstains (conservative)."""
    fwd = c_xy + tau <= c_yx
    bwd = c_yx + tau <= c_xy
    if fwd and not bwd:
        return Direction.XtoY
    if bwd and not fwd:
        return Direction.YtoX
    return Direction.Abstain


def _resolve_regression_bandwidth(spec, covariate, response, config, seed) -> float:
    if isinstance(spec, Fixed):
        return spec.value
    if isinstance(spec, TheorySchedule):
        return spec.c * float(len(covariate)) ** (-spec.exponent)
    if isinstance(spec, CrossValidation):
        return regress.select_bandwidth_cv(
            covariate, response, config.regressor,
            folds=spec.folds, grid=spec.grid, seed=seed,
            kernel=config.nw_kernel, ridge_lambda=config.ridge_lambda,
            bound=config.truncation_bound,
        )
    raise ConfigError(
        "leave-one-out likelihood tuning applies to the entropy bandwidth only"
    )


def _fit_direction(covariate, response, config: InferenceConfig, seed: int):
    h = _resolve_regression_bandwidth(
        config.regression_bandwidth, covariate, response, config, seed)
    if config.regressor == "box":
        fit = regress.fit_box_kernel(covariate, response, h, config.truncation_bound)
    elif config.regressor == "nw":
        fit = regress.fit_nadaraya_watson(covariate, response, config.nw_kernel, h,
                                          config.truncation_bound)
    else:
        fit = regress.fit_kernel_ridge(covariate, response, h, config.ridge_lambda,
                                       config.truncation_bound)
    return fit, h


def _tune_sigma_cv(values, kernel, folds: int, grid, seed: int) -> float:
    """k-fold held-out log-likelihood analogue of the LOO tuner."""
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    if n < folds:
        raise SampleTooSmall(f"need n >= folds, got n={n}, folds={folds}")
    if grid is None:
        grid = ent.default_sigma_grid(values)
    perm = np.random.default_rng(seed).permutation(n)
    blocks = np.array_split(perm, folds)
    best_sigma = max(float(s) for s in grid)
    best_ll = -math.inf
    for sigma in sorted(float(s) for s in grid):
        ll = 0.0
        for block in blocks:
            held = np.zeros(n, dtype=bool)
            held[block] = True
            dens = ent.kde_eval(
                ent.DensityEstimate(values[~held], sigma, kernel), values[held])
            if np.any(dens <= 0.0):
                ll = -math.inf
                break
            ll += float(np.sum(np.log(dens)))
        if ll >= best_ll and ll > -math.inf:
            best_ll = ll
            best_sigma = sigma
    return best_sigma


def _entropy_of(values, config: InferenceConfig, seed: int):
    spec = config.entropy_bandwidth
    if isinstance(spec, Fixed):
        sigma = spec.value
    elif isinstance(spec, TheorySchedule):
        reg = config.regression_bandwidth
        if isinstance(reg, TheorySchedule):
            # joint validation of the (alpha, beta) schedule pair
            ent.theory_bandwidths(len(values), reg.c, reg.exponent, spec.c, spec.exponent)
        sigma = spec.c * float(len(values)) ** (-spec.exponent)
    elif isinstance(spec, LooLikelihood):
        sigma = ent.tune_sigma_loo(values, config.entropy_kernel, spec.grid)
    elif isinstance(spec, CrossValidation):
        sigma = _tune_sigma_cv(values, config.entropy_kernel, spec.folds, spec.grid, seed)
    else:
        raise ConfigError(f"unsupported entropy bandwidth policy {spec!r}")
    estimate = ent.resubstitution_entropy(values, sigma, config.entropy_kernel)
    return estimate.value, sigma


def score_direction(sample: PairedSample, config: InferenceConfig) -> DirectionScore:
    """Score both directions and apply the threshold rule.

    Deterministic in (sample, config).  Propagates DegenerateSample,
    SampleTooSmall, and ScheduleViolation from the underlying estimators.
    """
    n = sample.n
    if n < 8:
        raise SampleTooSmall(f"direction scoring needs n >= 8, got {n}")
    plan = make_split(n, config.mode, derive_seed(config.seed, STREAM_SPLIT))
    xs, ys = sample.xs, sample.ys
    fwd_seed = config.seed
    bwd_seed = config.seed ^ 1

    fit_fwd, h_fwd = _fit_direction(xs[plan.fit_indices], ys[plan.fit_indices],
                                    config, fwd_seed)
    fit_bwd, h_bwd = _fit_direction(ys[plan.fit_indices], xs[plan.fit_indices],
                                    config, bwd_seed)

    res_fwd = ys[plan.entropy_indices] - fit_fwd.predict(xs[plan.entropy_indices])
    res_bwd = xs[plan.entropy_indices] - fit_bwd.predict(ys[plan.entropy_indices])

    h_res_fwd, sigma_fwd = _entropy_of(res_fwd, config, fwd_seed)
    h_res_bwd, sigma_bwd = _entropy_of(res_bwd, config, bwd_seed)
    h_x, sigma_x = _entropy_of(xs[plan.marginal_indices], config, fwd_seed)
    h_y, sigma_y = _entropy_of(ys[plan.marginal_indices], config, bwd_seed)

    c_xy = h_x + h_res_fwd
    c_yx = h_y + h_res_bwd
    tau = compute_tau(n, config.tau0, config.tau_exponent)
    return DirectionScore(
        h_x=h_x, h_y=h_y, h_res_fwd=h_res_fwd, h_res_bwd=h_res_bwd,
        c_xy=c_xy, c_yx=c_yx, gap=c_yx - c_xy, tau=tau,
        decision=decide(c_xy, c_yx, tau),
        n=n, mode=config.mode.kind,
        h_fwd=h_fwd, h_bwd=h_bwd,
        sigma_fwd=sigma_fwd, sigma_bwd=sigma_bwd,
        sigma_x=sigma_x, sigma_y=sigma_y,
    )
