import math

import numpy as np
import pytest

from anmdirect.model import (
    CompactSupportWarning,
    ConfigError,
    CrossValidation,
    Direction,
    EmptySample,
    EstimationMode,
    Fixed,
    InferenceConfig,
    LengthMismatch,
    LooLikelihood,
    NonFiniteValue,
    PairedSample,
    ParseError,
    TheorySchedule,
    compute_tau,
    derive_seed,
    format_bandwidth,
    parse_bandwidth,
    parse_config,
    validate_sample,
)


class TestValidateSample:
    def test_identity_pass_through(self):
        s = validate_sample([(0, 1), (1, 2)])
        assert s.n == 2
        assert list(s.xs) == [0.0, 1.0]
        assert list(s.ys) == [1.0, 2.0]

    def test_nan_reports_row(self):
        with pytest.raises(NonFiniteValue) as exc:
            validate_sample([(0, float("nan"))])
        assert exc.value.row == 0

    def test_inf_reports_row_index(self):
        with pytest.raises(NonFiniteValue) as exc:
            validate_sample([(0, 1), (2, 3), (float("inf"), 0)])
        assert exc.value.row == 2

    def test_empty(self):
        with pytest.raises(EmptySample):
            validate_sample([])

    def test_row_arity(self):
        with pytest.raises(LengthMismatch):
            validate_sample([(0, 1), (1, 2, 3)])

    def test_permutation_does_not_change_outcome(self):
        rows = [(float(i), float(i) * 2) for i in range(20)]
        rng = np.random.default_rng(0)
        shuffled = [rows[i] for i in rng.permutation(20)]
        assert validate_sample(shuffled).n == validate_sample(rows).n

    def test_arrays_are_frozen(self):
        s = validate_sample([(0, 1), (1, 2)])
        with pytest.raises(ValueError):
            s.xs[0] = 5.0

    def test_swapped(self):
        s = validate_sample([(0, 1), (1, 2)])
        sw = s.swapped()
        assert list(sw.xs) == [1.0, 2.0] and list(sw.ys) == [0.0, 1.0]


class TestPairedSample:
    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            PairedSample(np.zeros(3), np.zeros(4))

    def test_empty(self):
        with pytest.raises(EmptySample):
            PairedSample(np.zeros(0), np.zeros(0))


class TestComputeTau:
    def test_zero_scaling(self):
        assert compute_tau(100, 0.0, 0.25) == 0.0

    def test_n_one_identity(self):
        assert compute_tau(1, 0.5, 0.25) == 0.5

    def test_ten_thousand(self):
        # 10000**(-1/4) = 1/10 by direct arithmetic
        assert compute_tau(10_000, 1.0, 0.25) == pytest.approx(0.1, abs=1e-15)

    def test_strictly_decreasing_to_zero(self):
        taus = [compute_tau(n, 0.7, 0.3) for n in (1, 10, 100, 10_000, 10**8)]
        assert all(b < a for a, b in zip(taus, taus[1:]))
        assert taus[-1] < 1e-2


class TestBandwidthSpecs:
    @pytest.mark.parametrize("text,expected", [
        ("fixed:0.5", Fixed(0.5)),
        ("theory:1.5,0.4", TheorySchedule(1.5, 0.4)),
        ("cv", CrossValidation()),
        ("cv:10", CrossValidation(10)),
        ("cv:3:0.1,0.2,0.4", CrossValidation(3, (0.1, 0.2, 0.4))),
        ("loo", LooLikelihood()),
        ("loo:0.01,0.1,1", LooLikelihood((0.01, 0.1, 1.0))),
    ])
    def test_parse_format_round_trip(self, text, expected):
        spec = parse_bandwidth(text)
        assert spec == expected
        assert parse_bandwidth(format_bandwidth(spec)) == spec

    def test_grid_must_increase(self):
        with pytest.raises(ConfigError):
            CrossValidation(5, (0.2, 0.1))

    def test_grid_must_be_positive(self):
        with pytest.raises(ConfigError):
            LooLikelihood((0.0, 1.0))

    def test_fixed_must_be_positive(self):
        with pytest.raises(ConfigError):
            Fixed(-1.0)

    def test_unknown_policy(self):
        with pytest.raises(ConfigError):
            parse_bandwidth("magic:3")


class TestInferenceConfig:
    def test_defaults_are_raw_score(self):
        cfg = InferenceConfig()
        assert cfg.tau0 == 0.0 and cfg.mode.kind == "coupled"

    @pytest.mark.parametrize("kwargs", [
        {"regressor": "spline"},
        {"entropy_kernel": "tophat"},
        {"tau_exponent": 0.0},
        {"tau_exponent": 1.5},
        {"tau0": -0.1},
        {"seed": -1},
        {"seed": 2**64},
        {"truncation_bound": 0.0},
    ])
    def test_rejects_bad_fields(self, kwargs):
        with pytest.raises(ConfigError):
            InferenceConfig(**kwargs)

    def test_gaussian_coupled_warns(self):
        with pytest.warns(CompactSupportWarning):
            InferenceConfig(entropy_kernel="gaussian")

    def test_gaussian_decoupled_does_not_warn(self):
        import warnings
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            InferenceConfig(entropy_kernel="gaussian", mode=EstimationMode("decoupled"))


class TestConfigFiles:
    CONFIG = """\
# comment line
mode=decoupled:17
regressor=nw:biweight
regression_bandwidth=cv:4:0.1,0.5,1
entropy_bandwidth=loo:0.05,0.2
entropy_kernel=epanechnikov
truncation_bound=12.5
tau0=0.25
tau_exponent=0.5
seed=42
"""

    def test_full_parse(self):
        cfg = parse_config(self.CONFIG)
        assert cfg.mode == EstimationMode("decoupled", 17)
        assert cfg.regressor == "nw" and cfg.nw_kernel == "biweight"
        assert cfg.regression_bandwidth == CrossValidation(4, (0.1, 0.5, 1.0))
        assert cfg.entropy_bandwidth == LooLikelihood((0.05, 0.2))
        assert cfg.entropy_kernel == "epanechnikov"
        assert cfg.truncation_bound == 12.5
        assert (cfg.tau0, cfg.tau_exponent, cfg.seed) == (0.25, 0.5, 42)

    def test_unknown_key_is_error(self):
        with pytest.raises(ConfigError, match="unknown config key"):
            parse_config("bandwidth=0.5\n")

    def test_bad_value_reports_line(self):
        with pytest.raises(ConfigError, match="line 1"):
            parse_config("tau0=abc\n")

    def test_missing_equals(self):
        with pytest.raises(ParseError):
            parse_config("just a line\n")

    def test_missing_keys_keep_defaults(self):
        cfg = parse_config("seed=7\n")
        assert cfg.seed == 7 and cfg.regressor == "box"

    def test_auto_truncation(self):
        assert parse_config("truncation_bound=auto\n").truncation_bound is None


class TestSeedDiscipline:
    def test_deterministic(self):
        assert derive_seed(123, 0) == derive_seed(123, 0)

    def test_streams_differ(self):
        seeds = {derive_seed(99, s) for s in range(16)}
        assert len(seeds) == 16

    def test_uint64_range(self):
        for s in (0, 1, 2**63, 2**64 - 1):
            assert 0 <= derive_seed(s, 3) < 2**64


def test_direction_labels():
    assert Direction.from_label("x->y") is Direction.XtoY
    assert Direction.from_label("abstain") is Direction.Abstain
    with pytest.raises(ValueError):
        Direction.from_label("sideways")


def test_estimation_mode_validation():
    with pytest.raises(ConfigError):
        EstimationMode("entangled")
