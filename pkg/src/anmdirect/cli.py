"""Command-line interface.

Subcommands::

    infer    --data sample.csv [--config cfg] [--seed S]
    simulate --generator cubic|linear-gaussian|custom --n N --seed S --out f.csv
    sweep    --spec sweep.cfg [--out DIR] [--jobs J] [--h0 H]
    verify   [--lemma1 | --entropy | --all]

Exit codes: ``infer`` maps the decision to 0 (x->y), 1 (y->x) or
2 (abstain); other subcommands return 0 on success.  Usage errors and
missing input files exit 64, malformed data/config 65, internal failures
70.  ``verify`` exits 1 when any oracle check misses its tolerance.

For decisions the CLI defaults to tau0=0.5, tau_exponent=0.25 (the library
default is tau0=0, i.e. raw score reporting); a config file overrides both.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import replace

import numpy as np

from . import bench, oracle, synth
from .infer import score_direction
from .model import (
    AnmdirectError,
    ConfigError,
    Direction,
    InferenceConfig,
    ParseError,
    load_config,
)

EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_SOFTWARE = 70

_EXIT_BY_DIRECTION = {Direction.XtoY: 0, Direction.YtoX: 1, Direction.Abstain: 2}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="anmdirect", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("infer", help="score a two-column CSV and print the decision")
    p.add_argument("--data", required=True, help="CSV with two numeric columns (optional x,y header)")
    p.add_argument("--config", help="inference config file (flat key=value)")
    p.add_argument("--seed", type=int, help="override the config seed")

    p = sub.add_parser("simulate", help="write a synthetic sample to CSV")
    p.add_argument("--generator", default="cubic",
                   choices=["cubic", "linear-gaussian", "custom"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--b", type=float, default=1.0, help="cubic strength (cubic generator)")
    p.add_argument("--q", type=float, default=1.0, help="noise power (cubic generator)")
    p.add_argument("--a", type=float, default=1.0, help="slope (linear-gaussian generator)")
    p.add_argument("--s", type=float, default=1.0, help="noise sd (linear-gaussian generator)")
    p.add_argument("--model", help="generator spec file (custom generator)")

    p = sub.add_parser("sweep", help="run a replicated sweep and write rows/aggregates CSVs")
    p.add_argument("--spec", required=True, help="sweep spec file")
    p.add_argument("--out", help="output directory (overrides out_dir in the spec)")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                   help="parallel replicates (default: processor count)")
    p.add_argument("--h0", type=float,
                   help="starting bandwidth for a bandwidth-geometric axis "
                        "(default: 0.05 x covariate std)")

    p = sub.add_parser("verify", help="run the oracle checks")
    p.add_argument("--lemma1", action="store_true", help="identity checks only")
    p.add_argument("--entropy", action="store_true", help="entropy checks only")
    p.add_argument("--all", action="store_true", help="everything (default)")

    return parser


def _cmd_infer(args) -> int:
    base = InferenceConfig(tau0=0.5, tau_exponent=0.25)
    config = load_config(args.config, base=base) if args.config else base
    if args.seed is not None:
        config = config.with_seed(args.seed)
    sample = bench.ingest_csv(args.data)
    score = score_direction(sample, config)
    for line in score.as_lines():
        print(line)
    return _EXIT_BY_DIRECTION[score.decision]


def _cmd_simulate(args) -> int:
    if args.generator == "cubic":
        spec = synth.benchmark_spec(args.b, args.q)
    elif args.generator == "linear-gaussian":
        spec = synth.linear_gaussian_spec(args.a, args.s)
    else:
        if not args.model:
            raise _UsageError("custom generator needs --model <spec file>")
        spec = synth.load_anm_spec(args.model)
    sample = synth.sample_anm(spec, args.n, args.seed)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write("x,y\n")
        for x, y in zip(sample.xs, sample.ys):
            fh.write(f"{x:.17g},{y:.17g}\n")
    print(f"wrote {args.n} rows to {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    spec = bench.load_sweep_spec(args.spec)
    if args.h0 is not None:
        if not isinstance(spec.axis, bench.BandwidthGeometric):
            raise _UsageError("--h0 applies to a bandwidth-geometric axis only")
        spec = replace(spec, axis=replace(spec.axis, start=args.h0))
    out_dir = args.out or spec.out_dir
    if not out_dir:
        raise _UsageError("no output directory: pass --out or set out_dir in the spec")
    result = bench.run_sweep(spec, jobs=max(1, args.jobs))
    rows_path, agg_path = bench.emit_results(result, out_dir)
    errors = sum(r.decision.startswith("error:") for r in result.rows)
    print(f"wrote {len(result.rows)} rows ({errors} failed) to {rows_path}")
    print(f"wrote {len(result.aggregates)} aggregates to {agg_path}")
    return 0


# ---------------------------------------------------------------------------
# verify: oracle checks with their pinned tolerances
# ---------------------------------------------------------------------------

def _check(name: str, ok: bool, detail: str, failures: list) -> None:
    status = "ok  " if ok else "FAIL"
    print(f"{status} {name}: {detail}")
    if not ok:
        failures.append(name)


def _verify_lemma1(failures: list) -> None:
    for a, s in ((1.0, 1.0), (0.0, 1.0), (2.0, 0.5), (-1.5, 2.0)):
        check = oracle.lemma1_check_linear_gaussian(a, s)
        _check(f"identity closed-form a={a} s={s}", check.discrepancy < 1e-12,
               f"|left-right| = {check.discrepancy:.3g}", failures)
    numeric = oracle.lemma1_check_numeric(synth.benchmark_spec(1.0, 1.0), seed=20240)
    _check("identity numeric cubic b=1 q=1", numeric.discrepancy < 0.05,
           f"discrepancy = {numeric.discrepancy:.4f} (< 0.05)", failures)
    lin = oracle.lemma1_check_numeric(synth.linear_gaussian_spec(1.0, 1.0), seed=20241)
    _check("identity numeric linear-gaussian", lin.discrepancy < 0.02,
           f"discrepancy = {lin.discrepancy:.4f} (< 0.02)", failures)
    closed = oracle.lemma1_check_linear_gaussian(1.0, 1.0)
    agree = max(abs(lin.left - closed.left), abs(lin.right - closed.right))
    _check("identity numeric-vs-closed-form", agree < 0.02,
           f"max side difference = {agree:.4f} (< 0.02)", failures)


def _verify_entropy(failures: list) -> None:
    from .entropy import resubstitution_entropy, tune_sigma_loo

    rng = np.random.default_rng(7021)
    cases = [
        ("uniform(-2.5,2.5)", rng.uniform(-2.5, 2.5, 10_000), math.log(5.0)),
        ("gaussian sd=1", rng.standard_normal(10_000), 0.5 * math.log(2 * math.pi * math.e)),
        ("laplace scale=1", rng.laplace(0.0, 1.0, 10_000), 1.0 + math.log(2.0)),
    ]
    for name, values, truth in cases:
        sigma = tune_sigma_loo(values, "biweight")
        est = resubstitution_entropy(values, sigma, "biweight")
        err = abs(est.value - truth)
        _check(f"entropy resubstitution {name}", err < 0.05,
               f"|est-true| = {err:.4f} (< 0.05)", failures)
    for dist, name in ((synth.Uniform(-2.5, 2.5), "uniform"),
                       (synth.Gaussian(1.0), "gaussian"),
                       (synth.Laplace(1.0), "laplace")):
        p, lo, hi = oracle._x_density(dist) if not isinstance(dist, synth.Laplace) \
            else oracle._noise_density(dist)
        err = abs(oracle.numeric_entropy(p, lo, hi, 10_001) - oracle.analytic_entropy(dist))
        _check(f"entropy numeric-vs-analytic {name}", err < 1e-5,
               f"|numeric-analytic| = {err:.2e} (< 1e-5)", failures)


def _cmd_verify(args) -> int:
    run_lemma1 = args.lemma1 or args.all or not (args.lemma1 or args.entropy)
    run_entropy = args.entropy or args.all or not (args.lemma1 or args.entropy)
    failures: list = []
    if run_lemma1:
        _verify_lemma1(failures)
    if run_entropy:
        _verify_entropy(failures)
    if failures:
        print(f"{len(failures)} check(s) failed")
        return 1
    print("all checks passed")
    return 0


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "infer":
            return _cmd_infer(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        return _cmd_verify(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"usage error: no such file: {exc.filename}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ConfigError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except AnmdirectError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOFTWARE


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
