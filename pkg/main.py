"""
Haar Wasserstein - Main Entry Point

Command-line driver for the eigenvalue experiments:

    sample        draw eigen-angle configurations (JSON lines)
    moments       exact and leading-order mean/variance of W2^2
    mc            Monte Carlo moments of W2^2 against the exact values
    limitlaw      characteristic-function grid of xi_G (plus an optional N ladder)
    pi-check      closed-form correlation integrals against quadrature
    reduce-test   W2^2 under a group against its alias
    trace-test    moments of Tr A^k
    asymptotics   decay of the exact moments toward their leading order

Exit status: 0 when every gate passes, 1 when a gate fails, 2 on errors.
--reps, --seed and --jobs fall back to the REPS, SEED and JOBS environment
variables.
"""
import argparse
import logging
import sys
from typing import List, Optional, Sequence

import numpy as np
from decouple import config

from adapters import json_text, write_json, write_jsonl, write_report, write_rows_csv
from dpp_sampler import SamplingError, UnsupportedGroupError, sample_angles
from ensembles import DomainError, GroupId, ensemble_spec
from exact_moments import MOMENT_TOL, TruncationError, asymptotic_decay, moment_report
from harness import (
    PI_GATE,
    ExperimentConfig,
    GateResult,
    limit_law_experiment,
    mc_experiment,
    reduction_test,
    trace_experiment,
    xi_cf_experiment,
)
from limit_laws import XI_TRUNCATION
from pi_oracle import PatternError, pi_check
from rng_streams import STREAM_DPP, replicate_rng
from run_logging import print_run_header, warn

# ========== Constants ==========
LOG_LEVEL = config("LOG_LEVEL", default="WARNING")
DEFAULT_REPS = 1000
DEFAULT_SEED = 0
DEFAULT_JOBS = 1
DEFAULT_GRID = "-2:2:0.5"
DEFAULT_NS = "8,16,32,64,128"
# log-log slope the exact-moment residuals must reach
SLOPE_GATE = -0.9

LIBRARY_ERRORS = (DomainError, SamplingError, UnsupportedGroupError, TruncationError, PatternError, ValueError, OSError)


def _configure_logging() -> None:
    logging.basicConfig(
        level=getattr(logging, str(LOG_LEVEL).upper(), logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise ValueError(f"expected a positive integer, got {value}")
    return value


def _non_negative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise ValueError(f"expected a non-negative integer, got {value}")
    return value


def _arg_type(cast):
    def parse(text: str):
        try:
            return cast(text)
        except ValueError as e:
            raise argparse.ArgumentTypeError(str(e)) from None
    parse.__name__ = cast.__name__
    return parse


def _int_list(text: str) -> List[int]:
    values = [_positive_int(part) for part in text.split(",") if part.strip()]
    if not values:
        raise ValueError("expected a comma-separated list of positive integers")
    return values


def parse_grid(text: str) -> np.ndarray:
    """'t0:t1:step' -> t0, t0 + step, ..., t1 (inclusive)."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"grid must look like t0:t1:step, got '{text}'")
    t0, t1, step = (float(p) for p in parts)
    if step <= 0 or t1 < t0:
        raise ValueError(f"grid needs step > 0 and t1 >= t0, got '{text}'")
    count = int(round((t1 - t0) / step)) + 1
    return np.linspace(t0, t0 + (count - 1) * step, count)


def _env_fallback(parser: argparse.ArgumentParser, value, env_name: str, cast, default):
    """Flag value, else the environment variable, else the default."""
    if value is not None:
        return value
    raw = config(env_name, default=None)
    if raw is None or str(raw).strip() == "":
        return default
    try:
        return cast(str(raw))
    except ValueError:
        parser.error(f"{env_name} environment variable must be a valid integer, got '{raw}'")


def _experiment_config(parser: argparse.ArgumentParser, args) -> ExperimentConfig:
    return ExperimentConfig(
        group=args.group,
        n=args.n,
        replicates=_env_fallback(parser, args.reps, "REPS", _positive_int, DEFAULT_REPS),
        seed=_env_fallback(parser, args.seed, "SEED", _non_negative_int, DEFAULT_SEED),
        jobs=_env_fallback(parser, args.jobs, "JOBS", _positive_int, DEFAULT_JOBS),
        tol=args.tol,
        output=args.out,
        fmt=args.format,
    )


def _status(passed: bool) -> int:
    return 0 if passed else 1


# ========== Subcommands ==========

def cmd_sample(parser, args) -> int:
    cfg = _experiment_config(parser, args)
    spec = ensemble_spec(cfg.group, cfg.n)
    records = [
        sample_angles(spec, replicate_rng(cfg.seed, rep, STREAM_DPP), seed_path=(cfg.seed, rep)).to_json()
        for rep in range(cfg.replicates)
    ]
    if args.format == "json":
        write_json(records, args.out)
    else:
        write_jsonl(records, args.out)
    return 0


def cmd_moments(parser, args) -> int:
    spec = ensemble_spec(args.group, args.n)
    print_run_header("MOMENTS", settings={"group": spec.group.value, "n": spec.n, "tol": args.tol})
    write_json(moment_report(spec, args.tol), args.out)
    return 0


def cmd_mc(parser, args) -> int:
    report = mc_experiment(_experiment_config(parser, args))
    write_report(report, args.out, args.format)
    return _status(report.passed)


def cmd_limitlaw(parser, args) -> int:
    cfg = _experiment_config(parser, args)
    try:
        grid = parse_grid(args.grid)
    except ValueError as e:
        parser.error(str(e))
    report = xi_cf_experiment(cfg, grid, k_max=args.trunc)
    columns = ["t", "re_cf_exact", "im_cf_exact", "re_cf_empirical", "im_cf_empirical"]
    write_rows_csv(report.details["cf_rows"], columns, args.out)

    summary = {
        "group": cfg.group.value,
        "ks": report.ks_statistics,
        "cf_max_deviation": report.details["cf_max_deviation"],
        "tail_std": report.details["tail_std"],
        "tail_bound": report.details["tail_bound"],
        "gaussian_tail_std": report.details["gaussian_tail_std"],
        "gates": [g.to_json() for g in report.gates],
    }
    passed = report.passed
    if args.ladder:
        ladder_report = limit_law_experiment(cfg, ladder=args.ladder, k_max=args.trunc)
        summary["ladder"] = ladder_report.details["ladder"]
        summary["ladder_gates"] = [g.to_json() for g in ladder_report.gates]
        passed = passed and ladder_report.passed
    summary["passed"] = passed
    if args.out and args.out != "-":
        write_json(summary, f"{args.out}.summary.json")
    else:
        # stdout carries the CSV grid
        sys.stderr.write(json_text(summary))
        sys.stderr.flush()
    return _status(passed)


def cmd_pi_check(parser, args) -> int:
    rows = pi_check(args.group, args.n, args.kmax)
    print_run_header("PI", settings={"group": args.group, "n": args.n, "kmax": args.kmax, "rows": len(rows)})
    columns = ["pattern", "args", "closed", "quadrature", "abs_diff"]
    table = [{**r.to_json(), "args": " ".join(str(a) for a in r.args)} for r in rows]
    write_rows_csv(table, columns, args.out)
    gate = GateResult.below("pi_max_abs_diff", max(r.abs_diff for r in rows), PI_GATE)
    if not gate.passed:
        warn(f"pi-check {args.group} n={args.n}: max discrepancy {gate.value:.3e} above {PI_GATE:.1e}")
    return _status(gate.passed)


def cmd_reduce(parser, args) -> int:
    report = reduction_test(_experiment_config(parser, args))
    write_report(report, args.out, args.format)
    return _status(report.passed)


def cmd_trace(parser, args) -> int:
    report = trace_experiment(_experiment_config(parser, args), k_max=args.kmax, source=args.source)
    write_report(report, args.out, args.format)
    return _status(report.passed)


def cmd_asymptotics(parser, args) -> int:
    fit = asymptotic_decay(args.group, args.ns, args.tol)
    gates = [
        GateResult(name="mean_slope", value=fit.mean_slope, threshold=SLOPE_GATE, passed=fit.mean_slope <= SLOPE_GATE),
        GateResult(name="var_slope", value=fit.var_slope, threshold=SLOPE_GATE, passed=fit.var_slope <= SLOPE_GATE),
    ]
    passed = all(g.passed for g in gates)
    write_json({**fit.to_json(), "gates": [g.to_json() for g in gates], "passed": passed}, args.out)
    for gate in gates:
        if not gate.passed:
            warn(f"asymptotics {fit.group}: {gate.name} = {gate.value:.3f} above {SLOPE_GATE}")
    return _status(passed)


# ========== Main CLI ==========

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--group", required=True, choices=[g.value for g in GroupId], help="Group family")
    common.add_argument("--n", type=_arg_type(_positive_int), default=8, help="Size parameter N (default: 8)")
    common.add_argument("--reps", type=_arg_type(_positive_int), help="Replicates (default: REPS env or 1000)")
    common.add_argument("--seed", type=_arg_type(_non_negative_int), help="Master seed (default: SEED env or 0)")
    common.add_argument("--jobs", type=_arg_type(_positive_int), help="Worker processes (default: JOBS env or 1)")
    common.add_argument("--tol", type=float, default=MOMENT_TOL, help="Exact-moment tolerance")
    common.add_argument("--out", help="Output file (default: stdout)")
    common.add_argument("--format", choices=["json", "csv", "jsonl"], default="json", help="Report format")

    parser = argparse.ArgumentParser(description="Wasserstein distance of Haar eigenvalues to uniform")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", parents=[common], help="Draw eigen-angle samples")
    p.set_defaults(handler=cmd_sample, format="jsonl")

    p = sub.add_parser("moments", parents=[common], help="Exact moments of W2^2")
    p.set_defaults(handler=cmd_moments)

    p = sub.add_parser("mc", parents=[common], help="Monte Carlo moments against exact values")
    p.set_defaults(handler=cmd_mc)

    p = sub.add_parser("limitlaw", parents=[common], help="Characteristic function grid of xi_G")
    p.add_argument("--grid", default=DEFAULT_GRID, help="t0:t1:step (default: %(default)s)")
    p.add_argument("--trunc", type=_arg_type(_positive_int), default=XI_TRUNCATION, help="Series truncation k_max")
    p.add_argument("--ladder", type=_arg_type(_int_list), help="Comma-separated N ladder for the finite-N test")
    p.set_defaults(handler=cmd_limitlaw)

    p = sub.add_parser("pi-check", parents=[common], help="Closed-form correlation integrals against quadrature")
    p.add_argument("--kmax", type=_arg_type(_positive_int), default=12, help="Largest k and l (default: 12)")
    p.set_defaults(handler=cmd_pi_check)

    p = sub.add_parser("reduce-test", parents=[common], help="Group against its alias")
    p.set_defaults(handler=cmd_reduce)

    p = sub.add_parser("trace-test", parents=[common], help="Moments of Tr A^k")
    p.add_argument("--kmax", type=_arg_type(_positive_int), default=4, help="Largest power k (default: 4)")
    p.add_argument("--source", choices=["matrix", "dpp", "both"], help="Matrix sampler, eigen-angle sampler, or both")
    p.set_defaults(handler=cmd_trace)

    p = sub.add_parser("asymptotics", parents=[common], help="Decay of the exact moments toward leading order")
    p.add_argument("--ns", type=_arg_type(_int_list), default=_int_list(DEFAULT_NS), help="Comma-separated sizes")
    p.set_defaults(handler=cmd_asymptotics)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(parser, args)
    except LIBRARY_ERRORS as e:
        print(f"[ERROR] {type(e).__name__}: {e}", file=sys.stderr, flush=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
