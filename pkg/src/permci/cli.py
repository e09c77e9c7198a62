"""Command-line interface.

Subcommands:

- ``exact``    exact interval; picks the fast balanced search or the
               general-design exact search from the group sizes.
- ``mc``       Monte Carlo interval with coverage-preserving defaults.
- ``enum``     the exhaustive enumeration construction (alias: ``rh``).
- ``missing``  bracketing interval from a subject-level file with missing
               outcomes.
- ``validate`` built-in self-checks.
- ``bench``    reference-row reproduction and cost/growth measurements.

Exit codes: 0 analysis completed, 1 analysis error or failed check,
2 usage error.  All result fields are deterministic for a fixed seed;
``wall_ms`` in JSON output is the only field that varies between runs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from fractions import Fraction

from .core import (
    CapacityError,
    Interval,
    ObservedCounts,
    PermCIError,
    ValidationError,
    neyman,
)
from .balanced import fast_interval_balanced
from .baseline import enumerated_interval
from .exactdist import ExactTester
from .missing import MaskedObservations, SubjectRecord, missing_interval, pad_odd
from .montecarlo import McConfig, mc_interval_balanced, required_k_balanced
from .unbalanced import required_k_unbalanced, unbalanced_interval
from . import validation

USAGE_ERROR = 2
ANALYSIS_ERROR = 1


def _counts(text: str) -> ObservedCounts:
    try:
        parts = [int(p) for p in text.split(",")]
        if len(parts) != 4:
            raise ValueError
        return ObservedCounts(*parts)
    except (ValueError, ValidationError) as exc:
        raise argparse.ArgumentTypeError(
            f"counts must be four nonnegative integers n11,n10,n01,n00 with both "
            f"groups nonempty (got {text!r}): {exc}"
        ) from None


def _level(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"level must be in (0, 1), got {value}")
    return value


def _seed(text: str) -> int:
    try:
        value = int(text, 0)  # decimal or 0x-prefixed hex
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer token, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError("seed must be nonnegative")
    return value


def _default_threads() -> int:
    raw = os.environ.get("PERMCI_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _frac_str(f: Fraction) -> str:
    return str(f)


def _interval_fields(iv: Interval, n: int) -> dict:
    if iv.is_empty:
        return {"interval_scaled": None, "interval": None}
    lo, hi = iv.lower * n, iv.upper * n
    scaled = [
        int(lo) if lo.denominator == 1 else _frac_str(lo),
        int(hi) if hi.denominator == 1 else _frac_str(hi),
    ]
    return {
        "interval_scaled": scaled,
        "interval": [_frac_str(iv.lower), _frac_str(iv.upper)],
    }


def _emit(report: dict, fmt: str, wall_ms: float) -> None:
    if fmt == "json":
        report = dict(report)
        report["wall_ms"] = round(wall_ms, 3)
        print(json.dumps(report, sort_keys=True))
        return
    for key in (
        "method",
        "counts",
        "n",
        "m",
        "alpha",
        "alpha_effective",
        "eps",
        "k",
        "k_recommended",
        "seed",
        "estimate",
        "interval_scaled",
        "interval",
        "tests",
        "note",
    ):
        if key in report and report[key] is not None:
            value = report[key]
            if isinstance(value, float):
                value = f"{value:.10g}"
            print(f"{key}: {value}")


def _cmd_exact(args: argparse.Namespace) -> int:
    obs: ObservedCounts = args.counts
    mode = args.mode
    if mode == "auto":
        mode = "balanced" if obs.design.balanced else "unbalanced"
    if mode == "balanced" and not obs.design.balanced:
        raise ValidationError("balanced mode requires equal group sizes")
    t0 = time.perf_counter()
    if mode == "balanced":
        pmode = "rational" if obs.n <= 64 else "float"
        res = fast_interval_balanced(args.alpha, obs, tester=ExactTester(obs, args.alpha, pmode))
        interval, tests = res.interval, res.tests
        method = f"fast-balanced-exact[{pmode}]"
    else:
        res = unbalanced_interval(obs, alpha=args.alpha, mode="exact")
        interval, tests = res.interval, res.base_tests + res.line_points
        method = "general-exact"
    wall = (time.perf_counter() - t0) * 1000
    report = {
        "method": method,
        "counts": list(obs.astuple()),
        "n": obs.n,
        "m": obs.m,
        "alpha": args.alpha,
        "estimate": _frac_str(neyman(obs).fraction),
        "tests": tests,
        "k": None,
        "seed": None,
        **_interval_fields(interval, obs.n),
    }
    _emit(report, args.format, wall)
    return 0


def _cmd_mc(args: argparse.Namespace) -> int:
    obs: ObservedCounts = args.counts
    if not args.eps < args.alpha:
        print(f"usage error: eps must be smaller than alpha ({args.eps} >= {args.alpha})", file=sys.stderr)
        return USAGE_ERROR
    balanced = obs.design.balanced
    recommended = (
        required_k_balanced(args.eps, obs.n) if balanced else required_k_unbalanced(args.eps, obs.n)
    )
    k = recommended if args.k == "auto" else int(args.k)
    if k < 1:
        print("usage error: k must be a positive integer or 'auto'", file=sys.stderr)
        return USAGE_ERROR
    level = args.alpha - args.eps
    cfg = McConfig(alpha=level, eps=args.eps, k=k, seed=args.seed)
    t0 = time.perf_counter()
    if balanced:
        res = mc_interval_balanced(cfg, obs, threads=args.threads)
        interval, tests = res.interval, res.tests
        method = "fast-balanced-mc"
    else:
        res = unbalanced_interval(obs, mode="mc", cfg=cfg)
        interval, tests = res.interval, res.base_tests
        method = "general-mc"
    wall = (time.perf_counter() - t0) * 1000
    report = {
        "method": method,
        "counts": list(obs.astuple()),
        "n": obs.n,
        "m": obs.m,
        "alpha": args.alpha,
        "alpha_effective": level,
        "eps": args.eps,
        "k": k,
        "k_recommended": recommended,
        "seed": args.seed,
        "estimate": _frac_str(neyman(obs).fraction),
        "tests": tests,
        **_interval_fields(interval, obs.n),
    }
    if k < recommended:
        report["note"] = (
            f"k below the recommended {recommended}; the coverage guarantee does not apply"
        )
    _emit(report, args.format, wall)
    return 0


def _cmd_enum(args: argparse.Namespace) -> int:
    obs: ObservedCounts = args.counts
    t0 = time.perf_counter()
    res = enumerated_interval(args.alpha, obs)
    wall = (time.perf_counter() - t0) * 1000
    report = {
        "method": "enumeration",
        "counts": list(obs.astuple()),
        "n": obs.n,
        "m": obs.m,
        "alpha": args.alpha,
        "estimate": _frac_str(neyman(obs).fraction),
        "tests": res.tuple_tests,
        "k": None,
        "seed": None,
        **_interval_fields(res.interval, obs.n),
    }
    _emit(report, args.format, wall)
    return 0


def read_subject_file(path: str) -> MaskedObservations:
    """Parse the subject-level format: header ``z,y``; rows with z in {0,1}
    and y in {0,1,NA}."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if not lines or lines[0].replace(" ", "").lower() != "z,y":
        raise ValidationError("first line must be the header 'z,y'")
    records = []
    for idx, line in enumerate(lines[1:], start=2):
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise ValidationError(f"line {idx}: expected 'z,y', got {line!r}")
        try:
            z = int(parts[0])
        except ValueError:
            raise ValidationError(f"line {idx}: bad group indicator {parts[0]!r}") from None
        y: int | None
        if parts[1].upper() == "NA":
            y = None
        else:
            try:
                y = int(parts[1])
            except ValueError:
                raise ValidationError(f"line {idx}: bad outcome {parts[1]!r}") from None
        records.append(SubjectRecord(z, y))
    return MaskedObservations(tuple(records))


def _cmd_missing(args: argparse.Namespace) -> int:
    data = read_subject_file(args.file)
    if args.pad_odd:
        data = pad_odd(data)
    t0 = time.perf_counter()
    res = missing_interval(args.alpha, data)
    wall = (time.perf_counter() - t0) * 1000
    n = data.n
    report = {
        "method": res.method,
        "n": n,
        "m": data.m,
        "alpha": args.alpha,
        "plus_counts": list(res.plus.astuple()),
        "minus_counts": list(res.minus.astuple()),
        "k": None,
        "seed": None,
        **_interval_fields(res.interval, n),
    }
    _emit(report, args.format, wall)
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    checks = _run_suite(args.suite)
    failures = 0
    for name, ok, detail in checks:
        status = "PASS" if ok else "FAIL"
        print(f"{status} {name}: {detail}")
        failures += 0 if ok else 1
    return 0 if failures == 0 else ANALYSIS_ERROR


def _run_suite(suite: str) -> list[tuple[str, bool, str]]:
    from .core import CountVector, Design, tau
    from .exactdist import exact_pmf, pmf_is_symmetric
    from .feasibility import is_possible, is_possible_bruteforce

    out: list[tuple[str, bool, str]] = []
    if suite in ("smoke", "all"):
        rows = validation.table1_repro()
        ok = all(
            r["enumeration"]["scaled"]
            == r["fast_balanced"]["scaled"]
            == r["general_exact"]["scaled"]
            == r["expected_scaled"]
            for r in rows
        )
        out.append(("reference-rows", ok, f"{len(rows)} observations, 3 constructions"))
        agree = 0
        total = 0
        for n in (4, 6, 8):
            m = n // 2
            for n11 in range(m + 1):
                for n01 in range(m + 1):
                    obs = ObservedCounts(n11, m - n11, n01, m - n01)
                    total += 1
                    if (
                        fast_interval_balanced(0.05, obs).interval
                        == enumerated_interval(0.05, obs).interval
                    ):
                        agree += 1
        out.append(("balanced-vs-enumeration", agree == total, f"{agree}/{total} observations"))
    if suite in ("distribution", "all"):
        bad = 0
        total = 0
        for n in (4, 6, 8, 10):
            d = Design(n, n // 2)
            for v11 in range(n + 1):
                for v10 in range(n - v11 + 1):
                    for v01 in range(n - v11 - v10 + 1):
                        v = CountVector(v11, v10, v01, n - v11 - v10 - v01)
                        pmf = exact_pmf(v, d)
                        total += 1
                        if pmf.total() != 1 or not pmf_is_symmetric(pmf, tau(v)):
                            bad += 1
        out.append(("pmf-normalized-symmetric", bad == 0, f"{total} tables, {bad} violations"))
    if suite in ("feasibility", "all"):
        bad = 0
        total = 0
        for n in range(2, 8):
            for m in range(1, n):
                for n11 in range(m + 1):
                    for n01 in range(n - m + 1):
                        obs = ObservedCounts(n11, m - n11, n01, n - m - n01)
                        for v11 in range(n + 1):
                            for v10 in range(n - v11 + 1):
                                for v01 in range(n - v11 - v10 + 1):
                                    from .core import CountVector as CV

                                    v = CV(v11, v10, v01, n - v11 - v10 - v01)
                                    total += 1
                                    if is_possible(v, obs) != is_possible_bruteforce(v, obs):
                                        bad += 1
        out.append(("possibility-closed-form", bad == 0, f"{total} pairs, {bad} disagreements"))
    if not out:
        raise ValidationError(f"unknown suite {suite!r}")
    return out


def _cmd_bench(args: argparse.Namespace) -> int:
    if args.table1:
        rows = validation.table1_repro(args.alpha)
        ok = True
        for r in rows:
            match = (
                r["enumeration"]["scaled"]
                == r["fast_balanced"]["scaled"]
                == r["general_exact"]["scaled"]
                == r["expected_scaled"]
            )
            ok &= match
            print(
                f"counts={tuple(r['counts'])} expected={r['expected_scaled']} "
                f"enumeration={r['enumeration']['scaled']} ({r['enumeration']['tests']} tests) "
                f"fast={r['fast_balanced']['scaled']} ({r['fast_balanced']['tests']} tests) "
                f"general={r['general_exact']['scaled']} ({r['general_exact']['tests']} tests) "
                f"{'OK' if match else 'MISMATCH'}"
            )
        return 0 if ok else ANALYSIS_ERROR
    if args.growth:
        n_list = [int(x) for x in args.n_list.split(",")] if args.n_list else None
        report = validation.mc_growth(
            n_list=n_list, eps=args.eps, seed=args.seed, threads=args.threads
        )
        for row in report.rows:
            print(
                f"n={row.n} k={row.k} tests={row.tests} samples={row.samples} "
                f"model_ops={row.model_ops:.3e} predicted={row.predicted:.3e} wall={row.wall_s:.1f}s"
            )
        print(
            f"slope measured={report.measured_slope:.3f} predicted={report.predicted_slope:.3f} "
            f"relative-gap={report.slope_ratio_error:.1%}"
        )
        return 0
    if args.lengths:
        rows = validation.length_bound_sweep(args.alpha, [20, 50, 100, 200])
        ok = True
        for row in rows:
            ok &= row.ok
            print(
                f"n={row.n} samples={row.samples} max_length={row.max_length:.4f} "
                f"bound={row.bound:.4f} {'OK' if row.ok else 'VIOLATION'}"
            )
        return 0 if ok else ANALYSIS_ERROR
    if args.counts_budget:
        rows = validation.count_bound_sweep()
        ok = True
        for row in rows:
            ok &= row.ok
            print(
                f"n={row.n} samples={row.samples} max_tests={row.max_tests} "
                f"budget={row.bound:.0f} {'OK' if row.ok else 'VIOLATION'}"
            )
        return 0 if ok else ANALYSIS_ERROR
    print("usage error: choose one of --table1 / --growth / --lengths / --counts-budget", file=sys.stderr)
    return USAGE_ERROR


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="permci",
        description="Exact confidence intervals for binary-outcome randomized experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, counts: bool = True) -> None:
        if counts:
            p.add_argument("--counts", type=_counts, required=True, metavar="N11,N10,N01,N00")
        p.add_argument("--alpha", type=_level, default=0.05)
        p.add_argument("--format", choices=("text", "json"), default="text")

    p_exact = sub.add_parser("exact", help="exact interval (auto-selects the search)")
    common(p_exact)
    p_exact.add_argument("--mode", choices=("auto", "balanced", "unbalanced"), default="auto")
    p_exact.set_defaults(func=_cmd_exact)

    p_mc = sub.add_parser("mc", help="Monte Carlo interval")
    common(p_mc)
    p_mc.add_argument("--eps", type=_level, required=True)
    p_mc.add_argument("--k", default="auto", help="samples per test, or 'auto'")
    p_mc.add_argument("--seed", type=_seed, required=True)
    p_mc.add_argument("--threads", type=int, default=_default_threads())
    p_mc.set_defaults(func=_cmd_mc)

    p_enum = sub.add_parser(
        "enum", aliases=["rh"], help="exhaustive enumeration construction"
    )
    common(p_enum)
    p_enum.set_defaults(func=_cmd_enum)

    p_missing = sub.add_parser("missing", help="interval from a subject file with missing outcomes")
    p_missing.add_argument("--file", required=True)
    p_missing.add_argument("--alpha", type=_level, default=0.05)
    p_missing.add_argument("--pad-odd", action="store_true", help="balance an odd experiment first")
    p_missing.add_argument("--format", choices=("text", "json"), default="text")
    p_missing.set_defaults(func=_cmd_missing)

    p_val = sub.add_parser("validate", help="built-in self checks")
    p_val.add_argument("--suite", choices=("smoke", "distribution", "feasibility", "all"), default="smoke")
    p_val.set_defaults(func=_cmd_validate)

    p_bench = sub.add_parser("bench", help="reference rows and cost measurements")
    p_bench.add_argument("--table1", action="store_true")
    p_bench.add_argument("--growth", action="store_true")
    p_bench.add_argument("--lengths", action="store_true")
    p_bench.add_argument("--counts-budget", action="store_true")
    p_bench.add_argument("--alpha", type=_level, default=0.05)
    p_bench.add_argument("--eps", type=_level, default=0.01)
    p_bench.add_argument("--seed", type=_seed, default=20240501)
    p_bench.add_argument("--threads", type=int, default=_default_threads())
    p_bench.add_argument("--n-list", default=None, help="comma-separated n values for --growth")
    p_bench.set_defaults(func=_cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (CapacityError, PermCIError, OSError) as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        return ANALYSIS_ERROR


if __name__ == "__main__":
    sys.exit(main())
