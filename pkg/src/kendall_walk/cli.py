"""Command-line interface: analytic curves, simulations and comparison reports.

Commands
--------
eval      analytic values of a statistic on a grid
simulate  Monte Carlo estimates with standard errors
compare   analytic against Monte Carlo, as a report
convolve  CDF of the Kendall convolution of two laws

Exit codes: 0 success, 1 numeric failure, 2 bad flags or input,
3 comparison failed (``max_z > 4``).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import algebra, fluctuations
from .algebra import DegenerateBranchError
from .simulator import InsufficientHorizonError, Statistic, estimate_many
from .steps import KendallStable, StepLaw, SymmetricPareto, SymmetricPoint, Tabulated

Z_THRESHOLD = 4.0

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE, EXIT_STAT_FAIL = 0, 1, 2, 3


class UsageError(ValueError):
    """Invalid flag combination or malformed input file."""


# -- statistics table --------------------------------------------------------------


@dataclass(frozen=True)
class StatSpec:
    """How a named statistic is evaluated and, if possible, simulated.

    ``fn(law, args, x, strict)`` returns the analytic value at grid point
    ``x``; ``sim`` is the simulator statistic name, ``epochs`` marks curves
    indexed by ``n = 1..--n`` instead of ``--t-grid``.
    """

    fn: Callable | None
    needs: tuple[str, ...] = ()
    sim: str | None = None
    epochs: bool = False
    ks: bool = False


def _fixed(fn):
    """Wrap a function without closed/recurrence variants."""
    return lambda law, args, x, strict: fn(law, args, x)


def _moded(fn):
    return lambda law, args, x, strict: fn(law, args, x, args.mode, strict)


STATS: dict[str, StatSpec] = {
    "cdf": StatSpec(_fixed(lambda law, a, x: float(law.cdf(x))), sim="fn_cdf", ks=True),
    "g": StatSpec(_fixed(lambda law, a, x: float(law.williamson_g(x)))),
    "h": StatSpec(_fixed(lambda law, a, x: float(law.h(x)))),
    "fn-cdf": StatSpec(_fixed(lambda law, a, x: algebra.conv_power_cdf(law, a.n, x)), ("n",), "fn_cdf", ks=True),
    "transition-cdf": StatSpec(
        _fixed(lambda law, a, x: algebra.transition_cdf(law, a.x, a.n, x)), ("x", "n")
    ),
    "trunc-moment": StatSpec(_fixed(lambda law, a, x: algebra.truncated_moment(law, a.y, x)), ("y",)),
    "psi-integral": StatSpec(_fixed(lambda law, a, x: algebra.psi_integral(law, a.y, a.a, x)), ("y", "a")),
    "int-i": StatSpec(_moded(lambda law, a, x, m, s: algebra.integral_I(law, a.n, a.a, x, m, s)), ("a", "n")),
    "int-ii": StatSpec(_moded(lambda law, a, x, m, s: algebra.integral_II(law, a.n, a.a, x, m, s)), ("a", "n")),
    "tau-pmf": StatSpec(
        _moded(lambda law, a, x, m, s: fluctuations.ladder_epoch_pmf(law, a.a, int(x), m, s)),
        ("a", "n"),
        "tau_pmf",
        epochs=True,
    ),
    "tau-weak-desc-pmf": StatSpec(
        _fixed(lambda law, a, x: fluctuations.weak_desc_epoch_pmf(law, a.a, int(x))),
        ("a", "n"),
        "tau_weak_desc_pmf",
        epochs=True,
    ),
    "tau-minus-pmf": StatSpec(None, ("a", "n"), "tau_minus_pmf", epochs=True),
    "tau-weak-asc-pmf": StatSpec(None, ("a", "n"), "tau_weak_asc_pmf", epochs=True),
    "joint-ladder": StatSpec(
        _moded(lambda law, a, x, m, s: fluctuations.joint_ladder_cdf(law, a.a, a.n, x, m, s)),
        ("a", "n"),
        "joint_ladder",
    ),
    "ladder-height-cdf": StatSpec(
        _moded(lambda law, a, x, m, s: fluctuations.ladder_height_cdf(law, a.a, x, m, s)),
        ("a",),
        "ladder_height_cdf",
        ks=True,
    ),
    "max-cdf": StatSpec(
        _moded(lambda law, a, x, m, s: fluctuations.max_cdf(law, a.n, x, m, s)), ("n",), "max_cdf", ks=True
    ),
    "min-cdf": StatSpec(
        _moded(lambda law, a, x, m, s: fluctuations.min_cdf(law, a.n, x, m, s)), ("n",), "min_cdf", ks=True
    ),
    "conv-cdf": StatSpec(_fixed(lambda law, a, x: algebra.conv_cdf(law, a.law2_obj, x))),
}


# -- parsing ---------------------------------------------------------------------------


def parse_grid(text: str) -> np.ndarray:
    """``"min:max:count"`` to ``count`` evenly spaced points."""
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"--t-grid must be MIN:MAX:COUNT, got {text!r}")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"--t-grid must be MIN:MAX:COUNT, got {text!r}") from None
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi or count < 2:
        raise UsageError("--t-grid needs finite MIN < MAX and COUNT >= 2")
    return np.linspace(lo, hi, count)


def read_table(path: str, alpha: float) -> Tabulated:
    """Two-column ``t,F`` CSV covering ``t >= 0``."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise UsageError(f"cannot read table {path!r}: {exc}") from None
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if rows and [c.strip() for c in rows[0]] == ["t", "F"]:
        rows = rows[1:]
    try:
        pairs = [(float(r[0]), float(r[1])) for r in rows if len(r) == 2]
    except ValueError:
        raise UsageError(f"table {path!r} has non-numeric entries") from None
    if len(pairs) != len(rows) or len(pairs) < 2:
        raise UsageError(f"table {path!r} must hold at least two t,F rows")
    t, F = zip(*pairs)
    try:
        return Tabulated(t, F, alpha)
    except ValueError as exc:
        raise UsageError(f"table {path!r}: {exc}") from None


def make_law(family: str, alpha: float, scale: float, m_alpha: float, table: str | None) -> StepLaw:
    try:
        if family == "point":
            return SymmetricPoint(scale, alpha)
        if family == "pareto":
            return SymmetricPareto(alpha)
        if family == "stable":
            return KendallStable(m_alpha, alpha)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if table is None:
        raise UsageError("--law table needs --table PATH")
    return read_table(table, alpha)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kendall-walk", description="Kendall random walk fluctuation toolkit.")
    p.add_argument("command", choices=["eval", "simulate", "compare", "convolve"])
    p.add_argument("--law", choices=["point", "pareto", "stable", "table"], required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--m-alpha", type=float, default=1.0)
    p.add_argument("--table")
    p.add_argument("--law2", choices=["point", "pareto", "stable", "table"])
    p.add_argument("--scale2", type=float, default=1.0)
    p.add_argument("--m-alpha2", type=float, default=1.0)
    p.add_argument("--table2")
    p.add_argument("--stat")
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--n", type=int)
    p.add_argument("--x", type=float, default=0.0)
    p.add_argument("--y", type=float, default=0.0)
    p.add_argument("--t-grid")
    p.add_argument("--paths", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=["closed", "recurrence"], default="closed")
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"])
    return p


# -- evaluation ------------------------------------------------------------------------


def _grid(spec: StatSpec, args) -> np.ndarray:
    if spec.epochs:
        if args.n is None or args.n < 1:
            raise UsageError("this statistic needs --n >= 1")
        return np.arange(1, args.n + 1, dtype=float)
    if args.t_grid is None:
        raise UsageError("this statistic needs --t-grid MIN:MAX:COUNT")
    return parse_grid(args.t_grid)


def _analytic(spec: StatSpec, law: StepLaw, args, grid) -> tuple[list[float], bool]:
    """Values on ``grid`` and whether any closed form fell back to the recurrence."""
    values, fallback = [], False
    for x in grid:
        x = float(x)
        try:
            values.append(float(spec.fn(law, args, x, True)))
        except DegenerateBranchError:
            fallback = True
            values.append(float(spec.fn(law, args, x, False)))
    return values, fallback


def _simulate(spec: StatSpec, law: StepLaw, args, grid):
    n = 1 if spec.sim == "fn_cdf" and args.stat == "cdf" else args.n
    stat = Statistic(spec.sim, tuple(grid), a=args.a, n=n)
    return estimate_many(law, [stat], args.paths, seed=args.seed)[0]


def _fmt(v: float) -> str:
    return "%.17g" % v


def _csv(header: list[str], columns: list[list[float]]) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in zip(*columns):
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _describe(law: StepLaw, args) -> tuple[str, dict]:
    params = {k: v for k, v in law.params().items()}
    for key in ("a", "n", "x", "y"):
        if key in STATS[args.stat].needs:
            params[key] = getattr(args, key)
    if args.command in ("simulate", "compare"):
        params.update(paths=args.paths, seed=args.seed)
    params["mode"] = args.mode
    return args.law, params


def _json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _finite(v: float) -> float | None:
    return v if math.isfinite(v) else None


def _run(args) -> tuple[str, int]:
    """Produce the artifact text and the exit code."""
    law = make_law(args.law, args.alpha, args.scale, args.m_alpha, args.table)
    if args.command == "convolve" or args.stat == "conv-cdf":
        args.law2_obj = law
        if args.law2 is not None:
            args.law2_obj = make_law(args.law2, args.alpha, args.scale2, args.m_alpha2, args.table2)
    if args.command == "convolve":
        args.stat = "conv-cdf"
        grid = _grid(STATS["conv-cdf"], args)
        # CDF from the mass of (0, |t|) by symmetry; t = 0 carries no atom
        vals = []
        for t in grid:
            k = algebra.conv_cdf(law, args.law2_obj, abs(t)) if t != 0 else 0.0
            vals.append(0.5 + k if t > 0 else 0.5 - k if t < 0 else 0.5)
        if args.format == "json":
            return _json({"statistic": "conv-cdf", "grid": list(map(float, grid)), "values": vals}), EXIT_OK
        return _csv(["x", "value"], [list(map(float, grid)), vals]), EXIT_OK

    if args.stat is None:
        raise UsageError("--stat is required")
    if args.stat not in STATS:
        raise UsageError(f"unknown statistic {args.stat!r}; choose from {', '.join(STATS)}")
    spec = STATS[args.stat]
    for key in spec.needs:
        if key == "n" and args.n is None:
            raise UsageError(f"{args.stat} needs --n")
    if args.paths < 1:
        raise UsageError("--paths must be positive")
    if not 0 <= args.seed < 1 << 64:
        raise UsageError("--seed must be an unsigned 64-bit integer")
    grid = _grid(spec, args)
    family, params = _describe(law, args)

    if args.command == "eval":
        if spec.fn is None:
            raise UsageError(f"{args.stat} has no analytic reference; use simulate")
        values, fallback = _analytic(spec, law, args, grid)
        if args.format == "json":
            obj = {"statistic": args.stat, "law": family, "alpha": law.alpha, "params": params,
                   "grid": list(map(float, grid)), "values": values, "fallback": fallback}
            return _json(obj), EXIT_OK
        return _csv(["x", "value"], [list(map(float, grid)), values]), EXIT_OK

    if spec.sim is None:
        raise UsageError(f"{args.stat} cannot be simulated")
    est = _simulate(spec, law, args, grid)
    points = [e.point for e in est]
    errors = [e.std_error for e in est]
    if args.command == "simulate":
        if args.format == "json":
            obj = {"statistic": args.stat, "law": family, "alpha": law.alpha, "params": params,
                   "grid": list(map(float, grid)), "empirical": points, "std_error": errors}
            return _json(obj), EXIT_OK
        return _csv(["x", "value", "std_error"], [list(map(float, grid)), points, errors]), EXIT_OK

    if spec.fn is None:
        raise UsageError(f"{args.stat} has no analytic reference to compare against")
    values, fallback = _analytic(spec, law, args, grid)
    diffs = [abs(v - p) for v, p in zip(values, points)]
    floor = 1.0 / args.paths
    z = [d / max(se, floor) for d, se in zip(diffs, errors)]
    max_z = max(z)
    report = {
        "statistic": args.stat,
        "law": family,
        "alpha": law.alpha,
        "params": params,
        "grid": list(map(float, grid)),
        "analytic": values,
        "empirical": points,
        "std_error": errors,
        "max_abs_err": max(diffs),
        "max_z": _finite(max_z),
        # grid-restricted Kolmogorov-Smirnov distance for CDF curves
        "ks": max(diffs) if spec.ks else None,
        "pass": bool(max_z <= Z_THRESHOLD),
        "fallback": fallback,
    }
    code = EXIT_OK if report["pass"] else EXIT_STAT_FAIL
    if args.format == "csv":
        return _csv(["x", "analytic", "empirical", "std_error"], [list(map(float, grid)), values, points, errors]), code
    return _json(report), code


def run(argv: list[str] | None = None) -> int:
    """Run the CLI and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.format is None:
        args.format = "json" if args.command == "compare" else "csv"
    try:
        text, code = _run(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateBranchError as exc:
        print(f"numeric failure in the {exc.branch} branch: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ArithmeticError, InsufficientHorizonError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
