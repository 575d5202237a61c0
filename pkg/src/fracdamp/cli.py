"""Command-line interface.

Exit codes: 0 on success, 1 on a computation or I/O error (including a
failed lemma verification), 2 on invalid input.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from fracdamp import blowup, oracles, solver, testfn
from fracdamp.fracops import QuadratureBudget

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

# {{{ defaults

# every default lives here so that --help and the code cannot drift apart
DEFAULTS: dict[str, dict[str, Any]] = {
    "verify-lemmas": {
        "alpha": 0.5,
        "m": 2.0,
        "T": "1,10,100",
        "lam": None,
        "p": None,
        "k1": None,
        "abs_tol": 1.0e-8,
        "slope_tol": 0.02,
    },
    "solve": {
        "alpha": 0.9,
        "beta": 0.45,
        "gamma": 0.0,
        "m": 1.5,
        "b": 1.0,
        "rhs_mode": "power_source",
        "source_coeff": 1.0,
        "c2": 1.0,
        "delta": 1.0,
        "t_end": 50.0,
        "n": 4096,
        "cap": solver.DEFAULT_CAP,
        "summary_out": None,
    },
    "scan": {
        "alpha": 0.9,
        "beta": 0.5,
        "b": 1.0,
        "gamma_grid": "-0.4:1.2:9",
        "m_grid": "1.25:4:12",
        "horizon": 50.0,
        "n": 2048,
        "cap": solver.DEFAULT_CAP,
        "workers": 1,
    },
    "bernoulli": {"b": 2.0, "m": 2.0, "t": None},
    "power-ode": {"b": 1.0, "m": 2.0, "t": None},
    "ml-linear": {"alpha": 0.9, "beta": 0.45, "b": 1.0, "t": "0.25,0.5,1"},
    "threshold": {"gamma": 0.0, "order_low": 0.5},
}

# }}}


class UsageError(ValueError):
    """Invalid command-line input; maps to exit status 2."""


@dataclass(frozen=True)
class Table:
    columns: tuple[str, ...]
    rows: list[dict[str, Any]]
    extra: dict[str, Any] | None = None
    """Additional top-level keys of the JSON object."""


# {{{ emission


def _csv_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _json_value(value: Any) -> Any:
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {k: _json_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    return value


def format_table(table: Table, emit: str) -> str:
    if emit == "csv":
        buf = io.StringIO()
        buf.write(",".join(table.columns) + "\n")
        for row in table.rows:
            buf.write(",".join(_csv_cell(row.get(c)) for c in table.columns) + "\n")
        return buf.getvalue()

    if emit == "json":
        obj: dict[str, Any] = dict(table.extra or {})
        obj["rows"] = [{c: row.get(c) for c in table.columns} for row in table.rows]
        return json.dumps(_json_value(obj), indent=2, allow_nan=False) + "\n"

    raise UsageError(f"unknown emit format: {emit!r}")


def emit_table(table: Table, emit: str, out_path: str | None) -> None:
    text = format_table(table, emit)
    if out_path is None or out_path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return

    with open(out_path, "w", encoding="utf-8", newline="\n") as outf:
        outf.write(text)


# }}}


# {{{ argument parsing


def _float_list(text: str) -> list[float]:
    """Parse ``a,b,c`` or the linspace shorthand ``start:stop:num``."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, num = text.split(":")
            count = int(num)
            if count < 1:
                raise ValueError
            grid = np.round(np.linspace(float(start), float(stop), count), 12)
            return [float(x) + 0.0 for x in grid]
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None

    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _add_shared(p: argparse.ArgumentParser, emit_default: str) -> None:
    p.add_argument(
        "--emit",
        choices=("csv", "json"),
        default=emit_default,
        help="output format (default: %(default)s)",
    )
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.add_argument(
        "--config",
        default=None,
        help="flat 'key = value' file with defaults for this command; flags override it",
    )


def _add(p: argparse.ArgumentParser, cmd: str, name: str, type: Callable, help: str,
         **kwargs: Any) -> None:
    dest = name.replace("-", "_")
    p.add_argument(
        f"--{name}",
        dest=dest,
        type=type,
        default=DEFAULTS[cmd][dest],
        help=f"{help} (default: %(default)s)",
        **kwargs,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracdamp",
        description="Two-term fractional differential equations: lemma checks, "
        "solves, blow-up scans and reference solutions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-lemmas", help="check the test-function integral bounds")
    _add(p, "verify-lemmas", "alpha", float, "derivative order; 1 selects the first-order bound")
    _add(p, "verify-lemmas", "m", float, "exponent m > 0")
    _add(p, "verify-lemmas", "T", _float_list, "comma-separated time scales")
    _add(p, "verify-lemmas", "lam", int, "profile power lambda; None picks it from m")
    _add(p, "verify-lemmas", "p", float, "denominator exponent; None means 1/m")
    _add(p, "verify-lemmas", "k1", float, "override for the profile constant K1")
    _add(p, "verify-lemmas", "abs-tol", float, "quadrature tolerance")
    _add(p, "verify-lemmas", "slope-tol", float, "allowed deviation of the fitted T-exponent")
    _add_shared(p, "csv")

    p = sub.add_parser("solve", help="solve one initial value problem")
    for name, typ, text in (
        ("alpha", float, "higher order in (0, 1]"),
        ("beta", float, "lower order in [0, alpha]"),
        ("gamma", float, "time power of the source"),
        ("m", float, "nonlinearity exponent m > 1"),
        ("b", float, "weighted initial value b >= 0"),
        ("source-coeff", float, "coefficient of the power source"),
        ("c2", float, "manufactured target: coefficient of t^delta"),
        ("delta", float, "manufactured target: exponent delta > 0"),
        ("t-end", float, "time horizon"),
        ("n", int, "number of uniform steps"),
        ("cap", float, "blow-up threshold on |y|"),
        ("summary-out", str, "path for the JSON summary when emitting CSV (default: stderr)"),
    ):
        _add(p, "solve", name, typ, text)
    _add(p, "solve", "rhs-mode", str, "right-hand side",
         choices=("power_source", "zero", "manufactured"))
    _add_shared(p, "csv")

    p = sub.add_parser("scan", help="scan (gamma, m) for blow-up against the threshold")
    for name, typ, text in (
        ("alpha", float, "higher order in (0, 1]"),
        ("beta", float, "lower order in [0, alpha]"),
        ("b", float, "weighted initial value b >= 0"),
        ("gamma-grid", _float_list, "gamma values, 'a,b,c' or 'start:stop:num'"),
        ("m-grid", _float_list, "m values, 'a,b,c' or 'start:stop:num'"),
        ("horizon", float, "time horizon of every solve"),
        ("n", int, "number of uniform steps"),
        ("cap", float, "blow-up threshold on |y|"),
        ("workers", int, "worker processes"),
    ):
        _add(p, "scan", name, typ, text)
    _add_shared(p, "csv")

    p = sub.add_parser("oracle", help="closed-form reference values")
    osub = p.add_subparsers(dest="oracle", required=True)

    q = osub.add_parser("bernoulli", help="y' + y = y^m, y(0) = b")
    _add(q, "bernoulli", "b", float, "initial value")
    _add(q, "bernoulli", "m", float, "exponent m > 1")
    _add(q, "bernoulli", "t", _float_list, "comma-separated evaluation times")
    _add_shared(q, "json")

    q = osub.add_parser("power-ode", help="y' = y^m, y(0) = b")
    _add(q, "power-ode", "b", float, "initial value")
    _add(q, "power-ode", "m", float, "exponent m > 1")
    _add(q, "power-ode", "t", _float_list, "comma-separated evaluation times")
    _add_shared(q, "json")

    q = osub.add_parser("ml-linear", help="linear two-term solution via Mittag-Leffler")
    _add(q, "ml-linear", "alpha", float, "higher order in (0, 1]")
    _add(q, "ml-linear", "beta", float, "lower order in [0, alpha)")
    _add(q, "ml-linear", "b", float, "weighted initial value")
    _add(q, "ml-linear", "t", _float_list, "comma-separated evaluation times")
    _add_shared(q, "json")

    q = osub.add_parser("threshold", help="largest exponent m* of the nonexistence range")
    _add(q, "threshold", "gamma", float, "time power of the source")
    _add(q, "threshold", "order-low", float, "lowest derivative order in (0, 1]")
    _add_shared(q, "json")

    return parser


def _subparser(parser: argparse.ArgumentParser, path: Sequence[str]) -> argparse.ArgumentParser:
    p = parser
    for name in path:
        action = next(a for a in p._actions if isinstance(a, argparse._SubParsersAction))
        p = action.choices[name]
    return p


def read_config(path: str) -> dict[str, str]:
    """Read a flat ``key = value`` file; ``#`` starts a comment."""
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as inf:
        for lineno, line in enumerate(inf, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


def parse_args(argv: Sequence[str] | None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is None:
        return args

    path = [args.command] + ([args.oracle] if args.command == "oracle" else [])
    sub = _subparser(parser, path)
    known = {a.dest for a in sub._actions} - {"help", "config", "command", "oracle"}

    try:
        values = read_config(args.config)
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc

    unknown = sorted(set(values) - known)
    if unknown:
        raise UsageError(f"unknown config keys for {' '.join(path)}: {', '.join(unknown)}")

    # string defaults go through the same type conversion as flags
    sub.set_defaults(**values)
    return parser.parse_args(argv)


# }}}


# {{{ commands


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise UsageError(message)


def cmd_verify_lemmas(args: argparse.Namespace) -> tuple[Table, bool]:
    alpha, m = args.alpha, args.m
    _require(0 < alpha <= 1, f"alpha must lie in (0, 1]: {alpha}")
    _require(m > 0, f"m must be positive: {m}")
    _require(all(T > 0 for T in args.T), f"every T must be positive: {args.T}")
    _require(args.k1 is None or args.k1 > 0, f"K1 must be positive: {args.k1}")
    _require(args.abs_tol > 0, f"abs_tol must be positive: {args.abs_tol}")
    _require(args.lam is not None or m > 1, "lam is required when m <= 1")

    try:
        lam = args.lam if args.lam is not None else testfn.choose_lambda(m)
        p = args.p if args.p is not None else 1.0 / m
        prof = testfn.CutoffProfile(lam=lam, p=p)
        budget = QuadratureBudget(abs_tol=args.abs_tol)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    k1 = args.k1 if args.k1 is not None else testfn.k1_bound(prof)
    results = [testfn.check_lemma(alpha, m, T, prof=prof, k1=k1, budget=budget) for T in args.T]
    exponent = results[0].exponent

    Ts = np.array(args.T)
    lhs = np.array([r.lhs for r in results])
    if len(Ts) >= 2 and np.ptp(np.log(Ts)) > 0 and np.all(lhs > 0):
        slope = float(np.polyfit(np.log(Ts), np.log(lhs), 1)[0])
        slope_ok = abs(slope - exponent) <= args.slope_tol
    else:
        slope, slope_ok = None, True

    rows = [
        {"T": T, "I_of_T": r.lhs, "bound": r.rhs, "exponent_fit": slope}
        for T, r in zip(args.T, results)
    ]
    passed = slope_ok and all(r.holds for r in results)
    extra = {
        "lemma": "lemma9" if alpha == 1 else "lemma8",
        "k1": k1,
        "exponent": exponent,
        "passed": passed,
    }
    return Table(("T", "I_of_T", "bound", "exponent_fit"), rows, extra), passed


def _problem_from_args(args: argparse.Namespace) -> solver.ProblemSpec:
    if args.rhs_mode == "manufactured":
        target = solver.ManufacturedTarget(
            c1=args.b / math.gamma(args.alpha), c2=args.c2, delta=args.delta
        )
        return solver.ProblemSpec.manufactured(args.alpha, args.beta, target)

    return solver.ProblemSpec(
        alpha=args.alpha,
        beta=args.beta,
        gamma=args.gamma,
        m=args.m,
        b=args.b,
        rhs_mode=args.rhs_mode,
        source_coeff=args.source_coeff,
    )


def cmd_solve(args: argparse.Namespace) -> tuple[Table, bool]:
    try:
        _require(0 < args.alpha <= 1, f"alpha must lie in (0, 1]: {args.alpha}")
        spec = _problem_from_args(args)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _require(args.n >= 16, f"need at least 16 steps: n = {args.n}")
    _require(args.t_end > 0, f"t_end must be positive: {args.t_end}")
    _require(args.cap > spec.b, f"cap must exceed b: cap = {args.cap}")
    if spec.rhs_mode == "power_source":
        _require(
            spec.source_sigma > -1,
            f"gamma + m (alpha - 1) must exceed -1: {spec.source_sigma}",
        )

    traj = solver.solve(spec, args.t_end, args.n, args.cap)
    rep = blowup.detect(traj, args.cap, spec.m)

    t, y = traj.t, traj.y
    keep = np.isfinite(y)
    rows = [{"t": ti, "y": yi} for ti, yi in zip(t[keep], y[keep])]
    summary = {
        "status": rep.status,
        "t_escape": rep.t_escape,
        "t_star_estimate": rep.t_star_estimate,
        "fit_quality": rep.fit_quality,
    }
    return Table(("t", "y"), rows, {"summary": summary}), True


def cmd_scan(args: argparse.Namespace) -> tuple[Table, bool]:
    _require(0 < args.alpha <= 1, f"alpha must lie in (0, 1]: {args.alpha}")
    _require(0 <= args.beta <= args.alpha, f"need 0 <= beta <= alpha: {args.beta}")
    _require(args.b >= 0, f"b must be nonnegative: {args.b}")
    _require(all(m > 1 for m in args.m_grid), f"every m must exceed 1: {args.m_grid}")
    _require(args.horizon > 0, f"horizon must be positive: {args.horizon}")
    _require(args.n >= 16, f"need at least 16 steps: n = {args.n}")
    _require(args.cap > args.b, f"cap must exceed b: cap = {args.cap}")
    _require(args.workers >= 1, f"workers must be >= 1: {args.workers}")

    cells = blowup.scan(
        args.alpha,
        args.beta,
        args.b,
        args.gamma_grid,
        args.m_grid,
        args.horizon,
        args.n,
        args.cap,
        workers=args.workers,
    )
    rows = [
        {
            "gamma": c.gamma,
            "m": c.m,
            "in_theorem_range": c.in_theorem_range,
            "status": c.report.status,
            "t_escape": c.report.t_escape,
            "t_star_estimate": c.report.t_star_estimate,
            "fit_quality": c.report.fit_quality,
        }
        for c in cells
    ]
    columns = (
        "gamma",
        "m",
        "in_theorem_range",
        "status",
        "t_escape",
        "t_star_estimate",
        "fit_quality",
    )
    return Table(columns, rows), True


def cmd_oracle(args: argparse.Namespace) -> tuple[Table, bool]:
    name = args.oracle
    try:
        if name in ("bernoulli", "power-ode"):
            _require(args.b > 0, f"b must be positive: {args.b}")
            _require(args.m > 1, f"m must exceed 1: {args.m}")
            if name == "bernoulli":
                t_star = oracles.bernoulli_blowup_time(args.b, args.m)
                func = oracles.bernoulli
            else:
                t_star = oracles.power_ode_blowup_time(args.b, args.m)
                func = oracles.power_ode
            ts = args.t or []
            _require(
                all(0 <= t < t_star for t in ts),
                f"evaluation times must lie in [0, {t_star})",
            )
            rows = [{"t": t, "y": func(args.b, args.m, t)} for t in ts]
            return Table(("t", "y"), rows, {"blowup_time": t_star}), True

        if name == "ml-linear":
            _require(0 < args.alpha <= 1, f"alpha must lie in (0, 1]: {args.alpha}")
            _require(0 <= args.beta < args.alpha, f"need 0 <= beta < alpha: {args.beta}")
            _require(all(t > 0 for t in args.t), "evaluation times must be positive")
            rows = [
                {"t": t, "y": oracles.ml_linear(args.alpha, args.beta, args.b, t)}
                for t in args.t
            ]
            return Table(("t", "y"), rows), True

        th = oracles.ThresholdSpec(gamma=args.gamma, order_low=args.order_low)
    except UsageError:
        raise
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    row = {"gamma": th.gamma, "order_low": th.order_low, "m_star": oracles.threshold_m_star(th)}
    return Table(("gamma", "order_low", "m_star"), [row], {"m_star": row["m_star"]}), True


COMMANDS = {
    "verify-lemmas": cmd_verify_lemmas,
    "solve": cmd_solve,
    "scan": cmd_scan,
    "oracle": cmd_oracle,
}


# }}}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        table, passed = COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, ValueError) as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE

    summary = (table.extra or {}).get("summary")
    try:
        if summary is not None and args.emit == "csv":
            text = json.dumps(_json_value(summary), indent=2, allow_nan=False) + "\n"
            if args.summary_out is None:
                sys.stderr.write(text)
            else:
                with open(args.summary_out, "w", encoding="utf-8", newline="\n") as outf:
                    outf.write(text)
        emit_table(table, args.emit, args.out)
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_FAILURE

    if not passed:
        print("verification failed: at least one bound or exponent check did not hold",
              file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
