"""Command-line interface.

Subcommands:
    validate        check an operator-set or tree JSON file
    plan            synthesize an equalizing recovery filter for one operator
    filter-trace    iterate partial filtering for diag(a, b), emit the trace
    bound-check     brute-force witness that the success bound holds
    teleport-sweep  analytic / bound / Monte Carlo teleportation sweep
    simulate        seeded outcome-frequency Monte Carlo for an operator set

Exit codes: 0 success, 2 domain or validation failure, 3 input parse failure.
Output is deterministic for identical (command, input, seed): trial seeds
are derived from the master seed with a splitmix64 step, and floats are
printed with 17 significant digits.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional

import numpy as np

from . import __version__
from .errors import QunlearnError
from .povm import (
    DensityOperator,
    povm_from_json,
    sample_outcome,
    validate_povm,
)
from .recovery import (
    partial_filter_iterate,
    partial_filter_limit,
    procrustean_plan,
    success_bound,
    verify_bound_bruteforce,
)
from .rng import derive_seed, make_rng
from .teleport import sweep
from .tree import tree_from_json, validate_tree

EXIT_OK = 0
EXIT_FAILURE = 2
EXIT_PARSE = 3


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write(text: str, output: Optional[str]) -> None:
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(obj: dict, output: Optional[str]) -> None:
    _write(json.dumps(obj, indent=2, sort_keys=True) + "\n", output)


def _emit_csv(header: list[str], rows: list[tuple], output: Optional[str]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(
            ",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row)
        )
    _write("\n".join(lines) + "\n", output)


def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        print(
            f"error: {path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}",
            file=sys.stderr,
        )
        raise SystemExit(EXIT_PARSE)
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_PARSE)


def _load_single_kraus(path: str):
    doc = _load_json(path)
    try:
        povm = povm_from_json(doc)
    except (ValueError, KeyError) as exc:
        print(f"error: {path}: {exc}", file=sys.stderr)
        raise SystemExit(EXIT_PARSE)
    if len(povm) != 1:
        print(
            f"error: expected a single Kraus operator, file has {len(povm)}",
            file=sys.stderr,
        )
        raise SystemExit(EXIT_FAILURE)
    return povm[0]


def cmd_validate(args) -> int:
    doc = _load_json(args.input)
    tol = args.tol
    try:
        if "root" in doc:
            root = tree_from_json(doc)
            report = validate_tree(root, tol)
            payload = {
                "kind": "tree",
                "tolerance": tol,
                "passed": report.passed,
                "node_residuals": [
                    {"path": list(path), "residual": residual}
                    for path, residual in report.node_residuals
                ],
                "messages": list(report.messages),
            }
        elif "kraus" in doc:
            povm = povm_from_json(doc)
            report = validate_povm(povm, tol)
            payload = {
                "kind": "operator-set",
                "tolerance": tol,
                "passed": report.passed,
                "completeness_residual": report.completeness_residual,
                "element_psd": list(report.element_psd),
                "messages": list(report.messages),
            }
        else:
            print(
                "error: input is neither an operator-set ('kraus') nor a tree ('root')",
                file=sys.stderr,
            )
            return EXIT_PARSE
    except (ValueError, KeyError) as exc:
        print(f"error: {args.input}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    _emit_json(payload, args.output)
    return EXIT_OK if payload["passed"] else EXIT_FAILURE


def cmd_plan(args) -> int:
    k = _load_single_kraus(args.input)
    try:
        plan = procrustean_plan(k)
    except QunlearnError as exc:
        print(f"error: unrecoverable branch: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    bound = success_bound(k)
    payload = plan.to_json()
    payload.update(
        {
            "tolerance": args.tol,
            "bound": bound,
            "saturates_bound": abs(plan.success_probability - bound) <= 1e-12,
        }
    )
    _emit_json(payload, args.output)
    return EXIT_OK


def cmd_filter_trace(args) -> int:
    try:
        trace = partial_filter_iterate(args.a, args.b, args.max_iter, args.tol)
    except QunlearnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    if args.format == "json":
        payload = trace.to_json()
        payload["tolerance"] = args.tol
        payload["limit"] = partial_filter_limit(args.a, args.b)
        _emit_json(payload, args.output)
    else:
        _emit_csv(
            ["j", "a_j", "b_j", "step_p", "cumulative"],
            trace.csv_rows(),
            args.output,
        )
    return EXIT_OK


def cmd_bound_check(args) -> int:
    k = _load_single_kraus(args.input)
    rng = make_rng(derive_seed(args.seed, 0))
    report = verify_bound_bruteforce(k, args.trials, rng)
    payload = report.to_json()
    payload["tolerance"] = args.tol
    payload["seed"] = args.seed
    _emit_json(payload, args.output)
    return EXIT_OK if report.passed else EXIT_FAILURE


def cmd_teleport_sweep(args) -> int:
    thetas = np.linspace(0.01, math.pi / 2, args.theta_points)
    rows = sweep(thetas, n_runs=args.trials, master_seed=args.seed)
    if args.format == "json":
        payload = {
            "tolerance": args.tol,
            "seed": args.seed,
            "rows": [
                {
                    "theta": r.theta,
                    "p_analytic": r.p_analytic,
                    "p_povm_bound": r.p_povm_bound,
                    "p_montecarlo": r.p_montecarlo,
                    "n_runs": r.n_runs,
                }
                for r in rows
            ],
        }
        _emit_json(payload, args.output)
    else:
        _emit_csv(
            ["theta", "p_analytic", "p_povm_bound", "p_montecarlo", "n_runs"],
            [
                (r.theta, r.p_analytic, r.p_povm_bound, r.p_montecarlo, r.n_runs)
                for r in rows
            ],
            args.output,
        )
    return EXIT_OK


def cmd_simulate(args) -> int:
    doc = _load_json(args.input)
    try:
        povm = povm_from_json(doc)
    except (ValueError, KeyError) as exc:
        print(f"error: {args.input}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    report = validate_povm(povm, args.tol)
    if not report.passed:
        print(
            f"error: operator set is not a valid POVM: {'; '.join(report.messages)}",
            file=sys.stderr,
        )
        return EXIT_FAILURE
    rho = DensityOperator.maximally_mixed(povm.dim)
    counts = [0] * len(povm)
    for t in range(args.trials):
        rng = make_rng(derive_seed(args.seed, t))
        j, _ = sample_outcome(povm, rho, rng)
        counts[j] += 1
    from .povm import outcome_probability

    payload = {
        "tolerance": args.tol,
        "seed": args.seed,
        "trials": args.trials,
        "counts": counts,
        "frequencies": [c / args.trials for c in counts],
        "born_probabilities": [
            outcome_probability(povm, j, rho) for j in range(len(povm))
        ],
    }
    _emit_json(payload, args.output)
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser, needs_input: bool = False) -> None:
    if needs_input:
        p.add_argument("--input", required=True, help="input JSON file")
    p.add_argument("--output", default=None, help="output file (default stdout)")
    p.add_argument(
        "--format", choices=("json", "csv"), default=None, help="output format"
    )
    p.add_argument(
        "--seed",
        type=int,
        default=0,
        help="master seed; per-trial seeds derive via splitmix64(master ^ splitmix64(index))",
    )
    p.add_argument("--tol", type=float, default=1e-9, help="numerical tolerance")
    p.add_argument("--max-iter", type=int, default=200, help="iteration budget")
    p.add_argument("--trials", type=int, default=10000, help="Monte Carlo trials")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qunlearn",
        description="Simulate generalized measurements and synthesize corrections "
        "that restore conditionally unitary evolution.",
    )
    parser.add_argument("--version", action="version", version=f"qunlearn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate an operator-set or tree JSON file")
    _add_common(p, needs_input=True)
    p.set_defaults(func=cmd_validate, format_default="json")

    p = sub.add_parser("plan", help="synthesize a recovery filter for one operator")
    _add_common(p, needs_input=True)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("filter-trace", help="iterate partial filtering for diag(a,b)")
    _add_common(p)
    p.add_argument("--a", type=float, required=True, help="larger singular value")
    p.add_argument("--b", type=float, required=True, help="smaller singular value")
    p.set_defaults(func=cmd_filter_trace)

    p = sub.add_parser("bound-check", help="brute-force witness of the success bound")
    _add_common(p, needs_input=True)
    p.set_defaults(func=cmd_bound_check)

    p = sub.add_parser("teleport-sweep", help="teleportation success-rate sweep")
    _add_common(p)
    p.add_argument(
        "--theta-points", type=int, default=50, help="grid points on [0.01, pi/2]"
    )
    p.set_defaults(func=cmd_teleport_sweep)

    p = sub.add_parser("simulate", help="sample outcomes of an operator set")
    _add_common(p, needs_input=True)
    p.set_defaults(func=cmd_simulate)

    return parser


_DEFAULT_FORMATS = {
    "validate": "json",
    "plan": "json",
    "filter-trace": "csv",
    "bound-check": "json",
    "teleport-sweep": "csv",
    "simulate": "json",
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = _DEFAULT_FORMATS[args.command]
    if args.tol <= 0:
        parser.error("--tol must be positive")
    if args.max_iter < 1:
        parser.error("--max-iter must be >= 1")
    if args.trials < 1:
        parser.error("--trials must be >= 1")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
