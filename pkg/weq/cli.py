"""
weq Command Line Interface

Plain stdout/stderr, no ANSI codes unless --fancy is given, so output can
be piped, diffed and logged.

Commands:
    weq solve FILE [--phi PHI]
    weq classify FILE
    weq lengths FILE --grid B
    weq graph FILE [--dot PATH] [--counters]
    weq accelerate FILE [--emit-formula] [--smtlib]
    weq oracle FILE --max-len N [--reference NAME]
    weq version

Flags:
    --json, -j: machine-readable output (solve, classify, lengths, oracle)
    --verbose: debug logging on stderr
    --fancy, -f: ANSI colours for verdicts

Exit codes:
    0: Sat (or success for non-deciding commands)
    1: Unsat (oracle: disagreement with the reference)
    2: Unknown
    3: Error
"""

import argparse
import io
import itertools
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, TextIO

# Ensure UTF-8 output on Windows
if sys.platform == "win32":
    sys.stdout = io.TextIOWrapper(sys.stdout.buffer, encoding="utf-8", errors="replace")
    sys.stderr = io.TextIOWrapper(sys.stderr.buffer, encoding="utf-8", errors="replace")

from weq import visual
from weq.acceleration import flat_reachability
from weq.config import load_config
from weq.counter_system import build_counter_system_with_regex
from weq.errors import WeqError
from weq.nielsen import build_graph, make_state
from weq.oracle import enumerate_solutions, reference_formula, reference_names
from weq.pad_logic import FALSE, conj, evaluate, size, to_prefix, to_smtlib
from weq.problem_file import parse_length_constraint, parse_problem
from weq.solver import Problem, classify, solve, solve_grid

# Exit codes
EXIT_SUCCESS = 0
EXIT_SAT = 0
EXIT_UNSAT = 1
EXIT_UNKNOWN = 2
EXIT_ERROR = 3

PROFILES = ("development", "test", "ci")


def output(text: str, file: TextIO = sys.stdout) -> None:
    """Write output line. No ANSI, no color, just plain text."""
    print(text, file=file, flush=True)


def output_json(data: dict, file: TextIO = sys.stdout) -> None:
    """Write JSON output. Compact, single-line for simple parsing."""
    print(json.dumps(data, separators=(",", ":"), ensure_ascii=False), file=file, flush=True)


def error(text: str) -> None:
    """Write error message to stderr."""
    print(f"error: {text}", file=sys.stderr, flush=True)


def load_problem(path: str) -> Problem:
    return parse_problem(Path(path).read_text(encoding="utf-8"))


def _config(args: argparse.Namespace):
    return load_config(getattr(args, "profile", "development"))


def _lengths_dict(problem: Problem, v) -> dict:
    return {problem.name(x): v[x] for x in problem.variables}


# =============================================================================
# Commands
# =============================================================================

def cmd_solve(args: argparse.Namespace) -> int:
    """Decide the problem and print the verdict with a witness."""
    problem = load_problem(args.file)
    if args.phi:
        extra = parse_length_constraint(args.phi, problem.signature)
        problem = problem.with_length_constraint(conj(problem.length_constraint, extra))
    verdict = solve(problem, _config(args))
    reason = verdict.reason.value if verdict.reason else None

    if args.json:
        data = {"status": verdict.status.value, "reason": reason}
        if verdict.lengths is not None:
            data["lengths"] = _lengths_dict(problem, verdict.lengths)
        if verdict.witness is not None:
            data["witness"] = {
                problem.name(x): verdict.witness[x].format(problem.signature) for x in problem.variables
            }
        output_json(data)
    else:
        output(visual.verdict_line(verdict.status.value, reason, args.fancy))
        if verdict.lengths is not None:
            output(visual.lengths_line(verdict.lengths, problem.variables, problem.signature))
        if verdict.witness is not None:
            output("witness:")
            for line in visual.witness_lines(verdict.witness, problem.variables, problem.signature):
                output(line)
    return verdict.exit_code


def cmd_classify(args: argparse.Namespace) -> int:
    """Print class membership of the problem."""
    problem = load_problem(args.file)
    report = classify(problem, _config(args)).as_dict()
    if args.json:
        output_json(report)
    else:
        output(visual.class_summary(report))
        output("")
        output(visual.key_value_block(report.items()))
    return EXIT_SUCCESS


def cmd_lengths(args: argparse.Namespace) -> int:
    """Membership table of the length abstraction over [0, B]^n."""
    if args.grid < 0:
        error("grid bound must be >= 0")
        return EXIT_ERROR
    problem = load_problem(args.file)
    rows = solve_grid(problem, args.grid, _config(args))
    members = [v for v, ok in rows if ok]
    order = problem.variables
    if args.json:
        output_json({
            "variables": [problem.name(x) for x in order],
            "bound": args.grid,
            "members": [list(v.as_tuple(order)) for v in members],
        })
    elif len(order) == 2:
        output(visual.grid_matrix(rows, order[0], order[1], problem.signature, args.grid))
    else:
        output(visual.vector_table(members, order, problem.signature))
    return EXIT_SUCCESS


def cmd_graph(args: argparse.Namespace) -> int:
    """DOT source of the rewrite graph or the counter system."""
    problem = load_problem(args.file)
    config = _config(args)
    if args.counters:
        cs = build_counter_system_with_regex(problem.equation, problem.equation_constraints, config)
        source = cs.to_dot(problem.signature)
        summary = f"states={len(cs.states)} transitions={len(cs.transitions)}"
    else:
        graph = build_graph(make_state(problem.equation, problem.equation_constraints), config)
        source = graph.to_dot(problem.signature)
        summary = f"nodes={len(graph.nodes)} edges={len(graph.edges)}"
    if args.dot:
        Path(args.dot).write_text(source, encoding="utf-8")
        output(f"{summary} written to {args.dot}")
    else:
        output(source)
    return EXIT_SUCCESS


def cmd_accelerate(args: argparse.Namespace) -> int:
    """Reachability formula of the root towards ε=ε."""
    problem = load_problem(args.file)
    config = _config(args)
    cs = build_counter_system_with_regex(problem.equation, problem.equation_constraints, config)
    targets = sorted(cs.target_states())
    if targets:
        formula = flat_reachability(cs, cs.root, targets[0], config, problem.signature, close_targets=True)
    else:
        formula = FALSE
    if args.smtlib:
        output(to_smtlib(formula))
    elif args.emit_formula:
        output(to_prefix(formula))
    else:
        output(f"states={len(cs.states)} transitions={len(cs.transitions)} formula_size={size(formula)}")
    return EXIT_SUCCESS


def cmd_oracle(args: argparse.Namespace) -> int:
    """Brute-force length vectors, optionally compared with a reference formula."""
    if args.max_len < 0:
        error("max-len must be >= 0")
        return EXIT_ERROR
    problem = load_problem(args.file)
    config = _config(args)
    found = enumerate_solutions(problem, args.max_len, config)
    order = problem.variables

    mismatches = []
    if args.reference:
        formula = reference_formula(args.reference)
        names = [problem.name(x) for x in order]
        for values in itertools.product(range(args.max_len + 1), repeat=len(order)):
            valuation = dict(zip(names, values))
            expected = evaluate(formula, valuation)
            actual = problem.lengths(valuation) in found
            if expected != actual:
                mismatches.append(valuation)

    if args.json:
        data = {
            "variables": [problem.name(x) for x in order],
            "max_len": args.max_len,
            "solutions": sorted(list(v.as_tuple(order)) for v in found),
        }
        if args.reference:
            data["reference"] = args.reference
            data["mismatches"] = mismatches
        output_json(data)
    else:
        output(visual.vector_table(found, order, problem.signature))
        if args.reference:
            output("")
            output(f"reference {args.reference}: {len(mismatches)} mismatch(es)")
            for m in mismatches[:10]:
                output("  " + "  ".join(f"|{k}|={n}" for k, n in m.items()))
    return EXIT_UNSAT if mismatches else EXIT_SUCCESS


def cmd_version(args: argparse.Namespace) -> int:
    """Show version."""
    from weq import __version__
    output(f"weq {__version__}")
    return EXIT_SUCCESS


# =============================================================================
# Parser
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser."""
    parser = argparse.ArgumentParser(
        prog="weq",
        description="Quadratic word equations with length and regular constraints",
    )
    parser.add_argument("--version", "-v", action="store_true", help="Show version and exit")
    parser.add_argument("--verbose", action="store_true", help="Debug logging on stderr")
    parser.add_argument("--fancy", "-f", action="store_true", help="Enable ANSI colors for modern terminals")
    parser.add_argument(
        "--profile",
        type=str,
        default="development",
        choices=PROFILES,
        help="Solver limits profile (WEQ_BUDGET overrides node budgets)",
    )

    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    solve_parser = subparsers.add_parser("solve", help="Decide a problem file")
    solve_parser.add_argument("file", help="Problem file")
    solve_parser.add_argument("--phi", type=str, help="Extra length constraint, e.g. '|x|=1 && |y|=2'")
    solve_parser.add_argument("--json", "-j", action="store_true", help="Output as JSON")
    solve_parser.set_defaults(func=cmd_solve)

    classify_parser = subparsers.add_parser("classify", help="Report equation and counter-system classes")
    classify_parser.add_argument("file", help="Problem file")
    classify_parser.add_argument("--json", "-j", action="store_true", help="Output as JSON")
    classify_parser.set_defaults(func=cmd_classify)

    lengths_parser = subparsers.add_parser("lengths", help="Length abstraction over a box")
    lengths_parser.add_argument("file", help="Problem file")
    lengths_parser.add_argument("--grid", type=int, required=True, help="Box radius B")
    lengths_parser.add_argument("--json", "-j", action="store_true", help="Output as JSON")
    lengths_parser.set_defaults(func=cmd_lengths)

    graph_parser = subparsers.add_parser("graph", help="DOT of the rewrite graph")
    graph_parser.add_argument("file", help="Problem file")
    graph_parser.add_argument("--dot", type=str, help="Write DOT to this path instead of stdout")
    graph_parser.add_argument("--counters", action="store_true", help="Counter system instead of rewrite graph")
    graph_parser.set_defaults(func=cmd_graph)

    accel_parser = subparsers.add_parser("accelerate", help="Flat reachability formula")
    accel_parser.add_argument("file", help="Problem file")
    accel_parser.add_argument("--emit-formula", action="store_true", help="Print the formula in prefix syntax")
    accel_parser.add_argument("--smtlib", action="store_true", help="Print the formula as SMT-LIB")
    accel_parser.set_defaults(func=cmd_accelerate)

    oracle_parser = subparsers.add_parser("oracle", help="Brute-force length vectors")
    oracle_parser.add_argument("file", help="Problem file")
    oracle_parser.add_argument("--max-len", type=int, required=True, help="Largest image length tried")
    oracle_parser.add_argument("--reference", type=str, choices=reference_names(), help="Compare with a closed form")
    oracle_parser.add_argument("--json", "-j", action="store_true", help="Output as JSON")
    oracle_parser.set_defaults(func=cmd_oracle)

    version_parser = subparsers.add_parser("version", help="Show version")
    version_parser.set_defaults(func=cmd_version)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    if args.version:
        return cmd_version(args)

    if args.command is None:
        parser.print_help()
        return EXIT_SUCCESS

    try:
        return args.func(args)
    except (WeqError, OSError) as e:
        error(str(e))
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
