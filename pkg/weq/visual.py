"""
Plain-text reports for the command line.

ASCII by default so output survives pipes, serial consoles and log files;
ANSI colour only when fancy=True.
"""

from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from weq.core_terms import Assignment, LengthVector, Signature, Variable

ANSI = {
    "reset": "\033[0m",
    "bold": "\033[1m",
    "green": "\033[32m",
    "red": "\033[31m",
    "yellow": "\033[33m",
}

_STATUS_COLOUR = {"sat": "green", "unsat": "red", "unknown": "yellow"}


def _c(text: str, color: str, fancy: bool) -> str:
    if fancy and color in ANSI:
        return f"{ANSI[color]}{text}{ANSI['reset']}"
    return text


def _flag(value: Optional[bool]) -> str:
    if value is None:
        return "n/a"
    return "true" if value else "false"


def verdict_line(status: str, reason: Optional[str] = None, fancy: bool = False) -> str:
    """'sat', 'unsat' or 'unknown (Reason)'."""
    text = status if reason is None else f"{status} ({reason})"
    return _c(text, _STATUS_COLOUR.get(status, ""), fancy)


def lengths_line(v: LengthVector, order: Sequence[Variable], signature: Signature) -> str:
    return "  ".join(f"|{signature.name(x)}|={v[x]}" for x in order)


def witness_lines(sigma: Assignment, order: Sequence[Variable], signature: Signature) -> List[str]:
    width = max((len(signature.name(x)) for x in order), default=0)
    return [f"  {signature.name(x).ljust(width)} = {sigma[x].format(signature)}" for x in order]


def key_value_block(items: Iterable[Tuple[str, object]]) -> str:
    """Aligned 'key=value' lines; booleans lowercase, None as n/a."""
    rows = []
    items = list(items)
    width = max((len(k) for k, _ in items), default=0)
    for key, value in items:
        if isinstance(value, bool) or value is None:
            value = _flag(value)
        elif isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value) or "-"
        rows.append(f"{key.ljust(width)} = {value}")
    return "\n".join(rows)


def class_summary(report: Dict[str, object]) -> str:
    """One line: regular=true oriented=true flat=true ..."""
    keys = ("quadratic", "regular", "oriented", "flat", "cycles_one_var_reducing", "one_weak_constraints")
    return " ".join(f"{k}={_flag(report.get(k))}" for k in keys)


def grid_matrix(rows: Sequence[Tuple[LengthVector, bool]], x: Variable, y: Variable,
                signature: Signature, bound: int) -> str:
    """
    Two-variable membership grid, |x| down and |y| across.

    Example output (bound 3):
        |x|\\|y|  0 1 2 3
              0  # . # .
              1  . # . .
    """
    member = {(v[x], v[y]) for v, ok in rows if ok}
    head = f"|{signature.name(x)}|\\|{signature.name(y)}|"
    width = max(len(head), len(str(bound)))
    cell = len(str(bound))
    lines = [head.rjust(width) + "  " + " ".join(str(j).rjust(cell) for j in range(bound + 1))]
    for i in range(bound + 1):
        marks = " ".join(("#" if (i, j) in member else ".").rjust(cell) for j in range(bound + 1))
        lines.append(str(i).rjust(width) + "  " + marks)
    return "\n".join(lines)


def vector_table(vectors: Iterable[LengthVector], order: Sequence[Variable], signature: Signature) -> str:
    """One row per vector, columns in declaration order."""
    names = [signature.name(x) for x in order]
    widths = [max(len(n) + 2, 3) for n in names]
    lines = ["  ".join(f"|{n}|".rjust(w) for n, w in zip(names, widths))]
    for v in sorted(vectors, key=lambda v: v.as_tuple(order)):
        lines.append("  ".join(str(v[x]).rjust(w) for x, w in zip(order, widths)))
    return "\n".join(lines)
