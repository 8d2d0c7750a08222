"""
Exceptions raised across the weq toolkit.

Every error derives from WeqError so callers (the CLI in particular) can
catch the whole family in one place. Errors that signal malformed data at
construction time also derive from ValueError.
"""

from __future__ import annotations

from typing import Optional


class WeqError(Exception):
    """Base class of all weq errors."""


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

class ConfigError(WeqError, ValueError):
    """Raised for malformed configuration values (e.g. WEQ_BUDGET=abc)."""


# ---------------------------------------------------------------------------
# Terms and automata
# ---------------------------------------------------------------------------

class MissingVariable(WeqError, KeyError):
    """A variable of a word has no image under the assignment."""

    def __str__(self) -> str:
        return Exception.__str__(self)


class BadState(WeqError, ValueError):
    """An automaton state is out of range."""


class EmptyList(WeqError, ValueError):
    """An operation that needs at least one operand received none."""


class BoundViolation(WeqError):
    """A computed length abstraction exceeds the quadratic magnitude bound."""


# ---------------------------------------------------------------------------
# Rewriting and counter systems
# ---------------------------------------------------------------------------

class NotQuadratic(WeqError, ValueError):
    """The equation has a variable occurring more than twice."""


class BudgetExceeded(WeqError):
    """A search ran past its configured budget."""

    def __init__(self, what: str, budget: int) -> None:
        super().__init__(f"{what} exceeded budget of {budget}")
        self.what = what
        self.budget = budget


class InconsistentGuess(WeqError, ValueError):
    """An assignment contradicts the guess encoded by a rewrite edge."""


class WrongState(WeqError, ValueError):
    """A transition was fired from a configuration in another state."""


class NotACycle(WeqError, ValueError):
    """A transition list does not close into a simple cycle."""


class NotAPath(WeqError, ValueError):
    """Consecutive transitions do not share endpoints."""


class NotFlat(WeqError):
    """The counter system has a node on two or more simple cycles."""


class NotOneVarReducing(WeqError):
    """A cycle decrements more than one counter (or none)."""

    def __init__(self, message: str, cycle_index: Optional[int] = None) -> None:
        super().__init__(message)
        self.cycle_index = cycle_index


class NonInvariantGuard(WeqError):
    """A guard constrains a counter that the cycle changes, other than the reduced one."""


# ---------------------------------------------------------------------------
# Arithmetic
# ---------------------------------------------------------------------------

class UnboundVariable(WeqError, KeyError):
    """A formula mentions a variable the valuation does not define."""

    def __str__(self) -> str:
        return Exception.__str__(self)


class NotGroundCheckable(WeqError):
    """An existential has no finite search range under the given valuation."""


# ---------------------------------------------------------------------------
# Solver, oracle and problem files
# ---------------------------------------------------------------------------

class NotMember(WeqError, ValueError):
    """A length vector is not in the length abstraction."""


class UnknownName(WeqError, KeyError):
    """A reference formula or NFA name is not known."""

    def __str__(self) -> str:
        return Exception.__str__(self)


class ParseError(WeqError, ValueError):
    """Syntax error in a problem file, with 1-based location."""

    def __init__(self, message: str, line: int = 0, column: int = 0) -> None:
        super().__init__(message)
        self.message = message
        self.line = line
        self.column = column

    def __str__(self) -> str:
        return f"line {self.line}, column {self.column}: {self.message}"


class UnknownSymbol(ParseError):
    """A word uses a name that is neither a declared letter nor a declared variable."""


class AlphabetMismatch(ParseError):
    """An NFA transition uses a letter outside the declared alphabet."""
