"""
weq - quadratic word equations with length and regular constraints

Nielsen rewriting turns an equation into a counter system over the
lengths of its variables; flat systems are accelerated into existential
Presburger arithmetic with divisibility and handed to z3.

Modules:
    core_terms:     words, equations, assignments, length vectors
    automata:       NFAs, regular constraints, unary length abstractions
    nielsen:        rewrite graph of an equation with constraints
    counter_system: counter system, pre* search, flatness
    pad_logic:      Presburger formulas with divisibility, z3 backend
    acceleration:   cycle acceleration and flat reachability formulas
    solver:         problems, classification, decision ladder, witnesses
    oracle:         brute-force ground truth and closed-form references
    problem_file:   text format for problems
    cli:            command line front end
"""

__version__ = "0.3.0"

from weq.core_terms import (
    Assignment,
    Constant,
    Equation,
    LengthVector,
    Signature,
    Variable,
    Word,
    parse_equation,
    parse_word,
)
from weq.automata import Nfa, RegularConstraint, UnarySemilinear, length_abstraction
from weq.solver import Problem, Verdict, classify, length_membership, solve, synthesize_witness
from weq.problem_file import parse_problem, print_problem

__all__ = [
    "__version__",
    "Assignment",
    "Constant",
    "Equation",
    "LengthVector",
    "Nfa",
    "Problem",
    "RegularConstraint",
    "Signature",
    "UnarySemilinear",
    "Variable",
    "Verdict",
    "Word",
    "classify",
    "length_abstraction",
    "length_membership",
    "parse_equation",
    "parse_problem",
    "parse_word",
    "print_problem",
    "solve",
    "synthesize_witness",
]
