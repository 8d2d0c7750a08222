"""
End-to-end solving of quadratic word equations with regular and length
constraints.

Ladder used by solve():

    1. Build CA(E, S). No path to (ε=ε, ∅) means Unsat.
    2. Flat with 1-variable-reducing cycles: λ(root → target), target
       counters closed, conjoined with Φ, goes to the PAD backend. Sat
       models are re-checked with exhaustive pre* search.
    3. Φ bounds every length: exact search over the grid.
    4. Otherwise: search the box [0, enumeration_bound]; Sat if found,
       Unknown otherwise.

Declared variables that do not occur in the equation are constrained only
by their own regular constraints, through the length abstraction.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Dict, FrozenSet, Iterator, List, Optional, Tuple

from weq.acceleration import flat_reachability
from weq.automata import RegularConstraint, constraints_abstraction, is_one_weak, nfa_accepts_letters
from weq.config import SolverConfig, load_config
from weq.core_terms import (
    Assignment,
    Equation,
    LengthVector,
    Signature,
    Variable,
    check_solution,
    is_oriented,
    is_quadratic,
    is_regular,
)
from weq.counter_system import (
    Configuration,
    CounterSystem,
    build_counter_system_with_regex,
    cycle_shape,
    find_run,
    is_flat,
)
from weq.errors import BudgetExceeded, NotMember, NotQuadratic, WeqError
from weq.nielsen import witness_from_path, word_for
from weq.pad_logic import (
    TRUE,
    Divides,
    PadFormula,
    Sat,
    Unsat,
    conj,
    derive_bounds,
    evaluate,
    free_variables,
    is_satisfiable,
    lower_unary_membership,
    var,
)

logger = logging.getLogger(__name__)


# =============================================================================
# Types
# =============================================================================

def _contains_divides(f: PadFormula) -> bool:
    if isinstance(f, Divides):
        return True
    for child in getattr(f, "parts", ()):
        if _contains_divides(child):
            return True
    body = getattr(f, "body", None)
    return body is not None and _contains_divides(body)


@dataclass(frozen=True)
class Problem:
    """
    A word equation with regular constraints and a length constraint Φ.

    Φ speaks about lengths through the variable names of the signature
    (|x| is the PAD variable "x") and must be divisibility-free.
    automata keeps the named NFAs of a problem file for printing.
    """

    signature: Signature
    equation: Equation
    regular_constraints: FrozenSet[RegularConstraint] = frozenset()
    length_constraint: PadFormula = TRUE
    automata: Tuple[Tuple[str, object], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "regular_constraints", frozenset(self.regular_constraints))
        names = set(self.signature.variables)
        stray = free_variables(self.length_constraint) - names
        if stray:
            raise ValueError(f"length constraint mentions undeclared variables: {sorted(stray)}")
        if _contains_divides(self.length_constraint):
            raise ValueError("length constraint must be divisibility-free")
        for c in self.regular_constraints:
            if c.automaton.alphabet_size != self.signature.alphabet_size:
                raise ValueError(
                    f"constraint automaton has {c.automaton.alphabet_size} letters, "
                    f"alphabet has {self.signature.alphabet_size}"
                )
            if c.variable.id >= len(self.signature.variables):
                raise ValueError(f"constraint on undeclared variable X{c.variable.id}")

    @property
    def variables(self) -> Tuple[Variable, ...]:
        """All declared variables, in declaration order."""
        return self.signature.all_variables()

    @property
    def free_variables(self) -> Tuple[Variable, ...]:
        """Declared but absent from the equation."""
        present = set(self.equation.variables())
        return tuple(v for v in self.variables if v not in present)

    @property
    def equation_constraints(self) -> FrozenSet[RegularConstraint]:
        present = set(self.equation.variables())
        return frozenset(c for c in self.regular_constraints if c.variable in present)

    def constraints_on(self, v: Variable) -> List[RegularConstraint]:
        return [c for c in self.regular_constraints if c.variable == v]

    def name(self, v: Variable) -> str:
        return self.signature.name(v)

    def with_length_constraint(self, phi: PadFormula) -> "Problem":
        return Problem(self.signature, self.equation, self.regular_constraints, phi, self.automata)

    def lengths(self, values: Dict[str, int]) -> LengthVector:
        """LengthVector from a name → length mapping (missing names are 0)."""
        return LengthVector.of({v: values.get(self.name(v), 0) for v in self.variables})


class VerdictStatus(Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


class UnknownReason(Enum):
    NOT_FLAT = "NotFlat"
    BAD_CYCLE = "BadCycle"
    SOLVER_BOUND = "SolverBound"


@dataclass(frozen=True)
class Verdict:
    status: VerdictStatus
    lengths: Optional[LengthVector] = None
    witness: Optional[Assignment] = None
    reason: Optional[UnknownReason] = None

    @classmethod
    def sat(cls, lengths: LengthVector, witness: Optional[Assignment] = None) -> "Verdict":
        return cls(VerdictStatus.SAT, lengths, witness)

    @classmethod
    def unsat(cls) -> "Verdict":
        return cls(VerdictStatus.UNSAT)

    @classmethod
    def unknown(cls, reason: UnknownReason) -> "Verdict":
        return cls(VerdictStatus.UNKNOWN, reason=reason)

    @property
    def is_sat(self) -> bool:
        return self.status is VerdictStatus.SAT

    @property
    def is_unsat(self) -> bool:
        return self.status is VerdictStatus.UNSAT

    @property
    def exit_code(self) -> int:
        return {VerdictStatus.SAT: 0, VerdictStatus.UNSAT: 1, VerdictStatus.UNKNOWN: 2}[self.status]


@dataclass(frozen=True)
class ClassReport:
    """Class membership of a problem; counter-system fields are None unless quadratic."""

    quadratic: bool
    regular: bool
    oriented: bool
    one_weak_constraints: bool
    flat: Optional[bool] = None
    cycles_one_var_reducing: Optional[bool] = None
    states: Optional[int] = None
    transitions: Optional[int] = None
    cycles: Tuple[int, ...] = field(default=())

    @property
    def regular_oriented(self) -> bool:
        return self.regular and self.oriented

    def as_dict(self) -> Dict[str, object]:
        return {
            "quadratic": self.quadratic,
            "regular": self.regular,
            "oriented": self.oriented,
            "one_weak_constraints": self.one_weak_constraints,
            "flat": self.flat,
            "cycles_one_var_reducing": self.cycles_one_var_reducing,
            "states": self.states,
            "transitions": self.transitions,
            "cycle_lengths": list(self.cycles),
        }


# =============================================================================
# Shared pieces
# =============================================================================

def _require_quadratic(p: Problem) -> None:
    if not is_quadratic(p.equation):
        raise NotQuadratic(f"equation is not quadratic: {p.equation.format(p.signature)}")


@lru_cache(maxsize=32)
def _counter_system(p: Problem, config: SolverConfig) -> CounterSystem:
    return build_counter_system_with_regex(p.equation, p.equation_constraints, config)


def _free_memberships(p: Problem) -> PadFormula:
    return conj(*(
        lower_unary_membership(var(p.name(v)), constraints_abstraction(p.constraints_on(v)))
        for v in p.free_variables
        if p.constraints_on(v)
    ))


def _free_ok(p: Problem, v: LengthVector) -> bool:
    return all(v[x] in constraints_abstraction(p.constraints_on(x)) for x in p.free_variables)


def _start(cs: CounterSystem, v: LengthVector) -> Configuration:
    return Configuration.of(cs.root, {x: v[x] for x in cs.counters})


# =============================================================================
# Operations
# =============================================================================

def classify(p: Problem, config: Optional[SolverConfig] = None) -> ClassReport:
    config = config or load_config()
    quadratic = is_quadratic(p.equation)
    base = dict(
        quadratic=quadratic,
        regular=is_regular(p.equation),
        oriented=is_oriented(p.equation),
        one_weak_constraints=all(is_one_weak(c.automaton) for c in p.regular_constraints),
    )
    if not quadratic:
        return ClassReport(**base)
    cs = _counter_system(p, config)
    report = is_flat(cs)
    ovr = report.flat and all(cycle_shape(c) is not None for c in report.cycles)
    return ClassReport(
        **base,
        flat=report.flat,
        cycles_one_var_reducing=ovr,
        states=len(cs.states),
        transitions=len(cs.transitions),
        cycles=tuple(len(c) for c in report.cycles),
    )


def length_membership(p: Problem, v: LengthVector, config: Optional[SolverConfig] = None) -> bool:
    """
    v ∈ Len(E, S), decided by exhaustive pre* search.

    Raises:
        NotQuadratic, BudgetExceeded
    """
    _require_quadratic(p)
    config = config or load_config()
    if not _free_ok(p, v):
        return False
    cs = _counter_system(p, config)
    targets = cs.target_states()
    if not targets:
        return False
    return find_run(cs, targets, _start(cs, v), config) is not None


def synthesize_witness(
    p: Problem, v: LengthVector, config: Optional[SolverConfig] = None
) -> Assignment:
    """
    A solution with exactly the lengths v, built by replaying a pre* run
    backwards through the rewrite edges.

    Raises:
        NotMember: v is not in the length abstraction
    """
    _require_quadratic(p)
    config = config or load_config()
    if not _free_ok(p, v):
        raise NotMember(f"lengths {v.as_dict()} violate the constraints on free variables")
    cs = _counter_system(p, config)
    start = _start(cs, v)
    run = find_run(cs, cs.target_states(), start, config) if cs.target_states() else None
    if run is None:
        raise NotMember(f"lengths {v.as_dict()} are not in the length abstraction")
    configs = [start] + [c for _, c in run]
    sigma = witness_from_path(
        [t.edge for t, _ in run],
        [c.as_dict() for c in configs[:-1]],
    )
    images = dict(sigma.images)
    for x in p.free_variables:
        images[x] = word_for(x, p.constraints_on(x), v[x])
    witness = Assignment(images)
    if not verify_witness(p, witness, v):
        raise WeqError(f"synthesized witness failed verification: {witness.format(p.signature)}")
    return witness


def verify_witness(p: Problem, sigma: Assignment, v: Optional[LengthVector] = None) -> bool:
    """σ solves E, meets every regular constraint, and (if given) has lengths v."""
    if any(x not in sigma for x in p.variables):
        return False
    if not check_solution(p.equation, sigma):
        return False
    for c in p.regular_constraints:
        if not nfa_accepts_letters(c.language(), sigma[c.variable].letters()):
            return False
    if v is not None and any(len(sigma[x]) != v[x] for x in p.variables):
        return False
    return True


def _model_lengths(p: Problem, model: Dict[str, int]) -> LengthVector:
    return p.lengths(model)


def _sat_verdict(p: Problem, v: LengthVector, config: SolverConfig) -> Verdict:
    return Verdict.sat(v, synthesize_witness(p, v, config))


def _box(bounds: List[range]) -> Iterator[Tuple[int, ...]]:
    return itertools.product(*bounds)


def _search_box(p: Problem, ranges: List[range], config: SolverConfig) -> Optional[LengthVector]:
    names = [p.name(x) for x in p.variables]
    for values in _box(ranges):
        valuation = dict(zip(names, values))
        if not evaluate(p.length_constraint, valuation):
            continue
        v = p.lengths(valuation)
        if length_membership(p, v, config):
            return v
    return None


def solve(p: Problem, config: Optional[SolverConfig] = None) -> Verdict:
    """
    Decide p, returning a witnessed Sat, Unsat or Unknown(reason).

    Raises:
        NotQuadratic
    """
    _require_quadratic(p)
    config = config or load_config()
    try:
        return _solve(p, config)
    except BudgetExceeded as exc:
        logger.warning("giving up: %s", exc)
        return Verdict.unknown(UnknownReason.SOLVER_BOUND)


def _solve(p: Problem, config: SolverConfig) -> Verdict:
    cs = _counter_system(p, config)
    targets = sorted(cs.target_states())
    if not targets:
        logger.info("no rewrite path reaches ε=ε: unsat")
        return Verdict.unsat()
    if any(constraints_abstraction(p.constraints_on(x)).is_empty for x in p.free_variables):
        logger.info("a free variable has an empty constraint language: unsat")
        return Verdict.unsat()

    phi = conj(p.length_constraint, _free_memberships(p))
    report = is_flat(cs)
    ovr = report.flat and all(cycle_shape(c) is not None for c in report.cycles)

    if ovr:
        reach = flat_reachability(cs, cs.root, targets[0], config, p.signature, close_targets=True)
        result = is_satisfiable(conj(reach, phi), config)
        logger.info("flat system, PAD backend answered %s", type(result).__name__)
        if isinstance(result, Unsat):
            return Verdict.unsat()
        if isinstance(result, Sat):
            v = _model_lengths(p, result.as_dict())
            if evaluate(p.length_constraint, {p.name(x): v[x] for x in p.variables}) \
                    and length_membership(p, v, config):
                return _sat_verdict(p, v, config)
            logger.warning("PAD model %s rejected by pre* search", result.as_dict())
    else:
        logger.info("counter system is not flat or has a cycle reducing several counters")

    names = [p.name(x) for x in p.variables]
    bounds = derive_bounds(phi)
    if bounds is None:
        return Verdict.unsat()
    his = [bounds.get(n, (0, float("inf")))[1] for n in names]
    if all(hi != float("inf") for hi in his):
        size = 1
        for hi in his:
            size *= int(hi) + 1
        if size <= config.search_budget:
            los = [bounds.get(n, (0, 0))[0] for n in names]
            logger.info("exact grid search over %d vectors", size)
            v = _search_box(p, [range(lo, int(hi) + 1) for lo, hi in zip(los, his)], config)
            return _sat_verdict(p, v, config) if v is not None else Verdict.unsat()

    radius = config.enumeration_bound
    logger.info("bounded enumeration up to %d", radius)
    v = _search_box(p, [range(radius + 1) for _ in names], config)
    if v is not None:
        return _sat_verdict(p, v, config)
    if not report.flat:
        return Verdict.unknown(UnknownReason.NOT_FLAT)
    if not ovr:
        return Verdict.unknown(UnknownReason.BAD_CYCLE)
    return Verdict.unknown(UnknownReason.SOLVER_BOUND)


def solve_grid(
    p: Problem, bound: int, config: Optional[SolverConfig] = None
) -> List[Tuple[LengthVector, bool]]:
    """length_membership over [0, bound]^|V| in declaration order."""
    config = config or load_config()
    rows = []
    for values in _box([range(bound + 1) for _ in p.variables]):
        v = LengthVector.of(dict(zip(p.variables, values)))
        rows.append((v, length_membership(p, v, config)))
    return rows
