"""
Acceleration of counter-system cycles into PAD formulas.

A cycle is 1-variable-reducing for y when each of its transitions is
Sub(y, z) or Dec(y). One iteration lowers y by

    S = unit_count + Σ_z var_counts(z) · z

and leaves every other counter alone, so any number of iterations from y
to y′ is captured by S | (y - y′) ∧ y′ <= y, together with z >= 1 for each
subtracted counter z. The identity disjunct covers zero iterations.

Guards on y are checked at every step of every iteration. Before step i
of the iteration that still has j full iterations after it, y equals

    y′ + j·S + (S - F_i)          F_i = decrement of the first i steps

so a guard u on y becomes a conjunction over j of
"(y′ + (j+1)·S > y) ∨ member(y′ + j·S + β, u)". Membership in u is
periodic with period b beyond max(A ∪ A′), and the values grow by at
least one per j, so j ∈ [0, max(A ∪ A′) + b] is enough.

flat_reachability() enumerates the simple paths of a flat system, pumps
each cycle at the first node the path visits on it, and composes the
parts symbolically: counters are affine terms in the initial values plus
one fresh variable per pump.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx

from weq.automata import UnarySemilinear
from weq.config import SolverConfig, load_config
from weq.core_terms import Signature, Variable
from weq.counter_system import (
    CounterSystem,
    FlatnessReport,
    RelationKind,
    Transition,
    check_cycle,
    cycle_shape,
    is_flat,
)
from weq.errors import BudgetExceeded, NonInvariantGuard, NotAPath, NotFlat, NotOneVarReducing
from weq.pad_logic import (
    LinearTerm,
    PadFormula,
    conj,
    const,
    disj,
    divides,
    eq,
    exists,
    fresh,
    geq,
    gt,
    leq,
    lower_unary_membership,
    var,
)

logger = logging.getLogger(__name__)

Terms = Dict[Variable, LinearTerm]


# =============================================================================
# Names
# =============================================================================

def pre_name(v: Variable, signature: Optional[Signature] = None) -> str:
    return signature.name(v) if signature else f"X{v.id}"


def post_name(v: Variable, signature: Optional[Signature] = None) -> str:
    return pre_name(v, signature) + "'"


def _pre_terms(counters: Sequence[Variable], signature: Optional[Signature]) -> Terms:
    return {x: var(pre_name(x, signature)) for x in counters}


def _frame(counters: Sequence[Variable], terms: Terms, signature: Optional[Signature],
           skip: Optional[Variable] = None) -> PadFormula:
    return conj(*(eq(var(post_name(x, signature)), terms[x]) for x in counters if x != skip))


# =============================================================================
# Decrement multiset
# =============================================================================

@dataclass(frozen=True)
class DecrementMultiset:
    """What one iteration of a 1-variable-reducing cycle subtracts."""

    unit_count: int = 0
    var_counts: Tuple[Tuple[Variable, int], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "var_counts", tuple(sorted(dict(self.var_counts).items())))

    @property
    def total(self) -> int:
        return self.unit_count + sum(n for _, n in self.var_counts)

    def term(self, terms: Terms) -> LinearTerm:
        out = const(self.unit_count)
        for z, n in self.var_counts:
            out = out + terms[z] * n
        return out


def decrement_multiset(cycle: Sequence[Transition]) -> DecrementMultiset:
    units = 0
    counts: Dict[Variable, int] = {}
    for t in cycle:
        if t.relation.kind is RelationKind.DEC:
            units += 1
        elif t.relation.kind is RelationKind.SUB:
            counts[t.relation.z] = counts.get(t.relation.z, 0) + 1
    return DecrementMultiset(units, tuple(counts.items()))


def _step_decrement(t: Transition, terms: Terms) -> LinearTerm:
    if t.relation.kind is RelationKind.DEC:
        return const(1)
    return terms[t.relation.z]


def expansion_bound(u: UnarySemilinear) -> int:
    """Largest iteration index the guard expansion must cover."""
    return u.max_offset + u.period


# =============================================================================
# Cycles
# =============================================================================

def _reduced(cycle: Sequence[Transition], index: Optional[int] = None) -> Variable:
    y = cycle_shape(cycle)
    if y is None:
        raise NotOneVarReducing("cycle is not 1-variable-reducing", index)
    return y


def _pump(cycle: Sequence[Transition], y: Variable, terms: Terms, y_post: LinearTerm,
          guarded: bool) -> PadFormula:
    """The iterated part (one or more iterations) over given pre-terms."""
    m = decrement_multiset(cycle)
    s = m.term(terms)
    y_pre = terms[y]
    parts: List[PadFormula] = [divides(s, y_pre - y_post), leq(y_post, y_pre)]
    parts.extend(geq(terms[z], 1) for z, _ in m.var_counts)
    if not guarded:
        return conj(*parts)

    changed = {t.relation.changed for t in cycle}
    invariant: Dict[Tuple[Variable, UnarySemilinear], None] = {}
    y_guards: List[Tuple[UnarySemilinear, LinearTerm]] = []
    done = const(0)
    for t in cycle:
        after = done + _step_decrement(t, terms)
        for guards, consumed in ((t.relation.pre_guards, done), (t.relation.post_guards, after)):
            for c, u in guards:
                if c == y:
                    y_guards.append((u, s - consumed))
                elif c in changed:
                    raise NonInvariantGuard(f"guard on X{c.id}, which the cycle changes")
                else:
                    invariant.setdefault((c, u), None)
        done = after
    for c, u in invariant:
        parts.append(lower_unary_membership(terms[c], u))
    for u, beta in y_guards:
        for j in range(expansion_bound(u) + 1):
            parts.append(disj(
                gt(y_post + s * (j + 1), y_pre),
                lower_unary_membership(y_post + s * j + beta, u),
            ))
    return conj(*parts)


def accelerate_cycle(
    cycle: Sequence[Transition],
    counters: Sequence[Variable],
    signature: Optional[Signature] = None,
    *,
    guarded: bool = False,
) -> PadFormula:
    """
    Reflexive-transitive closure of a 1-variable-reducing cycle.

    With guarded=False the unary guards on the transitions are ignored.

    Raises:
        NotACycle, NotOneVarReducing
        NonInvariantGuard: guarded, and a guard sits on a changed counter
    """
    y = _reduced(cycle)
    terms = _pre_terms(counters, signature)
    identity = _frame(counters, terms, signature)
    pump = conj(_pump(cycle, y, terms, var(post_name(y, signature)), guarded=guarded),
                _frame(counters, terms, signature, skip=y))
    return disj(identity, pump)


def accelerate_cycle_guarded(
    cycle: Sequence[Transition],
    counters: Sequence[Variable],
    signature: Optional[Signature] = None,
) -> PadFormula:
    return accelerate_cycle(cycle, counters, signature, guarded=True)


# =============================================================================
# Paths
# =============================================================================

def _apply(t: Transition, terms: Terms) -> Tuple[PadFormula, Terms]:
    """Constraint and post-terms of one transition over symbolic counters."""
    rel = t.relation
    parts = [lower_unary_membership(terms[c], u) for c, u in rel.pre_guards]
    out = dict(terms)
    if rel.kind is RelationKind.ERASE_TEST:
        parts.append(eq(terms[rel.y], 0))
    elif rel.kind is RelationKind.DEC:
        parts.append(geq(terms[rel.y], 1))
        out[rel.y] = terms[rel.y] - 1
    elif rel.kind is RelationKind.SUB:
        parts.append(geq(terms[rel.z], 1))
        parts.append(leq(terms[rel.z], terms[rel.y]))
        out[rel.y] = terms[rel.y] - terms[rel.z]
    parts.extend(lower_unary_membership(out[c], u) for c, u in rel.post_guards)
    return conj(*parts), out


def check_path(segment: Sequence[Transition]) -> None:
    """
    Raises:
        NotAPath: consecutive transitions do not share endpoints
    """
    for a, b in zip(segment, segment[1:]):
        if a.target != b.source:
            raise NotAPath(f"transition {a.index} ends at {a.target}, next starts at {b.source}")


def path_formula(
    segment: Sequence[Transition],
    counters: Sequence[Variable],
    signature: Optional[Signature] = None,
) -> PadFormula:
    """∃ intermediate valuations. Φ_0 ∧ ... ∧ Φ_{n-1}."""
    check_path(segment)
    names = [{x: pre_name(x, signature) for x in counters}]
    for _ in range(len(segment) - 1):
        names.append({x: fresh(pre_name(x, signature)) for x in counters})
    names.append({x: post_name(x, signature) for x in counters})
    if not segment:
        return _frame(counters, _pre_terms(counters, signature), signature)
    parts = []
    for i, t in enumerate(segment):
        constraint, out = _apply(t, {x: var(n) for x, n in names[i].items()})
        parts.append(constraint)
        parts.extend(eq(var(names[i + 1][x]), out[x]) for x in counters)
    bound = [n for layer in names[1:-1] for n in layer.values()]
    return exists(bound, conj(*parts))


# =============================================================================
# Schemas
# =============================================================================

@dataclass(frozen=True)
class Segment:
    transitions: Tuple[Transition, ...]


@dataclass(frozen=True)
class Pump:
    node: int
    cycle: Tuple[Transition, ...]


@dataclass(frozen=True)
class PathSchema:
    """Alternating segments and cycle pumps from start to end."""

    start: int
    end: int
    parts: Tuple[Union[Segment, Pump], ...] = ()

    def __post_init__(self) -> None:
        at = self.start
        pumped = set()
        for part in self.parts:
            if isinstance(part, Pump):
                if part.node != at or part.cycle[0].source != at:
                    raise NotAPath(f"pump at {part.node} not on the path (at {at})")
                key = frozenset(t.index for t in part.cycle)
                if key in pumped:
                    raise NotAPath("schema pumps the same cycle twice")
                pumped.add(key)
            else:
                check_path(part.transitions)
                if part.transitions and part.transitions[0].source != at:
                    raise NotAPath(f"segment starts at {part.transitions[0].source}, expected {at}")
                if part.transitions:
                    at = part.transitions[-1].target
        if at != self.end:
            raise NotAPath(f"schema ends at {at}, expected {self.end}")


def _rotate(cycle: Sequence[Transition], node: int) -> Tuple[Transition, ...]:
    for i, t in enumerate(cycle):
        if t.source == node:
            return tuple(cycle[i:]) + tuple(cycle[:i])
    raise ValueError(f"node {node} not on cycle")


def enumerate_schemas(
    cs: CounterSystem,
    p: int,
    q: int,
    report: FlatnessReport,
    budget: int,
) -> List[PathSchema]:
    """
    Every simple path p→q, with a pump at the first node it visits on each cycle.

    Raises:
        BudgetExceeded: more than budget schemas
    """
    cycle_of: Dict[int, Tuple[Transition, ...]] = {}
    for cycle in report.cycles:
        for t in cycle:
            cycle_of[t.source] = cycle

    graph = cs.to_networkx()
    if p not in graph or q not in graph or not (p == q or nx.has_path(graph, p, q)):
        return []
    region = (nx.descendants(graph, p) | {p}) & (nx.ancestors(graph, q) | {q})
    sub = graph.subgraph(region)

    if p == q:
        paths: List[List[Transition]] = [[]]
    else:
        paths = [
            [sub.edges[u, v, k]["transition"] for u, v, k in edge_path]
            for edge_path in nx.all_simple_edge_paths(sub, p, q)
        ]

    schemas = []
    for path in paths:
        nodes = [p] + [t.target for t in path]
        parts: List[Union[Segment, Pump]] = []
        seen_cycles = set()
        current: List[Transition] = []
        for i, node in enumerate(nodes):
            cycle = cycle_of.get(node)
            if cycle is not None and id(cycle) not in seen_cycles:
                seen_cycles.add(id(cycle))
                if current:
                    parts.append(Segment(tuple(current)))
                    current = []
                parts.append(Pump(node, _rotate(cycle, node)))
            if i < len(path):
                current.append(path[i])
        if current:
            parts.append(Segment(tuple(current)))
        schemas.append(PathSchema(p, q, tuple(parts)))
        if len(schemas) > budget:
            raise BudgetExceeded("path schemas", budget)
    return schemas


def schema_formula(
    schema: PathSchema,
    counters: Sequence[Variable],
    signature: Optional[Signature] = None,
    close_targets: bool = False,
) -> PadFormula:
    """Symbolic composition of one schema."""
    terms = _pre_terms(counters, signature)
    parts: List[PadFormula] = []
    pumps: List[str] = []
    for part in schema.parts:
        if isinstance(part, Segment):
            for t in part.transitions:
                constraint, terms = _apply(t, terms)
                parts.append(constraint)
        else:
            y = _reduced(part.cycle)
            w = fresh(f"{pre_name(y, signature)}.pump")
            pumps.append(w)
            parts.append(disj(
                eq(var(w), terms[y]),
                _pump(part.cycle, y, terms, var(w), guarded=True),
            ))
            terms = dict(terms)
            terms[y] = var(w)
    if not close_targets:
        parts.append(_frame(counters, terms, signature))
    return exists(pumps, conj(*parts))


def flat_reachability(
    cs: CounterSystem,
    p: int,
    q: int,
    config: Optional[SolverConfig] = None,
    signature: Optional[Signature] = None,
    close_targets: bool = False,
) -> PadFormula:
    """
    λ_{p,q}(x̄, x̄′): (p, x̄) →* (q, x̄′) in a flat system.

    With close_targets the post-valuation is dropped (existentially closed),
    leaving a formula over the pre-names only.

    Raises:
        NotFlat: some node lies on two simple cycles
        NotOneVarReducing: carries the index of the offending cycle
        BudgetExceeded: more than config.path_budget schemas
    """
    config = config or load_config()
    report = is_flat(cs)
    if not report.flat:
        raise NotFlat(f"{len(report.tangled)} strongly connected component(s) carry several cycles")
    for i, cycle in enumerate(report.cycles):
        check_cycle(cycle)
        _reduced(cycle, i)
    schemas = enumerate_schemas(cs, p, q, report, config.path_budget)
    logger.debug("flat reachability %s->%s: %d schemas", p, q, len(schemas))
    formulas = []
    seen = set()
    for schema in schemas:
        if schema in seen:
            continue
        seen.add(schema)
        formulas.append(schema_formula(schema, cs.counters, signature, close_targets))
    if not formulas:
        return disj()
    return disj(*formulas)
