"""
Counter systems over the rewrite graph.

One counter per variable of the root equation holds the length of its
current image. Each rewrite edge becomes one transition:

    erase x          EraseTest(x)   x = 0
    P1               Id
    P2(β)            Dec(β)         β > 0, β′ = β - 1
    P3(α)            Dec(α)
    P4_ALPHA(α, β)   Sub(β, α)      1 <= α <= β, β′ = β - α
    P4_BETA(α, β)    Sub(α, β)

Under regular constraints every transition also carries per-counter
pre-guards (from S) and post-guards (from S′), each a unary semilinear set.

Every step strictly decreases (Σ counters, |E|) lexicographically, so
pre* is decided by exhaustive search.
"""

from __future__ import annotations

import logging
import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Set, Tuple

import networkx as nx
from graphviz import Digraph

from weq.automata import RegularConstraint, UnarySemilinear, constraints_abstraction
from weq.config import SolverConfig, load_config
from weq.core_terms import Equation, Signature, Variable
from weq.errors import BudgetExceeded, NotACycle, WrongState
from weq.nielsen import (
    RewriteEdge,
    RewriteGraph,
    RewriteState,
    RuleKind,
    build_graph,
    make_state,
)

logger = logging.getLogger(__name__)

Guards = Tuple[Tuple[Variable, UnarySemilinear], ...]


# =============================================================================
# Transition relations
# =============================================================================

class RelationKind(Enum):
    ID = "Id"
    SUB = "Sub"
    DEC = "Dec"
    ERASE_TEST = "EraseTest"


@dataclass(frozen=True)
class TransitionRelation:
    """
    Base relation plus guards.

    y is the counter written (tested, for EraseTest); z the subtrahend of Sub.
    """

    kind: RelationKind
    y: Optional[Variable] = None
    z: Optional[Variable] = None
    pre_guards: Guards = ()
    post_guards: Guards = ()

    def __post_init__(self) -> None:
        if self.kind is RelationKind.SUB:
            if self.y is None or self.z is None or self.y == self.z:
                raise ValueError("Sub(y, z) needs two distinct counters")
        elif self.kind in (RelationKind.DEC, RelationKind.ERASE_TEST):
            if self.y is None:
                raise ValueError(f"{self.kind.value} needs a counter")
        object.__setattr__(self, "pre_guards", tuple(sorted(self.pre_guards, key=lambda g: g[0])))
        object.__setattr__(self, "post_guards", tuple(sorted(self.post_guards, key=lambda g: g[0])))

    @classmethod
    def identity(cls) -> "TransitionRelation":
        return cls(RelationKind.ID)

    @classmethod
    def sub(cls, y: Variable, z: Variable) -> "TransitionRelation":
        return cls(RelationKind.SUB, y, z)

    @classmethod
    def dec(cls, y: Variable) -> "TransitionRelation":
        return cls(RelationKind.DEC, y)

    @classmethod
    def erase_test(cls, y: Variable) -> "TransitionRelation":
        return cls(RelationKind.ERASE_TEST, y)

    def guarded(self, pre: Mapping[Variable, UnarySemilinear],
                post: Mapping[Variable, UnarySemilinear]) -> "TransitionRelation":
        return TransitionRelation(self.kind, self.y, self.z, tuple(pre.items()), tuple(post.items()))

    @property
    def changed(self) -> Optional[Variable]:
        """The counter whose value the relation modifies."""
        if self.kind in (RelationKind.SUB, RelationKind.DEC):
            return self.y
        return None

    @property
    def pre(self) -> Dict[Variable, UnarySemilinear]:
        return dict(self.pre_guards)

    @property
    def post(self) -> Dict[Variable, UnarySemilinear]:
        return dict(self.post_guards)

    @property
    def unguarded(self) -> bool:
        return not self.pre_guards and not self.post_guards

    def apply(self, values: Mapping[Variable, int]) -> Optional[Dict[Variable, int]]:
        """Post-values, or None if a check fails."""
        for var, u in self.pre_guards:
            if values[var] not in u:
                return None
        out = dict(values)
        if self.kind is RelationKind.SUB:
            z, y = values[self.z], values[self.y]
            if z < 1 or z > y:
                return None
            out[self.y] = y - z
        elif self.kind is RelationKind.DEC:
            if values[self.y] <= 0:
                return None
            out[self.y] = values[self.y] - 1
        elif self.kind is RelationKind.ERASE_TEST:
            if values[self.y] != 0:
                return None
        for var, u in self.post_guards:
            if out[var] not in u:
                return None
        return out

    def format(self, signature: Optional[Signature] = None) -> str:
        def name(v: Variable) -> str:
            return signature.name(v) if signature else f"X{v.id}"

        if self.kind is RelationKind.ID:
            text = "Id"
        elif self.kind is RelationKind.SUB:
            text = f"Sub({name(self.y)},{name(self.z)})"
        else:
            text = f"{self.kind.value}({name(self.y)})"
        guards = [f"{name(v)}∈{u.format()}" for v, u in self.pre_guards]
        guards += [f"{name(v)}′∈{u.format()}" for v, u in self.post_guards]
        if guards:
            text += " [" + ", ".join(guards) + "]"
        return text


def relation_for(edge: RewriteEdge) -> TransitionRelation:
    rule = edge.rule
    if rule.is_erase:
        return TransitionRelation.erase_test(rule.erased)
    if rule.kind is RuleKind.P1:
        return TransitionRelation.identity()
    if rule.kind is RuleKind.P2:
        return TransitionRelation.dec(rule.beta)
    if rule.kind is RuleKind.P3:
        return TransitionRelation.dec(rule.alpha)
    if rule.kind is RuleKind.P4_ALPHA:
        return TransitionRelation.sub(rule.beta, rule.alpha)
    return TransitionRelation.sub(rule.alpha, rule.beta)


def _guards(constraints: Iterable[RegularConstraint]) -> Dict[Variable, UnarySemilinear]:
    by_var: Dict[Variable, List[RegularConstraint]] = {}
    for c in constraints:
        by_var.setdefault(c.variable, []).append(c)
    guards = {}
    for var, cs in by_var.items():
        u = constraints_abstraction(cs)
        if not u.is_everything:
            guards[var] = u
    return guards


# =============================================================================
# Counter system
# =============================================================================

@dataclass(frozen=True)
class Transition:
    index: int
    source: int
    relation: TransitionRelation
    target: int
    edge: Optional[RewriteEdge] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Configuration:
    """(q, v): a state index and a total valuation of the counters."""

    state: int
    values: Tuple[Tuple[Variable, int], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(sorted(dict(self.values).items())))
        for var, n in self.values:
            if n < 0:
                raise ValueError(f"counter {var} must be >= 0, got {n}")

    @classmethod
    def of(cls, state: int, values: Mapping[Variable, int]) -> "Configuration":
        return cls(state, tuple(values.items()))

    def as_dict(self) -> Dict[Variable, int]:
        return dict(self.values)

    def value(self, var: Variable) -> int:
        return self.as_dict()[var]

    @property
    def total(self) -> int:
        return sum(n for _, n in self.values)


@dataclass
class CounterSystem:
    """
    (X, Q, Δ) with states numbered as in the rewrite graph; state 0 is the root.
    """

    counters: Tuple[Variable, ...]
    states: List[RewriteState]
    transitions: List[Transition]
    graph: Optional[RewriteGraph] = field(default=None, repr=False)
    _out: Dict[int, List[Transition]] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self._out = {}
        for t in self.transitions:
            if not (0 <= t.source < len(self.states) and 0 <= t.target < len(self.states)):
                raise ValueError(f"transition {t.index} has an endpoint outside the state set")
            self._out.setdefault(t.source, []).append(t)

    @property
    def root(self) -> int:
        return 0

    def out(self, state: int) -> List[Transition]:
        return self._out.get(state, [])

    def target_states(self) -> FrozenSet[int]:
        """States whose rewrite state is (ε=ε, ∅)."""
        return frozenset(i for i, s in enumerate(self.states) if s.is_target)

    def to_networkx(self) -> nx.MultiDiGraph:
        g = nx.MultiDiGraph()
        g.add_nodes_from(range(len(self.states)))
        for t in self.transitions:
            g.add_edge(t.source, t.target, key=t.index, transition=t)
        return g

    def to_dot(self, signature: Optional[Signature] = None) -> str:
        dot = Digraph()
        for i, s in enumerate(self.states):
            shape = "doublecircle" if s.is_target else "box"
            dot.node(name=f"q{i}", label=s.equation.format(signature), shape=shape)
        for t in self.transitions:
            dot.edge(f"q{t.source}", f"q{t.target}", t.relation.format(signature))
        return dot.source


def build_counter_system_with_regex(
    e: Equation,
    s: Iterable[RegularConstraint] = (),
    config: Optional[SolverConfig] = None,
) -> CounterSystem:
    """
    CA(E, S): states from the constrained rewrite graph, guards from S and S′.

    Raises:
        NotQuadratic, BudgetExceeded: from the rewrite graph
    """
    graph = build_graph(make_state(e, s), config)
    transitions = []
    for i, edge in enumerate(graph.edges):
        base = relation_for(edge)
        relation = base.guarded(_guards(edge.source.constraints), _guards(edge.post_constraints))
        transitions.append(Transition(i, graph.index(edge.source), relation, graph.index(edge.target), edge))
    counters = tuple(sorted(e.variables()))
    cs = CounterSystem(counters, list(graph.nodes), transitions, graph)
    logger.debug("counter system: %d states, %d transitions", len(cs.states), len(transitions))
    return cs


def build_counter_system(e: Equation, config: Optional[SolverConfig] = None) -> CounterSystem:
    """CA(E): the unguarded system."""
    return build_counter_system_with_regex(e, (), config)


# =============================================================================
# Semantics
# =============================================================================

def step(c: Configuration, t: Transition) -> Optional[Configuration]:
    """
    Fire t from c.

    Raises:
        WrongState: c is not at t's source
    """
    if c.state != t.source:
        raise WrongState(f"transition {t.index} leaves state {t.source}, configuration is at {c.state}")
    out = t.relation.apply(c.as_dict())
    if out is None:
        return None
    return Configuration.of(t.target, out)


def successors(cs: CounterSystem, c: Configuration) -> Iterator[Tuple[Transition, Configuration]]:
    for t in cs.out(c.state):
        nxt = step(c, t)
        if nxt is not None:
            yield t, nxt


def find_run(
    cs: CounterSystem,
    target: Iterable[int],
    c: Configuration,
    config: Optional[SolverConfig] = None,
) -> Optional[List[Tuple[Transition, Configuration]]]:
    """
    A run from c into a target state, as (transition, configuration after) pairs.

    Depth-first with a memo of configurations known not to reach the target.

    Raises:
        BudgetExceeded: more than config.search_budget configurations visited
    """
    config = config or load_config()
    goals = frozenset(target)
    if c.state in goals:
        return []
    dead: Set[Configuration] = set()
    on_path: Set[Configuration] = {c}
    path: List[Tuple[Transition, Configuration]] = []
    stack: List[Iterator[Tuple[Transition, Configuration]]] = [successors(cs, c)]
    visited = 0
    while stack:
        advanced = False
        for t, nxt in stack[-1]:
            if nxt in dead or nxt in on_path:
                continue
            visited += 1
            if visited > config.search_budget:
                raise BudgetExceeded("pre* search", config.search_budget)
            path.append((t, nxt))
            if nxt.state in goals:
                return path
            on_path.add(nxt)
            stack.append(successors(cs, nxt))
            advanced = True
            break
        if not advanced:
            stack.pop()
            if path:
                _, done = path.pop()
                on_path.discard(done)
                dead.add(done)
    return None


def pre_star_membership(
    cs: CounterSystem,
    target: Iterable[int],
    c: Configuration,
    config: Optional[SolverConfig] = None,
) -> bool:
    return find_run(cs, target, c, config) is not None


def random_run(
    cs: CounterSystem,
    c: Configuration,
    rng: Optional[random.Random] = None,
    max_steps: int = 100_000,
) -> List[Configuration]:
    """A uniformly chosen legal run from c until no transition is enabled."""
    rng = rng or random.Random(0)
    run = [c]
    for _ in range(max_steps):
        options = list(successors(cs, run[-1]))
        if not options:
            break
        run.append(rng.choice(options)[1])
    return run


def reachable_values(cs: CounterSystem, c: Configuration, state: Optional[int] = None) -> Set[Configuration]:
    """All configurations reachable from c (restricted to one state if given)."""
    seen = {c}
    queue = deque([c])
    while queue:
        current = queue.popleft()
        for _, nxt in successors(cs, current):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    if state is None:
        return seen
    return {x for x in seen if x.state == state}


# =============================================================================
# Flatness
# =============================================================================

@dataclass(frozen=True)
class FlatnessReport:
    """
    flat: every node lies on at most one simple cycle.
    cycles: one transition list per nontrivial SCC (only when flat).
    tangled: SCCs carrying more than one simple cycle.
    """

    flat: bool
    cycles: Tuple[Tuple[Transition, ...], ...] = ()
    tangled: Tuple[FrozenSet[int], ...] = ()

    def __bool__(self) -> bool:
        return self.flat


def is_flat(cs: CounterSystem) -> FlatnessReport:
    """
    A strongly connected component is a single simple cycle exactly when it
    has no more internal transitions than nodes; anything denser carries a
    second cycle through some node.
    """
    graph = nx.DiGraph()
    graph.add_nodes_from(range(len(cs.states)))
    graph.add_edges_from((t.source, t.target) for t in cs.transitions)
    cycles = []
    tangled = []
    for scc in nx.strongly_connected_components(graph):
        internal = [t for t in cs.transitions if t.source in scc and t.target in scc]
        if not internal:
            continue
        if len(internal) > len(scc):
            tangled.append(frozenset(scc))
            continue
        by_source = {t.source: t for t in internal}
        start = min(scc)
        cycle = [by_source[start]]
        while cycle[-1].target != start:
            cycle.append(by_source[cycle[-1].target])
        cycles.append(tuple(cycle))
    cycles.sort(key=lambda cyc: cyc[0].source)
    if tangled:
        return FlatnessReport(False, (), tuple(tangled))
    return FlatnessReport(True, tuple(cycles), ())


def check_cycle(cycle: Sequence[Transition]) -> None:
    """
    Raises:
        NotACycle: empty, not closed, or revisiting a node
    """
    if not cycle:
        raise NotACycle("empty transition list")
    for a, b in zip(cycle, list(cycle[1:]) + [cycle[0]]):
        if a.target != b.source:
            raise NotACycle(f"transition {a.index} ends at {a.target}, next starts at {b.source}")
    sources = [t.source for t in cycle]
    if len(set(sources)) != len(sources):
        raise NotACycle("cycle revisits a state")


def cycle_shape(cycle: Sequence[Transition]) -> Optional[Variable]:
    """The unique y with every transition Sub(y, ·) or Dec(y); None otherwise."""
    check_cycle(cycle)
    reduced = set()
    for t in cycle:
        if t.relation.kind not in (RelationKind.SUB, RelationKind.DEC):
            return None
        reduced.add(t.relation.y)
    if len(reduced) != 1:
        return None
    return reduced.pop()
