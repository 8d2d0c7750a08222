"""
Nielsen rewriting on quadratic word equations.

Rules on an equation α·w1 = β·w2 (α, β the head symbols):

    ERASE_LHS(α)       (w1 = β w2)[ε/α]             α variable
    ERASE_RHS(β)       (α w1 = w2)[ε/β]             β variable
    P1                 w1 = w2                      α == β
    P2(β)              (w1 = β w2)[aβ/β]            α = a constant, β variable
    P3(α)              (α w1 = w2)[bα/α]            α variable, β = b constant
    P4_ALPHA(α, β)     (w1 = β w2)[αβ/β]            σ(β) = σ(α)·σ(β′)
    P4_BETA(α, β)      (α w1 = w2)[βα/α]            σ(α) = σ(β)·σ(α′)

In P2-P4 the head occurrence of the prefixed variable keeps denoting the
remaining tail; only its other occurrences are rewritten. Size never grows,
so the reachable graph is finite.

With regular constraints, erase rules require ε in every slice on the
erased variable, and P2-P4 split each slice x ∈ L(A_{p,q}) through a
guessed midpoint r. Constraints on variables that leave the equation are
dropped once their intersection is known to be nonempty.
"""

from __future__ import annotations

import itertools
import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
from graphviz import Digraph

from weq.automata import (
    RegularConstraint,
    constraints_abstraction,
    constraints_language,
    nfa_accepts_letters,
    nfa_word_of_length,
)
from weq.config import SolverConfig, load_config
from weq.core_terms import (
    EMPTY_WORD,
    TRIVIAL_EQUATION,
    Assignment,
    Constant,
    Equation,
    Signature,
    Variable,
    Word,
    is_quadratic,
    letters_word,
)
from weq.errors import BudgetExceeded, InconsistentGuess, NotQuadratic

logger = logging.getLogger(__name__)


# =============================================================================
# Labels and states
# =============================================================================

class RuleKind(Enum):
    ERASE_LHS = "erase-lhs"
    ERASE_RHS = "erase-rhs"
    P1 = "P1"
    P2 = "P2"
    P3 = "P3"
    P4_ALPHA = "P4-alpha"
    P4_BETA = "P4-beta"


@dataclass(frozen=True)
class RuleLabel:
    """
    A rule application.

    alpha is the lhs head variable the rule consumes or decrements, beta the
    rhs one; unused slots are None.
    """

    kind: RuleKind
    alpha: Optional[Variable] = None
    beta: Optional[Variable] = None

    @classmethod
    def erase_lhs(cls, x: Variable) -> "RuleLabel":
        return cls(RuleKind.ERASE_LHS, alpha=x)

    @classmethod
    def erase_rhs(cls, x: Variable) -> "RuleLabel":
        return cls(RuleKind.ERASE_RHS, beta=x)

    @classmethod
    def p1(cls) -> "RuleLabel":
        return cls(RuleKind.P1)

    @classmethod
    def p2(cls, beta: Variable) -> "RuleLabel":
        return cls(RuleKind.P2, beta=beta)

    @classmethod
    def p3(cls, alpha: Variable) -> "RuleLabel":
        return cls(RuleKind.P3, alpha=alpha)

    @classmethod
    def p4_alpha(cls, alpha: Variable, beta: Variable) -> "RuleLabel":
        return cls(RuleKind.P4_ALPHA, alpha=alpha, beta=beta)

    @classmethod
    def p4_beta(cls, alpha: Variable, beta: Variable) -> "RuleLabel":
        return cls(RuleKind.P4_BETA, alpha=alpha, beta=beta)

    @property
    def is_erase(self) -> bool:
        return self.kind in (RuleKind.ERASE_LHS, RuleKind.ERASE_RHS)

    @property
    def erased(self) -> Optional[Variable]:
        if self.kind is RuleKind.ERASE_LHS:
            return self.alpha
        if self.kind is RuleKind.ERASE_RHS:
            return self.beta
        return None

    def format(self, signature: Optional[Signature] = None) -> str:
        def name(v: Optional[Variable]) -> str:
            if v is None:
                return ""
            return signature.name(v) if signature else f"X{v.id}"

        args = [name(v) for v in (self.alpha, self.beta) if v is not None]
        return f"{self.kind.value}({','.join(args)})" if args else self.kind.value


@dataclass(frozen=True)
class RewriteState:
    """(E, S): an equation and the regular constraints on its variables."""

    equation: Equation
    constraints: FrozenSet[RegularConstraint] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "constraints", frozenset(self.constraints))
        present = set(self.equation.variables())
        stray = {c.variable for c in self.constraints} - present
        if stray:
            raise ValueError(f"constraints on variables outside the equation: {sorted(stray)}")

    @property
    def is_target(self) -> bool:
        return self.equation.is_trivial() and not self.constraints

    def constraints_on(self, var: Variable) -> FrozenSet[RegularConstraint]:
        return frozenset(c for c in self.constraints if c.variable == var)

    def format(self, signature: Optional[Signature] = None) -> str:
        text = self.equation.format(signature)
        if not self.constraints:
            return text
        parts = []
        for c in sorted(self.constraints, key=RegularConstraint.sort_key):
            name = signature.name(c.variable) if signature else f"X{c.variable.id}"
            parts.append(f"{name}∈A[{c.source},{c.target}]")
        return f"{text} | {', '.join(parts)}"


TARGET_STATE = RewriteState(TRIVIAL_EQUATION, frozenset())


def make_state(e: Equation, constraints: Iterable[RegularConstraint] = ()) -> RewriteState:
    """Root state; constraints on variables absent from e are not allowed here."""
    return RewriteState(e, frozenset(constraints))


@dataclass(frozen=True)
class RewriteEdge:
    """
    One ⇒-step.

    post_constraints is S′ before vanished variables are pruned; the counter
    system derives post-guards from it.
    """

    source: RewriteState
    rule: RuleLabel
    target: RewriteState
    midpoints: Tuple[int, ...] = ()
    post_constraints: FrozenSet[RegularConstraint] = frozenset()


# =============================================================================
# Successors
# =============================================================================

def _subst(w: Word, var: Variable, image: Sequence) -> Word:
    return w.substitute(var, Word(tuple(image)))


def _splits(
    constraints: FrozenSet[RegularConstraint],
    var: Variable,
    prefix: Optional[Variable],
    letter: Optional[int],
) -> List[Tuple[Tuple[int, ...], FrozenSet[RegularConstraint]]]:
    """
    All ways of splitting the constraints on var after removing a prefix.

    The prefix is a constant letter (checked through the transition) or a
    variable (which receives the slice up to the guessed midpoint).
    Returns (midpoints, S′) pairs with S′ unpruned.
    """
    on_var = sorted((c for c in constraints if c.variable == var), key=RegularConstraint.sort_key)
    rest = frozenset(c for c in constraints if c.variable != var)
    options: List[List[Tuple[int, List[RegularConstraint]]]] = []
    for c in on_var:
        aut = c.automaton
        choices: List[Tuple[int, List[RegularConstraint]]] = []
        if letter is not None:
            for r in sorted(aut.successors(c.source, letter)):
                choices.append((r, [c.with_states(r, c.target)]))
        else:
            for r in aut.states:
                # Skip midpoints that leave either slice empty.
                if not _connects(aut, c.source, r) or not _connects(aut, r, c.target):
                    continue
                choices.append((r, [
                    RegularConstraint(prefix, aut, c.source, r),
                    c.with_states(r, c.target),
                ]))
        if not choices:
            return []
        options.append(choices)
    result = []
    for combo in itertools.product(*options):
        midpoints = tuple(r for r, _ in combo)
        new = set(rest)
        for _, cs in combo:
            new.update(cs)
        result.append((midpoints, frozenset(new)))
    return result


def _connects(aut, p: int, q: int) -> bool:
    if p == q:
        return True
    return nx.has_path(_reach_graph(aut), p, q)


@lru_cache(maxsize=1024)
def _reach_graph(aut) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_nodes_from(aut.states)
    graph.add_edges_from((p, q) for p, _, q in aut.transitions)
    return graph


def _finish(
    source: RewriteState,
    rule: RuleLabel,
    equation: Equation,
    post: FrozenSet[RegularConstraint],
    midpoints: Tuple[int, ...] = (),
) -> Optional[RewriteEdge]:
    """Prune constraints on vanished variables; None if one of them is unsatisfiable."""
    present = set(equation.variables())
    erased = rule.erased
    kept = set()
    vanished: Dict[Variable, List[RegularConstraint]] = {}
    for c in post:
        if c.variable in present:
            kept.add(c)
        elif c.variable != erased:
            vanished.setdefault(c.variable, []).append(c)
    for cs in vanished.values():
        if constraints_abstraction(cs).is_empty:
            return None
    return RewriteEdge(source, rule, RewriteState(equation, frozenset(kept)), midpoints, post)


def successors(s: RewriteState) -> List[RewriteEdge]:
    """All one-step successors of s; dead ends give []."""
    lhs, rhs = s.equation.lhs, s.equation.rhs
    edges: List[Optional[RewriteEdge]] = []
    S = s.constraints

    def erase(var: Variable, rule: RuleLabel) -> None:
        if not all(c.accepts_epsilon() for c in S if c.variable == var):
            return
        e2 = s.equation.substitute(var, EMPTY_WORD)
        post = frozenset(c for c in S if c.variable != var)
        edges.append(_finish(s, rule, e2, post))

    if not lhs and not rhs:
        return []
    if not lhs or not rhs:
        head = rhs.head if not lhs else lhs.head
        if isinstance(head, Variable):
            erase(head, RuleLabel.erase_rhs(head) if not lhs else RuleLabel.erase_lhs(head))
        return [e for e in edges if e is not None]

    alpha, beta = lhs.head, rhs.head
    w1, w2 = lhs.tail, rhs.tail

    if isinstance(alpha, Variable):
        erase(alpha, RuleLabel.erase_lhs(alpha))
    if isinstance(beta, Variable) and beta != alpha:
        erase(beta, RuleLabel.erase_rhs(beta))

    if alpha == beta:
        edges.append(_finish(s, RuleLabel.p1(), Equation(w1, w2), S))
    elif isinstance(alpha, Constant) and isinstance(beta, Variable):
        e2 = Equation(_subst(w1, beta, (alpha, beta)), Word((beta,)) + _subst(w2, beta, (alpha, beta)))
        for mids, post in _splits(S, beta, None, alpha.letter):
            edges.append(_finish(s, RuleLabel.p2(beta), e2, post, mids))
    elif isinstance(alpha, Variable) and isinstance(beta, Constant):
        e2 = Equation(Word((alpha,)) + _subst(w1, alpha, (beta, alpha)), _subst(w2, alpha, (beta, alpha)))
        for mids, post in _splits(S, alpha, None, beta.letter):
            edges.append(_finish(s, RuleLabel.p3(alpha), e2, post, mids))
    elif isinstance(alpha, Variable) and isinstance(beta, Variable):
        e2 = Equation(_subst(w1, beta, (alpha, beta)), Word((beta,)) + _subst(w2, beta, (alpha, beta)))
        for mids, post in _splits(S, beta, alpha, None):
            edges.append(_finish(s, RuleLabel.p4_alpha(alpha, beta), e2, post, mids))
        e2 = Equation(Word((alpha,)) + _subst(w1, alpha, (beta, alpha)), _subst(w2, alpha, (beta, alpha)))
        for mids, post in _splits(S, alpha, beta, None):
            edges.append(_finish(s, RuleLabel.p4_beta(alpha, beta), e2, post, mids))
    # Two distinct constants: no rule.
    return [e for e in edges if e is not None]


# =============================================================================
# Graph
# =============================================================================

@dataclass
class RewriteGraph:
    """
    Reachable rewrite graph from a root.

    Nodes are numbered in discovery order; node 0 is the root.
    """

    root: RewriteState
    nodes: List[RewriteState] = field(default_factory=list)
    edges: List[RewriteEdge] = field(default_factory=list)
    _index: Dict[RewriteState, int] = field(default_factory=dict, repr=False)
    _out: Dict[RewriteState, List[RewriteEdge]] = field(default_factory=dict, repr=False)

    def index(self, state: RewriteState) -> int:
        return self._index[state]

    def __contains__(self, state: object) -> bool:
        return state in self._index

    def __len__(self) -> int:
        return len(self.nodes)

    def out_edges(self, state: RewriteState) -> List[RewriteEdge]:
        return self._out.get(state, [])

    @property
    def target(self) -> Optional[RewriteState]:
        return TARGET_STATE if TARGET_STATE in self._index else None

    def to_networkx(self) -> nx.MultiDiGraph:
        g = nx.MultiDiGraph()
        g.add_nodes_from(range(len(self.nodes)))
        for i, e in enumerate(self.edges):
            g.add_edge(self._index[e.source], self._index[e.target], key=i, edge=e)
        return g

    def path_to_target(self) -> Optional[List[RewriteEdge]]:
        """Shortest edge path from root to (ε=ε, ∅), or None."""
        if self.target is None:
            return None
        goal = self._index[TARGET_STATE]
        back: Dict[int, Optional[RewriteEdge]] = {0: None}
        queue = deque([0])
        while queue:
            i = queue.popleft()
            if i == goal:
                break
            for e in self.out_edges(self.nodes[i]):
                j = self._index[e.target]
                if j not in back:
                    back[j] = e
                    queue.append(j)
        if goal not in back:
            return None
        path: List[RewriteEdge] = []
        node = goal
        while back[node] is not None:
            e = back[node]
            path.append(e)
            node = self._index[e.source]
        path.reverse()
        return path

    def to_dot(self, signature: Optional[Signature] = None) -> str:
        dot = Digraph()
        for i, s in enumerate(self.nodes):
            shape = "doublecircle" if s.is_target else "box"
            dot.node(name=f"n{i}", label=s.format(signature), shape=shape)
        for e in self.edges:
            dot.edge(f"n{self._index[e.source]}", f"n{self._index[e.target]}", e.rule.format(signature))
        return dot.source


def build_graph(root: RewriteState, config: Optional[SolverConfig] = None) -> RewriteGraph:
    """
    Close root under successors.

    Raises:
        NotQuadratic: root equation has a variable occurring 3+ times
        BudgetExceeded: more than config.node_budget states
    """
    if not is_quadratic(root.equation):
        raise NotQuadratic(f"equation is not quadratic: {root.equation.format()}")
    config = config or load_config()
    graph = RewriteGraph(root)
    graph.nodes.append(root)
    graph._index[root] = 0
    queue = deque([root])
    while queue:
        s = queue.popleft()
        out = successors(s)
        graph._out[s] = out
        for e in out:
            graph.edges.append(e)
            if e.target not in graph._index:
                if len(graph.nodes) >= config.node_budget:
                    raise BudgetExceeded("rewrite graph", config.node_budget)
                graph._index[e.target] = len(graph.nodes)
                graph.nodes.append(e.target)
                queue.append(e.target)
    logger.debug("rewrite graph: %d nodes, %d edges", len(graph.nodes), len(graph.edges))
    return graph


def is_solvable(root: RewriteState, config: Optional[SolverConfig] = None) -> bool:
    graph = build_graph(root, config)
    if graph.target is None:
        return False
    return nx.has_path(graph.to_networkx(), 0, graph.index(TARGET_STATE))


def is_solvable_with_witness(
    root: RewriteState, config: Optional[SolverConfig] = None
) -> Optional[Assignment]:
    """One solution of root (over its variables), or None if unsolvable."""
    path = build_graph(root, config).path_to_target()
    if path is None:
        return None
    return witness_from_path(path)


# =============================================================================
# Annotated rewriting
# =============================================================================

def _drop_prefix(word: Word, prefix: Word, rule: RuleLabel) -> Word:
    if len(prefix) == 0 or word[: len(prefix)] != prefix:
        raise InconsistentGuess(f"{rule.format()}: image does not start with the removed prefix")
    return word[len(prefix):]


def annotated_step(s: RewriteState, sigma: Assignment, edge: RewriteEdge) -> Assignment:
    """
    σ′ for edge.target given σ for s.

    Raises:
        InconsistentGuess: σ contradicts the rule (e.g. erasing a nonempty
            variable) or the midpoint guess recorded on the edge
    """
    rule = edge.rule
    images = dict(sigma.images)
    lhs, rhs = s.equation.lhs, s.equation.rhs
    if rule.is_erase:
        x = rule.erased
        if len(sigma[x]):
            raise InconsistentGuess(f"{rule.format()}: variable is not empty")
        images.pop(x, None)
    elif rule.kind is RuleKind.P2:
        images[rule.beta] = _drop_prefix(sigma[rule.beta], Word((lhs.head,)), rule)
    elif rule.kind is RuleKind.P3:
        images[rule.alpha] = _drop_prefix(sigma[rule.alpha], Word((rhs.head,)), rule)
    elif rule.kind is RuleKind.P4_ALPHA:
        images[rule.beta] = _drop_prefix(sigma[rule.beta], sigma[rule.alpha], rule)
    elif rule.kind is RuleKind.P4_BETA:
        images[rule.alpha] = _drop_prefix(sigma[rule.alpha], sigma[rule.beta], rule)

    result = Assignment(images).restrict(edge.target.equation.variables())
    for c in edge.post_constraints:
        if c.variable in images and not nfa_accepts_letters(c.language(), images[c.variable].letters()):
            raise InconsistentGuess(f"{rule.format()}: midpoint guess {edge.midpoints} rejected")
    return result


def _preferred_kind(s: RewriteState, sigma: Assignment) -> Optional[RuleKind]:
    lhs, rhs = s.equation.lhs, s.equation.rhs
    alpha, beta = lhs.head, rhs.head
    if isinstance(alpha, Variable) and not len(sigma[alpha]):
        return RuleKind.ERASE_LHS
    if isinstance(beta, Variable) and not len(sigma[beta]):
        return RuleKind.ERASE_RHS
    if alpha is None or beta is None:
        return None
    if alpha == beta:
        return RuleKind.P1
    if isinstance(alpha, Constant) and isinstance(beta, Constant):
        return None
    if isinstance(alpha, Constant):
        return RuleKind.P2
    if isinstance(beta, Constant):
        return RuleKind.P3
    if len(sigma[alpha]) <= len(sigma[beta]):
        return RuleKind.P4_ALPHA
    return RuleKind.P4_BETA


def trace_solution(root: RewriteState, sigma: Assignment) -> Optional[List[Tuple[RewriteEdge, Assignment]]]:
    """
    Follow annotated rewriting from (root, σ) to (ε=ε, ∅).

    The rule at each step is the one σ selects; the midpoint guess is the
    one σ is consistent with. Returns the (edge, σ′) steps, or None when σ
    gets stuck (it was not a solution).
    """
    steps: List[Tuple[RewriteEdge, Assignment]] = []
    state = root
    current = sigma.restrict(root.equation.variables())
    while not state.is_target:
        try:
            kind = _preferred_kind(state, current)
        except KeyError:
            return None
        if kind is None:
            return None
        for edge in successors(state):
            if edge.rule.kind is not kind:
                continue
            try:
                nxt = annotated_step(state, current, edge)
            except InconsistentGuess:
                continue
            steps.append((edge, nxt))
            state, current = edge.target, nxt
            break
        else:
            return None
    return steps


def witness_from_path(
    path: Sequence[RewriteEdge],
    lengths: Optional[Sequence[Dict[Variable, int]]] = None,
) -> Assignment:
    """
    Replay a root→target path backwards into a solution of the root.

    lengths[i], when given, fixes the lengths at path[i].source; variables
    that leave the equation then get a word of exactly that length.
    """
    sigma = Assignment({})
    for i in range(len(path) - 1, -1, -1):
        edge = path[i]
        src, rule = edge.source, edge.rule
        images = dict(sigma.images)
        lhs, rhs = src.equation.lhs, src.equation.rhs
        present = set(edge.target.equation.variables())
        for var in src.equation.variables():
            if var in present or var == rule.erased:
                continue
            want = lengths[i][var] if lengths is not None else None
            images[var] = word_for(var, edge.post_constraints, want)
        if rule.is_erase:
            images[rule.erased] = EMPTY_WORD
        elif rule.kind is RuleKind.P2:
            images[rule.beta] = Word((lhs.head,)) + images[rule.beta]
        elif rule.kind is RuleKind.P3:
            images[rule.alpha] = Word((rhs.head,)) + images[rule.alpha]
        elif rule.kind is RuleKind.P4_ALPHA:
            images[rule.beta] = images[rule.alpha] + images[rule.beta]
        elif rule.kind is RuleKind.P4_BETA:
            images[rule.alpha] = images[rule.beta] + images[rule.alpha]
        sigma = Assignment(images).restrict(src.equation.variables())
    return sigma


def word_for(var: Variable, constraints: Iterable[RegularConstraint], length: Optional[int]) -> Word:
    """A word satisfying the constraints on var: shortest, or of the given length."""
    on_var = [c for c in constraints if c.variable == var]
    language = constraints_language(on_var)
    if language is None:
        return letters_word([0] * (length or 0))
    if length is None:
        u = constraints_abstraction(on_var)
        length = min(u.offsets | u.periodic)
    letters = nfa_word_of_length(language, length)
    if letters is None:
        raise InconsistentGuess(f"no word of length {length} for X{var.id}")
    return letters_word(letters)
