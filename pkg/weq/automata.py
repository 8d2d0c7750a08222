"""
Automata: NFAs, regular constraints and unary length abstractions
==================================================================

An Nfa has exactly one initial and one final state and no ε-moves, so a
slice A_{p,q} accepts ε iff p == q.

Length abstraction
------------------
Projecting every letter away leaves a unary automaton. The sequence of
reachable state sets S_0, S_1, ... (S_{n+1} = post(S_n)) is deterministic
and eventually periodic, so the first repeated set gives an exact
threshold t and period b:

    n ∈ Len(L)  ⇔  final ∈ S_n

The raw (t, b) is then shrunk to the least period and least threshold of
the membership bit sequence, and returned as

    A  = {n < t : final ∈ S_n}
    A′ = {t <= n < t + b : final ∈ S_n}

The magnitude of A ∪ A′ ∪ {b} is checked against (states + 1)²; larger
values raise BoundViolation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

import networkx as nx
from graphviz import Digraph

from weq.core_terms import Variable, Word
from weq.errors import BadState, BoundViolation, EmptyList

Transition = Tuple[int, int, int]

# Subset-sequence iterations before giving up on a period
MAX_SUBSET_STEPS = 1 << 16


# =============================================================================
# Types
# =============================================================================

@dataclass(frozen=True)
class Nfa:
    """
    Nondeterministic finite automaton over letters 0..alphabet_size-1.

    Attributes:
        alphabet_size: number of letters
        num_states: states are 0..num_states-1
        transitions: set of (source, letter, target)
        initial: initial state
        final: final state
    """

    alphabet_size: int
    num_states: int
    transitions: FrozenSet[Transition]
    initial: int = 0
    final: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "transitions", frozenset(self.transitions))
        if self.num_states < 1:
            raise BadState(f"an NFA needs at least one state, got {self.num_states}")
        if self.alphabet_size < 0:
            raise ValueError(f"alphabet size must be >= 0, got {self.alphabet_size}")
        for state in (self.initial, self.final):
            self._check_state(state)
        for p, a, q in self.transitions:
            self._check_state(p)
            self._check_state(q)
            if not 0 <= a < self.alphabet_size:
                raise ValueError(f"letter {a} outside alphabet of size {self.alphabet_size}")

    def _check_state(self, state: int) -> None:
        if not 0 <= state < self.num_states:
            raise BadState(f"state {state} out of range [0, {self.num_states})")

    @property
    def states(self) -> range:
        return range(self.num_states)

    def successors(self, state: int, letter: int) -> FrozenSet[int]:
        return _successor_table(self).get((state, letter), frozenset())

    def graph(self) -> nx.MultiDiGraph:
        """Transition graph, one edge per transition, letter as key."""
        g = nx.MultiDiGraph()
        g.add_nodes_from(self.states)
        for p, a, q in sorted(self.transitions):
            g.add_edge(p, q, key=a)
        return g


@lru_cache(maxsize=1024)
def _successor_table(aut: Nfa) -> Dict[Tuple[int, int], FrozenSet[int]]:
    table: Dict[Tuple[int, int], set] = {}
    for p, a, q in aut.transitions:
        table.setdefault((p, a), set()).add(q)
    return {k: frozenset(v) for k, v in table.items()}


def nfa_from_transitions(
    alphabet_size: int,
    transitions: Iterable[Transition],
    initial: int = 0,
    final: int = 0,
    num_states: Optional[int] = None,
) -> Nfa:
    """Build an Nfa, inferring the state count from the transitions if not given."""
    transitions = frozenset(transitions)
    if num_states is None:
        mentioned = [initial, final] + [p for p, _, _ in transitions] + [q for _, _, q in transitions]
        num_states = max(mentioned) + 1
    return Nfa(alphabet_size, num_states, transitions, initial, final)


@dataclass(frozen=True)
class RegularConstraint:
    """x ∈ L(A_{source,target})."""

    variable: Variable
    automaton: Nfa
    source: int
    target: int

    def __post_init__(self) -> None:
        self.automaton._check_state(self.source)
        self.automaton._check_state(self.target)

    def with_states(self, source: int, target: int) -> "RegularConstraint":
        return RegularConstraint(self.variable, self.automaton, source, target)

    def accepts_epsilon(self) -> bool:
        return accepts_epsilon(self.automaton, self.source, self.target)

    def language(self) -> Nfa:
        return nfa_slice(self.automaton, self.source, self.target)

    def sort_key(self) -> Tuple[int, int, int, int]:
        return (self.variable.id, self.source, self.target, self.automaton.num_states)


@dataclass(frozen=True)
class UnarySemilinear:
    """
    A ∪ (A′ + bℕ).

    b is always stored (>= 1); a finite set has empty A′.
    """

    offsets: FrozenSet[int] = frozenset()
    periodic: FrozenSet[int] = frozenset()
    period: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "offsets", frozenset(self.offsets))
        object.__setattr__(self, "periodic", frozenset(self.periodic))
        if self.period < 1:
            raise ValueError(f"period must be >= 1, got {self.period}")
        if any(n < 0 for n in self.offsets | self.periodic):
            raise ValueError("offsets must be natural numbers")

    @classmethod
    def naturals(cls) -> "UnarySemilinear":
        return cls(frozenset(), frozenset({0}), 1)

    @classmethod
    def at_least(cls, n: int) -> "UnarySemilinear":
        return cls(frozenset(), frozenset({n}), 1)

    @classmethod
    def finite(cls, values: Iterable[int]) -> "UnarySemilinear":
        return cls(frozenset(values), frozenset(), 1)

    def __contains__(self, n: int) -> bool:
        return semilinear_contains(self, n)

    @property
    def is_empty(self) -> bool:
        return not self.offsets and not self.periodic

    @property
    def is_finite(self) -> bool:
        return not self.periodic

    @property
    def is_everything(self) -> bool:
        return all(semilinear_contains(self, n) for n in range(self.horizon + 1))

    @property
    def max_offset(self) -> int:
        """max(A ∪ A′), 0 when both are empty."""
        return max(self.offsets | self.periodic, default=0)

    @property
    def horizon(self) -> int:
        """Membership is b-periodic for every n >= horizon - b."""
        return self.max_offset + self.period

    def members_upto(self, bound: int) -> List[int]:
        return [n for n in range(bound + 1) if semilinear_contains(self, n)]

    def format(self) -> str:
        parts = [str(sorted(self.offsets))]
        if self.periodic:
            parts.append(f"{sorted(self.periodic)}+{self.period}N")
        return " ∪ ".join(parts)


# =============================================================================
# Operations
# =============================================================================

def nfa_slice(aut: Nfa, p: int, q: int) -> Nfa:
    """A_{p,q}: same transitions, initial p, final q."""
    aut._check_state(p)
    aut._check_state(q)
    return Nfa(aut.alphabet_size, aut.num_states, aut.transitions, p, q)


def accepts_epsilon(aut: Nfa, p: Optional[int] = None, q: Optional[int] = None) -> bool:
    p = aut.initial if p is None else p
    q = aut.final if q is None else q
    return p == q


def nfa_states_after(aut: Nfa, states: Iterable[int], letters: Iterable[int]) -> FrozenSet[int]:
    """Subset simulation of a letter sequence from a state set."""
    current = frozenset(states)
    for a in letters:
        current = frozenset(q for p in current for q in aut.successors(p, a))
        if not current:
            break
    return current


def nfa_accepts(aut: Nfa, w: Word) -> bool:
    return aut.final in nfa_states_after(aut, {aut.initial}, w.letters())


def nfa_accepts_letters(aut: Nfa, letters: Sequence[int]) -> bool:
    return aut.final in nfa_states_after(aut, {aut.initial}, letters)


def nfa_intersection(auts: Sequence[Nfa]) -> Nfa:
    """
    Product automaton of all operands.

    Only product states reachable from the initial tuple are built; the
    final tuple is always present so the result is well formed.
    """
    if not auts:
        raise EmptyList("nfa_intersection needs at least one automaton")
    if len(auts) == 1:
        return auts[0]
    sizes = {a.alphabet_size for a in auts}
    if len(sizes) != 1:
        raise ValueError(f"alphabet sizes differ: {sorted(sizes)}")
    alphabet_size = sizes.pop()

    initial = tuple(a.initial for a in auts)
    final = tuple(a.final for a in auts)
    index: Dict[Tuple[int, ...], int] = {initial: 0}
    queue = [initial]
    transitions = set()
    while queue:
        current = queue.pop()
        for letter in range(alphabet_size):
            choices = [a.successors(p, letter) for a, p in zip(auts, current)]
            if any(not c for c in choices):
                continue
            for target in _product(choices):
                if target not in index:
                    index[target] = len(index)
                    queue.append(target)
                transitions.add((index[current], letter, index[target]))
    if final not in index:
        index[final] = len(index)
    return Nfa(alphabet_size, len(index), frozenset(transitions), 0, index[final])


def _product(choices: Sequence[FrozenSet[int]]) -> Iterable[Tuple[int, ...]]:
    if not choices:
        yield ()
        return
    for head in sorted(choices[0]):
        for rest in _product(choices[1:]):
            yield (head,) + rest


def is_one_weak(aut: Nfa) -> bool:
    """Every SCC of the transition graph is a single state."""
    graph = nx.DiGraph()
    graph.add_nodes_from(aut.states)
    graph.add_edges_from((p, q) for p, _, q in aut.transitions)
    return all(len(scc) == 1 for scc in nx.strongly_connected_components(graph))


def quadratic_bound(num_states: int) -> int:
    return (num_states + 1) ** 2


@lru_cache(maxsize=4096)
def length_abstraction(aut: Nfa) -> UnarySemilinear:
    """
    Len(L(aut)) as A ∪ (A′ + bℕ).

    Raises:
        BoundViolation: the least representation exceeds (states + 1)²
            or the subset sequence does not repeat within MAX_SUBSET_STEPS
    """
    succ: Dict[int, set] = {}
    for p, _, q in aut.transitions:
        succ.setdefault(p, set()).add(q)

    seen: Dict[FrozenSet[int], int] = {}
    bits: List[bool] = []
    current = frozenset({aut.initial})
    while current not in seen:
        if len(bits) > MAX_SUBSET_STEPS:
            raise BoundViolation(f"no length period within {MAX_SUBSET_STEPS} steps")
        seen[current] = len(bits)
        bits.append(aut.final in current)
        current = frozenset(q for p in current for q in succ.get(p, ()))
    threshold = seen[current]
    period = len(bits) - threshold
    cycle = bits[threshold:]

    if not any(cycle):
        # Finite language; everything from threshold on is rejected.
        result = UnarySemilinear(frozenset(n for n, b in enumerate(bits) if b), frozenset(), 1)
    else:
        period = _least_period(cycle)
        cycle = cycle[:period]
        while threshold > 0 and bits[threshold - 1] == cycle[-1]:
            threshold -= 1
            cycle = [cycle[-1]] + cycle[:-1]
        result = UnarySemilinear(
            frozenset(n for n in range(threshold) if bits[n]),
            frozenset(threshold + i for i, b in enumerate(cycle) if b),
            period,
        )

    bound = quadratic_bound(aut.num_states)
    if result.max_offset > bound or result.period > bound:
        raise BoundViolation(
            f"length abstraction {result.format()} exceeds bound {bound} "
            f"for {aut.num_states} states"
        )
    return result


def _least_period(cycle: Sequence[bool]) -> int:
    n = len(cycle)
    for d in range(1, n + 1):
        if n % d == 0 and all(cycle[i] == cycle[i % d] for i in range(n)):
            return d
    return n


def semilinear_contains(u: UnarySemilinear, n: int) -> bool:
    if n < 0:
        return False
    if n in u.offsets:
        return True
    return any(n >= a and (n - a) % u.period == 0 for a in u.periodic)


def constraints_language(constraints: Iterable[RegularConstraint]) -> Optional[Nfa]:
    """Intersection of the slices of all constraints; None for no constraints."""
    slices = [c.language() for c in sorted(constraints, key=RegularConstraint.sort_key)]
    if not slices:
        return None
    return nfa_intersection(slices)


def constraints_abstraction(constraints: Iterable[RegularConstraint]) -> UnarySemilinear:
    """Length abstraction of the conjunction of constraints (ℕ when empty)."""
    language = constraints_language(constraints)
    if language is None:
        return UnarySemilinear.naturals()
    return length_abstraction(language)


def nfa_word_of_length(aut: Nfa, n: int) -> Optional[Tuple[int, ...]]:
    """
    Lexicographically least accepted word of length n, or None.
    """
    # alive[k]: states that reach final in exactly k steps
    alive: List[FrozenSet[int]] = [frozenset({aut.final})]
    pred: Dict[int, set] = {}
    for p, _, q in aut.transitions:
        pred.setdefault(q, set()).add(p)
    for _ in range(n):
        alive.append(frozenset(p for q in alive[-1] for p in pred.get(q, ())))
    if aut.initial not in alive[n]:
        return None
    word: List[int] = []
    current = frozenset({aut.initial})
    for remaining in range(n, 0, -1):
        for letter in range(aut.alphabet_size):
            nxt = frozenset(q for p in current for q in aut.successors(p, letter)) & alive[remaining - 1]
            if nxt:
                word.append(letter)
                current = nxt
                break
    return tuple(word)


def to_dot(aut: Nfa, letter_names: Optional[Sequence[str]] = None) -> str:
    """DOT source; the initial state is marked with an arrow from a point node."""
    dot = Digraph()
    dot.node("start", label="", shape="point")
    for state in aut.states:
        shape = "doublecircle" if state == aut.final else "circle"
        dot.node(name=f"q{state}", label=f"q{state}", shape=shape)
    dot.edge("start", f"q{aut.initial}")
    for p, a, q in sorted(aut.transitions):
        label = letter_names[a] if letter_names else str(a)
        dot.edge(f"q{p}", f"q{q}", label)
    return dot.source
