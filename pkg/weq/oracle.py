"""
Brute-force ground truth.

For a fixed length vector, σ(L) = σ(R) is a set of position equalities:
position k of σ(L) equals position k of σ(R). Union-find over variable
positions and constant letters gives the classes; a class holding two
different letters has no solution. The remaining classes are filled by
backtracking over the alphabet, pruning with the NFA state sets of
constrained variables.
"""

from __future__ import annotations

import itertools
import logging
from typing import Dict, Hashable, Iterator, List, Optional, Set, Tuple

from weq.automata import nfa_states_after
from weq.config import SolverConfig, load_config
from weq.core_terms import Assignment, LengthVector, Variable, letters_word
from weq.errors import BudgetExceeded, UnknownName
from weq.pad_logic import (
    PadFormula,
    Exists,
    conj,
    disj,
    divides,
    eq,
    fresh,
    geq,
    leq,
    var,
)
from weq.solver import Problem

logger = logging.getLogger(__name__)

Node = Hashable


class _UnionFind:
    def __init__(self) -> None:
        self.parent: Dict[Node, Node] = {}

    def find(self, x: Node) -> Node:
        self.parent.setdefault(x, x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: Node, b: Node) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb


def _expand(side, lengths: LengthVector) -> List[Node]:
    out: List[Node] = []
    for s in side:
        if isinstance(s, Variable):
            out.extend((s, i) for i in range(lengths[s]))
        else:
            out.append(("letter", s.letter))
    return out


def _classes(p: Problem, lengths: LengthVector) -> Optional[Tuple[_UnionFind, Dict[Node, int]]]:
    """Position classes and the letters they are forced to; None on a clash."""
    left = _expand(p.equation.lhs, lengths)
    right = _expand(p.equation.rhs, lengths)
    if len(left) != len(right):
        return None
    uf = _UnionFind()
    for x in p.variables:
        for i in range(lengths[x]):
            uf.find((x, i))
    for a, b in zip(left, right):
        uf.union(a, b)
    forced: Dict[Node, int] = {}
    for node in list(uf.parent):
        if isinstance(node, tuple) and node[0] == "letter":
            root = uf.find(node)
            if forced.setdefault(root, node[1]) != node[1]:
                return None
    return uf, forced


def _search(
    p: Problem,
    lengths: LengthVector,
    exhaustive: bool,
    config: SolverConfig,
) -> Iterator[Assignment]:
    found = _classes(p, lengths)
    if found is None:
        return
    uf, forced = found
    positions = [(x, i) for x in p.variables for i in range(lengths[x])]
    constrained = {c.variable for c in p.regular_constraints}
    # Classes touching a constrained variable need every letter tried.
    relevant = {uf.find((x, i)) for x, i in positions if x in constrained}
    constraints = {x: p.constraints_on(x) for x in p.variables}
    alphabet = range(p.signature.alphabet_size)
    budget = [config.oracle_budget]

    assigned: Dict[Node, int] = dict(forced)
    states: Dict[Variable, List] = {
        x: [frozenset({c.source}) for c in constraints[x]] for x in p.variables
    }

    def descend(k: int) -> Iterator[None]:
        budget[0] -= 1
        if budget[0] < 0:
            raise BudgetExceeded("oracle", config.oracle_budget)
        if k == len(positions):
            yield None
            return
        x, i = positions[k]
        root = uf.find((x, i))
        if root in assigned:
            choices = [assigned[root]]
            fresh_class = False
        else:
            choices = list(alphabet) if (exhaustive or root in relevant) else [0]
            fresh_class = True
        saved = states[x]
        for letter in choices:
            if fresh_class:
                assigned[root] = letter
            nxt = [nfa_states_after(c.automaton, s, (letter,)) for c, s in zip(constraints[x], saved)]
            ok = all(nxt)
            if ok and i == lengths[x] - 1:
                ok = all(c.target in s for c, s in zip(constraints[x], nxt))
            if ok:
                states[x] = nxt
                yield from descend(k + 1)
                states[x] = saved
            if fresh_class:
                del assigned[root]

    # Zero-length variables must accept ε.
    for x in p.variables:
        if lengths[x] == 0 and any(c.source != c.target for c in constraints[x]):
            return
    if not alphabet and positions:
        return

    for _ in descend(0):
        images = {}
        for x in p.variables:
            images[x] = letters_word(assigned[uf.find((x, i))] for i in range(lengths[x]))
        yield Assignment(images)


def find_solution(
    p: Problem, lengths: LengthVector, config: Optional[SolverConfig] = None
) -> Optional[Assignment]:
    """One solution with exactly these lengths, or None."""
    config = config or load_config()
    return next(_search(p, lengths, exhaustive=False, config=config), None)


def iter_solutions(
    p: Problem, lengths: LengthVector, config: Optional[SolverConfig] = None
) -> Iterator[Assignment]:
    """Every solution with exactly these lengths."""
    config = config or load_config()
    return _search(p, lengths, exhaustive=True, config=config)


def membership(p: Problem, lengths: LengthVector, config: Optional[SolverConfig] = None) -> bool:
    return find_solution(p, lengths, config) is not None


def _side_length(side, lengths: LengthVector) -> int:
    return sum(lengths[s] if isinstance(s, Variable) else 1 for s in side)


def enumerate_solutions(
    p: Problem, max_len: int, config: Optional[SolverConfig] = None
) -> Set[LengthVector]:
    """
    Length vectors of all solutions with every |σ(x)| <= max_len.

    Raises:
        BudgetExceeded: one length vector needed more than oracle_budget steps
    """
    config = config or load_config()
    found: Set[LengthVector] = set()
    for values in itertools.product(range(max_len + 1), repeat=len(p.variables)):
        v = LengthVector.of(dict(zip(p.variables, values)))
        if _side_length(p.equation.lhs, v) != _side_length(p.equation.rhs, v):
            continue
        if membership(p, v, config):
            found.add(v)
    logger.debug("oracle: %d length vectors up to %d", len(found), max_len)
    return found


# =============================================================================
# Closed-form characterizations
# =============================================================================

def _swap_ab() -> PadFormula:
    """Lengths (x, y) of solutions of x a b y = y a b x."""
    x, y = var("x"), var("y")
    k1, k2, d = fresh("k"), fresh("k"), fresh("d")
    return disj(
        eq(x, y),
        conj(eq(x, 0), Exists(k1, eq(y, var(k1) * 2))),
        conj(eq(y, 0), Exists(k2, eq(x, var(k2) * 2))),
        conj(
            geq(x, 1),
            geq(y, 1),
            Exists(d, conj(geq(var(d), 2), leq(var(d), x + 2), divides(var(d), x + 2), divides(var(d), y + 2))),
        ),
    )


def _shift_ab() -> PadFormula:
    """Lengths (x, y, z) of solutions of x a b y = y z."""
    return eq(var("z"), var("x") + 2)


def _example1() -> PadFormula:
    """Lengths (x, y, z) of solutions of y a b z = z x: |x| = |y| + 2, z free."""
    return eq(var("x"), var("y") + 2)


def _marked() -> PadFormula:
    """Lengths (x, y, z) of x z = z y with x, y ∈ #(a+b)*."""
    x, y, z = var("x"), var("y"), var("z")
    return conj(eq(x, y), geq(x, 1), divides(x, z))


_REFERENCES = {
    "lemma1": _swap_ab,
    "example1": _example1,
    "prop4": _marked,
    "shift_ab": _shift_ab,
}

# descriptive names for the canonical keys
_ALIASES = {
    "swap_ab": "lemma1",
    "marked": "prop4",
}


def reference_formula(name: str) -> PadFormula:
    """
    Closed-form length characterization by name.

    Raises:
        UnknownName: not a registered key or alias
    """
    try:
        return _REFERENCES[_ALIASES.get(name, name)]()
    except KeyError:
        raise UnknownName(f"unknown reference formula {name!r}") from None


def reference_names() -> List[str]:
    return sorted([*_REFERENCES, *_ALIASES])
