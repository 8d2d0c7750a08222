"""
Seeded generators for the randomized suites.

Everything takes a random.Random so a failing case is reproducible from
its seed alone.
"""

import random
from typing import List, Optional, Sequence

from weq.automata import Nfa, RegularConstraint
from weq.core_terms import Constant, Equation, Signature, Variable, Word
from weq.solver import Problem

SIG_AB = Signature.of("ab", "xyz")


def random_nfa(rng: random.Random, alphabet_size: int = 2, max_states: int = 3,
               density: float = 0.35) -> Nfa:
    """Any shape: cycles, dead states, unreachable final."""
    n = rng.randint(1, max_states)
    trans = [
        (p, a, q)
        for p in range(n)
        for a in range(alphabet_size)
        for q in range(n)
        if rng.random() < density
    ]
    return Nfa(alphabet_size, n, frozenset(trans), 0, rng.randrange(n))


def random_one_weak_nfa(rng: random.Random, alphabet_size: int = 2, max_states: int = 3,
                        density: float = 0.45) -> Nfa:
    """Transitions only go forward or loop, so every SCC is a singleton."""
    n = rng.randint(1, max_states)
    trans = [
        (p, a, q)
        for p in range(n)
        for a in range(alphabet_size)
        for q in range(p, n)
        if rng.random() < density
    ]
    return Nfa(alphabet_size, n, frozenset(trans), 0, rng.randrange(n))


def _letters(rng: random.Random, alphabet_size: int, count: int) -> List[Constant]:
    return [Constant(rng.randrange(alphabet_size)) for _ in range(count)]


def random_quadratic_equation(rng: random.Random, num_vars: int = 3, max_side: int = 8,
                              alphabet_size: int = 2) -> Equation:
    """Each variable occurs 0, 1 or 2 times overall; sides hold at most max_side symbols."""
    while True:
        pool = []
        for i in range(num_vars):
            pool.extend([Variable(i)] * rng.choice([0, 1, 2, 2]))
        pool.extend(_letters(rng, alphabet_size, rng.randint(0, 4)))
        rng.shuffle(pool)
        cut = rng.randint(0, len(pool))
        lhs, rhs = pool[:cut], pool[cut:]
        if len(lhs) <= max_side and len(rhs) <= max_side:
            return Equation(Word(tuple(lhs)), Word(tuple(rhs)))


def _interleave(rng: random.Random, variables: Sequence[Variable], letters: Sequence[Constant]) -> Word:
    out: List = []
    vs, ls = list(variables), list(letters)
    while vs or ls:
        if vs and (not ls or rng.random() < 0.5):
            out.append(vs.pop(0))
        else:
            out.append(ls.pop(0))
    return Word(tuple(out))


def random_regular_oriented_equation(rng: random.Random, num_vars: int = 3, max_side: int = 6,
                                     alphabet_size: int = 2) -> Equation:
    """Variables appear at most once per side, in increasing index order on both sides."""
    order = [Variable(i) for i in range(num_vars)]
    sides = []
    for _ in range(2):
        chosen = [v for v in order if rng.random() < 0.6]
        room = max(0, max_side - len(chosen))
        letters = _letters(rng, alphabet_size, rng.randint(0, min(2, room)))
        sides.append(_interleave(rng, chosen, letters))
    return Equation(sides[0], sides[1])


def random_constraints(rng: random.Random, e: Equation, alphabet_size: int = 2,
                       max_states: int = 3, one_weak: bool = True) -> frozenset:
    """One random constraint on roughly half of the variables of e."""
    out = set()
    make = random_one_weak_nfa if one_weak else random_nfa
    for v in e.variables():
        if rng.random() < 0.5:
            aut = make(rng, alphabet_size, max_states)
            out.add(RegularConstraint(v, aut, aut.initial, aut.final))
    return frozenset(out)


def problem_for(e: Equation, constraints: frozenset = frozenset(),
                signature: Optional[Signature] = None) -> Problem:
    """Problem whose declared variables are exactly those of e, renamed x, y, z, ..."""
    used = sorted(e.variables())
    rename = {v: Variable(i) for i, v in enumerate(used)}
    names = "xyzuvw"[: len(used)]

    def word(w: Word) -> Word:
        return Word(tuple(rename.get(s, s) for s in w))

    letters = signature.letters if signature else SIG_AB.letters
    sig = Signature(letters, tuple(names))
    renamed = frozenset(
        RegularConstraint(rename[c.variable], c.automaton, c.source, c.target) for c in constraints
    )
    return Problem(sig, Equation(word(e.lhs), word(e.rhs)), renamed)


def quadratic_corpus(seed: int, count: int, **kwargs) -> List[Equation]:
    rng = random.Random(seed)
    return [random_quadratic_equation(rng, **kwargs) for _ in range(count)]


def regular_oriented_corpus(seed: int, count: int, **kwargs) -> List[Equation]:
    rng = random.Random(seed)
    return [random_regular_oriented_equation(rng, **kwargs) for _ in range(count)]
