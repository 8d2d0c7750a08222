"""
Core terms: alphabets, words, equations, assignments
=====================================================

Symbols are interned integers: a Constant carries a letter code into the
declared alphabet, a Variable carries an index into the declared variable
set. Names live in a Signature and are only needed for parsing and
printing; everything else compares small integers.

Class predicates:
    quadratic  every variable occurs at most twice in L·R
    regular    every variable occurs at most once per side
    oriented   some strict total order on variables is respected by the
               variable occurrences of each side (decided as acyclicity of
               the occurrence-precedence digraph)
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx

from weq.errors import MissingVariable, UnknownSymbol


# =============================================================================
# Symbols
# =============================================================================

@dataclass(frozen=True, order=True)
class Constant:
    """A letter of the alphabet, by code."""

    letter: int

    def __post_init__(self) -> None:
        if self.letter < 0:
            raise ValueError(f"letter code must be >= 0, got {self.letter}")

    @property
    def is_variable(self) -> bool:
        return False


@dataclass(frozen=True, order=True)
class Variable:
    """A string variable, by index."""

    id: int

    def __post_init__(self) -> None:
        if self.id < 0:
            raise ValueError(f"variable id must be >= 0, got {self.id}")

    @property
    def is_variable(self) -> bool:
        return True


Symbol = Union[Constant, Variable]


def symbol_key(symbol: Symbol) -> Tuple[int, int]:
    """Total order on symbols: constants first, then variables."""
    if isinstance(symbol, Variable):
        return (1, symbol.id)
    return (0, symbol.letter)


# =============================================================================
# Signature (names)
# =============================================================================

@dataclass(frozen=True)
class Signature:
    """
    Declared alphabet and variable names.

    Attributes:
        letters: letter names, index = Constant.letter
        variables: variable names, index = Variable.id
    """

    letters: Tuple[str, ...]
    variables: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if len(set(self.letters)) != len(self.letters):
            raise ValueError(f"duplicate letters in {self.letters}")
        if len(set(self.variables)) != len(self.variables):
            raise ValueError(f"duplicate variables in {self.variables}")
        clash = set(self.letters) & set(self.variables)
        if clash:
            raise ValueError(f"names declared both as letter and variable: {sorted(clash)}")

    @classmethod
    def of(cls, letters: Iterable[str], variables: Iterable[str] = ()) -> "Signature":
        """Build from any iterables, e.g. Signature.of("ab", "xyz")."""
        return cls(tuple(letters), tuple(variables))

    @property
    def alphabet_size(self) -> int:
        return len(self.letters)

    def constant(self, name: str) -> Constant:
        try:
            return Constant(self.letters.index(name))
        except ValueError:
            raise UnknownSymbol(f"unknown letter {name!r}") from None

    def variable(self, name: str) -> Variable:
        try:
            return Variable(self.variables.index(name))
        except ValueError:
            raise UnknownSymbol(f"unknown variable {name!r}") from None

    def all_variables(self) -> Tuple[Variable, ...]:
        return tuple(Variable(i) for i in range(len(self.variables)))

    def symbol(self, name: str) -> Symbol:
        if name in self.variables:
            return self.variable(name)
        if name in self.letters:
            return self.constant(name)
        raise UnknownSymbol(f"unknown symbol {name!r}")

    def name(self, symbol: Symbol) -> str:
        if isinstance(symbol, Variable):
            return self.variables[symbol.id]
        return self.letters[symbol.letter]


# =============================================================================
# Words and equations
# =============================================================================

@dataclass(frozen=True)
class Word:
    """Finite sequence of symbols; the empty tuple is ε."""

    symbols: Tuple[Symbol, ...] = ()

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self) -> Iterator[Symbol]:
        return iter(self.symbols)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return Word(self.symbols[index])
        return self.symbols[index]

    def __add__(self, other: "Word") -> "Word":
        return Word(self.symbols + other.symbols)

    def __bool__(self) -> bool:
        return bool(self.symbols)

    @property
    def head(self) -> Optional[Symbol]:
        return self.symbols[0] if self.symbols else None

    @property
    def tail(self) -> "Word":
        return Word(self.symbols[1:])

    def variables(self) -> Tuple[Variable, ...]:
        """Distinct variables in order of first occurrence."""
        seen: Dict[Variable, None] = {}
        for s in self.symbols:
            if isinstance(s, Variable):
                seen.setdefault(s, None)
        return tuple(seen)

    def is_constant_only(self) -> bool:
        return all(isinstance(s, Constant) for s in self.symbols)

    def letters(self) -> Tuple[int, ...]:
        """Letter codes of a constant-only word."""
        if not self.is_constant_only():
            raise ValueError("word contains variables")
        return tuple(s.letter for s in self.symbols)  # type: ignore[union-attr]

    def substitute(self, var: Variable, image: "Word") -> "Word":
        out: List[Symbol] = []
        for s in self.symbols:
            if s == var:
                out.extend(image.symbols)
            else:
                out.append(s)
        return Word(tuple(out))

    def format(self, signature: Optional[Signature] = None) -> str:
        if not self.symbols:
            return "ε"
        if signature is None:
            return " ".join(_anonymous_name(s) for s in self.symbols)
        return " ".join(signature.name(s) for s in self.symbols)


EMPTY_WORD = Word(())


def _anonymous_name(symbol: Symbol) -> str:
    if isinstance(symbol, Variable):
        return f"X{symbol.id}"
    return f"c{symbol.letter}"


def letters_word(codes: Iterable[int]) -> Word:
    """Constant-only word from letter codes."""
    return Word(tuple(Constant(c) for c in codes))


def parse_word(text: str, signature: Signature) -> Word:
    """
    Parse a whitespace-separated word.

    Single-character tokens that are not declared variables are split
    character by character when every character is a declared name, so
    "xaby" and "x a b y" both work for one-letter names. "ε" or "" is empty.
    """
    text = text.strip()
    if text in ("", "ε", "eps"):
        return EMPTY_WORD
    symbols: List[Symbol] = []
    for token in text.split():
        if token in signature.variables or token in signature.letters:
            symbols.append(signature.symbol(token))
        elif all(ch in signature.variables or ch in signature.letters for ch in token):
            symbols.extend(signature.symbol(ch) for ch in token)
        else:
            raise UnknownSymbol(f"unknown symbol {token!r}")
    return Word(tuple(symbols))


@dataclass(frozen=True)
class Equation:
    """A word equation lhs = rhs."""

    lhs: Word
    rhs: Word

    @property
    def size(self) -> int:
        """|L| + |R|."""
        return len(self.lhs) + len(self.rhs)

    def is_trivial(self) -> bool:
        """ε = ε."""
        return not self.lhs and not self.rhs

    def swapped(self) -> "Equation":
        return Equation(self.rhs, self.lhs)

    def variables(self) -> Tuple[Variable, ...]:
        """Distinct variables, lhs first, in order of first occurrence."""
        return (self.lhs + self.rhs).variables()

    def occurrences(self) -> Counter:
        return Counter(s for s in (self.lhs + self.rhs) if isinstance(s, Variable))

    def substitute(self, var: Variable, image: Word) -> "Equation":
        return Equation(self.lhs.substitute(var, image), self.rhs.substitute(var, image))

    def format(self, signature: Optional[Signature] = None) -> str:
        return f"{self.lhs.format(signature)} = {self.rhs.format(signature)}"


TRIVIAL_EQUATION = Equation(EMPTY_WORD, EMPTY_WORD)


def parse_equation(text: str, signature: Signature) -> Equation:
    """Parse "L = R"."""
    if text.count("=") != 1:
        raise ValueError(f"equation needs exactly one '=': {text!r}")
    left, right = text.split("=")
    return Equation(parse_word(left, signature), parse_word(right, signature))


# =============================================================================
# Assignments and length vectors
# =============================================================================

@dataclass(frozen=True)
class Assignment:
    """
    Homomorphism image table: Variable -> constant-only Word.

    Constants map to themselves implicitly.
    """

    images: Mapping[Variable, Word] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "images", dict(self.images))
        for var, image in self.images.items():
            if not isinstance(var, Variable):
                raise ValueError(f"assignment key must be a Variable, got {var!r}")
            if not image.is_constant_only():
                raise ValueError(f"image of {var} contains variables")

    def __getitem__(self, var: Variable) -> Word:
        try:
            return self.images[var]
        except KeyError:
            raise MissingVariable(f"variable {var} is unassigned") from None

    def __contains__(self, var: object) -> bool:
        return var in self.images

    def __len__(self) -> int:
        return len(self.images)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Assignment):
            return NotImplemented
        return self.images == other.images

    def __hash__(self) -> int:
        return hash(frozenset(self.images.items()))

    @property
    def domain(self) -> Tuple[Variable, ...]:
        return tuple(sorted(self.images))

    def with_image(self, var: Variable, image: Word) -> "Assignment":
        images = dict(self.images)
        images[var] = image
        return Assignment(images)

    def restrict(self, variables: Iterable[Variable]) -> "Assignment":
        keep = set(variables)
        return Assignment({v: w for v, w in self.images.items() if v in keep})

    def without(self, var: Variable) -> "Assignment":
        return Assignment({v: w for v, w in self.images.items() if v != var})

    def format(self, signature: Optional[Signature] = None) -> str:
        parts = []
        for var in self.domain:
            name = signature.name(var) if signature else _anonymous_name(var)
            word = self.images[var]
            parts.append(f"{name}={''.join(signature.name(s) for s in word) if signature else word.format()}"
                         if word else f"{name}=ε")
        return "{" + ", ".join(parts) + "}"


@dataclass(frozen=True)
class LengthVector:
    """Variable -> natural number, stored sorted for hashing."""

    entries: Tuple[Tuple[Variable, int], ...] = ()

    def __post_init__(self) -> None:
        entries = tuple(sorted(dict(self.entries).items()))
        for var, n in entries:
            if n < 0:
                raise ValueError(f"length of {var} must be >= 0, got {n}")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def of(cls, mapping: Mapping[Variable, int]) -> "LengthVector":
        return cls(tuple(mapping.items()))

    def __getitem__(self, var: Variable) -> int:
        for v, n in self.entries:
            if v == var:
                return n
        raise MissingVariable(f"variable {var} has no length entry")

    def __contains__(self, var: object) -> bool:
        return any(v == var for v, _ in self.entries)

    def as_dict(self) -> Dict[Variable, int]:
        return dict(self.entries)

    def as_tuple(self, order: Sequence[Variable]) -> Tuple[int, ...]:
        return tuple(self[v] for v in order)

    @property
    def total(self) -> int:
        return sum(n for _, n in self.entries)


# =============================================================================
# Operations
# =============================================================================

def apply_homomorphism(w: Word, sigma: Assignment) -> Word:
    """σ(w): constants fixed, variables replaced by their images."""
    out: List[Symbol] = []
    for s in w:
        if isinstance(s, Variable):
            out.extend(sigma[s].symbols)
        else:
            out.append(s)
    return Word(tuple(out))


def check_solution(e: Equation, sigma: Assignment) -> bool:
    """σ(L) = σ(R)."""
    return apply_homomorphism(e.lhs, sigma) == apply_homomorphism(e.rhs, sigma)


def is_quadratic(e: Equation) -> bool:
    return all(n <= 2 for n in e.occurrences().values())


def is_regular(e: Equation) -> bool:
    for side in (e.lhs, e.rhs):
        counts = Counter(s for s in side if isinstance(s, Variable))
        if any(n > 1 for n in counts.values()):
            return False
    return True


def precedence_graph(e: Equation) -> nx.DiGraph:
    """Edge α→β whenever α occurs before β on some side."""
    graph = nx.DiGraph()
    graph.add_nodes_from(e.variables())
    for side in (e.lhs, e.rhs):
        seen: List[Variable] = []
        for s in side:
            if isinstance(s, Variable):
                for earlier in seen:
                    graph.add_edge(earlier, s)
                seen.append(s)
    return graph


def is_oriented(e: Equation) -> bool:
    return nx.is_directed_acyclic_graph(precedence_graph(e))


def is_regular_oriented(e: Equation) -> bool:
    return is_regular(e) and is_oriented(e)


def length_vector(sigma: Assignment) -> LengthVector:
    return LengthVector.of({v: len(w) for v, w in sigma.images.items()})
