"""
Problem file format.

Line-oriented; a line whose first non-blank character is '#' is a comment
('#' elsewhere is an ordinary name, so it can be a letter):

    # swapped halves with a hash-prefixed constraint
    alphabet: a b #;
    vars: x y;
    eq: x a b y = y a b x
    nfa hash_ab {
        states 2; init 0; final 1;
        trans (0, #, 1) (1, a, 1) (1, b, 1);
    }
    re: x in nfa hash_ab;
    re: y in nfa hash_ab [0, 1];
    phi: |x| = 1 && |y| <= 2

Statements outside nfa blocks end at ';' or at the end of the line.
Inside a block every item ends with ';'. The phi grammar is linear
arithmetic over |var| and integer constants with + - *, the comparisons
<= < = >= > !=, && and || and parentheses, plus true and false.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from weq.automata import Nfa, RegularConstraint
from weq.core_terms import EMPTY_WORD, Equation, Signature, Symbol, Word
from weq.errors import AlphabetMismatch, ParseError, UnknownSymbol
from weq.pad_logic import (
    FALSE,
    TRUE,
    And,
    Eq,
    Leq,
    LinearTerm,
    Or,
    PadFormula,
    conj,
    const,
    disj,
    eq,
    geq,
    gt,
    leq,
    lt,
    neq,
    var,
)
from weq.solver import Problem

# =============================================================================
# Tokens
# =============================================================================

_TOKEN = re.compile(
    r"""
    (?P<space>[ \t\r]+)
  | (?P<newline>\n)
  | (?P<string>"[^"\n]*")
  | (?P<op><=|>=|!=|&&|\|\||[:;{}(),=|+\-*<>\[\]])
  | (?P<name>[^\s:;{}(),=|+\-*<>&!\[\]"]+)
    """,
    re.VERBOSE,
)

_EPSILON = ("ε", "eps")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> List[Token]:
    """
    Split text into tokens, dropping blanks and comment lines.

    Raises:
        ParseError: a character no token starts with
    """
    tokens: List[Token] = []
    for number, raw in enumerate(text.split("\n"), start=1):
        if raw.lstrip().startswith("#"):
            tokens.append(Token("newline", "\n", number, len(raw) + 1))
            continue
        pos = 0
        while pos < len(raw):
            m = _TOKEN.match(raw, pos)
            if m is None:
                raise ParseError(f"unexpected character {raw[pos]!r}", number, pos + 1)
            kind = m.lastgroup
            if kind != "space":
                tokens.append(Token(kind, m.group(), number, pos + 1))
            pos = m.end()
        tokens.append(Token("newline", "\n", number, len(raw) + 1))
    return tokens


# =============================================================================
# Parser
# =============================================================================

class _Parser:
    def __init__(self, text: str) -> None:
        self.tokens = tokenize(text)
        self.pos = 0
        self.letters: Optional[Tuple[str, ...]] = None
        self.variables: Optional[Tuple[str, ...]] = None
        self.equation: Optional[Equation] = None
        self.automata: Dict[str, Nfa] = {}
        self.constraints: List[RegularConstraint] = []
        self.phi: PadFormula = TRUE
        self.signature_used = False

    # -- cursor ---------------------------------------------------------------

    def peek(self) -> Optional[Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def fail(self, message: str, tok: Optional[Token] = None, kind=ParseError) -> ParseError:
        tok = tok or self.peek() or self._end()
        return kind(message, tok.line, tok.column)

    def _end(self) -> Token:
        if self.tokens:
            last = self.tokens[-1]
            return Token("end", "", last.line, last.column)
        return Token("end", "", 1, 1)

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise self.fail("unexpected end of input")
        self.pos += 1
        return tok

    def skip_newlines(self) -> None:
        while (tok := self.peek()) is not None and tok.kind == "newline":
            self.pos += 1

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind != "string" and tok.text == text

    def expect(self, text: str, skip_newlines: bool = False) -> Token:
        if skip_newlines:
            self.skip_newlines()
        tok = self.peek()
        if tok is None or tok.text != text:
            found = "end of input" if tok is None or tok.kind == "newline" else repr(tok.text)
            raise self.fail(f"expected {text!r}, found {found}")
        return self.next()

    def name(self, what: str, skip_newlines: bool = False) -> Token:
        if skip_newlines:
            self.skip_newlines()
        tok = self.peek()
        if tok is None or tok.kind not in ("name", "string"):
            raise self.fail(f"expected {what}")
        self.pos += 1
        if tok.kind == "string":
            return Token("name", tok.text[1:-1], tok.line, tok.column)
        return tok

    def integer(self, what: str) -> int:
        self.skip_newlines()
        tok = self.peek()
        if tok is None or tok.kind != "name" or not tok.text.isdigit():
            raise self.fail(f"expected {what} (a natural number)")
        self.pos += 1
        return int(tok.text)

    def statement_end(self) -> None:
        tok = self.peek()
        if tok is None or tok.kind == "newline":
            return
        if tok.text == ";":
            self.pos += 1
            return
        raise self.fail(f"unexpected {tok.text!r}")

    def statement_tokens(self) -> List[Token]:
        """Tokens up to ';' or end of line, consuming the terminator."""
        out = []
        while (tok := self.peek()) is not None and tok.kind != "newline" and tok.text != ";":
            out.append(tok)
            self.pos += 1
        self.statement_end()
        return out

    # -- declarations ---------------------------------------------------------

    @property
    def signature(self) -> Signature:
        return Signature(self.letters or (), self.variables or ())

    def require_signature(self, tok: Token) -> Signature:
        if self.letters is None:
            raise self.fail("'alphabet:' must come first", tok)
        self.signature_used = True
        return self.signature

    def parse(self) -> Problem:
        while True:
            self.skip_newlines()
            tok = self.peek()
            if tok is None:
                break
            keyword = self.next()
            if keyword.text == "nfa":
                self.parse_nfa(keyword)
                continue
            handler = {
                "alphabet": self.parse_alphabet,
                "vars": self.parse_vars,
                "eq": self.parse_eq,
                "re": self.parse_re,
                "phi": self.parse_phi,
            }.get(keyword.text)
            if handler is None:
                raise self.fail(f"unknown statement {keyword.text!r}", keyword)
            self.expect(":")
            handler(keyword)
        if self.equation is None:
            raise self.fail("missing 'eq:' statement", self._end())
        try:
            return Problem(
                self.signature,
                self.equation,
                frozenset(self.constraints),
                self.phi,
                tuple(self.automata.items()),
            )
        except ValueError as exc:
            raise self.fail(str(exc), self._end()) from None

    def _names(self, keyword: Token) -> Tuple[str, ...]:
        names = tuple(t.text for t in self.statement_tokens())
        if len(set(names)) != len(names):
            raise self.fail(f"duplicate name in {keyword.text!r}", keyword)
        return names

    def parse_alphabet(self, keyword: Token) -> None:
        if self.letters is not None:
            raise self.fail("alphabet declared twice", keyword)
        self.letters = self._names(keyword)

    def parse_vars(self, keyword: Token) -> None:
        if self.variables is not None:
            raise self.fail("variables declared twice", keyword)
        if self.signature_used:
            raise self.fail("'vars:' must come before equations, automata and constraints", keyword)
        if self.letters is None:
            raise self.fail("'alphabet:' must come first", keyword)
        names = self._names(keyword)
        clash = set(names) & set(self.letters)
        if clash:
            raise self.fail(f"{sorted(clash)[0]!r} is already a letter", keyword)
        self.variables = names

    # -- equation -------------------------------------------------------------

    def _symbols(self, tok: Token, signature: Signature) -> List[Symbol]:
        if tok.text in signature.variables or tok.text in signature.letters:
            return [signature.symbol(tok.text)]
        if all(ch in signature.variables or ch in signature.letters for ch in tok.text):
            return [signature.symbol(ch) for ch in tok.text]
        raise self.fail(f"unknown symbol {tok.text!r}", tok, UnknownSymbol)

    def _side(self, tokens: List[Token], signature: Signature) -> Word:
        if len(tokens) == 1 and tokens[0].text in _EPSILON:
            return EMPTY_WORD
        symbols: List[Symbol] = []
        for tok in tokens:
            if tok.kind != "name":
                raise self.fail(f"unexpected {tok.text!r} in equation", tok)
            symbols.extend(self._symbols(tok, signature))
        return Word(tuple(symbols))

    def parse_eq(self, keyword: Token) -> None:
        signature = self.require_signature(keyword)
        if self.equation is not None:
            raise self.fail("equation declared twice", keyword)
        tokens = self.statement_tokens()
        splits = [i for i, t in enumerate(tokens) if t.text == "="]
        if len(splits) != 1:
            where = tokens[splits[1]] if len(splits) > 1 else keyword
            raise self.fail("equation needs exactly one '='", where)
        i = splits[0]
        self.equation = Equation(self._side(tokens[:i], signature), self._side(tokens[i + 1:], signature))

    # -- automata -------------------------------------------------------------

    def parse_nfa(self, keyword: Token) -> None:
        signature = self.require_signature(keyword)
        label = self.name("automaton name")
        if label.text in self.automata:
            raise self.fail(f"automaton {label.text!r} declared twice", label)
        self.expect("{", skip_newlines=True)
        num_states: Optional[int] = None
        initial, final = 0, 0
        transitions = []
        while True:
            self.skip_newlines()
            if self.at("}"):
                self.next()
                break
            item = self.name("'states', 'init', 'final', 'trans' or '}'")
            if item.text == "states":
                num_states = self.integer("state count")
            elif item.text == "init":
                initial = self.integer("initial state")
            elif item.text == "final":
                final = self.integer("final state")
            elif item.text == "trans":
                self.skip_newlines()
                while self.at("("):
                    transitions.append(self._transition(signature))
                    self.skip_newlines()
            else:
                raise self.fail(f"unknown automaton item {item.text!r}", item)
            self.expect(";", skip_newlines=True)
        if num_states is None:
            raise self.fail(f"automaton {label.text!r} has no 'states'", label)
        try:
            self.automata[label.text] = Nfa(signature.alphabet_size, num_states, frozenset(transitions), initial, final)
        except ValueError as exc:
            raise self.fail(f"automaton {label.text!r}: {exc}", label) from None

    def _transition(self, signature: Signature) -> Tuple[int, int, int]:
        self.expect("(")
        p = self.integer("source state")
        self.expect(",", skip_newlines=True)
        letter = self.name("letter", skip_newlines=True)
        if letter.text not in signature.letters:
            raise self.fail(f"letter {letter.text!r} is not in the alphabet", letter, AlphabetMismatch)
        self.expect(",", skip_newlines=True)
        q = self.integer("target state")
        self.expect(")", skip_newlines=True)
        return (p, signature.letters.index(letter.text), q)

    def parse_re(self, keyword: Token) -> None:
        signature = self.require_signature(keyword)
        var_tok = self.name("variable")
        if var_tok.text not in signature.variables:
            raise self.fail(f"unknown variable {var_tok.text!r}", var_tok, UnknownSymbol)
        self.expect("in")
        self.expect("nfa")
        label = self.name("automaton name")
        if label.text not in self.automata:
            raise self.fail(f"unknown automaton {label.text!r}", label, UnknownSymbol)
        aut = self.automata[label.text]
        source, target = aut.initial, aut.final
        if self.at("["):
            self.next()
            source = self.integer("source state")
            self.expect(",")
            target = self.integer("target state")
            self.expect("]")
        try:
            self.constraints.append(RegularConstraint(signature.variable(var_tok.text), aut, source, target))
        except ValueError as exc:
            raise self.fail(str(exc), label) from None
        self.statement_end()

    # -- length constraint ----------------------------------------------------

    def parse_phi(self, keyword: Token) -> None:
        signature = self.require_signature(keyword)
        tokens = self.statement_tokens()
        if not tokens:
            raise self.fail("empty length constraint", keyword)
        sub = _PhiParser(tokens, signature, self)
        self.phi = conj(self.phi, sub.parse())


_COMPARISONS = {"<=": leq, "<": lt, "=": eq, ">=": geq, ">": gt, "!=": neq}


class _PhiParser:
    """Recursive descent over the tokens of one phi statement."""

    def __init__(self, tokens: List[Token], signature: Signature, outer: _Parser) -> None:
        self.tokens = tokens
        self.pos = 0
        self.signature = signature
        self.outer = outer

    def peek(self) -> Optional[Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.text == text

    def fail(self, message: str, kind=ParseError) -> ParseError:
        tok = self.peek() or self.tokens[-1]
        return self.outer.fail(message, tok, kind)

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = repr(self.peek().text) if self.peek() else "end of line"
            raise self.fail(f"expected {text!r}, found {found}")
        self.pos += 1
        return self.tokens[self.pos - 1]

    def parse(self) -> PadFormula:
        f = self.disjunction()
        if self.peek() is not None:
            raise self.fail(f"unexpected {self.peek().text!r}")
        return f

    def disjunction(self) -> PadFormula:
        parts = [self.conjunction()]
        while self.at("||"):
            self.pos += 1
            parts.append(self.conjunction())
        return disj(*parts)

    def conjunction(self) -> PadFormula:
        parts = [self.primary()]
        while self.at("&&"):
            self.pos += 1
            parts.append(self.primary())
        return conj(*parts)

    def primary(self) -> PadFormula:
        if self.at("true"):
            self.pos += 1
            return TRUE
        if self.at("false"):
            self.pos += 1
            return FALSE
        if self.at("("):
            start = self.pos
            try:
                return self.comparison()
            except ParseError:
                self.pos = start
            self.pos += 1
            f = self.disjunction()
            self.expect(")")
            return f
        return self.comparison()

    def comparison(self) -> PadFormula:
        lhs = self.term()
        tok = self.peek()
        if tok is None or tok.text not in _COMPARISONS:
            raise self.fail("expected a comparison")
        self.pos += 1
        return _COMPARISONS[tok.text](lhs, self.term())

    def term(self) -> LinearTerm:
        t = self.product()
        while self.at("+") or self.at("-"):
            sign = self.tokens[self.pos].text
            self.pos += 1
            rhs = self.product()
            t = t + rhs if sign == "+" else t - rhs
        return t

    def product(self) -> LinearTerm:
        if self.at("-"):
            self.pos += 1
            return -self.product()
        t = self.unit()
        while self.at("*"):
            self.pos += 1
            rhs = self.unit()
            if rhs.is_constant:
                t = t * rhs.constant
            elif t.is_constant:
                t = rhs * t.constant
            else:
                raise self.fail("product of two lengths is not linear")
        return t

    def unit(self) -> LinearTerm:
        tok = self.peek()
        if tok is None:
            raise self.fail("expected a term")
        if tok.text == "(":
            self.pos += 1
            t = self.term()
            self.expect(")")
            return t
        if tok.text == "|":
            self.pos += 1
            name = self.peek()
            if name is None or name.kind != "name":
                raise self.fail("expected a variable after '|'")
            if name.text not in self.signature.variables:
                raise self.fail(f"unknown variable {name.text!r}", UnknownSymbol)
            self.pos += 1
            self.expect("|")
            return var(name.text)
        if tok.kind == "name" and tok.text.isdigit():
            self.pos += 1
            return const(int(tok.text))
        raise self.fail(f"expected |var| or a number, found {tok.text!r}")


def parse_problem(text: str) -> Problem:
    """
    Parse a problem file.

    Raises:
        ParseError: syntax error, with line and column
        UnknownSymbol: undeclared variable, letter or automaton
        AlphabetMismatch: an automaton reads a letter outside the alphabet
    """
    return _Parser(text).parse()


def parse_length_constraint(text: str, signature: Signature) -> PadFormula:
    """A phi expression on its own, e.g. from the command line."""
    parser = _Parser(text)
    tokens = [t for t in parser.tokens if t.kind != "newline"]
    if not tokens:
        raise ParseError("empty length constraint", 1, 1)
    return _PhiParser(tokens, signature, parser).parse()


# =============================================================================
# Printer
# =============================================================================

def _format_term(t: LinearTerm) -> str:
    parts: List[str] = []
    for name, c in t.coefficients:
        unit = f"|{name}|" if abs(c) == 1 else f"{abs(c)}*|{name}|"
        if not parts:
            parts.append(unit if c > 0 else f"-{unit}")
        else:
            parts.append(f"+ {unit}" if c > 0 else f"- {unit}")
    if t.constant or not parts:
        if not parts:
            parts.append(str(t.constant))
        else:
            parts.append(f"+ {t.constant}" if t.constant > 0 else f"- {-t.constant}")
    return " ".join(parts)


def format_phi(f: PadFormula) -> str:
    """
    Render a divisibility- and quantifier-free formula in phi syntax.

    Raises:
        ValueError: f uses divisibility or a quantifier
    """
    if isinstance(f, Leq):
        return f"{_format_term(f.lhs)} <= {_format_term(f.rhs)}"
    if isinstance(f, Eq):
        return f"{_format_term(f.lhs)} = {_format_term(f.rhs)}"
    if isinstance(f, And):
        if not f.parts:
            return "true"
        return " && ".join(f"({format_phi(p)})" if isinstance(p, Or) else format_phi(p) for p in f.parts)
    if isinstance(f, Or):
        if not f.parts:
            return "false"
        return " || ".join(f"({format_phi(p)})" if isinstance(p, And) and p.parts else format_phi(p) for p in f.parts)
    raise ValueError(f"cannot print {type(f).__name__} in phi syntax")


def print_problem(p: Problem) -> str:
    """Problem file text; parse_problem(print_problem(p)) == p for parsed problems."""
    sig = p.signature
    lines = [
        f"alphabet: {' '.join(sig.letters)};",
        f"vars: {' '.join(sig.variables)};",
        f"eq: {p.equation.format(sig)}",
    ]
    names: Dict[Nfa, str] = {}
    automata = list(p.automata)
    for name, aut in automata:
        names.setdefault(aut, name)
    taken = {name for name, _ in automata}
    for c in sorted(p.regular_constraints, key=lambda c: c.sort_key()):
        if c.automaton not in names:
            k = len(names)
            while f"A{k}" in taken:
                k += 1
            names[c.automaton] = f"A{k}"
            taken.add(f"A{k}")
            automata.append((f"A{k}", c.automaton))
    for name, aut in automata:
        trans = " ".join(f"({p_}, {sig.letters[a]}, {q})" for p_, a, q in sorted(aut.transitions))
        lines.append(f"nfa {name} {{")
        lines.append(f"    states {aut.num_states}; init {aut.initial}; final {aut.final};")
        if trans:
            lines.append(f"    trans {trans};")
        lines.append("}")
    for c in sorted(p.regular_constraints, key=lambda c: c.sort_key()):
        line = f"re: {sig.name(c.variable)} in nfa {names[c.automaton]}"
        if (c.source, c.target) != (c.automaton.initial, c.automaton.final):
            line += f" [{c.source}, {c.target}]"
        lines.append(line + ";")
    if p.length_constraint != TRUE:
        lines.append(f"phi: {format_phi(p.length_constraint)}")
    return "\n".join(lines) + "\n"
