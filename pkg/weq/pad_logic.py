"""
Existential Presburger arithmetic with divisibility.

Formulas are negation-free trees of atoms

    Leq(s, t)      s <= t
    Eq(s, t)       s = t
    Divides(d, n)  d | n     (0 | n iff n = 0)

under And, Or and Exists. Variables range over the naturals; terms are
integer linear combinations. Bound variables get unique names from fresh(),
so substitution never captures.

Satisfiability is bounded-model search through z3 with every variable boxed
to [0, B] for B along the configured schedule. Sat answers are re-checked
with evaluate(). Unsat is only reported when interval propagation shows
that every variable already lies inside the box; otherwise the answer is
Unknown(B_max).
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, Mapping, Optional, Tuple, Union

import z3

from weq.automata import UnarySemilinear
from weq.config import SolverConfig, load_config
from weq.errors import NotGroundCheckable, UnboundVariable

logger = logging.getLogger(__name__)

Valuation = Dict[str, int]
Bound = Union[int, float]
Interval = Tuple[int, Bound]

INF = math.inf

# Interval propagation rounds before settling for the current (sound) bounds
PROPAGATION_ROUNDS = 64


# =============================================================================
# Terms
# =============================================================================

@dataclass(frozen=True)
class LinearTerm:
    """Σ c_i·x_i + constant, zero coefficients dropped, sorted by name."""

    coefficients: Tuple[Tuple[str, int], ...] = ()
    constant: int = 0

    def __post_init__(self) -> None:
        merged: Dict[str, int] = {}
        for name, c in self.coefficients:
            merged[name] = merged.get(name, 0) + c
        object.__setattr__(self, "coefficients", tuple(sorted((n, c) for n, c in merged.items() if c)))

    @classmethod
    def of(cls, coefficients: Mapping[str, int], constant: int = 0) -> "LinearTerm":
        return cls(tuple(coefficients.items()), constant)

    def __add__(self, other: Union["LinearTerm", int]) -> "LinearTerm":
        other = _as_term(other)
        return LinearTerm(self.coefficients + other.coefficients, self.constant + other.constant)

    __radd__ = __add__

    def __neg__(self) -> "LinearTerm":
        return LinearTerm(tuple((n, -c) for n, c in self.coefficients), -self.constant)

    def __sub__(self, other: Union["LinearTerm", int]) -> "LinearTerm":
        return self + (-_as_term(other))

    def __rsub__(self, other: Union["LinearTerm", int]) -> "LinearTerm":
        return _as_term(other) - self

    def __mul__(self, k: int) -> "LinearTerm":
        return LinearTerm(tuple((n, c * k) for n, c in self.coefficients), self.constant * k)

    __rmul__ = __mul__

    @property
    def is_constant(self) -> bool:
        return not self.coefficients

    def variables(self) -> FrozenSet[str]:
        return frozenset(n for n, _ in self.coefficients)

    def coefficient(self, name: str) -> int:
        return dict(self.coefficients).get(name, 0)

    def evaluate(self, v: Mapping[str, int]) -> int:
        total = self.constant
        for name, c in self.coefficients:
            if name not in v:
                raise UnboundVariable(f"variable {name!r} has no value")
            total += c * v[name]
        return total

    def substitute(self, mapping: Mapping[str, "LinearTerm"]) -> "LinearTerm":
        out = LinearTerm((), self.constant)
        for name, c in self.coefficients:
            out = out + (mapping[name] * c if name in mapping else LinearTerm(((name, c),)))
        return out

    def format(self) -> str:
        parts = []
        for name, c in self.coefficients:
            parts.append(name if c == 1 else f"(* {c} {name})")
        if self.constant or not parts:
            parts.append(str(self.constant))
        return parts[0] if len(parts) == 1 else "(+ " + " ".join(parts) + ")"


def var(name: str) -> LinearTerm:
    return LinearTerm(((name, 1),))


def const(n: int) -> LinearTerm:
    return LinearTerm((), n)


def _as_term(x: Union[LinearTerm, int]) -> LinearTerm:
    return x if isinstance(x, LinearTerm) else const(x)


_fresh_counter = itertools.count()


def fresh(stem: str = "k") -> str:
    """A variable name no caller-supplied name can clash with."""
    return f"{stem}#{next(_fresh_counter)}"


# =============================================================================
# Formulas
# =============================================================================

@dataclass(frozen=True)
class Leq:
    lhs: LinearTerm
    rhs: LinearTerm


@dataclass(frozen=True)
class Eq:
    lhs: LinearTerm
    rhs: LinearTerm


@dataclass(frozen=True)
class Divides:
    divisor: LinearTerm
    dividend: LinearTerm


@dataclass(frozen=True)
class And:
    parts: Tuple["PadFormula", ...] = ()


@dataclass(frozen=True)
class Or:
    parts: Tuple["PadFormula", ...] = ()


@dataclass(frozen=True)
class Exists:
    variable: str
    body: "PadFormula"


PadFormula = Union[Leq, Eq, Divides, And, Or, Exists]
Atom = Union[Leq, Eq, Divides]

TRUE: PadFormula = And(())
FALSE: PadFormula = Or(())


def conj(*parts: PadFormula) -> PadFormula:
    """Flattening conjunction; TRUE parts vanish, a FALSE part wins."""
    flat = []
    for p in _flatten(parts, And):
        if p == FALSE:
            return FALSE
        if p != TRUE:
            flat.append(p)
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def disj(*parts: PadFormula) -> PadFormula:
    flat = []
    for p in _flatten(parts, Or):
        if p == TRUE:
            return TRUE
        if p != FALSE and p not in flat:
            flat.append(p)
    return flat[0] if len(flat) == 1 else Or(tuple(flat))


def _flatten(parts: Iterable, kind) -> Iterable[PadFormula]:
    for p in parts:
        if isinstance(p, (list, tuple)):
            yield from _flatten(p, kind)
        elif isinstance(p, kind) and p.parts:
            yield from p.parts
        else:
            yield p


def exists(names: Iterable[str], body: PadFormula) -> PadFormula:
    for name in reversed(list(names)):
        body = Exists(name, body)
    return body


def leq(s, t) -> PadFormula:
    s, t = _as_term(s), _as_term(t)
    d = s - t
    if d.is_constant:
        return TRUE if d.constant <= 0 else FALSE
    return Leq(s, t)


def eq(s, t) -> PadFormula:
    s, t = _as_term(s), _as_term(t)
    d = s - t
    if d.is_constant:
        return TRUE if d.constant == 0 else FALSE
    return Eq(s, t)


def lt(s, t) -> PadFormula:
    return leq(_as_term(s) + 1, t)


def gt(s, t) -> PadFormula:
    return lt(t, s)


def geq(s, t) -> PadFormula:
    return leq(t, s)


def neq(s, t) -> PadFormula:
    return disj(lt(s, t), gt(s, t))


def divides(d, n) -> PadFormula:
    d, n = _as_term(d), _as_term(n)
    if d.is_constant and d.constant in (1, -1):
        return TRUE
    if d.is_constant and n.is_constant:
        return TRUE if evaluate(Divides(d, n), {}) else FALSE
    return Divides(d, n)


def free_variables(f: PadFormula) -> FrozenSet[str]:
    if isinstance(f, (Leq, Eq)):
        return f.lhs.variables() | f.rhs.variables()
    if isinstance(f, Divides):
        return f.divisor.variables() | f.dividend.variables()
    if isinstance(f, (And, Or)):
        return frozenset().union(*(free_variables(p) for p in f.parts))
    return free_variables(f.body) - {f.variable}


def substitute(f: PadFormula, mapping: Mapping[str, LinearTerm]) -> PadFormula:
    """Replace free variables by terms."""
    if isinstance(f, Leq):
        return leq(f.lhs.substitute(mapping), f.rhs.substitute(mapping))
    if isinstance(f, Eq):
        return eq(f.lhs.substitute(mapping), f.rhs.substitute(mapping))
    if isinstance(f, Divides):
        return divides(f.divisor.substitute(mapping), f.dividend.substitute(mapping))
    if isinstance(f, And):
        return conj(*(substitute(p, mapping) for p in f.parts))
    if isinstance(f, Or):
        return disj(*(substitute(p, mapping) for p in f.parts))
    inner = {k: v for k, v in mapping.items() if k != f.variable}
    return Exists(f.variable, substitute(f.body, inner))


def size(f: PadFormula) -> int:
    """Node count."""
    if isinstance(f, (And, Or)):
        return 1 + sum(size(p) for p in f.parts)
    if isinstance(f, Exists):
        return 1 + size(f.body)
    return 1


# =============================================================================
# Evaluation
# =============================================================================

def evaluate(f: PadFormula, v: Mapping[str, int], search_bound: Optional[int] = None) -> bool:
    """
    Truth of f under v.

    Existentials are decided by search over the range interval propagation
    derives; search_bound caps ranges propagation leaves open.

    Raises:
        UnboundVariable: a free variable of f is missing from v
        NotGroundCheckable: an existential has no finite range
    """
    if isinstance(f, Leq):
        return f.lhs.evaluate(v) <= f.rhs.evaluate(v)
    if isinstance(f, Eq):
        return f.lhs.evaluate(v) == f.rhs.evaluate(v)
    if isinstance(f, Divides):
        d, n = f.divisor.evaluate(v), f.dividend.evaluate(v)
        if d == 0:
            return n == 0
        return n % abs(d) == 0
    if isinstance(f, And):
        return all(evaluate(p, v, search_bound) for p in f.parts)
    if isinstance(f, Or):
        return any(evaluate(p, v, search_bound) for p in f.parts)

    missing = free_variables(f) - set(v)
    if missing:
        raise UnboundVariable(f"variable {sorted(missing)[0]!r} has no value")
    bounds = derive_bounds(f.body, {k: n for k, n in v.items() if k != f.variable})
    if bounds is None:
        return False
    lo, hi = bounds.get(f.variable, (0, INF))
    if hi == INF:
        if search_bound is None:
            raise NotGroundCheckable(f"no finite range for {f.variable!r}")
        hi = search_bound
    inner = dict(v)
    for k in range(lo, int(hi) + 1):
        inner[f.variable] = k
        if evaluate(f.body, inner, search_bound):
            return True
    return False


# =============================================================================
# Interval propagation
# =============================================================================

def _linear_rows(atom: Atom) -> Iterable[LinearTerm]:
    """Atoms as rows r with r <= 0."""
    if isinstance(atom, Leq):
        yield atom.lhs - atom.rhs
    elif isinstance(atom, Eq):
        yield atom.lhs - atom.rhs
        yield atom.rhs - atom.lhs


def _tighten(row: LinearTerm, bounds: Dict[str, Interval]) -> Optional[bool]:
    """One pass of row <= 0 over its variables; None if infeasible, else changed?"""
    changed = False
    coeffs = row.coefficients
    for j, (name, cj) in enumerate(coeffs):
        # cj * x_j <= -(c + Σ_{i≠j} c_i x_i) <= -c - Σ min(c_i x_i)
        rest_min: Bound = row.constant
        for i, (other, ci) in enumerate(coeffs):
            if i == j:
                continue
            lo, hi = bounds.get(other, (0, INF))
            rest_min += ci * lo if ci > 0 else (-INF if hi == INF else ci * hi)
            if rest_min == -INF:
                break
        if rest_min == -INF:
            continue
        limit = -rest_min
        lo, hi = bounds.get(name, (0, INF))
        if cj > 0:
            new_hi = limit // cj
            if new_hi < hi:
                hi, changed = new_hi, True
        else:
            new_lo = -((-limit) // cj)
            if new_lo > lo:
                lo, changed = new_lo, True
        if lo > hi:
            return None
        bounds[name] = (lo, hi)
    if not coeffs and row.constant > 0:
        return None
    return changed


def _propagate(f: PadFormula, bounds: Dict[str, Interval], inner: Dict[str, Interval]) -> Optional[Dict[str, Interval]]:
    if isinstance(f, Exists):
        local = dict(bounds)
        local[f.variable] = (0, INF)
        result = _propagate(f.body, local, inner)
        if result is None:
            return None
        _hull_into(inner, f.variable, result.get(f.variable, (0, INF)))
        result.pop(f.variable, None)
        return result
    if isinstance(f, Or):
        merged: Optional[Dict[str, Interval]] = None
        for branch in f.parts:
            result = _propagate(branch, dict(bounds), inner)
            if result is None:
                continue
            if merged is None:
                merged = result
            else:
                for name in set(merged) | set(result):
                    a = merged.get(name, (0, INF))
                    b = result.get(name, (0, INF))
                    merged[name] = (min(a[0], b[0]), max(a[1], b[1]))
        return merged
    parts = f.parts if isinstance(f, And) else (f,)
    rows = [r for p in parts if isinstance(p, (Leq, Eq)) for r in _linear_rows(p)]
    complex_parts = [p for p in parts if isinstance(p, (And, Or, Exists))]
    bounds = dict(bounds)
    round_inner: Dict[str, Interval] = {}
    for _ in range(PROPAGATION_ROUNDS):
        changed = False
        round_inner = {}
        for row in rows:
            step = _tighten(row, bounds)
            if step is None:
                return None
            changed |= step
        for p in complex_parts:
            result = _propagate(p, bounds, round_inner)
            if result is None:
                return None
            for name, (lo, hi) in result.items():
                old = bounds.get(name, (0, INF))
                new = (max(old[0], lo), min(old[1], hi))
                if new[0] > new[1]:
                    return None
                if new != old:
                    bounds[name] = new
                    changed = True
        if not changed:
            break
    for name, interval in round_inner.items():
        _hull_into(inner, name, interval)
    return bounds


def _hull_into(target: Dict[str, Interval], name: str, interval: Interval) -> None:
    if name in target:
        lo, hi = target[name]
        target[name] = (min(lo, interval[0]), max(hi, interval[1]))
    else:
        target[name] = interval


def derive_bounds(f: PadFormula, known: Optional[Mapping[str, int]] = None) -> Optional[Dict[str, Interval]]:
    """
    Sound intervals for every variable of f (free and bound), or None when
    propagation proves f unsatisfiable. Unbounded sides are math.inf.
    """
    start: Dict[str, Interval] = {name: (n, n) for name, n in (known or {}).items()}
    for name in free_variables(f):
        start.setdefault(name, (0, INF))
    inner: Dict[str, Interval] = {}
    result = _propagate(f, start, inner)
    if result is None:
        return None
    result.update(inner)
    return result


# =============================================================================
# Unary membership
# =============================================================================

def lower_unary_membership(t: LinearTerm, u: UnarySemilinear) -> PadFormula:
    """t ∈ A ∪ (A′ + bℕ) as a formula."""
    branches = [eq(t, a) for a in sorted(u.offsets)]
    for a in sorted(u.periodic):
        if u.period == 1:
            branches.append(geq(t, a))
        else:
            k = fresh("k")
            branches.append(Exists(k, eq(t, const(a) + var(k) * u.period)))
    return disj(*branches)


# =============================================================================
# Satisfiability
# =============================================================================

@dataclass(frozen=True)
class Sat:
    model: Tuple[Tuple[str, int], ...]

    def as_dict(self) -> Valuation:
        return dict(self.model)


@dataclass(frozen=True)
class Unsat:
    pass


@dataclass(frozen=True)
class Unknown:
    bound: int


SatResult = Union[Sat, Unsat, Unknown]


def _z3_term(t: LinearTerm, env: Mapping[str, z3.ArithRef]) -> z3.ArithRef:
    expr = z3.IntVal(t.constant)
    for name, c in t.coefficients:
        expr = expr + c * env[name]
    return expr


class _Translator:
    """Formula → z3, giving every Exists occurrence its own z3 constant."""

    def __init__(self, skolemize: bool) -> None:
        self.skolemize = skolemize
        self.bound_vars: list = []
        self._ids = itertools.count()

    def __call__(self, f: PadFormula, env: Dict[str, z3.ArithRef]) -> z3.BoolRef:
        if isinstance(f, Leq):
            return _z3_term(f.lhs, env) <= _z3_term(f.rhs, env)
        if isinstance(f, Eq):
            return _z3_term(f.lhs, env) == _z3_term(f.rhs, env)
        if isinstance(f, Divides):
            d, n = _z3_term(f.divisor, env), _z3_term(f.dividend, env)
            return z3.Or(z3.And(d == 0, n == 0), z3.And(d != 0, n % d == 0))
        if isinstance(f, And):
            return z3.And([self(p, env) for p in f.parts]) if f.parts else z3.BoolVal(True)
        if isinstance(f, Or):
            return z3.Or([self(p, env) for p in f.parts]) if f.parts else z3.BoolVal(False)
        k = z3.Int(f"{f.variable}@{next(self._ids)}")
        body = self(f.body, {**env, f.variable: k})
        if self.skolemize:
            self.bound_vars.append(k)
            return body
        return z3.Exists([k], z3.And(k >= 0, body))


def _exact_at(bounds: Optional[Dict[str, Interval]], box: int) -> bool:
    if bounds is None:
        return True
    return all(hi != INF and hi <= box for _, hi in bounds.values())


def is_satisfiable(f: PadFormula, config: Optional[SolverConfig] = None) -> SatResult:
    """Bounded-model search along config.bound_schedule."""
    config = config or load_config()
    bounds = derive_bounds(f)
    if bounds is None:
        logger.debug("interval propagation refutes formula")
        return Unsat()
    names = sorted(free_variables(f))
    env = {name: z3.Int(name) for name in names}
    translate = _Translator(skolemize=True)
    body = translate(f, env)
    every = list(env.values()) + translate.bound_vars
    for box in config.bound_schedule:
        solver = z3.Solver()
        solver.set("timeout", config.z3_timeout_ms)
        solver.add(body)
        for x in every:
            solver.add(x >= 0, x <= box)
        answer = solver.check()
        logger.debug("bounded search at B=%d: %s", box, answer)
        if answer == z3.sat:
            m = solver.model()
            model = {name: m.eval(env[name], model_completion=True).as_long() for name in names}
            try:
                verified = evaluate(f, model, search_bound=box)
            except NotGroundCheckable:
                verified = False
            if verified:
                return Sat(tuple(sorted(model.items())))
            logger.warning("model rejected by re-verification at B=%d: %s", box, model)
        elif answer == z3.unsat and _exact_at(bounds, box):
            return Unsat()
    return Unknown(config.max_bound)


# =============================================================================
# Printing
# =============================================================================

def to_prefix(f: PadFormula) -> str:
    """Human-readable prefix syntax."""
    if isinstance(f, Leq):
        return f"(<= {f.lhs.format()} {f.rhs.format()})"
    if isinstance(f, Eq):
        return f"(= {f.lhs.format()} {f.rhs.format()})"
    if isinstance(f, Divides):
        return f"(| {f.divisor.format()} {f.dividend.format()})"
    if isinstance(f, And):
        return "true" if not f.parts else "(and " + " ".join(to_prefix(p) for p in f.parts) + ")"
    if isinstance(f, Or):
        return "false" if not f.parts else "(or " + " ".join(to_prefix(p) for p in f.parts) + ")"
    return f"(exists ({f.variable}) {to_prefix(f.body)})"


def to_smtlib(f: PadFormula) -> str:
    """SMT-LIB script asserting f with naturals as non-negative integers."""
    names = sorted(free_variables(f))
    env = {name: z3.Int(name) for name in names}
    solver = z3.Solver()
    for x in env.values():
        solver.add(x >= 0)
    solver.add(_Translator(skolemize=False)(f, env))
    return solver.to_smt2()
