"""
Tests for PAD terms, formulas, evaluation, interval bounds and the
bounded z3 backend.
"""

import math

import pytest
from hypothesis import given, settings
from hypothesis.strategies import integers

from weq.automata import UnarySemilinear
from weq.errors import NotGroundCheckable, UnboundVariable
from weq.pad_logic import (
    FALSE,
    TRUE,
    Divides,
    Exists,
    LinearTerm,
    Leq,
    Sat,
    Unknown,
    Unsat,
    conj,
    const,
    derive_bounds,
    disj,
    divides,
    eq,
    evaluate,
    exists,
    fresh,
    free_variables,
    geq,
    gt,
    is_satisfiable,
    leq,
    lower_unary_membership,
    lt,
    neq,
    size,
    substitute,
    to_prefix,
    to_smtlib,
    var,
)

x, y, k = var("x"), var("y"), var("k")


class TestLinearTerm:
    """Normalized linear combinations."""

    def test_arithmetic(self):
        assert x * 2 + 3 - x == LinearTerm.of({"x": 1}, 3)
        assert 5 - x == LinearTerm.of({"x": -1}, 5)
        assert (x - x).is_constant

    def test_evaluate(self):
        assert (x * 3 + y - 1).evaluate({"x": 2, "y": 4}) == 9

    def test_unbound(self):
        with pytest.raises(UnboundVariable):
            (x + y).evaluate({"x": 1})

    def test_substitute(self):
        assert (x * 2 + y).substitute({"x": y + 1}) == LinearTerm.of({"y": 3}, 2)

    def test_format(self):
        assert (x * 2 + 1).format() == "(+ (* 2 x) 1)"
        assert const(0).format() == "0"
        assert x.format() == "x"

    def test_fresh_names_differ(self):
        assert fresh() != fresh()
        assert "#" in fresh("d")


class TestConstructors:
    """Constant folding and flattening."""

    def test_ground_atoms_fold(self):
        assert leq(3, 5) == TRUE
        assert eq(x, x) == TRUE
        assert eq(1, 2) == FALSE
        assert lt(x, y) == Leq(x + 1, y)
        assert gt(2, 1) == TRUE
        assert geq(x, 0) != FALSE

    def test_conj_disj(self):
        a = leq(x, 3)
        assert conj(TRUE, a) == a
        assert conj(a, FALSE) == FALSE
        assert disj(FALSE, a) == a
        assert disj(a, TRUE) == TRUE
        assert disj(a, a) == a
        assert conj() == TRUE and disj() == FALSE

    def test_flattening(self):
        a, b, c = leq(x, 1), leq(y, 2), leq(x, y)
        assert conj(conj(a, b), c).parts == (a, b, c)

    def test_divides(self):
        assert divides(1, x) == TRUE
        assert divides(3, 6) == TRUE
        assert divides(0, 0) == TRUE
        assert divides(0, 5) == FALSE
        assert divides(4, 6) == FALSE
        assert isinstance(divides(x, y), Divides)

    def test_neq(self):
        f = neq(x, 2)
        assert not evaluate(f, {"x": 2})
        assert evaluate(f, {"x": 3})

    def test_exists_nests(self):
        f = exists(["a", "b"], eq(var("a"), var("b")))
        assert isinstance(f, Exists) and f.variable == "a"
        assert f.body.variable == "b"

    def test_free_variables(self):
        f = conj(leq(x, 3), Exists("k", eq(y, k * 2)))
        assert free_variables(f) == frozenset({"x", "y"})

    def test_substitute_folds(self):
        assert substitute(leq(x, 3), {"x": const(2)}) == TRUE
        f = Exists("k", eq(x, k * 2))
        assert substitute(f, {"k": const(1)}) == f

    def test_size(self):
        assert size(TRUE) == 1
        assert size(conj(leq(x, 1), Exists("k", eq(y, k)))) == 4


class TestEvaluate:
    """Ground truth under a valuation."""

    def test_divides_zero(self):
        assert evaluate(Divides(const(0), x), {"x": 0})
        assert not evaluate(Divides(const(0), x), {"x": 3})

    def test_even(self):
        f = Exists("k", eq(y, k * 2))
        assert evaluate(f, {"y": 4})
        assert not evaluate(f, {"y": 3})

    def test_unbounded_existential(self):
        f = Exists("k", leq(x, k))
        with pytest.raises(NotGroundCheckable):
            evaluate(f, {"x": 1})
        assert evaluate(f, {"x": 1}, search_bound=5)

    def test_missing_variable(self):
        with pytest.raises(UnboundVariable):
            evaluate(leq(x, 3), {})
        with pytest.raises(UnboundVariable):
            evaluate(Exists("k", eq(x, k)), {})


class TestDeriveBounds:
    """Interval propagation."""

    def test_box(self):
        assert derive_bounds(conj(leq(x, 5), geq(x, 2)))["x"] == (2, 5)

    def test_refutes(self):
        assert derive_bounds(conj(leq(x, 1), geq(x, 2))) is None

    def test_disjunction_hull(self):
        assert derive_bounds(disj(eq(x, 1), eq(x, 4)))["x"] == (1, 4)

    def test_open_side(self):
        bounds = derive_bounds(leq(x, y))
        assert bounds["y"][1] == math.inf

    def test_propagates_through_sums(self):
        bounds = derive_bounds(eq(x + y, 7))
        assert bounds["x"] == (0, 7) and bounds["y"] == (0, 7)

    def test_bound_variables_reported(self):
        bounds = derive_bounds(conj(leq(x, 6), Exists("k", eq(x, k * 2))))
        assert bounds["k"] == (0, 3)

    def test_known_values(self):
        assert derive_bounds(leq(x + y, 5), {"x": 6}) is None


class TestUnaryMembership:
    """A ∪ (A′ + bℕ) lowered to PAD."""

    @given(integers(0, 40))
    @settings(max_examples=60, deadline=None)
    def test_matches_semilinear(self, n):
        u = UnarySemilinear(frozenset({1}), frozenset({4}), 3)
        assert evaluate(lower_unary_membership(var("n"), u), {"n": n}) == (n in u)

    def test_period_one_is_inequality(self):
        f = lower_unary_membership(x, UnarySemilinear.at_least(2))
        assert f == geq(x, 2)

    def test_empty_set(self):
        assert lower_unary_membership(x, UnarySemilinear()) == FALSE


class TestSatisfiability:
    """Bounded z3 search."""

    def test_sat(self, config):
        result = is_satisfiable(conj(eq(x + y, 7), geq(x, 5)), config)
        assert isinstance(result, Sat)
        model = result.as_dict()
        assert model["x"] + model["y"] == 7 and model["x"] >= 5

    def test_unsat_by_propagation(self, config):
        assert is_satisfiable(conj(leq(x, 3), geq(x, 5)), config) == Unsat()

    def test_divisibility_sat(self, config):
        f = conj(divides(3, x), divides(5, x), geq(x, 1), leq(x, 100))
        result = is_satisfiable(f, config)
        assert isinstance(result, Sat)
        assert result.as_dict()["x"] % 15 == 0

    def test_unsat_inside_box(self, config):
        f = conj(leq(x, 10), divides(4, x), eq(x, y * 2 + 1))
        assert is_satisfiable(f, config) == Unsat()

    def test_existential_model_verified(self, config):
        f = conj(Exists("k", eq(x, k * 2 + 1)), geq(x, 3))
        result = is_satisfiable(f, config)
        assert isinstance(result, Sat)
        assert result.as_dict()["x"] % 2 == 1

    def test_unknown_beyond_schedule(self, config):
        assert is_satisfiable(geq(x, 100_000), config) == Unknown(config.max_bound)

    def test_trivial(self, config):
        assert isinstance(is_satisfiable(TRUE, config), Sat)
        assert is_satisfiable(FALSE, config) == Unsat()


class TestPrinting:
    """Prefix and SMT-LIB output."""

    def test_prefix(self):
        assert to_prefix(conj(leq(x, 3), divides(2, y))) == "(and (<= x 3) (| 2 y))"
        assert to_prefix(Exists("k", eq(y, k * 2))) == "(exists (k) (= y (* 2 k)))"
        assert to_prefix(TRUE) == "true"
        assert to_prefix(FALSE) == "false"

    def test_smtlib(self):
        script = to_smtlib(conj(leq(x, 3), Exists("k", eq(y, k * 2))))
        assert "declare-fun x" in script
        assert "(assert" in script
        assert "exists" in script


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
