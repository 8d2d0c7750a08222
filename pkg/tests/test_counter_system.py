"""
Tests for counter systems: relations, construction, pre* search and flatness.
"""

import itertools
import random

import pytest

from weq.automata import UnarySemilinear
from weq.core_terms import Variable, parse_equation
from weq.counter_system import (
    Configuration,
    RelationKind,
    Transition,
    TransitionRelation,
    build_counter_system,
    build_counter_system_with_regex,
    check_cycle,
    cycle_shape,
    find_run,
    is_flat,
    pre_star_membership,
    random_run,
    reachable_values,
    relation_for,
    step,
)
from weq.errors import BudgetExceeded, NotACycle, WrongState
from weq.config import SolverConfig
from weq.nielsen import RuleKind, make_state, successors
from weq.oracle import membership

from corpus import SIG_AB, problem_for, quadratic_corpus, random_constraints, regular_oriented_corpus

X, Y, Z = Variable(0), Variable(1), Variable(2)


def system(text, sig=SIG_AB):
    return build_counter_system(parse_equation(text, sig))


def start(cs, **values):
    names = {"x": X, "y": Y, "z": Z}
    return Configuration.of(cs.root, {names[k]: n for k, n in values.items()})


def balanced(p, v):
    def side(w):
        return sum(v[s] if isinstance(s, Variable) else 1 for s in w)
    return side(p.equation.lhs) == side(p.equation.rhs)


class TestRelations:
    """Base relations and guards."""

    def test_identity(self):
        assert TransitionRelation.identity().apply({X: 3}) == {X: 3}

    def test_sub(self):
        r = TransitionRelation.sub(Y, X)
        assert r.apply({X: 2, Y: 5}) == {X: 2, Y: 3}
        assert r.apply({X: 5, Y: 5}) == {X: 5, Y: 0}
        assert r.apply({X: 0, Y: 5}) is None
        assert r.apply({X: 6, Y: 5}) is None
        assert r.changed == Y

    def test_sub_needs_distinct_counters(self):
        with pytest.raises(ValueError):
            TransitionRelation.sub(X, X)

    def test_dec(self):
        r = TransitionRelation.dec(X)
        assert r.apply({X: 1}) == {X: 0}
        assert r.apply({X: 0}) is None

    def test_erase_test(self):
        r = TransitionRelation.erase_test(X)
        assert r.apply({X: 0, Y: 4}) == {X: 0, Y: 4}
        assert r.apply({X: 1, Y: 4}) is None
        assert r.changed is None

    def test_dec_needs_counter(self):
        with pytest.raises(ValueError):
            TransitionRelation(RelationKind.DEC)

    def test_pre_guard(self):
        r = TransitionRelation.dec(X).guarded({Y: UnarySemilinear.finite([2])}, {})
        assert r.apply({X: 1, Y: 2}) == {X: 0, Y: 2}
        assert r.apply({X: 1, Y: 3}) is None

    def test_post_guard(self):
        even = UnarySemilinear(frozenset(), frozenset({0}), 2)
        r = TransitionRelation.sub(Y, X).guarded({}, {Y: even})
        assert r.apply({X: 1, Y: 3}) == {X: 1, Y: 2}
        assert r.apply({X: 2, Y: 3}) is None
        assert not r.unguarded

    def test_format(self):
        assert TransitionRelation.identity().format() == "Id"
        assert TransitionRelation.sub(Y, X).format(SIG_AB) == "Sub(y,x)"
        assert TransitionRelation.erase_test(Z).format(SIG_AB) == "EraseTest(z)"
        guarded = TransitionRelation.dec(X).guarded({X: UnarySemilinear.at_least(1)}, {})
        assert guarded.format(SIG_AB) == "Dec(x) [x∈[] ∪ [1]+1N]"

    def test_relation_for_rules(self):
        s = make_state(parse_equation("x y = y z", SIG_AB))
        by_kind = {e.rule.kind: relation_for(e) for e in successors(s)}
        assert by_kind[RuleKind.P4_ALPHA] == TransitionRelation.sub(Y, X)
        assert by_kind[RuleKind.P4_BETA] == TransitionRelation.sub(X, Y)
        assert by_kind[RuleKind.ERASE_LHS] == TransitionRelation.erase_test(X)
        assert by_kind[RuleKind.ERASE_RHS] == TransitionRelation.erase_test(Y)

    def test_relation_for_constants(self):
        s = make_state(parse_equation("a x = x a", SIG_AB))
        by_kind = {e.rule.kind: relation_for(e) for e in successors(s)}
        assert by_kind[RuleKind.P2] == TransitionRelation.dec(X)
        s = make_state(parse_equation("a x = a y", SIG_AB))
        (edge,) = successors(s)
        assert relation_for(edge) == TransitionRelation.identity()


class TestConfiguration:
    """(q, v) pairs."""

    def test_negative_counter(self):
        with pytest.raises(ValueError):
            Configuration.of(0, {X: -1})

    def test_order_independent(self):
        assert Configuration.of(0, {X: 1, Y: 2}) == Configuration(0, ((Y, 2), (X, 1)))

    def test_total(self):
        c = Configuration.of(0, {X: 1, Y: 2})
        assert c.total == 3
        assert c.value(Y) == 2


class TestConstruction:
    """CA(E) and CA(E, S)."""

    def test_root_and_counters(self):
        cs = system("x y = y z")
        assert cs.root == 0
        assert cs.counters == (X, Y, Z)
        assert cs.states[0].equation == parse_equation("x y = y z", SIG_AB)
        assert len(cs.target_states()) == 1

    def test_one_transition_per_edge(self):
        cs = system("x a b y = y a b x")
        assert len(cs.transitions) == len(cs.graph.edges)
        assert all(t.relation.unguarded for t in cs.transitions)

    def test_unsolvable_has_no_target(self):
        assert system("a x = b x").target_states() == frozenset()

    def test_endpoint_outside_states(self):
        cs = system("x = a")
        bad = Transition(99, 0, TransitionRelation.identity(), 42)
        with pytest.raises(ValueError):
            type(cs)(cs.counters, cs.states, cs.transitions + [bad])

    def test_guards_from_constraints(self, marked_problem):
        cs = build_counter_system_with_regex(marked_problem.equation, marked_problem.regular_constraints)
        root = cs.out(cs.root)
        assert root
        assert all(X in t.relation.pre for t in root)

    def test_to_networkx(self):
        cs = system("x y = y x")
        g = cs.to_networkx()
        assert g.number_of_edges() == len(cs.transitions)
        assert g.number_of_nodes() == len(cs.states)

    def test_to_dot(self):
        source = system("x y = y z").to_dot(SIG_AB)
        assert "Sub(y,x)" in source
        assert "EraseTest(x)" in source


class TestSemantics:
    """Steps, runs and pre* membership."""

    def test_wrong_state(self):
        cs = system("x y = y z")
        t = cs.out(cs.root)[0]
        with pytest.raises(WrongState):
            step(Configuration.of(t.source + 1, {X: 1, Y: 1, Z: 1}), t)

    def test_disabled_step(self):
        cs = system("x y = y z")
        erase = next(t for t in cs.out(cs.root) if t.relation.kind is RelationKind.ERASE_TEST)
        assert step(start(cs, x=1, y=1, z=1), erase) is None

    def test_conjugation_member(self):
        cs = system("x y = y z")
        run = find_run(cs, cs.target_states(), start(cs, x=1, y=2, z=1))
        assert run is not None
        assert run[-1][1].state in cs.target_states()

    def test_conjugation_non_member(self):
        cs = system("x y = y z")
        assert not pre_star_membership(cs, cs.target_states(), start(cs, x=1, y=1, z=2))

    def test_start_in_target(self):
        cs = system("ε = ε")
        c = Configuration.of(cs.root, {})
        assert find_run(cs, cs.target_states(), c) == []

    def test_budget(self):
        cs = system("x a b y = y a b x")
        with pytest.raises(BudgetExceeded):
            find_run(cs, cs.target_states(), start(cs, x=7, y=9), SolverConfig(search_budget=1))

    def test_reachable_values(self):
        cs = system("x y = y z")
        seen = reachable_values(cs, start(cs, x=1, y=2, z=1))
        assert start(cs, x=1, y=2, z=1) in seen
        assert any(c.state in cs.target_states() for c in seen)
        only_root = reachable_values(cs, start(cs, x=1, y=2, z=1), state=cs.root)
        assert {c.value(Y) for c in only_root} == {0, 1, 2}


class TestOracleAgreement:
    """pre* membership matches brute force."""

    def agree_on_grid(self, p, cs, bound):
        targets = cs.target_states()
        for values in itertools.product(range(bound + 1), repeat=len(p.variables)):
            v = p.lengths(dict(zip(p.signature.variables, values)))
            if not balanced(p, v):
                continue
            c = Configuration.of(cs.root, {x: v[x] for x in cs.counters})
            assert pre_star_membership(cs, targets, c) == membership(p, v), (
                f"{p.equation.format(p.signature)} at {values}"
            )

    @pytest.mark.slow
    def test_unconstrained_corpus(self):
        for e in quadratic_corpus(seed=21, count=50, max_side=8):
            p = problem_for(e)
            self.agree_on_grid(p, build_counter_system(p.equation), 6)

    @pytest.mark.slow
    def test_constrained_corpus(self):
        rng = random.Random(8)
        carried = 0
        for e in quadratic_corpus(seed=22, count=40, max_side=8):
            if carried == 10:
                break
            constraints = random_constraints(rng, e, max_states=3, one_weak=True)
            if not constraints:
                continue
            carried += 1
            p = problem_for(e, constraints)
            self.agree_on_grid(p, build_counter_system_with_regex(p.equation, p.regular_constraints), 6)
        assert carried == 10

    def test_marked(self, marked_problem):
        p = marked_problem
        cs = build_counter_system_with_regex(p.equation, p.regular_constraints)
        for values in itertools.product(range(4), repeat=3):
            v = p.lengths(dict(zip(p.signature.variables, values)))
            c = Configuration.of(cs.root, {x: v[x] for x in cs.counters})
            assert pre_star_membership(cs, cs.target_states(), c) == membership(p, v)


class TestTermination:
    """Every step decreases (Σ counters, |E|) lexicographically."""

    def check_run(self, cs, run):
        measures = [(c.total, cs.states[c.state].equation.size) for c in run]
        for before, after in zip(measures, measures[1:]):
            assert after < before
            assert after[1] <= before[1]
        assert len(run) - 1 <= run[0].total + cs.states[cs.root].equation.size

    def test_random_runs(self):
        rng = random.Random(4)
        for e in quadratic_corpus(seed=31, count=25):
            cs = build_counter_system(e)
            values = {x: rng.randint(0, 6) for x in cs.counters}
            self.check_run(cs, random_run(cs, Configuration.of(cs.root, values), rng))

    @pytest.mark.slow
    def test_ten_thousand_runs(self):
        rng = random.Random(5)
        runs = 0
        for e in quadratic_corpus(seed=32, count=50, max_side=8):
            cs = build_counter_system(e)
            for _ in range(200):
                values = {x: rng.randint(0, 8) for x in cs.counters}
                self.check_run(cs, random_run(cs, Configuration.of(cs.root, values), rng))
                runs += 1
        assert runs == 10_000


class TestFlatness:
    """Flat systems and cycle shapes."""

    def test_conjugation_is_flat(self):
        cs = system("x y = y z")
        report = is_flat(cs)
        assert report
        assert len(report.cycles) == 1
        assert cycle_shape(report.cycles[0]) == Y

    def test_commutation_is_not_flat(self):
        report = is_flat(system("x y = y x"))
        assert not report.flat
        assert report.cycles == ()
        assert frozenset({0}) in report.tangled

    def test_acyclic_is_flat(self):
        report = is_flat(system("x a = b y"))
        assert report.flat and report.cycles == ()

    def test_check_cycle(self):
        cs = system("x y = y z")
        with pytest.raises(NotACycle):
            check_cycle([])
        leaving = next(t for t in cs.out(cs.root) if t.target != cs.root)
        with pytest.raises(NotACycle):
            check_cycle([leaving])

    @pytest.mark.slow
    def test_regular_oriented_systems_are_flat(self):
        for e in regular_oriented_corpus(seed=51, count=100):
            report = is_flat(build_counter_system(e))
            assert report.flat, e.format()
            longest = max(len(e.lhs), len(e.rhs))
            for cycle in report.cycles:
                assert len(cycle) <= longest - 1
                assert cycle_shape(cycle) is not None

    @pytest.mark.slow
    def test_one_weak_constraints_keep_flatness(self):
        rng = random.Random(52)
        for e in regular_oriented_corpus(seed=53, count=60):
            cs = build_counter_system_with_regex(e, random_constraints(rng, e))
            assert is_flat(cs).flat, e.format()

    def test_shape_needs_one_counter(self):
        loop = [Transition(0, 0, TransitionRelation.sub(Y, X), 1), Transition(1, 1, TransitionRelation.dec(X), 0)]
        assert cycle_shape(loop) is None
        loop = [Transition(0, 0, TransitionRelation.sub(Y, X), 1), Transition(1, 1, TransitionRelation.dec(Y), 0)]
        assert cycle_shape(loop) == Y
        assert cycle_shape([Transition(0, 0, TransitionRelation.identity(), 0)]) is None


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
