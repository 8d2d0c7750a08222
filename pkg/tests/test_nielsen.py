"""
Tests for Nielsen rewriting: rule shapes, the reachable graph, annotated
rewriting and witness replay.
"""

import random

import pytest

from weq.automata import RegularConstraint
from weq.config import SolverConfig
from weq.core_terms import (
    EMPTY_WORD,
    Assignment,
    Variable,
    check_solution,
    is_quadratic,
    is_regular_oriented,
    letters_word,
    parse_equation,
)
from weq.errors import BudgetExceeded, InconsistentGuess, NotQuadratic
from weq.nielsen import (
    TARGET_STATE,
    RewriteState,
    RuleKind,
    RuleLabel,
    annotated_step,
    build_graph,
    is_solvable,
    is_solvable_with_witness,
    make_state,
    successors,
    trace_solution,
    witness_from_path,
)
from weq.oracle import iter_solutions

from corpus import SIG_AB, problem_for, quadratic_corpus, regular_oriented_corpus

X, Y, Z = Variable(0), Variable(1), Variable(2)


def state(text, sig=SIG_AB, constraints=()):
    return make_state(parse_equation(text, sig), constraints)


def targets(s, sig=SIG_AB):
    return {(e.rule.kind, e.target.equation.format(sig)) for e in successors(s)}


class TestRuleShapes:
    """One-step successors."""

    def test_commutation(self):
        assert targets(state("x y = y x")) == {
            (RuleKind.ERASE_LHS, "y = y"),
            (RuleKind.ERASE_RHS, "x = x"),
            (RuleKind.P4_ALPHA, "x y = y x"),
            (RuleKind.P4_BETA, "x y = y x"),
        }

    def test_conjugation(self):
        assert targets(state("x y = y z")) == {
            (RuleKind.ERASE_LHS, "y = y z"),
            (RuleKind.ERASE_RHS, "x = z"),
            (RuleKind.P4_ALPHA, "x y = y z"),
            (RuleKind.P4_BETA, "x y = z"),
        }

    def test_constant_against_variable(self):
        assert targets(state("a x = x a")) == {
            (RuleKind.ERASE_RHS, "a = a"),
            (RuleKind.P2, "a x = x a"),
        }

    def test_variable_against_constant(self):
        assert targets(state("x b = b x")) == {
            (RuleKind.ERASE_LHS, "b = b"),
            (RuleKind.P3, "x b = b x"),
        }

    def test_equal_heads(self):
        assert targets(state("a x = a y")) == {(RuleKind.P1, "x = y")}

    def test_clashing_constants(self):
        assert successors(state("a x = b x")) == []

    def test_one_side_empty(self):
        assert targets(state("x = ε")) == {(RuleKind.ERASE_LHS, "ε = ε")}
        assert successors(state("a = ε")) == []

    def test_target_has_no_successors(self):
        assert TARGET_STATE.is_target
        assert successors(TARGET_STATE) == []

    def test_size_never_grows(self):
        for e in quadratic_corpus(seed=11, count=40):
            s = make_state(e)
            for edge in successors(s):
                assert edge.target.equation.size <= e.size


class TestLabels:
    """Rule labels."""

    def test_format(self):
        assert RuleLabel.p4_alpha(X, Y).format(SIG_AB) == "P4-alpha(x,y)"
        assert RuleLabel.p1().format() == "P1"
        assert RuleLabel.erase_rhs(Z).format() == "erase-rhs(X2)"

    def test_erased(self):
        assert RuleLabel.erase_lhs(X).erased == X
        assert RuleLabel.erase_rhs(Y).is_erase
        assert RuleLabel.p2(Y).erased is None


class TestConstrainedRewriting:
    """Midpoint guessing through regular constraints."""

    def test_stray_constraint(self, hash_ab):
        with pytest.raises(ValueError):
            RewriteState(parse_equation("x = a", SIG_AB), frozenset({RegularConstraint(Y, hash_ab, 0, 1)}))

    def test_erase_needs_epsilon(self, sig_hash, hash_ab):
        c = RegularConstraint(X, hash_ab, 0, 1)
        s = make_state(parse_equation("x = ε", sig_hash), [c])
        assert successors(s) == []
        s = make_state(parse_equation("x = ε", sig_hash), [c.with_states(1, 1)])
        assert [e.target for e in successors(s)] == [TARGET_STATE]

    def test_letter_moves_constraint(self, sig_hash, hash_ab):
        c = RegularConstraint(X, hash_ab, 0, 1)
        s = make_state(parse_equation("x = # a", sig_hash), [c])
        (edge,) = successors(s)
        assert edge.rule.kind is RuleKind.P3
        assert edge.midpoints == (1,)
        assert edge.target.constraints == frozenset({c.with_states(1, 1)})

    def test_wrong_letter_blocks(self, sig_hash, hash_ab):
        c = RegularConstraint(X, hash_ab, 0, 1)
        assert successors(make_state(parse_equation("x = a", sig_hash), [c])) == []

    def test_constrained_solvability(self, sig_hash, hash_ab):
        c = RegularConstraint(X, hash_ab, 0, 1)
        assert is_solvable(make_state(parse_equation("x = # a b", sig_hash), [c]))
        assert not is_solvable(make_state(parse_equation("x = a # b", sig_hash), [c]))

    def test_variable_prefix_splits_slice(self, sig_hash, hash_ab):
        c = RegularConstraint(Y, hash_ab, 0, 1)
        s = make_state(parse_equation("x y = y z", sig_hash), [c])
        p4 = [e for e in successors(s) if e.rule.kind is RuleKind.P4_ALPHA]
        # midpoint 0 (x gets A[0,0]) or 1 (x gets A[0,1])
        assert sorted(e.midpoints for e in p4) == [(0,), (1,)]
        for e in p4:
            (r,) = e.midpoints
            assert RegularConstraint(X, hash_ab, 0, r) in e.post_constraints
            assert RegularConstraint(Y, hash_ab, r, 1) in e.post_constraints


class TestGraph:
    """Reachable rewrite graphs."""

    def test_not_quadratic(self):
        with pytest.raises(NotQuadratic):
            build_graph(state("x x x = a"))

    def test_budget(self):
        with pytest.raises(BudgetExceeded):
            build_graph(state("x y = y x"), SolverConfig(node_budget=1))

    def test_root_is_node_zero(self):
        g = build_graph(state("x a b y = y a b x"))
        assert g.index(g.root) == 0
        assert g.target is TARGET_STATE
        assert len(g) == len(g.nodes)

    def test_unsolvable(self):
        g = build_graph(state("a x = b x"))
        assert len(g) == 1
        assert g.target is None
        assert g.path_to_target() is None
        assert not is_solvable(state("a x = b x"))

    def test_path_to_target(self):
        g = build_graph(state("x a b y = y a b x"))
        path = g.path_to_target()
        assert path[0].source == g.root
        assert path[-1].target == TARGET_STATE
        for a, b in zip(path, path[1:]):
            assert a.target == b.source

    def test_to_networkx(self):
        g = build_graph(state("x y = y x"))
        nxg = g.to_networkx()
        assert nxg.number_of_nodes() == len(g)
        assert nxg.number_of_edges() == len(g.edges)

    def test_to_dot(self):
        source = build_graph(state("x y = y z")).to_dot(SIG_AB)
        assert "digraph" in source
        assert "doublecircle" in source
        assert "P4-alpha(x,y)" in source

    def test_regular_oriented_closure(self):
        for e in regular_oriented_corpus(seed=5, count=40):
            assert is_regular_oriented(e)
            g = build_graph(make_state(e))
            for s in g.nodes:
                assert is_regular_oriented(s.equation)
                assert is_quadratic(s.equation)


class TestAnnotatedRewriting:
    """σ-guided steps and the trace from a solution to ε=ε."""

    def test_erase_nonempty(self):
        s = state("x y = y x")
        edge = next(e for e in successors(s) if e.rule.kind is RuleKind.ERASE_LHS)
        with pytest.raises(InconsistentGuess):
            annotated_step(s, Assignment({X: letters_word([0]), Y: EMPTY_WORD}), edge)

    def test_p4_drops_prefix(self):
        s = state("x y = y z")
        edge = next(e for e in successors(s) if e.rule.kind is RuleKind.P4_ALPHA)
        sigma = Assignment({X: letters_word([0, 1]), Y: letters_word([0, 1, 0]), Z: letters_word([1, 0])})
        assert check_solution(s.equation, sigma)
        nxt = annotated_step(s, sigma, edge)
        assert nxt[Y] == letters_word([0])
        assert check_solution(edge.target.equation, nxt)

    def test_trace_swap_ab(self):
        root = state("x a b y = y a b x")
        sigma = Assignment({X: EMPTY_WORD, Y: letters_word([0, 1])})
        steps = trace_solution(root, sigma)
        assert steps is not None
        assert steps[-1][0].target == TARGET_STATE
        for edge, nxt in steps:
            assert check_solution(edge.target.equation, nxt)

    def test_trace_rejects_non_solution(self):
        root = state("x a b y = y a b x")
        assert trace_solution(root, Assignment({X: letters_word([0]), Y: letters_word([1])})) is None

    def test_every_small_solution_traces(self):
        for e in quadratic_corpus(seed=3, count=25, max_side=5):
            p = problem_for(e)
            root = make_state(p.equation)
            for values in [(0, 0, 0), (1, 1, 1), (1, 2, 0), (2, 1, 2)]:
                v = p.lengths(dict(zip(p.signature.variables, values)))
                for sigma in list(iter_solutions(p, v))[:4]:
                    assert trace_solution(root, sigma) is not None


class TestWitnesses:
    """Replaying graph paths into solutions."""

    def test_swap_ab_witness(self):
        root = state("x a b y = y a b x")
        sigma = is_solvable_with_witness(root)
        assert sigma is not None
        assert check_solution(root.equation, sigma)

    def test_unsolvable_has_no_witness(self):
        assert is_solvable_with_witness(state("a x = b x")) is None

    def test_constrained_witness(self, sig_hash, hash_ab):
        c = RegularConstraint(X, hash_ab, 0, 1)
        root = make_state(parse_equation("x y = y x", sig_hash), [c])
        sigma = is_solvable_with_witness(root)
        assert sigma is not None
        assert check_solution(root.equation, sigma)
        assert sigma[X].letters()[0] == 2

    def test_corpus_witnesses(self):
        rng = random.Random(17)
        for e in quadratic_corpus(seed=rng.randrange(1000), count=30):
            root = make_state(e)
            path = build_graph(root).path_to_target()
            if path is None:
                continue
            sigma = witness_from_path(path)
            assert check_solution(e, sigma)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
