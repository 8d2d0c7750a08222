"""
Pytest configuration for weq tests.
"""

import pytest
import sys
from pathlib import Path


# Ensure weq package is importable
sys.path.insert(0, str(Path(__file__).parent.parent))

PROBLEMS = Path(__file__).parent.parent / "problems"


@pytest.fixture
def config():
    """Test profile limits."""
    from weq.config import load_config
    return load_config("test", environ={})


@pytest.fixture
def sig_ab():
    """Alphabet {a, b}, variables x, y, z."""
    from weq.core_terms import Signature
    return Signature.of("ab", "xyz")


@pytest.fixture
def sig_hash():
    """Alphabet {a, b, #}, variables x, y, z."""
    from weq.core_terms import Signature
    return Signature.of("ab#", "xyz")


@pytest.fixture
def hash_ab():
    """NFA for #(a+b)* over {a, b, #}."""
    from weq.automata import nfa_from_transitions
    return nfa_from_transitions(3, [(0, 2, 1), (1, 0, 1), (1, 1, 1)], initial=0, final=1)


@pytest.fixture
def problem_path():
    """Path to a shipped problem file by stem."""
    def _path(stem: str) -> Path:
        return PROBLEMS / f"{stem}.weq"
    return _path


@pytest.fixture
def swap_ab_problem():
    """x a b y = y a b x over {a, b}, variables x, y only."""
    from weq.core_terms import Signature, parse_equation
    from weq.solver import Problem
    sig = Signature.of("ab", "xy")
    return Problem(sig, parse_equation("x a b y = y a b x", sig))


@pytest.fixture
def shift_ab_problem(sig_ab):
    """x a b y = y z."""
    from weq.core_terms import parse_equation
    from weq.solver import Problem
    return Problem(sig_ab, parse_equation("x a b y = y z", sig_ab))


@pytest.fixture
def marked_problem(sig_hash, hash_ab):
    """x z = z y with x, y ∈ #(a+b)*."""
    from weq.automata import RegularConstraint
    from weq.core_terms import parse_equation
    from weq.solver import Problem
    x, y = sig_hash.variable("x"), sig_hash.variable("y")
    constraints = frozenset({
        RegularConstraint(x, hash_ab, 0, 1),
        RegularConstraint(y, hash_ab, 0, 1),
    })
    return Problem(sig_hash, parse_equation("x z = z y", sig_hash), constraints)


@pytest.fixture
def example1_problem(sig_ab):
    """y a b z = z x: |x| = |y| + 2 with |z| free."""
    from weq.core_terms import parse_equation
    from weq.solver import Problem
    return Problem(sig_ab, parse_equation("y a b z = z x", sig_ab))
