"""
Solver configuration.

Profiles are plain dataclasses; load_config() picks one by name and applies
the WEQ_BUDGET environment override.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from typing import Mapping, Optional, Tuple

from weq.errors import ConfigError

BUDGET_ENV_VAR = "WEQ_BUDGET"


@dataclass(frozen=True)
class SolverConfig:
    """Limits for every search the toolkit performs."""

    # Rewrite graph
    node_budget: int = 1_000_000

    # Exhaustive pre* search (memo entries)
    search_budget: int = 2_000_000

    # Path schemas enumerated by flat_reachability
    path_budget: int = 20_000

    # Bounded-model search for PAD formulas
    bound_schedule: Tuple[int, ...] = (16, 64, 256, 1024)
    z3_timeout_ms: int = 20_000

    # Fallback grid radius when the length constraint is unbounded
    enumeration_bound: int = 8

    # Brute-force oracle
    oracle_budget: int = 1_000_000

    def __post_init__(self) -> None:
        for name in ("node_budget", "search_budget", "path_budget",
                     "z3_timeout_ms", "oracle_budget"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.enumeration_bound < 0:
            raise ConfigError(f"enumeration_bound must be >= 0, got {self.enumeration_bound}")
        if not self.bound_schedule or any(b <= 0 for b in self.bound_schedule):
            raise ConfigError(f"bound_schedule must be positive, got {self.bound_schedule}")
        if list(self.bound_schedule) != sorted(self.bound_schedule):
            raise ConfigError("bound_schedule must be increasing")

    @property
    def max_bound(self) -> int:
        return self.bound_schedule[-1]


# Default profiles

DEVELOPMENT_CONFIG = SolverConfig()

TEST_CONFIG = SolverConfig(
    node_budget=200_000,
    search_budget=500_000,
    path_budget=5_000,
    z3_timeout_ms=10_000,
)

CI_CONFIG = SolverConfig(
    node_budget=100_000,
    search_budget=250_000,
    path_budget=2_000,
    bound_schedule=(16, 64, 256),
    z3_timeout_ms=5_000,
    enumeration_bound=6,
)

_PROFILES = {
    "development": DEVELOPMENT_CONFIG,
    "test": TEST_CONFIG,
    "ci": CI_CONFIG,
}


def budget_override(environ: Optional[Mapping[str, str]] = None) -> Optional[int]:
    """Read WEQ_BUDGET; None when unset or empty."""
    env = os.environ if environ is None else environ
    raw = env.get(BUDGET_ENV_VAR, "").strip()
    if not raw:
        return None
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{BUDGET_ENV_VAR} must be an integer, got {raw!r}") from None
    if value <= 0:
        raise ConfigError(f"{BUDGET_ENV_VAR} must be positive, got {value}")
    return value


def load_config(
    environment: str = "development",
    environ: Optional[Mapping[str, str]] = None,
) -> SolverConfig:
    """Load the named profile, then apply WEQ_BUDGET to the node and search caps."""
    config = _PROFILES.get(environment, DEVELOPMENT_CONFIG)
    budget = budget_override(environ)
    if budget is not None:
        config = replace(config, node_budget=budget, search_budget=budget)
    return config
