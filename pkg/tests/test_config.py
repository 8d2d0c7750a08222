"""
Tests for solver configuration profiles and the WEQ_BUDGET override.
"""

import pytest

from weq.config import (
    CI_CONFIG,
    DEVELOPMENT_CONFIG,
    TEST_CONFIG,
    SolverConfig,
    budget_override,
    load_config,
)
from weq.errors import ConfigError, WeqError


class TestProfiles:
    """Named profiles."""

    def test_default_is_development(self):
        assert load_config(environ={}) is DEVELOPMENT_CONFIG

    def test_named_profiles(self):
        assert load_config("test", environ={}) is TEST_CONFIG
        assert load_config("ci", environ={}) is CI_CONFIG

    def test_unknown_profile_falls_back(self):
        assert load_config("staging", environ={}) is DEVELOPMENT_CONFIG

    def test_ci_is_tighter(self):
        assert CI_CONFIG.node_budget < DEVELOPMENT_CONFIG.node_budget
        assert CI_CONFIG.max_bound < DEVELOPMENT_CONFIG.max_bound

    def test_max_bound(self):
        assert SolverConfig(bound_schedule=(4, 9)).max_bound == 9


class TestValidation:
    """SolverConfig rejects nonsense limits."""

    @pytest.mark.parametrize("field", ["node_budget", "search_budget", "path_budget", "oracle_budget"])
    def test_non_positive_budget(self, field):
        with pytest.raises(ConfigError):
            SolverConfig(**{field: 0})

    def test_empty_schedule(self):
        with pytest.raises(ConfigError):
            SolverConfig(bound_schedule=())

    def test_decreasing_schedule(self):
        with pytest.raises(ConfigError):
            SolverConfig(bound_schedule=(64, 16))

    def test_negative_enumeration_bound(self):
        with pytest.raises(ConfigError):
            SolverConfig(enumeration_bound=-1)

    def test_config_error_is_value_error(self):
        with pytest.raises(ValueError):
            SolverConfig(node_budget=-5)


class TestBudgetOverride:
    """WEQ_BUDGET environment variable."""

    def test_unset(self):
        assert budget_override({}) is None
        assert budget_override({"WEQ_BUDGET": "  "}) is None

    def test_override_applies_to_both_caps(self):
        config = load_config("test", environ={"WEQ_BUDGET": "1234"})
        assert config.node_budget == 1234
        assert config.search_budget == 1234
        assert config.path_budget == TEST_CONFIG.path_budget

    def test_malformed(self):
        with pytest.raises(ConfigError):
            budget_override({"WEQ_BUDGET": "lots"})

    def test_non_positive(self):
        with pytest.raises(WeqError):
            load_config(environ={"WEQ_BUDGET": "0"})


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
