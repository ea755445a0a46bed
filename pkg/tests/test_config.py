"""
Tests for configuration module.
"""

from pathlib import Path

import pytest

from spinelab.config import (
    PRESETS,
    Analyzer,
    BranchingPolicy,
    Budgets,
    EoConfig,
    EoProblem,
    GenModel,
    Problem,
    SpineEstimator,
    SweepConfig,
    density_grid,
    load_config,
    parse_config_text,
)


class TestProblem:
    """Test Problem enum."""

    def test_problem_values(self):
        """Test problem enum values."""
        assert Problem.K_SAT.value == "k-sat"
        assert Problem.ONE_IN_K_SAT.value == "1-in-k-sat"
        assert Problem.K_XOR_SAT.value == "k-xor-sat"
        assert Problem.TWO_SAT.value == "2-sat"
        assert Problem.COL3.value == "3col"
        assert Problem.GBP.value == "gbp"

    def test_graph_problems(self):
        """Test that only 3col and gbp are graph problems."""
        assert Problem.COL3.is_graph
        assert Problem.GBP.is_graph
        assert not Problem.K_SAT.is_graph

    def test_invalid_problem(self):
        """Test invalid problem raises error."""
        with pytest.raises(ValueError):
            Problem("4col")


class TestPolicies:
    """Test branching policy and estimator enums."""

    def test_policy_from_string(self):
        """Test creating policies from their short names."""
        assert BranchingPolicy("moms") == BranchingPolicy.MOMS
        assert BranchingPolicy("lex") == BranchingPolicy.LEXICOGRAPHIC
        assert BranchingPolicy("jw") == BranchingPolicy.JEROSLOW_WANG

    def test_estimator_from_string(self):
        """Test spine estimator names."""
        assert SpineEstimator("mus-bound") == SpineEstimator.MUS_BOUND


class TestBudgets:
    """Test Budgets dataclass."""

    def test_defaults(self):
        """Test default budgets."""
        budgets = Budgets()
        assert budgets.budget_n == 12
        assert budgets.exhaustive_rows == 2 ** 20
        assert budgets.gbp_exact_n == 20
        assert budgets.col3_exact_n == 15
        assert budgets.mu_m == 14

    def test_dict_round_trip(self):
        """Test from_dict(to_dict()) keeps every field."""
        budgets = Budgets(budget_n=8, mu_m=10)
        assert Budgets.from_dict(budgets.to_dict()) == budgets


class TestEoConfig:
    """Test EoConfig dataclass."""

    def test_defaults(self):
        """Test default schedule."""
        cfg = EoConfig()
        assert cfg.tau == 1.4
        assert cfg.restarts == 20
        assert cfg.steps_for(10) == 2000
        assert cfg.problem == EoProblem.COL3

    def test_explicit_steps(self):
        """Test that explicit steps override 200 n."""
        assert EoConfig(steps=7).steps_for(100) == 7

    def test_tau_must_exceed_one(self):
        """Test tau <= 1 is rejected."""
        with pytest.raises(ValueError):
            EoConfig(tau=1.0)

    def test_steps_must_be_positive(self):
        """Test zero steps are rejected."""
        with pytest.raises(ValueError):
            EoConfig(steps=0)

    def test_from_dict_problem(self):
        """Test problem strings are converted to the enum."""
        assert EoConfig.from_dict({"problem": "gbp"}).problem == EoProblem.GBP


class TestSweepConfig:
    """Test SweepConfig dataclass."""

    def test_default_config(self):
        """Test default configuration values."""
        cfg = SweepConfig()
        assert cfg.problem == Problem.K_SAT
        assert cfg.k == 3
        assert cfg.samples == 10
        assert cfg.analyzers == [Analyzer.SAT]
        assert cfg.model == GenModel.SAT_NEG

    def test_graph_model(self):
        """Test graph problems sample graphs."""
        assert SweepConfig(problem=Problem.GBP).model == GenModel.GRAPH

    def test_two_sat_forces_arity(self):
        """Test that 2-SAT always runs with k = 2."""
        assert SweepConfig(problem=Problem.TWO_SAT, k=3).k == 2

    def test_zero_samples_rejected(self):
        """Test samples < 1 is rejected."""
        with pytest.raises(ValueError, match="samples"):
            SweepConfig(samples=0)

    def test_grid_must_increase(self):
        """Test a non-increasing density grid is rejected."""
        with pytest.raises(ValueError, match="increasing"):
            SweepConfig(densities=[1.0, 1.0])
        with pytest.raises(ValueError, match="increasing"):
            SweepConfig(densities=[2.0, 1.0])

    def test_empty_grid_rejected(self):
        """Test an empty density grid is rejected."""
        with pytest.raises(ValueError):
            SweepConfig(densities=[])

    def test_from_dict(self):
        """Test creating config from dictionary."""
        data = {
            "problem": "k-xor-sat",
            "n_values": [8, 12],
            "densities": [0.5, 0.9],
            "analyzers": ["sat", "spine"],
            "spine_estimator": "mus-bound",
            "policy": "jw",
            "budgets": {"budget_n": 9},
            "eo": {"tau": 1.6},
            "csv_path": "out.csv",
        }
        cfg = SweepConfig.from_dict(data)
        assert cfg.problem == Problem.K_XOR_SAT
        assert cfg.analyzers == [Analyzer.SAT, Analyzer.SPINE]
        assert cfg.spine_estimator == SpineEstimator.MUS_BOUND
        assert cfg.policy == BranchingPolicy.JEROSLOW_WANG
        assert cfg.budgets.budget_n == 9
        assert cfg.eo.tau == 1.6
        assert cfg.csv_path == Path("out.csv")

    def test_to_dict(self):
        """Test converting config to dictionary."""
        cfg = SweepConfig(problem=Problem.GBP, n_values=[16], svg_path=Path("plot.svg"))
        data = cfg.to_dict()
        assert data["problem"] == "gbp"
        assert data["n_values"] == [16]
        assert data["svg_path"] == "plot.svg"
        assert "csv_path" not in data
        assert SweepConfig.from_dict(data).problem == Problem.GBP


class TestDensityGrid:
    """Test density_grid helper."""

    def test_inclusive_grid(self):
        """Test both endpoints are included."""
        assert density_grid(0.5, 1.5, 0.5) == [0.5, 1.0, 1.5]

    def test_rounding(self):
        """Test float steps do not accumulate error."""
        grid = density_grid(0.6, 1.2, 0.1)
        assert grid == [0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2]

    def test_bad_step(self):
        """Test non-positive steps are rejected."""
        with pytest.raises(ValueError):
            density_grid(0.0, 1.0, 0.0)


class TestConfigFiles:
    """Test key=value parsing and loading."""

    def test_parse_config_text(self):
        """Test lists, ranges, budgets and eo keys."""
        text = (
            "# a sweep\n"
            "problem = 2-sat\n"
            "n_values = 20, 40\n"
            "densities = 0.5:1.0:0.25, 1.5\n"
            "samples = 5\n"
            "analyzers = sat,spine\n"
            "budget_n = 10\n"
            "eo_tau = 1.5\n"
            "eo_restarts = 3\n"
            "progress = false\n"
        )
        data = parse_config_text(text)
        assert data["problem"] == "2-sat"
        assert data["n_values"] == [20, 40]
        assert data["densities"] == [0.5, 0.75, 1.0, 1.5]
        assert data["samples"] == 5
        assert data["analyzers"] == ["sat", "spine"]
        assert data["budgets"] == {"budget_n": 10}
        assert data["eo"] == {"tau": 1.5, "restarts": 3}
        assert data["progress"] is False

    def test_line_without_equals(self):
        """Test malformed lines name their line number."""
        with pytest.raises(ValueError, match="line 2"):
            parse_config_text("samples = 3\nbroken\n")

    def test_load_config(self, tmp_path):
        """Test loading a config file from disk."""
        path = tmp_path / "sweep.cfg"
        path.write_text("problem = gbp\nn_values = 8\ndensities = 1.0, 1.4\n")
        cfg = load_config(path)
        assert cfg.problem == Problem.GBP
        assert cfg.densities == [1.0, 1.4]

    def test_missing_config(self, tmp_path):
        """Test a missing file raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            load_config(tmp_path / "missing.cfg")


class TestPresets:
    """Test preset sweeps."""

    def test_preset_names(self):
        """Test every documented preset is registered."""
        assert set(PRESETS) == {"2-sat", "3-sat", "3-xor", "3col", "gbp"}

    def test_two_sat_preset(self):
        """Test the 2-SAT preset brackets c = 1."""
        cfg = PRESETS["2-sat"]
        assert cfg.k == 2
        assert min(cfg.densities) < 1.0 < max(cfg.densities)

    def test_gbp_preset_around_two_ln_two(self):
        """Test the GBP preset brackets mean degree 2 ln 2."""
        cfg = PRESETS["gbp"]
        assert min(cfg.densities) < 1.386 < max(cfg.densities)
        assert all(n % 2 == 0 for n in cfg.n_values)

    @pytest.mark.parametrize("name", ["2-sat", "3-xor"])
    def test_spine_presets_use_mus_bound(self, name):
        """Test the 2-SAT and 3-XOR presets measure f_S on the MUS lower bound."""
        cfg = PRESETS[name]
        assert Analyzer.SPINE in cfg.analyzers
        assert cfg.spine_estimator == SpineEstimator.MUS_BOUND

    def test_three_sat_preset_measures_resolution_cost(self):
        """Test the 3-SAT preset runs DPLL across 4.27 without a spine analyzer."""
        cfg = PRESETS["3-sat"]
        assert cfg.analyzers == [Analyzer.SAT, Analyzer.DPLL]
        assert min(cfg.densities) < 4.27 < max(cfg.densities)
