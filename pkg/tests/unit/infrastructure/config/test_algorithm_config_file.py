import pytest

from src.application.services.presets import preset
from src.domain.entities.algorithm_config import AlgorithmConfig, BudgetKind, SelectKind, TieBreak
from src.domain.errors import ConfigError, UnknownPreset
from src.infrastructure.config.algorithm_config_file import apply_overrides, parse_algorithm_config


def test_parse_preset_with_overrides():
    config = parse_algorithm_config(
        """
        # UCT with a smaller budget
        preset = mcts
        budget.trials = 200
        select.ucb_c = 1.0   # less exploration
        """
    )
    assert config.name == "mcts"
    assert config.budget.n == 200
    assert config.select.ucb_c == 1.0
    assert config.select.bf is SelectKind.UCB


def test_without_preset_starts_from_defaults():
    assert parse_algorithm_config("select.eps = 0.2\n") == AlgorithmConfig().model_copy(
        update={"select": AlgorithmConfig().select.model_copy(update={"eps": 0.2})}
    )


def test_kind_keys_apply_first():
    config = apply_overrides(preset("q_learning"), {"budget.trials": "5", "budget.kind": "exhaustive"})
    assert config.budget.kind is BudgetKind.EXHAUSTIVE
    assert config.budget.cap == 5


def test_eta_falls_back_to_local_rule():
    config = apply_overrides(preset("mc_search"), {"update.eta": "0.5"})
    assert config.update_local.eta == 0.5
    assert config.update_global is None


def test_optional_values_accept_none():
    config = apply_overrides(preset("q_learning"), {"depth.cap": "none", "select.nr": "greedy"})
    assert config.depth.cap is None
    assert config.select.nr is SelectKind.GREEDY


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError, match=r"unknown key 'select.alpha' \(line 2\)"):
        parse_algorithm_config("preset = sarsa\nselect.alpha = 1\n")


def test_line_without_equals():
    with pytest.raises(ConfigError, match="line 1: expected 'key = value'"):
        parse_algorithm_config("preset mcts\n")


def test_invalid_enum_lists_allowed_values():
    with pytest.raises(ConfigError, match="is not one of"):
        apply_overrides(preset("mcts"), {"select.bf": "softmax"})


def test_out_of_range_value():
    with pytest.raises(ConfigError, match="invalid value '1.5' for key 'update.lambda'"):
        apply_overrides(preset("td_lambda"), {"update.lambda": "1.5"})


def test_global_only_key_without_global_rule():
    with pytest.raises(ConfigError, match="no global update rule"):
        apply_overrides(preset("mcts"), {"update.baseline": "v_table"})


def test_duplicate_preset():
    with pytest.raises(ConfigError, match="more than once"):
        parse_algorithm_config("preset = mcts\npreset = sarsa\n")


def test_unknown_preset_reports_line():
    with pytest.raises(UnknownPreset, match="line 3:"):
        parse_algorithm_config("\n# base\npreset = policy_iteration\n")


def test_tie_break_and_known_threshold_keys():
    config = parse_algorithm_config(
        """
        preset = prioritized_sweeping
        select.ties = lowest
        ps.known_threshold = 0
        """
    )
    assert config.select.ties is TieBreak.LOWEST
    assert config.planning.known_threshold == 0
    assert preset("prioritized_sweeping").select.ties is TieBreak.RANDOM
