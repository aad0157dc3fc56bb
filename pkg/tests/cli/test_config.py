from pathlib import Path

import pytest

from src.cli.commands import epsilon_rule_from_config, experiment_spec_from_config
from src.utils.config_manager import ConfigManager, RunConfig, load_config, parse_flat_config
from src.utils.exceptions import ConfigurationError


def _write(tmp_path, text):
    path = tmp_path / "run.cfg"
    path.write_text(text, encoding="utf-8")
    return path


def test_empty_file_gives_the_defaults(tmp_path):
    cfg = load_config(_write(tmp_path, "# nothing here\n\n"))
    assert cfg == RunConfig()
    assert cfg.scenario == "BetaPortfolio"
    assert cfg.n_grid == [25, 50, 100, 200]
    assert cfg.eps_grid[0] == 0.001
    assert cfg.workers == 1


def test_values_are_typed(tmp_path):
    cfg = load_config(_write(tmp_path, "n_grid = 10, 20\nmisspecified = false\nshift_c = -0.5\nstep_c = none\n"))
    assert cfg.n_grid == [10, 20]
    assert cfg.misspecified is False
    assert cfg.shift_c == -0.5
    assert cfg.step_c is None


def test_out_of_range_values_are_rejected(tmp_path):
    with pytest.raises(ConfigurationError, match="gamma"):
        load_config(_write(tmp_path, "gamma = 0.5\n"))


def test_unknown_keys_are_rejected(tmp_path):
    with pytest.raises(ConfigurationError, match="colour"):
        load_config(_write(tmp_path, "colour = blue\n"))


def test_duplicate_keys_are_rejected(tmp_path):
    with pytest.raises(ConfigurationError, match="duplicate key 'seeds'"):
        load_config(_write(tmp_path, "seeds = 3\nseeds = 4\n"))


def test_every_violation_is_listed(tmp_path):
    with pytest.raises(ConfigurationError) as info:
        load_config(_write(tmp_path, "gamma = 0.5\nseeds = 0\nthis line is wrong\n"))
    assert len(info.value.violations) == 3


def test_missing_file_is_a_configuration_error(tmp_path):
    with pytest.raises(ConfigurationError, match="not found"):
        load_config(tmp_path / "absent.cfg")


def test_worker_count_from_the_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("PDRO_WORKERS", "3")
    manager = ConfigManager(_write(tmp_path, "workers = 2\n"))
    assert manager.get_config("workers") == 3
    assert manager.get_config("no_such_key", "fallback") == "fallback"


def test_flat_parser_strips_comments():
    values, problems = parse_flat_config("seeds = 5  # five\nmethods = a-erm, b-erm,\n")
    assert values == {"seeds": "5", "methods": ["a-erm", "b-erm"]}
    assert problems == []


def test_epsilon_rule_defaults_to_the_dimension(tmp_path):
    rule = epsilon_rule_from_config(load_config(_write(tmp_path, "dim = 7\neps_multiplier = 2\n")))
    assert rule.comp_theta == 7.0
    assert rule.multiplier == 2.0


def test_config_builds_an_experiment(quadratic_config):
    spec = experiment_spec_from_config(load_config(quadratic_config))
    assert spec.scenario == "QuadraticBall"
    assert spec.methods == ("normal-erm", "normal-dro-chi2@0")
    assert spec.n_grid == (20, 40)
    assert spec.solver.max_iter == 100
    assert spec.epsilon_rule.comp_theta == 3.0


def test_covariates_file_is_loaded_in_percent(tmp_path):
    csv = tmp_path / "factors.csv"
    csv.write_text("date,mkt,smb,hml\n2020-01,1.0,2.0,3.0\n2020-02,-1.0,0.5,0.0\n", encoding="utf-8")
    cfg = load_config(_write(tmp_path, f"scenario = Contextual\nmethods = context-ols-erm\ncovariates_csv = {csv}\n"))
    spec = experiment_spec_from_config(cfg)
    assert spec.covariate_rows.tolist() == [[0.01, 0.02, 0.03], [-0.01, 0.005, 0.0]]


def test_contextual_example_config_compares_every_center_under_dro():
    path = Path(__file__).resolve().parents[2] / "config" / "contextual.cfg"
    spec = experiment_spec_from_config(load_config(path))
    assert spec.tau == 10.0
    for estimator in ("context-ols", "context-residual", "context-kernel"):
        assert f"{estimator}-erm" in spec.methods
        assert f"{estimator}-dro-chi2" in spec.methods
