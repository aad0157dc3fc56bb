import logging
import math
from dataclasses import replace

import numpy as np
import pytest

from src.bench.coverage import check_bound_coverage
from src.bench.epsilon import theoretical_epsilon
from src.bench.experiment import ExperimentSpec, TrialRunner, build_instance, run_trials
from src.constants.constants import TrialStatus
from src.dist.bounds import EpsilonRule
from src.dro.outer import SolverConfig
from src.utils.exceptions import ConfigurationError, UnsupportedCombinationError

SMALL_BUDGETS = dict(oracle_budget=500, oracle_restarts=1, oracle_max_iter=60, eval_budget=500)


def _quadratic_spec(**overrides):
    spec = ExperimentSpec(
        scenario="QuadraticBall",
        methods=("normal-erm", "normal-dro-chi2@0"),
        n_grid=(20, 40),
        seeds=3,
        master_seed=5,
        monte_carlo_ratio=5,
        dim=3,
        solver=SolverConfig(max_iter=100),
    )
    return replace(spec, **overrides)


def _portfolio_spec(**overrides):
    spec = ExperimentSpec(
        scenario="BetaPortfolio",
        methods=("normal-erm",),
        n_grid=(20,),
        seeds=1,
        monte_carlo_ratio=5,
        dim=3,
        solver=SolverConfig(max_iter=60),
        **SMALL_BUDGETS,
    )
    return replace(spec, **overrides)


def test_one_record_per_method_size_and_seed():
    results = run_trials(_quadratic_spec())
    assert len(results) == 12
    assert [(r.method, r.n, r.seed) for r in results[:6]] == [
        ("normal-erm", n, s) for n in (20, 40) for s in range(3)
    ]
    assert all(r.status == TrialStatus.OK for r in results)
    assert all(r.wallclock_ms == 0.0 for r in results)


def test_zero_radius_dro_matches_erm_trial_by_trial():
    results = run_trials(_quadratic_spec())
    erm, dro = results[:6], results[6:]
    for a, b in zip(erm, dro):
        assert (a.n, a.seed) == (b.n, b.seed)
        assert b.eps == 0.0
        assert a.objective == b.objective
        assert a.gen_error == b.gen_error


def test_runs_are_deterministic():
    assert run_trials(_quadratic_spec()) == run_trials(_quadratic_spec())
    other = run_trials(_quadratic_spec(master_seed=6))
    assert [r.objective for r in other] != [r.objective for r in run_trials(_quadratic_spec())]


def test_worker_count_does_not_change_results():
    spec = _quadratic_spec()
    assert run_trials(spec, workers=1) == run_trials(spec, workers=2)


def test_failed_trials_are_recorded(caplog):
    spec = _portfolio_spec(methods=("normal-erm", "normal-dro-w1@0.1"))
    with caplog.at_level(logging.WARNING):
        ok, failed = run_trials(spec)
    assert ok.status == TrialStatus.OK and math.isfinite(ok.gen_error)
    assert failed.status == TrialStatus.FAILED
    assert failed.eps == 0.1
    assert math.isnan(failed.objective) and math.isnan(failed.gen_error)
    assert "1 of 2 trial records failed" in caplog.text


def test_cross_validated_radius_comes_from_the_grid():
    spec = _portfolio_spec(methods=("beta-dro-chi2",), eps_grid=(0.01, 0.1, 1.0))
    (result,) = run_trials(spec)
    assert result.eps in (0.01, 0.1, 1.0)


def test_rule_mode_uses_the_theoretical_radius():
    rule = EpsilonRule(comp_theta=3.0)
    spec = _portfolio_spec(methods=("beta-dro-chi2",), eps_mode="rule", epsilon_rule=rule)
    (result,) = run_trials(spec)
    assert result.eps == pytest.approx(theoretical_epsilon(rule, 20))


def test_wallclock_is_recorded_on_request():
    (result,) = run_trials(_portfolio_spec(record_wallclock=True))
    assert result.wallclock_ms > 0.0


def test_training_sample_is_shared_across_methods():
    spec = _portfolio_spec(methods=("normal-erm", "beta-erm"))
    runner = TrialRunner(spec, build_instance(spec))
    assert np.array_equal(runner.training_data(20, 0).responses, runner.training_data(20, 0).responses)
    assert not np.array_equal(runner.training_data(20, 0).responses, runner.training_data(20, 1).responses)


def test_instance_records_the_monte_carlo_requirement_per_size(caplog):
    rule = EpsilonRule(comp_theta=3.0)
    spec = _portfolio_spec(n_grid=(20, 80), eps_mode="rule", epsilon_rule=rule)
    with caplog.at_level(logging.INFO):
        instance = build_instance(spec)
    requirement = instance.notes["monte_carlo_requirement"]
    assert sorted(requirement) == [20, 80]
    # the radius shrinks with n, so more center atoms are needed
    assert 0 < requirement[20] < requirement[80] < math.inf
    values = instance.cost.eval(instance.oracles[0].x_star, instance.evaluators[0].atoms.atoms)
    std_star = float(np.std(values))
    bound = (3 * spec.tau * spec.r + spec.mu) ** spec.gamma
    expected = (bound / (std_star * theoretical_epsilon(rule, 20))) ** 2 * math.comb(3 + 2, 2)
    assert requirement[20] == pytest.approx(expected, rel=1e-9)
    assert "Monte Carlo requirement" in caplog.text


def test_quadratic_instance_has_no_monte_carlo_requirement():
    assert "monte_carlo_requirement" not in build_instance(_quadratic_spec()).notes


def test_small_contextual_run():
    spec = ExperimentSpec(
        scenario="Contextual",
        methods=("context-ols-erm", "context-ols-dro-chi2@0.1", "noncontext-normal-erm"),
        n_grid=(30,),
        seeds=2,
        monte_carlo_ratio=5,
        dim=3,
        context_dim=3,
        n_test_contexts=2,
        solver=SolverConfig(max_iter=60),
        **SMALL_BUDGETS,
    )
    results = run_trials(spec)
    assert len(results) == 6
    assert all(r.status == TrialStatus.OK for r in results)
    assert all(math.isfinite(r.objective) and math.isfinite(r.gen_error) for r in results)


@pytest.mark.parametrize(
    "overrides,message",
    [
        (dict(scenario="Nope"), "scenario must be one of"),
        (dict(methods=()), "methods must not be empty"),
        (dict(methods=("context-ols-erm",)), "needs the Contextual scenario"),
        (dict(scenario="Contextual"), "is not a contextual estimator"),
        (dict(eps_mode="rule"), "needs an epsilon rule"),
        (dict(n_grid=(0,)), "positive integers"),
        (dict(methods=("kde-erm",)), "unknown estimator"),
    ],
)
def test_invalid_experiments_are_rejected(overrides, message):
    with pytest.raises(ConfigurationError, match=message):
        _portfolio_spec(**overrides)


def test_every_problem_is_reported_at_once():
    with pytest.raises(ConfigurationError) as info:
        _portfolio_spec(seeds=0, monte_carlo_ratio=0)
    assert len(info.value.violations) == 2


def test_quadratic_w1_bound_is_zero():
    report = check_bound_coverage(_quadratic_spec(n_grid=(50,)), EpsilonRule(comp_theta=3.0), seeds=4, kind="w1")
    assert report.bounds == [0.0] * 4
    assert report.fraction == sum(e <= 1e-3 for e in report.excess) / 4


def test_huge_chi2_radius_is_always_covered():
    report = check_bound_coverage(_portfolio_spec(), EpsilonRule(comp_theta=1e6), seeds=3, kind="chi2")
    assert report.eps > 100
    assert report.fraction == 1.0


def test_coverage_needs_a_non_contextual_scenario():
    spec = _portfolio_spec(scenario="Contextual", methods=("context-ols-erm",))
    with pytest.raises(UnsupportedCombinationError):
        check_bound_coverage(spec, EpsilonRule(comp_theta=3.0), seeds=2)


def test_coverage_rejects_metrics_without_a_bound():
    with pytest.raises(UnsupportedCombinationError):
        check_bound_coverage(_portfolio_spec(), EpsilonRule(comp_theta=3.0), seeds=2, kind="kl")
