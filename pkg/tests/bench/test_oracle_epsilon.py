import logging
import math

import numpy as np
import pytest

from src.bench.epsilon import select_epsilon, theoretical_epsilon
from src.bench.estimator import NormalEstimator, TrainingData
from src.bench.generators import gen_quadratic_instance
from src.bench.methods import parse_method_id
from src.bench.oracle import Evaluator, OracleResult, build_evaluator, estimate_gen_error, oracle_solution
from src.cost.costs import DownsideRiskCost
from src.cost.feasible_sets import SimplexFloorSet
from src.dist.bounds import EpsilonRule
from src.dist.sampling import sample, sample_atoms
from src.dist.specs import EmpiricalDist, ScaledBetaProductSpec
from src.dro.outer import SolverConfig, solve_outer
from src.utils.common_utils import derive_seed, make_rng

FAST = SolverConfig(max_iter=150)


def test_quadratic_oracle_is_analytic():
    inst = gen_quadratic_instance(5, lam=0.2, radius=10.0, seed=0)
    oracle = oracle_solution(inst.cost, inst.feasible, inst.truth, budget=10, restarts=1, seed=0)
    assert oracle.analytic
    assert oracle.value == 0.0
    assert np.array_equal(oracle.x_star, inst.x_star)
    assert build_evaluator(inst.cost, inst.truth, 10, seed=0).analytic


def test_sampled_oracle_matches_a_grid_on_its_atoms():
    cost = DownsideRiskCost(1.0, 2.0)
    feasible = SimplexFloorSet(0.0, 2)
    truth = ScaledBetaProductSpec([2.0, 2.6], r=1.0)
    oracle = oracle_solution(cost, feasible, truth, budget=2000, restarts=2, seed=1)

    atoms = sample(truth, 2000, derive_seed(1, "oracle"))
    t = np.linspace(0.0, 1.0, 2001)
    grid = [float(atoms.weights @ cost.eval([s, 1.0 - s], atoms.atoms)) for s in t]
    assert not oracle.analytic
    assert feasible.contains(oracle.x_star)
    assert oracle.value <= min(grid) + 1e-3
    assert oracle.value >= min(grid) - 1e-3


def test_oracle_is_deterministic():
    cost = DownsideRiskCost(1.0, 1.0)
    feasible = SimplexFloorSet(1.0, 3)
    truth = ScaledBetaProductSpec([2.0, 2.6, 1.8], r=1.0)
    first = oracle_solution(cost, feasible, truth, budget=500, restarts=3, seed=7, cfg=FAST)
    second = oracle_solution(cost, feasible, truth, budget=500, restarts=3, seed=7, cfg=FAST)
    assert np.array_equal(first.x_star, second.x_star)
    assert first.value == second.value


def test_generalisation_error_of_a_unit_step():
    inst = gen_quadratic_instance(3, lam=0.2, radius=10.0, seed=0)
    oracle = OracleResult(inst.x_star, 0.0, analytic=True)
    x_hat = inst.x_star + np.array([1.0, 0.0, 0.0])
    assert estimate_gen_error(x_hat, Evaluator(inst.cost), oracle) == pytest.approx(0.5)
    assert estimate_gen_error(inst.x_star, Evaluator(inst.cost), oracle) == 0.0


def test_sampled_evaluator_scores_both_decisions_on_the_same_atoms():
    cost = DownsideRiskCost(1.0, 1.0)
    atoms = EmpiricalDist([[0.5, 0.0], [0.0, 2.0]])
    evaluator = Evaluator(cost, atoms)
    oracle = OracleResult(np.array([0.0, 1.0]), 123.0)
    # Z([1, 0]) = (0.5 + 1) / 2, Z([0, 1]) = (1 + 0) / 2
    assert estimate_gen_error([1.0, 0.0], evaluator, oracle) == pytest.approx(0.25)


def test_negative_gap_beyond_the_slack_is_logged(caplog):
    cost = DownsideRiskCost(1.0, 1.0)
    evaluator = Evaluator(cost, EmpiricalDist([[0.5, 0.0], [0.0, 2.0]]))
    with caplog.at_level(logging.WARNING):
        gap = estimate_gen_error([0.0, 1.0], evaluator, OracleResult(np.array([1.0, 0.0]), 0.0))
    assert gap == pytest.approx(-0.25)
    assert "negative generalisation error" in caplog.text


def test_theoretical_epsilon_examples():
    rule = EpsilonRule(comp_theta=4.0, delta=math.exp(-1.0))
    assert theoretical_epsilon(rule, 100) == pytest.approx(0.2)
    doubled = EpsilonRule(comp_theta=4.0, delta=math.exp(-1.0), multiplier=2.0)
    assert theoretical_epsilon(doubled, 100) == pytest.approx(0.4)
    assert theoretical_epsilon(rule, 400) == pytest.approx(0.1)


def _quadratic_case(n, seed=3):
    inst = gen_quadratic_instance(3, lam=0.2, radius=10.0, seed=seed)
    data = TrainingData(sample_atoms(inst.truth, n, seed))
    return inst, data


def test_single_radius_is_returned_without_fitting():
    inst, data = _quadratic_case(2)
    method = parse_method_id("normal-dro-chi2")
    assert select_epsilon([0.3], method, NormalEstimator(), data, inst.cost, inst.feasible, FAST, 5) == 0.3


def test_small_samples_use_the_smallest_radius(caplog):
    inst, data = _quadratic_case(6)
    method = parse_method_id("normal-dro-chi2")
    with caplog.at_level(logging.WARNING):
        eps = select_epsilon([0.5, 0.05, 1.0], method, NormalEstimator(), data, inst.cost, inst.feasible, FAST, 5)
    assert eps == 0.05
    assert "too small for cross-validation" in caplog.text


def test_ties_go_to_the_smallest_radius():
    inst, data = _quadratic_case(30)
    # ERM ignores the radius, so every candidate scores the same
    method = parse_method_id("normal-erm")
    eps = select_epsilon([1.0, 0.5, 0.1], method, NormalEstimator(), data, inst.cost, inst.feasible, FAST, 5)
    assert eps == 0.1


def test_cross_validation_picks_the_smallest_hold_out_loss():
    inst, data = _quadratic_case(40)
    method = parse_method_id("normal-dro-chi2")
    estimator = NormalEstimator()
    grid = [0.001, 0.1, 1.0]
    chosen = select_epsilon(grid, method, estimator, data, inst.cost, inst.feasible, FAST, 5, seed=17)

    order = make_rng(17).permutation(40)
    fit_part, valid_part = data.subset(order[:32]), data.subset(order[32:])
    center = sample(estimator.fit(fit_part), 5 * 32, derive_seed(17, "cv-center"))
    losses = [
        inst.cost.eval(solve_outer(inst.cost, inst.feasible, method.ambiguity(eps), center, FAST).x,
                       valid_part.responses).mean()
        for eps in grid
    ]
    assert chosen == grid[int(np.argmin(losses))]
