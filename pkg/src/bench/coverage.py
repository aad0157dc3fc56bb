"""
Empirical coverage of the excess-risk bounds for DRO solutions.

W1:  E(x̂) <= 2·‖h(x*; ·)‖_Lip·eps
χ²:  E(x̂) <= 2·sqrt(eps·Var_P*[h(x*; ·)]) + 2·eps^{3/4}·‖h(x*; ·)‖_∞
"""
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from src.bench.epsilon import theoretical_epsilon
from src.bench.estimator import center_for
from src.bench.experiment import ExperimentSpec, TrialRunner, build_instance
from src.bench.oracle import estimate_gen_error
from src.constants.constants import Defaults, DivergenceKind, Scenario
from src.dist.bounds import EpsilonRule
from src.dro.ambiguity import AmbiguitySpec
from src.dro.outer import solve_outer
from src.utils.exceptions import UnsupportedCombinationError
from src.utils.logging_config import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class CoverageReport:
    fraction: float
    eps: float
    kind: str
    excess: List[float]
    bounds: List[float]

    @property
    def seeds(self) -> int:
        return len(self.excess)


def excess_risk_bound(kind: str, cost, x_star, eps: float, evaluator) -> float:
    """Right-hand side of the excess-risk bound at the oracle decision."""
    if kind == DivergenceKind.W1:
        return 2.0 * cost.lipschitz_norm(x_star) * eps
    if kind == DivergenceKind.CHI2:
        if evaluator.analytic:
            # only the quadratic instance is analytic, where h(x*; ·) = 0
            values, radius = np.zeros(1), 0.0
        else:
            values = evaluator.cost.eval(x_star, evaluator.atoms.atoms)
            radius = float(np.abs(evaluator.atoms.atoms).max())
        var = float(np.var(values))
        sup = cost.sup_norm_at(x_star, radius)
        return 2.0 * math.sqrt(eps * var) + 2.0 * eps ** 0.75 * sup
    raise UnsupportedCombinationError(f"no excess-risk bound for {kind}")


def check_bound_coverage(
    spec: ExperimentSpec,
    rule: EpsilonRule,
    seeds: int,
    estimator: str = "normal",
    kind: str = DivergenceKind.W1,
    n: Optional[int] = None,
) -> CoverageReport:
    """
    Fraction of seeds whose realised excess risk satisfies the bound with
    eps = theoretical_epsilon(rule, n). A 1e-3 slack absorbs Monte Carlo
    error of the evaluator.

    Args:
        spec: scenario description (cost, set, truth, solver, budgets)
        rule: radius rule
        seeds: number of independent training samples
        estimator: registered estimator name for the center
        kind: "w1" or "chi2"
        n: training size, default the first entry of ``spec.n_grid``
    """
    kind = DivergenceKind.normalize(kind)
    if spec.scenario == Scenario.CONTEXTUAL:
        raise UnsupportedCombinationError("coverage checks need a non-contextual scenario")
    n = spec.n_grid[0] if n is None else int(n)
    instance = build_instance(spec)
    runner = TrialRunner(spec, instance)
    est = runner.registry.get(estimator)
    evaluator, oracle = instance.evaluators[0], instance.oracles[0]

    eps = theoretical_epsilon(rule, n)
    bound = excess_risk_bound(kind, instance.cost, oracle.x_star, eps, evaluator)
    ambiguity = AmbiguitySpec(kind, eps)

    excess, bounds = [], []
    for seed_index in range(seeds):
        data = runner.training_data(n, seed_index)
        fitted = est.fit(data)
        center = center_for(est, fitted, spec.monte_carlo_ratio * n, spec.seed_for("center", est.name, n, seed_index))
        solution = solve_outer(instance.cost, instance.feasible, ambiguity, center, spec.solver)
        excess.append(estimate_gen_error(solution.x, evaluator, oracle))
        bounds.append(bound)

    covered = sum(e <= b + Defaults.COVERAGE_SLACK for e, b in zip(excess, bounds))
    fraction = covered / seeds if seeds else math.nan
    logger.info("coverage %s eps=%.4g: %d/%d seeds within bound %.4g", kind, eps, covered, seeds, bound)
    return CoverageReport(fraction, eps, kind, excess, bounds)
