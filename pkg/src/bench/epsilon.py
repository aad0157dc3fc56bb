"""
Ambiguity radius selection: hold-out cross-validation and the
theoretical rule eps = C·Δ(δ, Θ).
"""
from typing import Sequence

import numpy as np

from src.bench.estimator import Estimator, TrainingData, center_for, uses_context
from src.bench.methods import MethodSpec
from src.dist.bounds import EpsilonRule, delta_bound
from src.dro.outer import SolverConfig, solve_outer
from src.utils.common_utils import derive_seed, make_rng
from src.utils.exceptions import InvalidArgumentError
from src.utils.logging_config import get_logger

logger = get_logger(__name__)

MIN_CV_SAMPLES = 10


def theoretical_epsilon(rule: EpsilonRule, n: int) -> float:
    return rule.multiplier * delta_bound(rule, n)


def select_epsilon(
    eps_grid: Sequence[float],
    method: MethodSpec,
    estimator: Estimator,
    data: TrainingData,
    cost,
    feasible,
    solver_cfg: SolverConfig,
    monte_carlo_ratio: int,
    split_fraction: float = 0.8,
    seed: int = 0,
) -> float:
    """
    Pick the radius minimising the hold-out empirical cost.

    The estimator is fitted on a ``split_fraction`` share of the data, the
    DRO problem is solved for every radius, and the mean cost on the
    remaining share decides. Ties go to the smallest radius. With fewer
    than 10 samples the smallest radius is returned.

    Returns:
        float: chosen radius
    """
    grid = sorted({float(e) for e in eps_grid})
    if not grid:
        raise InvalidArgumentError("epsilon grid is empty")
    if len(grid) == 1:
        return grid[0]
    if data.n < MIN_CV_SAMPLES:
        logger.warning(
            "%s: n=%d is too small for cross-validation, using eps=%g", method.method_id, data.n, grid[0]
        )
        return grid[0]
    if not 0.0 < split_fraction < 1.0:
        raise InvalidArgumentError(f"split_fraction must lie in (0, 1), got {split_fraction}")

    order = make_rng(seed).permutation(data.n)
    n_fit = min(max(int(round(split_fraction * data.n)), 1), data.n - 1)
    fit_part, valid_part = data.subset(order[:n_fit]), data.subset(order[n_fit:])
    fitted = estimator.fit(fit_part)
    m = monte_carlo_ratio * fit_part.n

    if uses_context(estimator, fitted) and valid_part.covariates is not None:
        # one center per validation covariate, scored on its own response
        cases = [
            (center_for(estimator, fitted, m, derive_seed(seed, "cv-center", j), y), valid_part.responses[j:j + 1])
            for j, y in enumerate(valid_part.covariates)
        ]
    else:
        cases = [(center_for(estimator, fitted, m, derive_seed(seed, "cv-center")), valid_part.responses)]

    best_eps, best_loss = grid[0], np.inf
    losses = []
    for eps in grid:
        ambiguity = method.ambiguity(eps)
        objective = ambiguity if ambiguity is not None else "erm"
        loss = float(np.mean([
            cost.eval(solve_outer(cost, feasible, objective, center, solver_cfg).x, targets).mean()
            for center, targets in cases
        ]))
        losses.append(loss)
        if loss < best_loss:
            best_eps, best_loss = eps, loss
    logger.debug("%s: validation losses %s -> eps=%g", method.method_id, dict(zip(grid, losses)), best_eps)
    return best_eps
