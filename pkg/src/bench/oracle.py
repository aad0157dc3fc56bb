"""
Oracle decisions x* and generalisation error E(x̂) = Z(x̂) − Z(x*).
"""
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.constants.constants import Defaults, ObjectiveKind
from src.cost.costs import QuadraticLinearCost
from src.dist.sampling import sample
from src.dist.specs import EmpiricalDist, QuadraticPerturbationDist
from src.dro.outer import SolverConfig, solve_outer
from src.utils.common_utils import derive_seed, make_rng
from src.utils.logging_config import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class OracleResult:
    x_star: np.ndarray
    value: float
    analytic: bool = False


def _is_analytic(cost, truth) -> bool:
    return isinstance(cost, QuadraticLinearCost) and isinstance(truth, QuadraticPerturbationDist)


class Evaluator:
    """
    True objective Z(x), either exact (quadratic cost under a zero-mean
    truth) or a sample average over atoms shared by every caller, so all
    methods of a run see common random numbers.
    """

    def __init__(self, cost, atoms: Optional[EmpiricalDist] = None):
        self.cost = cost
        self.atoms = atoms

    @property
    def analytic(self) -> bool:
        return self.atoms is None

    def objective(self, x) -> float:
        if self.atoms is None:
            return self.cost.objective(x)
        return float(self.atoms.weights @ self.cost.eval(x, self.atoms.atoms))


def build_evaluator(cost, truth, budget: int, seed: int, context=None) -> Evaluator:
    if _is_analytic(cost, truth):
        return Evaluator(cost)
    return Evaluator(cost, sample(truth, budget, derive_seed(seed, "evaluation"), context))


def oracle_solution(
    cost,
    feasible,
    truth,
    budget: int = Defaults.ORACLE_BUDGET,
    restarts: int = Defaults.ORACLE_RESTARTS,
    seed: int = 0,
    cfg: SolverConfig = SolverConfig(max_iter=1000, tol=1e-9),
    context=None,
) -> OracleResult:
    """
    x* by ERM on ``budget`` fresh draws from ``truth``.

    The first restart starts at the set center, the others at random
    feasible points; the best ERM value wins. The quadratic cost under its
    zero-mean truth returns x* = v, Z* = 0 without sampling.
    """
    if _is_analytic(cost, truth):
        return OracleResult(cost.v.copy(), 0.0, analytic=True)

    atoms = sample(truth, budget, derive_seed(seed, "oracle"), context)
    best = None
    for restart in range(max(int(restarts), 1)):
        if restart == 0:
            x0 = feasible.center()
        else:
            x0 = feasible.random_point(make_rng(derive_seed(seed, "restart", restart)))
        solution = solve_outer(cost, feasible, ObjectiveKind.ERM, atoms, cfg, x0)
        if best is None or solution.objective < best.objective:
            best = solution
    logger.info("oracle: Z* = %.6g after %d restarts on %d atoms", best.objective, restarts, budget)
    return OracleResult(best.x, best.objective)


def estimate_gen_error(x_hat, evaluator: Evaluator, oracle: OracleResult) -> float:
    """E(x̂) = Z(x̂) − Z(x*), both through the same evaluator."""
    z_hat = evaluator.objective(x_hat)
    z_star = 0.0 if (evaluator.analytic and oracle.analytic) else evaluator.objective(oracle.x_star)
    gap = z_hat - z_star
    if math.isfinite(gap) and gap < -Defaults.GEN_ERROR_SLACK:
        logger.warning("negative generalisation error %.3g beyond oracle slack", gap)
    return gap
