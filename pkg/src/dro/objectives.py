"""
ERM and DRO objectives over a Monte Carlo center, with their Danskin
subgradients.
"""
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.constants.constants import DivergenceKind
from src.dist.specs import EmpiricalDist
from src.dro.ambiguity import AmbiguitySpec, WorstCaseResult
from src.dro.inner import chi2_worst_case, kl_worst_case, w1_worst_case_lipschitz


@dataclass(frozen=True)
class ObjectiveValue:
    value: float
    worst_weights: Optional[np.ndarray]
    result: WorstCaseResult


def erm_objective(x, cost, q: EmpiricalDist) -> float:
    return float(q.weights @ cost.eval(x, q.atoms))


def dro_objective(x, cost, q_m: EmpiricalDist, amb: AmbiguitySpec) -> ObjectiveValue:
    """sup of E_P h(x; ·) over the ball ``amb`` centred at ``q_m``."""
    amb.require_solvable()
    values = cost.eval(x, q_m.atoms)
    if amb.kind == DivergenceKind.CHI2:
        result = chi2_worst_case(values, q_m.weights, amb.epsilon)
    elif amb.kind == DivergenceKind.KL:
        result = kl_worst_case(values, q_m.weights, amb.epsilon)
    else:
        lip = cost.lipschitz_norm(x)
        result = w1_worst_case_lipschitz(float(q_m.weights @ values), lip, amb.epsilon)
    return ObjectiveValue(result.value, result.weights, result)


def evaluate(x, cost, q_m: EmpiricalDist, ambiguity: Optional[AmbiguitySpec]):
    """
    Objective value and one subgradient at ``x``.

    ``ambiguity=None`` is ERM. For χ²/KL the subgradient is Σ p*_i ∂h(x; xi_i);
    the W1 path adds eps·∂‖h(x; ·)‖_Lip.
    """
    if ambiguity is not None and ambiguity.epsilon == 0 and ambiguity.kind != DivergenceKind.W1:
        # the zero-radius ball is the center itself
        ambiguity.require_solvable()
        ambiguity = None
    if ambiguity is None:
        values = cost.eval(x, q_m.atoms)
        grad = cost.weighted_subgradient(x, q_m.atoms, q_m.weights)
        return float(q_m.weights @ values), grad

    objective = dro_objective(x, cost, q_m, ambiguity)
    if ambiguity.kind == DivergenceKind.W1:
        grad = cost.weighted_subgradient(x, q_m.atoms, q_m.weights)
        if ambiguity.epsilon > 0:
            grad = grad + ambiguity.epsilon * cost.lipschitz_subgradient(x)
    else:
        grad = cost.weighted_subgradient(x, q_m.atoms, objective.worst_weights)
    return objective.value, grad


def monte_carlo_requirement(sup_bound: float, std_star: float, eps: float, comp_h: float) -> float:
    """(M / (std·eps))²·Comp(H): Monte Carlo size indicator, unit constant."""
    if std_star <= 0 or eps <= 0:
        return math.inf
    return (sup_bound / (std_star * eps)) ** 2 * comp_h
