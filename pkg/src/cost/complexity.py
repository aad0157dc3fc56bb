import math

from src.cost.costs import DownsideRiskCost
from src.cost.feasible_sets import SimplexFloorSet
from src.utils.exceptions import InvalidArgumentError


def sup_bound(cost: DownsideRiskCost, feasible: SimplexFloorSet, r: float) -> float:
    """
    Closed-form bound (D·tau·r + mu)^gamma on sup_x ‖h(x; ·)‖_∞.

    This is the portfolio bound, not the exact supremum over X.
    """
    if not r > 0:
        raise InvalidArgumentError(f"support radius must be > 0, got {r}")
    return (feasible.dim * feasible.tau * r + cost.mu) ** cost.gamma


def comp_hypothesis_bound(dim: int, gamma: int) -> int:
    """VC bound C(D + gamma, gamma) for polynomials of degree gamma in D variables."""
    if dim < 1 or gamma < 0 or int(dim) != dim or int(gamma) != gamma:
        raise InvalidArgumentError(f"need integers dim >= 1 and gamma >= 0, got {dim}, {gamma}")
    # python ints do not overflow
    return math.comb(int(dim) + int(gamma), int(gamma))
