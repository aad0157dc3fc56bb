"""
Projected subgradient solver for min_x over a feasible set of the ERM or
DRO objective.
"""
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

import numpy as np

from src.constants.constants import Defaults, ObjectiveKind, SolveStatus
from src.dist.specs import EmpiricalDist
from src.dro.ambiguity import AmbiguitySpec
from src.dro.objectives import evaluate
from src.utils.common_utils import make_rng
from src.utils.exceptions import InvalidArgumentError, SolverAbortError
from src.utils.logging_config import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    """
    Step k uses x_{k+1} = Proj(x_k − (step_c / √k)·g/‖g‖). ``step_c=None``
    means diameter(X) / √max_iter.
    """
    max_iter: int = 500
    step_c: Optional[float] = None
    tol: float = 1e-6
    seed: int = 0
    averaging: bool = False
    random_init: bool = False
    stall_window: int = Defaults.STALL_WINDOW

    def __post_init__(self):
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise InvalidArgumentError(f"max_iter must be an integer >= 1, got {self.max_iter}")
        if self.step_c is not None and not self.step_c > 0:
            raise InvalidArgumentError(f"step_c must be > 0, got {self.step_c}")
        if not self.tol > 0:
            raise InvalidArgumentError(f"tol must be > 0, got {self.tol}")
        if self.stall_window < 1:
            raise InvalidArgumentError("stall_window must be >= 1")


@dataclass(frozen=True)
class Solution:
    x: np.ndarray
    objective: float
    trace: np.ndarray
    status: str
    diagnostics: Mapping = field(default_factory=dict, compare=False, repr=False)

    @property
    def iterations(self) -> int:
        return self.trace.size

    @property
    def best_trace(self) -> np.ndarray:
        return np.minimum.accumulate(self.trace)


def _ambiguity_of(objective) -> Optional[AmbiguitySpec]:
    if isinstance(objective, AmbiguitySpec):
        objective.require_solvable()
        return objective
    if str(objective).lower() == ObjectiveKind.ERM:
        return None
    raise InvalidArgumentError(f"objective must be 'erm' or an AmbiguitySpec, got {objective!r}")


def _checked(value: float, grad: np.ndarray, k: int):
    if not math.isfinite(value) or not np.all(np.isfinite(grad)):
        logger.error("non-finite objective %r at iteration %d", value, k)
        raise SolverAbortError(f"non-finite objective at iteration {k}")
    return value, grad


def solve_outer(
    cost,
    feasible,
    objective: Union[str, AmbiguitySpec],
    q_m: EmpiricalDist,
    cfg: SolverConfig = SolverConfig(),
    x0=None,
) -> Solution:
    """
    Minimise the ERM (``objective="erm"``) or DRO (``objective=AmbiguitySpec``)
    objective over ``feasible``.

    Args:
        cost: cost function with eval / weighted_subgradient
        feasible: feasible set with project / center / diameter
        objective: "erm" or an AmbiguitySpec
        q_m: Monte Carlo center
        cfg: solver settings
        x0: starting point, projected first; defaults to the set center

    Returns:
        Solution: best (or tail-averaged) iterate, its objective and the
        per-iteration objective trace
    """
    ambiguity = _ambiguity_of(objective)
    if x0 is None:
        x0 = feasible.random_point(make_rng(cfg.seed)) if cfg.random_init else feasible.center()
    x = feasible.project(x0)
    step_c = cfg.step_c if cfg.step_c is not None else feasible.diameter() / math.sqrt(cfg.max_iter)

    trace = []
    best_trace = []
    best_value, best_x = math.inf, x
    tail_start = cfg.max_iter // 2
    tail_sum, tail_count = np.zeros_like(x), 0
    status = SolveStatus.MAX_ITER

    for k in range(1, cfg.max_iter + 1):
        value, grad = _checked(*evaluate(x, cost, q_m, ambiguity), k)
        trace.append(value)
        if value < best_value:
            best_value, best_x = value, x
        best_trace.append(best_value)
        if k > tail_start:
            tail_sum += x
            tail_count += 1

        norm = float(np.linalg.norm(grad))
        if norm == 0.0:
            # zero subgradient: x is a global minimiser of the convex objective
            status = SolveStatus.CONVERGED
            break
        window = cfg.stall_window
        if k > window and best_trace[-window - 1] - best_value < cfg.tol:
            status = SolveStatus.CONVERGED
            break
        x = feasible.project(x - (step_c / math.sqrt(k)) * grad / norm)

    x_out, value_out = best_x, best_value
    if cfg.averaging and tail_count:
        x_out = feasible.project(tail_sum / tail_count)
        value_out, _ = _checked(*evaluate(x_out, cost, q_m, ambiguity), len(trace))

    logger.debug(
        "solve_outer %s: %s after %d iterations, objective %.6g",
        ambiguity.label() if ambiguity else ObjectiveKind.ERM, status, len(trace), value_out,
    )
    return Solution(np.asarray(x_out), float(value_out), np.asarray(trace), status, {"step_c": step_c})
