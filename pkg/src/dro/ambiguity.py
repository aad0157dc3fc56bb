import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from src.constants.constants import DivergenceKind
from src.utils.exceptions import InvalidArgumentError, UnsupportedCombinationError


@dataclass(frozen=True)
class AmbiguitySpec:
    """Ball {P : d(P, Q̂) <= epsilon} around the fitted center."""
    kind: str
    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, "kind", DivergenceKind.normalize(self.kind))
        eps = float(self.epsilon)
        if not math.isfinite(eps) or eps < 0:
            raise InvalidArgumentError(f"epsilon must be finite and >= 0, got {self.epsilon}")
        object.__setattr__(self, "epsilon", eps)

    @property
    def solvable(self) -> bool:
        return self.kind in DivergenceKind.SOLVABLE

    def require_solvable(self):
        if not self.solvable:
            raise UnsupportedCombinationError(
                f"no inner solver for {self.kind}; supported: {', '.join(DivergenceKind.SOLVABLE)}"
            )

    def label(self) -> str:
        return f"{self.kind}@{self.epsilon:g}"


@dataclass(frozen=True)
class WorstCaseResult:
    value: float
    weights: Optional[np.ndarray] = None
    dual: Optional[float] = None
    closed_form_used: bool = False
    diagnostics: Mapping = field(default_factory=dict, compare=False, repr=False)
