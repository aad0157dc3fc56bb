"""
Benchmark method ids: ``<estimator>-<erm|dro>[-<kind>][@<eps>]``.

Examples: ``empirical-erm``, ``beta-dro-chi2``, ``normal-dro-w1``,
``context-ols-dro-chi2@10``. A DRO id without a kind uses chi2; without
``@eps`` the radius is chosen by the experiment's epsilon mode.
"""
import re
from dataclasses import dataclass
from typing import Optional

from src.constants.constants import DivergenceKind, ObjectiveKind
from src.dro.ambiguity import AmbiguitySpec
from src.utils.exceptions import ConfigurationError

_METHOD_RE = re.compile(
    r"^(?P<estimator>.+?)-(?P<objective>erm|dro)(?:-(?P<kind>[a-z0-9]+))?(?:@(?P<eps>[^@]+))?$"
)


@dataclass(frozen=True)
class MethodSpec:
    estimator: str
    objective: str
    kind: Optional[str] = None
    fixed_eps: Optional[float] = None

    @property
    def is_dro(self) -> bool:
        return self.objective == ObjectiveKind.DRO

    @property
    def method_id(self) -> str:
        text = f"{self.estimator}-{self.objective}"
        if self.is_dro:
            text += f"-{self.kind}"
        if self.fixed_eps is not None:
            text += f"@{self.fixed_eps:g}"
        return text

    def ambiguity(self, eps: float) -> Optional[AmbiguitySpec]:
        return AmbiguitySpec(self.kind, eps) if self.is_dro else None


def parse_method_id(text: str) -> MethodSpec:
    match = _METHOD_RE.match(str(text).strip().lower())
    if not match:
        raise ConfigurationError(f"malformed method id {text!r}; expected <estimator>-<erm|dro>[-<kind>][@eps]")
    objective = match["objective"]
    kind, eps = match["kind"], match["eps"]
    if objective == ObjectiveKind.ERM and (kind or eps):
        raise ConfigurationError(f"ERM method {text!r} takes no divergence or radius")
    if objective == ObjectiveKind.DRO:
        try:
            kind = DivergenceKind.normalize(kind or DivergenceKind.CHI2)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None
        if kind not in DivergenceKind.SOLVABLE:
            raise ConfigurationError(f"method {text!r}: no solver for {kind}")
    fixed_eps = None
    if eps is not None:
        try:
            fixed_eps = float(eps)
        except ValueError:
            raise ConfigurationError(f"method {text!r}: radius {eps!r} is not a number") from None
        if not 0 <= fixed_eps < float("inf"):
            raise ConfigurationError(f"method {text!r}: radius must be finite and >= 0")
    return MethodSpec(match["estimator"], objective, kind, fixed_eps)
