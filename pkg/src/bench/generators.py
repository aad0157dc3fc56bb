"""
Synthetic instance generators for the benchmark scenarios.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.constants.constants import Defaults, SignalToNoise
from src.cost.costs import QuadraticLinearCost
from src.cost.feasible_sets import L2BallSet
from src.dist.sampling import sample
from src.dist.specs import (
    ConditionalTruth,
    EmpiricalDist,
    QuadraticPerturbationDist,
    ScaledBetaProductSpec,
    UniformNoiseDist,
)
from src.utils.common_utils import derive_seed, make_rng, psd_sqrt
from src.utils.exceptions import ConfigurationError, InvalidArgumentError
from src.utils.logging_config import get_logger

logger = get_logger(__name__)


def gen_beta_market(dim: int, seed: int, r: float = 1.0) -> ScaledBetaProductSpec:
    """Market with eta_i ~ U[1.5, 3] per asset."""
    if dim < 1:
        raise InvalidArgumentError(f"dim must be >= 1, got {dim}")
    eta = make_rng(seed).uniform(Defaults.ETA_LOW, Defaults.ETA_HIGH, size=dim)
    return ScaledBetaProductSpec(eta, r)


@dataclass(frozen=True)
class ShiftSpec:
    """
    eta_2 = eta_1 + C·min{3 − eta_1, eta_1 − 1.5}; ``perturb_noise`` adds
    U(−w, w) noise to every test coordinate.
    """
    C: float
    perturb_noise: Optional[float] = None

    def __post_init__(self):
        if not -1.0 <= self.C <= 1.0:
            raise InvalidArgumentError(f"shift parameter C must lie in [-1, 1], got {self.C}")
        if self.perturb_noise is not None and self.perturb_noise < 0:
            raise InvalidArgumentError("perturb_noise must be >= 0")


def apply_eta_shift(spec: ScaledBetaProductSpec, shift: ShiftSpec) -> ScaledBetaProductSpec:
    eta = spec.eta
    room = np.minimum(Defaults.ETA_HIGH - eta, eta - Defaults.ETA_LOW)
    shifted = np.clip(eta + shift.C * room, Defaults.ETA_LOW, Defaults.ETA_HIGH)
    return ScaledBetaProductSpec(shifted, spec.r, diagnostics={"shift_c": shift.C, "perturb_noise": shift.perturb_noise})


def shifted_test_distribution(spec: ScaledBetaProductSpec, shift: ShiftSpec):
    """P^te: the shifted Beta product, plus the optional test-time noise."""
    shifted = apply_eta_shift(spec, shift)
    if shift.perturb_noise:
        return UniformNoiseDist(shifted, shift.perturb_noise)
    return shifted


@dataclass(frozen=True)
class QuadraticInstance:
    truth: QuadraticPerturbationDist
    cost: QuadraticLinearCost
    feasible: L2BallSet
    seed: int

    @property
    def x_star(self) -> np.ndarray:
        return self.cost.v

    def objective(self, x) -> float:
        """Z(x) = ½‖x − v‖², the truth having mean zero."""
        return self.cost.objective(x)

    def sample(self, m: int, *tags) -> EmpiricalDist:
        return sample(self.truth, m, derive_seed(self.seed, *tags))


def gen_quadratic_instance(dim: int, lam: float, radius: float, seed: int, cov=None) -> QuadraticInstance:
    """
    Quadratic cost with linear perturbation, anchor v = B/(2√D)·1 inside the
    ball of radius B, and xi = N(0, cov) + centred Exp(lam) coordinates.
    """
    if dim < 1 or not lam > 0 or not radius > 0:
        raise InvalidArgumentError(f"need dim >= 1, lam > 0, B > 0; got {dim}, {lam}, {radius}")
    anchor = np.full(dim, radius / (2.0 * np.sqrt(dim)))
    return QuadraticInstance(
        truth=QuadraticPerturbationDist(dim, lam, cov),
        cost=QuadraticLinearCost(anchor),
        feasible=L2BallSet(radius, dim),
        seed=seed,
    )


@dataclass(frozen=True)
class ContextualSpec:
    dim: int
    context_dim: int
    snr: str = SignalToNoise.HIGH
    misspecified: bool = True
    noise_cov: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.dim < 1 or self.context_dim < 1:
            raise InvalidArgumentError("contextual dimensions must be >= 1")
        if self.snr not in SignalToNoise.B_HALF_WIDTH:
            raise InvalidArgumentError(f"snr must be one of {sorted(SignalToNoise.B_HALF_WIDTH)}, got {self.snr}")

    def resolved_noise_cov(self) -> np.ndarray:
        if self.noise_cov is None:
            return 0.1 ** 2 * np.eye(self.dim)
        return np.atleast_2d(np.asarray(self.noise_cov, dtype=float))


class CovariateSampler:
    """
    Covariates y. Without ``rows`` a zero-mean Gaussian with the monthly
    factor scales (0.2, 0.15, 0.1), cycled to length D_y; with ``rows``
    (e.g. factor returns from a CSV) a bootstrap over the given rows.
    """

    def __init__(self, context_dim: int, rows: Optional[np.ndarray] = None):
        self.context_dim = context_dim
        self.rows = None
        if rows is not None:
            rows = np.atleast_2d(np.asarray(rows, dtype=float))
            if rows.shape[1] != context_dim:
                raise ConfigurationError(f"covariate rows have {rows.shape[1]} columns, expected {context_dim}")
            self.rows = rows
        self.scales = np.resize(np.asarray(Defaults.FACTOR_SCALES), context_dim)

    def draw(self, n: int, seed: int) -> np.ndarray:
        rng = make_rng(seed)
        if self.rows is not None:
            return self.rows[rng.integers(0, self.rows.shape[0], size=n)]
        return rng.standard_normal((n, self.context_dim)) * self.scales


@dataclass(frozen=True)
class ContextualInstance:
    truth: ConditionalTruth
    covariates: CovariateSampler

    @property
    def B(self) -> np.ndarray:
        return self.truth.B

    def draw_pairs(self, n: int, seed: int):
        """n covariate/response pairs (Y: n×D_y, X: n×D_xi)."""
        Y = self.covariates.draw(n, derive_seed(seed, "covariates"))
        return Y, self.draw_responses(Y, derive_seed(seed, "responses"))

    def draw_responses(self, Y: np.ndarray, seed: int) -> np.ndarray:
        Y = np.atleast_2d(Y)
        means = Y @ self.truth.B.T
        if self.truth.misspecified:
            means = means + self.truth.amplitude * np.sin(np.linalg.norm(Y, axis=1))[:, None]
        noise = make_rng(seed).standard_normal(means.shape) @ psd_sqrt(self.truth.noise_cov, "noise_cov").T
        return means + noise


def gen_contextual_instance(spec: ContextualSpec, seed: int, covariate_rows=None) -> ContextualInstance:
    """B with entries U(−b, b), b = 0.5 (high SNR) or 0.1 (low SNR)."""
    half_width = SignalToNoise.B_HALF_WIDTH[spec.snr]
    B = make_rng(seed).uniform(-half_width, half_width, size=(spec.dim, spec.context_dim))
    truth = ConditionalTruth(B, spec.resolved_noise_cov(), spec.misspecified)
    logger.debug("contextual instance: D_xi=%d D_y=%d snr=%s mis=%s", spec.dim, spec.context_dim, spec.snr, spec.misspecified)
    return ContextualInstance(truth, CovariateSampler(spec.context_dim, covariate_rows))
