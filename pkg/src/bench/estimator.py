"""
Estimators mapping training data to a Monte Carlo center Q̂_m.

Each estimator describes itself (name, description, parametric,
contextual) the same way registry entries do, fits on a ``TrainingData``
and produces the center atoms for a given covariate.
"""
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from src.dist.estimators import fit_beta_moment, fit_contextual_ols, fit_gaussian_full
from src.dist.sampling import sample
from src.dist.specs import EmpiricalDist, GaussianSpec
from src.utils.exceptions import ConfigurationError, InsufficientDataError


@dataclass(frozen=True)
class TrainingData:
    responses: np.ndarray
    covariates: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.responses.shape[0]

    def subset(self, rows) -> "TrainingData":
        covariates = None if self.covariates is None else self.covariates[rows]
        return TrainingData(self.responses[rows], covariates)


class Estimator:
    name = ""
    description = ""
    parametric = True
    contextual = False

    def __init__(self, **options):
        self.options = options

    def get_descriptor_json(self) -> Dict:
        return {
            "name": self.name,
            "description": self.description,
            "parametric": self.parametric,
            "contextual": self.contextual,
        }

    def fit(self, data: TrainingData) -> Any:
        raise NotImplementedError

    def center(self, fitted: Any, m: int, seed: int, context=None) -> EmpiricalDist:
        """Monte Carlo center with ``m`` atoms (parametric) or the reweighted training atoms."""
        return sample(fitted, m, seed, context)

    def _require_covariates(self, data: TrainingData):
        if data.covariates is None:
            raise ConfigurationError(f"estimator {self.name} needs covariates")


class EmpiricalEstimator(Estimator):
    name = "empirical"
    description = "empirical distribution of the training atoms"
    parametric = False

    def fit(self, data):
        return EmpiricalDist(data.responses)

    def center(self, fitted, m, seed, context=None):
        return fitted


class BetaMomentEstimator(Estimator):
    name = "beta"
    description = "scaled Beta product, first-moment fit"

    def fit(self, data):
        return fit_beta_moment(EmpiricalDist(data.responses), self.options.get("r", 1.0))


class NormalEstimator(Estimator):
    name = "normal"
    description = "Gaussian with sample mean and covariance"

    def fit(self, data):
        return fit_gaussian_full(EmpiricalDist(data.responses))


class NonContextNormalEstimator(NormalEstimator):
    name = "noncontext-normal"
    description = "Gaussian fit ignoring the covariates"
    contextual = True


class ContextOlsEstimator(Estimator):
    name = "context-ols"
    description = "N(B̂y, Σ̂) from least squares on the covariates"
    contextual = True

    def fit(self, data):
        self._require_covariates(data)
        return fit_contextual_ols(data.covariates, data.responses)


class ContextResidualEstimator(Estimator):
    name = "context-residual"
    description = "B̂y plus the empirical least-squares residuals"
    parametric = False
    contextual = True

    def fit(self, data):
        self._require_covariates(data)
        model = fit_contextual_ols(data.covariates, data.responses)
        residuals = data.responses - data.covariates @ model.B.T
        return model, residuals

    def center(self, fitted, m, seed, context=None):
        model, residuals = fitted
        if context is None:
            raise ConfigurationError("context-residual needs a covariate")
        return EmpiricalDist(model.B @ np.asarray(context, dtype=float) + residuals)


class ContextKernelEstimator(Estimator):
    name = "context-kernel"
    description = "Nadaraya-Watson reweighting of the training responses"
    parametric = False
    contextual = True

    def fit(self, data):
        self._require_covariates(data)
        n, dim_y = data.covariates.shape
        if n < 2:
            raise InsufficientDataError("kernel weights need n >= 2")
        spread = float(np.mean(np.std(data.covariates, axis=0)))
        # Silverman's rule of thumb
        bandwidth = spread * (4.0 / (dim_y + 2.0)) ** (1.0 / (dim_y + 4.0)) * n ** (-1.0 / (dim_y + 4.0))
        return data, max(bandwidth, 1e-12)

    def center(self, fitted, m, seed, context=None):
        data, bandwidth = fitted
        if context is None:
            raise ConfigurationError("context-kernel needs a covariate")
        sq = np.sum((data.covariates - np.asarray(context, dtype=float)) ** 2, axis=1)
        logits = -0.5 * sq / bandwidth ** 2
        weights = np.exp(logits - logits.max())
        return EmpiricalDist(data.responses, weights / weights.sum())


def uses_context(estimator: Estimator, fitted) -> bool:
    """True when the center of ``fitted`` depends on the covariate."""
    return estimator.contextual and not isinstance(fitted, GaussianSpec)


def center_for(estimator: Estimator, fitted, m: int, seed: int, context=None) -> EmpiricalDist:
    """Center of a fitted estimator; covariate-free fits ignore ``context``."""
    if not uses_context(estimator, fitted):
        context = None
    return estimator.center(fitted, m, seed, context)
