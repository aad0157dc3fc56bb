"""
Feasible decision sets with exact Euclidean projections.
"""
import math
from dataclasses import dataclass

import numpy as np

from src.utils.exceptions import ConfigurationError, InvalidArgumentError


def project_simplex(v: np.ndarray, z: float = 1.0) -> np.ndarray:
    """
    argmin_{y >= 0, sum(y) = z} ‖y − v‖² by the sort-and-threshold rule.
    """
    u = np.sort(v)[::-1]
    cssv = np.cumsum(u) - z
    ind = np.arange(1, v.size + 1)
    cond = u - cssv / ind > 0
    rho = int(np.count_nonzero(cond))
    theta = cssv[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def _check_dim(x, dim: int) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (dim,):
        raise ConfigurationError(f"decision has shape {x.shape}, expected ({dim},)")
    return x


@dataclass(frozen=True)
class SimplexFloorSet:
    """X = {x : Σ x_i = 1, x_i >= −tau}; tau > 0 allows short positions."""
    tau: float
    dim: int

    def __post_init__(self):
        if self.tau < 0:
            raise InvalidArgumentError(f"tau must be >= 0, got {self.tau}")
        if self.dim < 1:
            raise InvalidArgumentError(f"dim must be >= 1, got {self.dim}")

    def project(self, x) -> np.ndarray:
        x = _check_dim(x, self.dim)
        shifted = project_simplex(x + self.tau, 1.0 + self.dim * self.tau)
        return shifted - self.tau

    def contains(self, x, tol: float = 1e-8) -> bool:
        x = _check_dim(x, self.dim)
        return bool(abs(x.sum() - 1.0) <= tol and np.all(x >= -self.tau - tol))

    def diameter(self) -> float:
        # distance between two vertices of the shifted simplex
        return math.sqrt(2.0) * (1.0 + self.dim * self.tau)

    def center(self) -> np.ndarray:
        return np.full(self.dim, 1.0 / self.dim)

    def random_point(self, rng: np.random.Generator) -> np.ndarray:
        y = rng.dirichlet(np.ones(self.dim)) * (1.0 + self.dim * self.tau)
        return y - self.tau


@dataclass(frozen=True)
class L2BallSet:
    """X = {x : ‖x‖₂ <= radius}."""
    radius: float
    dim: int

    def __post_init__(self):
        if not self.radius > 0:
            raise InvalidArgumentError(f"radius must be > 0, got {self.radius}")
        if self.dim < 1:
            raise InvalidArgumentError(f"dim must be >= 1, got {self.dim}")

    def project(self, x) -> np.ndarray:
        x = _check_dim(x, self.dim)
        norm = float(np.linalg.norm(x))
        if norm <= self.radius:
            return x.copy()
        return x * (self.radius / norm)

    def contains(self, x, tol: float = 1e-8) -> bool:
        return bool(np.linalg.norm(_check_dim(x, self.dim)) <= self.radius + tol)

    def diameter(self) -> float:
        return 2.0 * self.radius

    def center(self) -> np.ndarray:
        return np.zeros(self.dim)

    def random_point(self, rng: np.random.Generator) -> np.ndarray:
        direction = rng.standard_normal(self.dim)
        direction /= max(np.linalg.norm(direction), 1e-300)
        return direction * self.radius * rng.uniform() ** (1.0 / self.dim)
