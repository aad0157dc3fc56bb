"""
Cost functions h(x; xi) evaluated on atom matrices.

``eval`` and ``subgradients`` are vectorised over the rows of ``atoms``;
``weighted_subgradient`` contracts per-atom subgradients with a probability
vector, which is how the outer solver assembles Danskin subgradients.
"""
from dataclasses import dataclass

import numpy as np

from src.utils.exceptions import ConfigurationError, InvalidArgumentError, UnsupportedCombinationError


def _as_atoms(atoms, dim: int) -> np.ndarray:
    atoms = np.asarray(atoms, dtype=float)
    if atoms.ndim == 1:
        atoms = atoms.reshape(1, -1)
    if atoms.shape[1] != dim:
        raise ConfigurationError(f"atoms have dimension {atoms.shape[1]}, decision has {dim}")
    return atoms


def _unit(vector: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vector))
    if norm == 0.0:
        # any unit-ball element is a subgradient at 0; 0 is chosen
        return np.zeros_like(vector)
    return vector / norm


@dataclass(frozen=True)
class DownsideRiskCost:
    """h(x; xi) = (mu − xiᵀx)_+^gamma."""
    mu: float
    gamma: float = 1.0

    def __post_init__(self):
        if not self.gamma >= 1:
            raise InvalidArgumentError(f"downside risk exponent must be >= 1, got {self.gamma}")

    @property
    def is_lipschitz(self) -> bool:
        return self.gamma == 1

    def _shortfall(self, x, atoms) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.mu - _as_atoms(atoms, x.size) @ x

    def eval(self, x, atoms) -> np.ndarray:
        return np.maximum(self._shortfall(x, atoms), 0.0) ** self.gamma

    def _slopes(self, shortfall: np.ndarray) -> np.ndarray:
        # derivative of s -> s_+^gamma, with 0 at the kink
        active = shortfall > 0
        return np.where(active, self.gamma * np.maximum(shortfall, 0.0) ** (self.gamma - 1.0), 0.0)

    def subgradient_at_atom(self, x, atom) -> np.ndarray:
        return self.subgradients(x, np.atleast_2d(atom))[0]

    def subgradients(self, x, atoms) -> np.ndarray:
        atoms = _as_atoms(atoms, np.asarray(x).size)
        return -self._slopes(self._shortfall(x, atoms))[:, None] * atoms

    def weighted_subgradient(self, x, atoms, weights) -> np.ndarray:
        atoms = _as_atoms(atoms, np.asarray(x).size)
        coef = -np.asarray(weights, dtype=float) * self._slopes(self._shortfall(x, atoms))
        return coef @ atoms

    def lipschitz_norm(self, x) -> float:
        """ℓ2 Lipschitz constant of xi -> h(x; xi); only defined for gamma = 1."""
        if not self.is_lipschitz:
            raise UnsupportedCombinationError(
                f"downside risk with gamma={self.gamma} is not globally Lipschitz in xi"
            )
        return float(np.linalg.norm(np.asarray(x, dtype=float)))

    def lipschitz_subgradient(self, x) -> np.ndarray:
        if not self.is_lipschitz:
            raise UnsupportedCombinationError(
                f"downside risk with gamma={self.gamma} is not globally Lipschitz in xi"
            )
        return _unit(np.asarray(x, dtype=float))

    def sup_norm_at(self, x, r: float) -> float:
        """sup of h(x; ·) over the box [−r, r]^D: (mu + r‖x‖₁)_+^gamma."""
        x = np.asarray(x, dtype=float)
        return max(self.mu + r * float(np.abs(x).sum()), 0.0) ** self.gamma


@dataclass(frozen=True)
class QuadraticLinearCost:
    """h(x; xi) = ½‖x − v‖² + xiᵀ(x − v)."""
    v: np.ndarray

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.v, dtype=float)).copy()
        v.setflags(write=False)
        object.__setattr__(self, "v", v)

    @property
    def dim(self) -> int:
        return self.v.size

    is_lipschitz = True

    def eval(self, x, atoms) -> np.ndarray:
        d = np.asarray(x, dtype=float) - self.v
        return 0.5 * float(d @ d) + _as_atoms(atoms, self.dim) @ d

    def subgradient_at_atom(self, x, atom) -> np.ndarray:
        return np.asarray(x, dtype=float) - self.v + np.asarray(atom, dtype=float)

    def subgradients(self, x, atoms) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.v) + _as_atoms(atoms, self.dim)

    def weighted_subgradient(self, x, atoms, weights) -> np.ndarray:
        weights = np.asarray(weights, dtype=float)
        return weights.sum() * (np.asarray(x, dtype=float) - self.v) + weights @ _as_atoms(atoms, self.dim)

    def lipschitz_norm(self, x) -> float:
        return float(np.linalg.norm(np.asarray(x, dtype=float) - self.v))

    def lipschitz_subgradient(self, x) -> np.ndarray:
        return _unit(np.asarray(x, dtype=float) - self.v)

    def sup_norm_at(self, x, r: float) -> float:
        d = np.asarray(x, dtype=float) - self.v
        return 0.5 * float(d @ d) + r * float(np.abs(d).sum())

    def objective(self, x, mean=None) -> float:
        """Z(x) = ½‖x − v‖² + E[xi]ᵀ(x − v) for a known mean (zero by default)."""
        d = np.asarray(x, dtype=float) - self.v
        value = 0.5 * float(d @ d)
        if mean is not None:
            value += float(np.asarray(mean, dtype=float) @ d)
        return value
