"""
Shared helpers: seed derivation, random generators, simplex validation and
wall-clock timing.
"""
import hashlib
import time
from contextlib import contextmanager
from typing import Iterator

import numpy as np

from src.constants.constants import Defaults
from src.utils.exceptions import InvalidArgumentError
from src.utils.logging_config import get_logger

logger = get_logger(__name__)

_SEED_MASK = (1 << 64) - 1


def derive_seed(master_seed: int, *parts) -> int:
    """
    Derive a 64-bit seed from a master seed and any number of tags.

    The value only depends on the textual form of the inputs, so it is
    stable across processes, platforms and worker counts.

    Args:
        master_seed: experiment master seed
        *parts: scenario / method / n / seed-index tags

    Returns:
        int: seed in [0, 2**64)
    """
    digest = hashlib.blake2b(digest_size=8)
    digest.update(str(int(master_seed) & _SEED_MASK).encode("utf-8"))
    for part in parts:
        digest.update(b"\x1f")
        digest.update(str(part).encode("utf-8"))
    return int.from_bytes(digest.digest(), "little")


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based PCG64 generator for a 64-bit seed."""
    return np.random.Generator(np.random.PCG64(int(seed) & _SEED_MASK))


def as_simplex(weights, name: str = "weights", tol: float = 1e-9) -> np.ndarray:
    """
    Validate a probability vector and return it as a float array.

    Entries must be nonnegative and sum to one within ``tol``; the result is
    renormalised so the sum is exact to machine precision.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise InvalidArgumentError(f"{name} must be a nonempty vector")
    if not np.all(np.isfinite(w)):
        raise InvalidArgumentError(f"{name} contains non-finite entries")
    if np.any(w < -Defaults.SIMPLEX_TOL):
        raise InvalidArgumentError(f"{name} has negative entries")
    total = float(w.sum())
    if abs(total - 1.0) > tol:
        raise InvalidArgumentError(f"{name} sums to {total!r}, expected 1")
    w = np.clip(w, 0.0, None)
    return w / w.sum()


def uniform_weights(m: int) -> np.ndarray:
    return np.full(m, 1.0 / m)


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + matrix.T)


def psd_sqrt(matrix: np.ndarray, name: str = "matrix") -> np.ndarray:
    """
    Symmetric square root through an eigendecomposition.

    Eigenvalues down to -PSD_TOL are clamped at zero; anything more negative
    is rejected.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidArgumentError(f"{name} must be square")
    if not np.allclose(a, a.T, atol=Defaults.SYMMETRY_TOL, rtol=0.0):
        raise InvalidArgumentError(f"{name} is not symmetric")
    eigval, eigvec = np.linalg.eigh(symmetrize(a))
    if eigval.size and eigval.min() < -Defaults.PSD_TOL * max(1.0, abs(eigval).max()):
        raise InvalidArgumentError(f"{name} is not positive semidefinite")
    root = (eigvec * np.sqrt(np.clip(eigval, 0.0, None))) @ eigvec.T
    return symmetrize(root)


@contextmanager
def stopwatch() -> Iterator[dict]:
    """
    Measure elapsed wall-clock milliseconds.

    Example:
        with stopwatch() as clock:
            solve(...)
        logger.debug("took %.1f ms", clock["ms"])
    """
    record = {"ms": 0.0}
    start = time.perf_counter()
    try:
        yield record
    finally:
        record["ms"] = (time.perf_counter() - start) * 1000.0
