"""
Inner worst-case solvers over a finite support.

Every solver maximises Σ p_i v_i over probability vectors p in a ball
around ``base`` and returns a ``WorstCaseResult``. Atoms with zero base
mass never receive mass.
"""
import math

import numpy as np
from scipy import optimize, special

from src.dro.ambiguity import WorstCaseResult
from src.utils.common_utils import as_simplex
from src.utils.exceptions import ConfigurationError, InvalidArgumentError, SolverAbortError
from src.utils.logging_config import get_logger

logger = get_logger(__name__)

# slack on the sign conditions of the χ² active set
_KKT_TOL = 1e-10
_BRACKET_EXPANSIONS = 60


def _prepare(values, base, eps):
    v = np.asarray(values, dtype=float)
    if v.ndim != 1:
        raise ConfigurationError("values must be a vector")
    q = as_simplex(base, "base")
    if q.shape != v.shape:
        raise ConfigurationError(f"{v.size} values but {q.size} base weights")
    if not np.all(np.isfinite(v)):
        raise InvalidArgumentError("values must be finite")
    eps = float(eps)
    if not math.isfinite(eps) or eps < 0:
        raise InvalidArgumentError(f"eps must be finite and >= 0, got {eps}")
    return v, q, eps


def _collapse(v, q, support):
    top = v[support].max()
    on_top = support & (v == top)
    weights = np.where(on_top, q, 0.0)
    return float(top), weights / weights.sum(), float(q[on_top].sum())


def chi2_worst_case(values, base, eps: float) -> WorstCaseResult:
    """
    Exact maximiser over {p : ½ Σ (p_i − q_i)² / q_i <= eps}.

    The variance formula mean + sqrt(2·eps·Var) is used when its weights
    stay nonnegative. Otherwise the zero set is a prefix of the atoms sorted
    by ascending value; every prefix is evaluated at once and the first one
    meeting the KKT sign conditions is returned.

    Args:
        values: h(x; xi_i) per atom
        base: center weights q
        eps: radius >= 0

    Returns:
        WorstCaseResult with ``dual`` the multiplier of the χ² constraint
    """
    v, q, eps = _prepare(values, base, eps)
    mean = float(q @ v)
    if eps == 0.0:
        return WorstCaseResult(mean, q, None, True)

    support = q > 0
    centered = v - mean
    var = float(q @ centered ** 2)
    if var <= 0.0 or np.ptp(v[support]) == 0.0:
        return WorstCaseResult(float(v[support][0]), q, None, True, {"degenerate": True})

    scale = math.sqrt(2.0 * eps / var)
    ratio = 1.0 + scale * centered
    if ratio[support].min() >= 0.0:
        weights = q * ratio
        return WorstCaseResult(mean + math.sqrt(2.0 * eps * var), weights, 1.0 / scale, True)

    top, collapsed, top_mass = _collapse(v, q, support)
    if 2.0 * eps >= (1.0 - top_mass) / top_mass:
        return WorstCaseResult(float(collapsed @ v), collapsed, 0.0, False, {"collapsed": True})

    index = np.flatnonzero(support)
    order = index[np.argsort(v[index], kind="stable")]
    vs, qs, ws = v[order], q[order], centered[order]

    # suffix sums give the free set F = sorted[k:], zero set Z = sorted[:k]
    q_free = np.cumsum(qs[::-1])[::-1]
    s1 = np.cumsum((qs * ws)[::-1])[::-1]
    s2 = np.cumsum((qs * ws ** 2)[::-1])[::-1]
    q_zero = np.concatenate(([0.0], np.cumsum(qs)[:-1]))

    k = np.arange(1, vs.size)
    qf, qz = q_free[k], q_zero[k]
    mf = s1[k] / qf
    vf = np.maximum(s2[k] / qf - mf ** 2, 0.0)
    numerator = 2.0 * eps - qz / qf
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = np.sqrt(np.where((numerator > 0) & (vf > 0), numerator / (qf * vf), np.nan))
        nu = mf - qz / (slope * qf)
        lowest_free = 1.0 + slope * (ws[k] - nu)
        highest_zero = 1.0 + slope * (ws[k - 1] - nu)
    violation = np.maximum(-lowest_free, 0.0) + np.maximum(highest_zero, 0.0)
    violation = np.where(np.isfinite(slope), violation, np.inf)

    admissible = np.flatnonzero(violation <= _KKT_TOL)
    if admissible.size:
        pick = int(admissible[0])
    else:
        pick = int(np.argmin(violation))
        if not np.isfinite(violation[pick]):
            raise SolverAbortError("chi2 active set found no admissible zero set")
        logger.warning("chi2 active set accepted KKT violation %.3g", violation[pick])

    a, shift = float(slope[pick]), float(nu[pick])
    weights = np.zeros_like(q)
    weights[order] = qs * np.maximum(1.0 + a * (ws - shift), 0.0)
    weights /= weights.sum()
    return WorstCaseResult(
        float(weights @ v), weights, 1.0 / a, False,
        {"zero_set_size": int(k[pick]), "kkt_violation": float(violation[pick])},
    )


def _kl_tilt(z: np.ndarray, q: np.ndarray):
    """Gibbs weights q·exp(z) / Σ q·exp(z) and KL(p‖q), z <= 0."""
    log_norm = float(special.logsumexp(z, b=q))
    weights = q * np.exp(z - log_norm)
    kl = float(weights @ z) - log_norm
    return weights, max(kl, 0.0)


def kl_worst_case(values, base, eps: float) -> WorstCaseResult:
    """
    Maximiser over {p : KL(p‖q) <= eps} through the scalar dual in λ.

    The optimal p is the tilt q·exp(v/λ); λ solves KL(p_λ‖q) = eps by Brent's
    method on a range-normalised bracket. Once eps reaches −log q(argmax v)
    all mass sits on the maximisers.
    """
    v, q, eps = _prepare(values, base, eps)
    mean = float(q @ v)
    if eps == 0.0:
        return WorstCaseResult(mean, q, None, False)

    support = q > 0
    spread = float(np.ptp(v[support]))
    if spread == 0.0:
        return WorstCaseResult(float(v[support][0]), q, None, False, {"degenerate": True})

    top, collapsed, top_mass = _collapse(v, q, support)
    if eps >= -math.log(top_mass):
        return WorstCaseResult(float(collapsed @ v), collapsed, 0.0, True, {"collapsed": True})

    qs = q[support]
    gap = v[support] - top

    def excess(lam):
        return _kl_tilt(gap / lam, qs)[1] - eps

    lo, hi = 1e-8 * spread, 1e4 * spread
    for _ in range(_BRACKET_EXPANSIONS):
        if excess(lo) > 0:
            break
        lo /= 10.0
    for _ in range(_BRACKET_EXPANSIONS):
        if excess(hi) < 0:
            break
        hi *= 10.0
    if not (excess(lo) > 0 > excess(hi)):
        raise SolverAbortError(f"KL dual bracket [{lo:.3g}, {hi:.3g}] does not enclose the root")

    lam = optimize.brentq(excess, lo, hi, xtol=1e-14 * spread, rtol=4 * np.finfo(float).eps, maxiter=500)
    tilt, _ = _kl_tilt(gap / lam, qs)
    weights = np.zeros_like(q)
    weights[support] = tilt
    return WorstCaseResult(float(weights @ v), weights, float(lam), False)


def w1_worst_case_lipschitz(mean_value: float, lip: float, eps: float) -> WorstCaseResult:
    """mean + eps·lip, the exact W1 value for Lipschitz convex costs."""
    if not lip >= 0 or not math.isfinite(lip):
        raise InvalidArgumentError(f"Lipschitz constant must be finite and >= 0, got {lip}")
    if not eps >= 0 or not math.isfinite(eps):
        raise InvalidArgumentError(f"eps must be finite and >= 0, got {eps}")
    return WorstCaseResult(float(mean_value) + eps * lip, None, lip, True)
