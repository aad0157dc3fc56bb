import math

import numpy as np
import pytest
from scipy import optimize

from src.dist.divergences import discrete_divergence
from src.dro.inner import chi2_worst_case, kl_worst_case, w1_worst_case_lipschitz
from src.utils.exceptions import ConfigurationError, InvalidArgumentError

LATTICE = 2000


def _simplex_lattice_3():
    i, j = np.meshgrid(np.arange(LATTICE + 1), np.arange(LATTICE + 1), indexing="ij")
    keep = i + j <= LATTICE
    i, j = i[keep], j[keep]
    return np.column_stack([i, j, LATTICE - i - j]) / LATTICE


GRID_3 = _simplex_lattice_3()


def _grid_chi2_oracle(values, q, eps):
    """Best value over lattice points of the 2-simplex inside the χ² ball."""
    chi2 = 0.5 * np.sum((GRID_3 - q) ** 2 / q, axis=1)
    inside = chi2 <= eps + 1e-12
    return float((GRID_3[inside] @ values).max())


def _line_chi2_oracle(values, q, eps, steps=200_000):
    p1 = np.linspace(0.0, 1.0, steps + 1)
    grid = np.column_stack([p1, 1.0 - p1])
    chi2 = 0.5 * np.sum((grid - q) ** 2 / q, axis=1)
    return float((grid[chi2 <= eps + 1e-12] @ values).max())


def test_closed_form_example():
    result = chi2_worst_case([0.0, 1.0, 2.0], np.full(3, 1 / 3), 0.06)
    assert result.value == pytest.approx(1.0 + math.sqrt(0.08), abs=1e-6)
    assert np.allclose(result.weights, [0.19191, 0.33333, 0.47475], atol=1e-5)
    assert result.closed_form_used
    assert _grid_chi2_oracle(np.array([0.0, 1.0, 2.0]), np.full(3, 1 / 3), 0.06) == pytest.approx(
        result.value, abs=2e-3
    )


def test_zero_radius_returns_the_mean(rng):
    values = rng.normal(size=6)
    q = rng.dirichlet(np.ones(6))
    for solver in (chi2_worst_case, kl_worst_case):
        assert solver(values, q, 0.0).value == pytest.approx(float(q @ values))


def test_chi2_collapse_stays_below_the_variance_formula():
    values = np.array([0.0, 0.0, 3.0])
    result = chi2_worst_case(values, np.full(3, 1 / 3), 2.0)
    assert result.value < 1.0 + math.sqrt(2.0 * 2.0 * 2.0)
    assert np.all(result.weights >= 0.0)
    assert result.value == pytest.approx(3.0)
    assert _grid_chi2_oracle(values, np.full(3, 1 / 3), 2.0) == pytest.approx(result.value, abs=1e-3)


def test_chi2_active_set_regime():
    values = np.array([0.0, 1.0, 3.0])
    q = np.full(3, 1 / 3)
    eps = 0.7
    result = chi2_worst_case(values, q, eps)
    variance = float(q @ (values - q @ values) ** 2)
    assert not result.closed_form_used
    assert result.weights[0] == 0.0
    assert np.all(result.weights >= 0.0)
    assert result.value < q @ values + math.sqrt(2.0 * eps * variance)
    assert discrete_divergence(result.weights, q, "chi2") == pytest.approx(eps, abs=1e-9)
    # zero set {0}: p3 = 1/3 + t with 2t² − (2/3)t + 1/9 − (eps/1.5 − 1/9) = 0
    assert result.value == pytest.approx(1.0 + 2.0 * (1 / 3 + (2 / 3 + math.sqrt(2.4)) / 4), abs=1e-9)
    assert _grid_chi2_oracle(values, q, eps) == pytest.approx(result.value, abs=2e-3)


def test_chi2_matches_the_grid_oracle(rng):
    for trial in range(100):
        eps = float(rng.uniform(0.0, 1.0))
        if trial % 2:
            counts = rng.multinomial(LATTICE - 3, np.ones(3) / 3) + 1
            q = counts / LATTICE
            values = rng.uniform(0.0, 1.0, size=3)
            oracle = _grid_chi2_oracle(values, q, eps)
        else:
            q = np.array([0.5, 0.5]) if trial % 4 == 0 else np.array([0.3, 0.7])
            values = rng.uniform(0.0, 1.0, size=2)
            oracle = _line_chi2_oracle(values, q, eps)
        result = chi2_worst_case(values, q, eps)
        assert result.value == pytest.approx(oracle, abs=1e-3)
        assert result.value >= oracle - 1e-9
        assert np.all(result.weights >= 0.0)
        assert discrete_divergence(result.weights, q, "chi2") <= eps + 1e-9


def test_chi2_closed_form_identity(rng):
    checked = 0
    while checked < 1000:
        m = int(rng.integers(2, 8))
        values = rng.normal(size=m)
        q = rng.dirichlet(np.ones(m))
        eps = float(rng.uniform(0.0, 0.05))
        mean = float(q @ values)
        variance = float(q @ (values - mean) ** 2)
        if eps == 0.0 or np.min(1.0 + math.sqrt(2.0 * eps / variance) * (values - mean)) < 0.0:
            continue
        result = chi2_worst_case(values, q, eps)
        assert result.closed_form_used
        assert abs(result.value - (mean + math.sqrt(2.0 * eps * variance))) <= 1e-9
        checked += 1


def test_constant_values_are_returned_unchanged():
    assert kl_worst_case([2.5, 2.5, 2.5], np.full(3, 1 / 3), 3.0).value == 2.5
    assert chi2_worst_case([2.5, 2.5], [0.4, 0.6], 3.0).value == 2.5


def test_kl_large_radius_puts_all_mass_on_the_maximum():
    result = kl_worst_case([0.0, 1.0], [0.5, 0.5], 50.0)
    assert result.value == pytest.approx(1.0)
    assert result.weights.tolist() == [0.0, 1.0]


def _kl_two_atom_oracle(values, q, eps):
    low, high = sorted(range(2), key=lambda i: values[i])
    q_high = q[high]
    if eps >= -math.log(q_high):
        return values[high]

    def excess(p):
        return p * math.log(p / q_high) + (1.0 - p) * math.log((1.0 - p) / (1.0 - q_high)) - eps

    p = optimize.brentq(excess, q_high, 1.0 - 1e-15, xtol=1e-15)
    return values[low] + p * (values[high] - values[low])


def test_kl_matches_the_tilt_oracle():
    values = np.array([0.0, 1.0])
    result = kl_worst_case(values, [0.5, 0.5], 0.1)
    assert result.value == pytest.approx(_kl_two_atom_oracle(values, np.array([0.5, 0.5]), 0.1), abs=1e-6)


def test_kl_matches_the_tilt_oracle_on_random_pairs(rng):
    for _ in range(100):
        values = rng.normal(size=2)
        q = rng.dirichlet(np.ones(2))
        eps = float(rng.uniform(0.001, 2.0))
        result = kl_worst_case(values, q, eps)
        assert result.value == pytest.approx(_kl_two_atom_oracle(values, q, eps), abs=1e-6)


def test_kl_weights_are_on_the_ball_boundary(rng):
    values = rng.normal(size=5)
    q = np.full(5, 0.2)
    result = kl_worst_case(values, q, 0.2)
    assert discrete_divergence(result.weights, q, "kl") == pytest.approx(0.2, abs=1e-8)
    assert result.dual > 0


def test_w1_lipschitz_value():
    assert w1_worst_case_lipschitz(1.25, 3.0, 0.0).value == 1.25
    assert w1_worst_case_lipschitz(2.0, 3.0, 0.5).value == pytest.approx(3.5)
    base = w1_worst_case_lipschitz(2.0, 3.0, 0.4).value - 2.0
    doubled = w1_worst_case_lipschitz(2.0, 3.0, 0.8).value - 2.0
    assert doubled == pytest.approx(2.0 * base)


def test_inner_solvers_validate_inputs():
    with pytest.raises(InvalidArgumentError):
        chi2_worst_case([1.0, 2.0], [0.5, 0.5], -0.1)
    with pytest.raises(ConfigurationError):
        kl_worst_case([1.0, 2.0, 3.0], [0.5, 0.5], 0.1)
    with pytest.raises(InvalidArgumentError):
        chi2_worst_case([1.0, math.inf], [0.5, 0.5], 0.1)
    with pytest.raises(InvalidArgumentError):
        w1_worst_case_lipschitz(0.0, -1.0, 0.1)


def test_kl_stays_below_the_chi2_style_bound(rng):
    for _ in range(200):
        m = int(rng.integers(2, 7))
        values = rng.normal(size=m)
        q = rng.dirichlet(np.ones(m))
        mean = float(q @ values)
        var = float(q @ (values - mean) ** 2)
        eps = float(rng.uniform(0.0, 1.0)) * var / (4.0 * np.max(np.abs(values - mean)) ** 2)
        result = kl_worst_case(values, q, eps)
        assert result.value <= mean + 3.0 * math.sqrt(var * eps) + 1e-9


@pytest.mark.parametrize("kind, solver", [("chi2", chi2_worst_case), ("kl", kl_worst_case)])
def test_weights_achieve_the_value_inside_the_ball(kind, solver, rng):
    for _ in range(200):
        m = int(rng.integers(2, 9))
        values = rng.normal(size=m)
        q = rng.dirichlet(np.ones(m))
        eps = float(rng.uniform(0.0, 2.0))
        result = solver(values, q, eps)
        assert abs(float(result.weights @ values) - result.value) <= 1e-9
        assert discrete_divergence(result.weights, q, kind) <= eps + 1e-8
        assert result.weights.min() >= -1e-12
