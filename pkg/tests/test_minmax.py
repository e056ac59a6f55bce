"""Min-max solver: worked instances, backend agreement, invariants, dual."""

import itertools

import numpy as np
import pytest

import oracles
from macfair import (
    CaseLabel,
    EnumerationLimitError,
    NoiseModel,
    SolverFailureError,
    chain_received,
    classify_case,
    equal_allocation,
    is_base,
    is_lex_optimal_base,
    is_lex_optimal_rate_base,
    is_minmax,
    max_min_rates,
    solve,
    solve_enumeration,
    solve_frank_wolfe,
    solve_weighted,
    sum_power,
)

UNIT = NoiseModel(1.0)
R2_COINCIDENT = float(np.log2(3.0) / 2.0 - 0.5)  # makes vertex (1,1) the equal point


def reconstruct(solution, rates, noise):
    total = np.zeros(len(solution.received))
    for order, weight in solution.coefficients:
        total += weight * chain_received(rates, noise.sigma_sq, order)
    return total


def test_equal_allocation_examples():
    assert np.allclose(equal_allocation([1, 1], UNIT), [7.5, 7.5])
    assert np.allclose(equal_allocation([1, 2], UNIT), [31.5, 31.5])
    assert np.allclose(equal_allocation([0, 0], UNIT), [0, 0])


def test_equal_allocation_with_gains():
    noise = NoiseModel(1.0, gains=[4.0, 1.0])
    g = equal_allocation([1, 1], noise)
    assert np.allclose(g, [7.5 / 4.0, 7.5])
    assert float(noise.received(g).sum()) == pytest.approx(15.0, rel=1e-12)


def test_classify_case_examples():
    assert classify_case([0.5, 0.29248], UNIT) is CaseLabel.VERTEX_COINCIDENT
    assert classify_case([0.5, R2_COINCIDENT], UNIT) is CaseLabel.VERTEX_COINCIDENT
    assert classify_case([0.5, 1.5], UNIT) is CaseLabel.INTERIOR_FEASIBLE
    assert classify_case([0.1, 1.9], UNIT) is CaseLabel.INFEASIBLE
    assert classify_case([0.0, 0.0], UNIT) is CaseLabel.VERTEX_COINCIDENT


def test_solve_interior_case():
    sol = solve_enumeration([0.5, 1.5], UNIT)
    assert np.allclose(sol.received, [7.5, 7.5], atol=1e-8)
    assert sol.case is CaseLabel.INTERIOR_FEASIBLE
    assert sol.distance <= 1e-8
    weights = dict(sol.coefficients)
    assert weights[(0, 1)] == pytest.approx(1.0 / 14.0, abs=1e-9)
    assert weights[(1, 0)] == pytest.approx(13.0 / 14.0, abs=1e-9)


def test_solve_interior_case_second():
    sol = solve_enumeration([1, 2], UNIT)
    assert np.allclose(sol.received, [31.5, 31.5], atol=1e-8)
    weights = dict(sol.coefficients)
    assert weights[(0, 1)] == pytest.approx(11.0 / 30.0, abs=1e-9)
    assert weights[(1, 0)] == pytest.approx(19.0 / 30.0, abs=1e-9)


def test_solve_projection_case():
    sol = solve_enumeration([0.1, 1.9], UNIT)
    rho2 = 2.0 ** 3.8 - 1.0
    assert np.allclose(sol.received, [15.0 - rho2, rho2], atol=1e-9)
    assert sol.case is CaseLabel.INFEASIBLE
    assert len(sol.coefficients) == 1
    assert sol.coefficients[0][0] == (1, 0)
    # squared distance to (7.5, 7.5), confirmed against the grid oracle
    point, best = oracles.grid_minmax_n2([0.1, 1.9], 1.0)
    assert np.allclose(sol.received, point, atol=1e-4)
    assert sol.distance == pytest.approx(best, rel=1e-6)


def test_solve_vertex_coincident_exact():
    sol = solve_enumeration([0.5, R2_COINCIDENT], UNIT)
    assert sol.case is CaseLabel.VERTEX_COINCIDENT
    assert np.allclose(sol.received, [1.0, 1.0], atol=1e-12)
    assert len(sol.coefficients) == 1
    assert sol.coefficients[0][1] == 1.0
    assert sol.distance <= 1e-12


def test_solve_single_node():
    sol = solve_enumeration([1.0], UNIT)
    assert np.allclose(sol.received, [3.0])
    assert sol.case is CaseLabel.VERTEX_COINCIDENT
    assert sol.coefficients == (((0,), 1.0),)


def test_solve_zero_rates():
    sol = solve_enumeration([0.0, 0.0], UNIT)
    assert np.all(sol.received == 0.0)
    assert sol.case is CaseLabel.VERTEX_COINCIDENT


def test_solution_invariants_random():
    rng = np.random.default_rng(41)
    for _ in range(40):
        n = int(rng.integers(2, 6))
        rates = rng.uniform(0.0, 2.0, n)
        noise = NoiseModel(float(rng.choice([1.0, 1e-3])))
        sol = solve_enumeration(rates, noise)
        weights = np.array([w for _, w in sol.coefficients])
        assert np.all(weights > 0.0)
        assert weights.sum() == pytest.approx(1.0, abs=1e-10)
        assert np.allclose(reconstruct(sol, rates, noise), sol.received,
                           atol=1e-8 * (1 + sum_power(rates, noise)))
        assert is_base(sol.transmit, rates, noise)
        assert sol.received.sum() == pytest.approx(
            sum_power(rates, noise), rel=1e-10)


def test_case_consistency():
    # vertex-coincident: zero distance, single unit weight
    sol = solve_enumeration([0.5, R2_COINCIDENT], UNIT)
    assert sol.distance <= 1e-12 and len(sol.coefficients) == 1
    # interior: distance ~ 0 but several weights
    sol = solve_enumeration([0.5, 1.5], UNIT)
    assert sol.distance <= 1e-8
    # infeasible target: strictly positive distance
    sol = solve_enumeration([0.1, 1.9], UNIT)
    assert sol.distance > 1.0


def test_scale_covariance_exact():
    rng = np.random.default_rng(43)
    for _ in range(10):
        n = int(rng.integers(2, 6))
        rates = rng.uniform(0.0, 2.0, n)
        c = float(rng.choice([1e-3, 2.5, 7.0]))
        a = solve_enumeration(rates, NoiseModel(1.0))
        b = solve_enumeration(rates, NoiseModel(c))
        assert np.array_equal(b.received, c * a.received)
        assert b.case is a.case
        assert [o for o, _ in b.coefficients] == [o for o, _ in a.coefficients]


def test_frank_wolfe_agrees_with_enumeration():
    rng = np.random.default_rng(47)
    for _ in range(40):
        n = int(rng.integers(2, 6))
        rates = rng.uniform(0.0, 1.5, n)
        noise = NoiseModel(float(rng.choice([1.0, 1e-3])))
        a = solve_enumeration(rates, noise, check=False)
        b = solve_frank_wolfe(rates, noise, check=False)
        assert np.max(np.abs(a.received - b.received)) <= 1e-5


def test_frank_wolfe_symmetric_case():
    sol = solve_frank_wolfe([1, 1, 1, 1], NoiseModel(1e-3))
    level = sum_power([1, 1, 1, 1], NoiseModel(1e-3)) / 4.0
    assert np.allclose(sol.received, level, rtol=1e-9)
    assert sol.case is CaseLabel.INTERIOR_FEASIBLE


def test_frank_wolfe_large_n():
    rng = np.random.default_rng(3)
    rates = rng.uniform(0.01, 1.0, 10)
    noise = NoiseModel(1e-3)
    sol = solve_frank_wolfe(rates, noise)
    assert is_base(sol.transmit, rates, noise)
    assert is_lex_optimal_base(sol.transmit, rates, noise)


def test_solver_failure_carries_gap():
    with pytest.raises(SolverFailureError) as err:
        solve_frank_wolfe([0.3, 0.9, 1.4, 0.2], UNIT, tol=0.0, max_iter=2)
    assert err.value.gap >= 0.0


def test_enumeration_limit():
    with pytest.raises(EnumerationLimitError):
        solve_enumeration(np.full(8, 0.2), UNIT)


def test_fairness_oracles_agree_on_random_instances():
    """Solver output passes both fairness oracles; perturbed mixes fail both."""
    rng = np.random.default_rng(53)
    orders_cache = {}
    for _ in range(25):
        n = int(rng.integers(2, 6))
        rates = rng.uniform(0.05, 2.0, n)
        noise = NoiseModel(float(rng.choice([1.0, 1e-3])))
        sol = solve_enumeration(rates, noise)
        assert is_lex_optimal_base(sol.transmit, rates, noise)
        assert is_minmax(sol.transmit, rates, noise)
        orders = orders_cache.setdefault(
            n, list(itertools.permutations(range(n))))
        beta = rng.dirichlet(np.ones(len(orders)))
        mix_received = sum(
            b * chain_received(rates, noise.sigma_sq, o)
            for b, o in zip(beta, orders))
        scale = sum_power(rates, noise)
        if np.max(np.abs(mix_received - sol.received)) > 1e-3 * scale:
            mix_transmit = mix_received / noise.gains_for(n)
            assert not is_lex_optimal_base(mix_transmit, rates, noise)
            assert not is_minmax(mix_transmit, rates, noise)


def test_weighted_reduces_to_unweighted_bitwise():
    rng = np.random.default_rng(59)
    for _ in range(10):
        n = int(rng.integers(2, 6))
        rates = rng.uniform(0.0, 2.0, n)
        plain = solve_enumeration(rates, NoiseModel(1.0))
        unit = solve_weighted(rates, NoiseModel(1.0, gains=np.ones(n)))
        assert np.array_equal(plain.received, unit.received)
        assert plain.coefficients == unit.coefficients


def test_weighted_worked_example():
    noise = NoiseModel(1.0, gains=[4.0, 1.0])
    sol = solve_weighted([1, 1], noise)
    assert np.allclose(sol.received, [4.8, 10.2], atol=1e-9)
    assert np.allclose(sol.transmit, [1.2, 10.2], atol=1e-9)
    # cross-check with the 1-D grid oracle on the received segment
    point, best = oracles.grid_minmax_n2([1, 1], 1.0, weights=(4.0, 1.0))
    assert np.allclose(sol.received, point, atol=1e-4)
    assert sol.distance == pytest.approx(best, rel=1e-6)


def test_max_min_rates_symmetric():
    rates, coefficients = max_min_rates([1, 1], UNIT)
    expected = float(np.log2(3.0) / 4.0)
    assert np.allclose(rates, [expected, expected], atol=1e-8)
    weights = sorted(w for _, w in coefficients)
    assert np.allclose(weights, [0.5, 0.5], atol=1e-8)


def test_max_min_rates_zero_power():
    rates, coefficients = max_min_rates([0, 0], UNIT)
    assert np.all(rates == 0.0)
    assert coefficients == (((0, 1), 1.0),)


def test_max_min_rates_against_grid():
    rates, _ = max_min_rates([3, 12], UNIT)
    point, _ = oracles.grid_maxmin_rates_n2([3, 12], 1.0)
    assert np.allclose(rates, point, atol=1e-4)
    # node 0 is capped at its single-user capacity here
    assert rates[0] == pytest.approx(1.0, abs=1e-8)
    assert is_lex_optimal_rate_base(rates, [3, 12], UNIT)


def test_max_min_rates_sum_is_capacity():
    rng = np.random.default_rng(61)
    for _ in range(10):
        n = int(rng.integers(2, 5))
        powers = rng.uniform(0.1, 8.0, n)
        rates, coefficients = max_min_rates(powers, UNIT)
        from macfair import capacity_rank
        assert rates.sum() == pytest.approx(
            capacity_rank(powers, UNIT, range(n)), rel=1e-10)
        total = sum(w for _, w in coefficients)
        assert total == pytest.approx(1.0, abs=1e-10)


def test_mirrored_fairness_certificate_rejects_skewed_rate_base():
    # (0.5, log2(3)/2 - 0.5) is a vertex, not the fair base, at P=(1,1)
    skew = [0.5, float(np.log2(3.0) / 2.0 - 0.5)]
    assert not is_lex_optimal_rate_base(skew, [1, 1], UNIT)


def test_auto_backend_dispatch():
    small = solve(np.full(3, 0.4), UNIT)
    assert small.iterations >= 0
    big_rates = np.random.default_rng(0).uniform(0.05, 0.5, 9)
    big = solve(big_rates, NoiseModel(1e-3))
    assert is_base(big.transmit, big_rates, NoiseModel(1e-3))
