"""Simplex engine tests against a brute-force vertex enumeration oracle."""

import numpy as np
import pytest

from relucert.lp import FEAS_TOL, INFEASIBLE, OPTIMAL, UNBOUNDED, LpProblem, solve_lp

from oracles import as_inequalities, vertex_enumeration_max


def test_one_variable_max():
    p = LpProblem([1.0], [[1.0]], ("<=",), [3.0], bounds=((0.0, None),))
    r = solve_lp(p)
    assert r.status == OPTIMAL
    assert r.value == pytest.approx(3.0, abs=1e-9)


def test_contradictory_rows_infeasible():
    p = LpProblem([1.0], [[1.0], [1.0]], ("<=", ">="), [0.0, 1.0])
    assert solve_lp(p).status == INFEASIBLE


def test_no_upper_bound_unbounded():
    p = LpProblem([1.0], np.zeros((0, 1)), (), [], bounds=((0.0, None),))
    assert solve_lp(p).status == UNBOUNDED


def test_free_variable_equality():
    p = LpProblem([1.0, 1.0], [[1, 1], [1, -1]], ("<=", "="), [2.0, 0.5])
    r = solve_lp(p)
    assert r.status == OPTIMAL
    assert r.value == pytest.approx(2.0, abs=1e-9)


def random_bounded_lp(rng, n):
    m = int(rng.integers(1, 4))
    A = rng.uniform(-1, 1, size=(m, n))
    # rhs chosen so the box center is strictly feasible
    center = rng.uniform(-0.5, 0.5, size=n)
    b = A @ center + rng.uniform(0.2, 1.5, size=m)
    c = rng.uniform(-1, 1, size=n)
    bounds = tuple((float(lo), float(lo + w)) for lo, w in zip(center - rng.uniform(0.5, 2, n), rng.uniform(1, 3, n)))
    return LpProblem(c, A, ("<=",) * m, b, bounds=bounds)


def test_random_lps_match_vertex_enumeration():
    rng = np.random.default_rng(20240513)
    checked = 0
    while checked < 20:
        n = int(rng.integers(2, 6))
        p = random_bounded_lp(rng, n)
        r = solve_lp(p)
        assert r.status == OPTIMAL
        oracle = vertex_enumeration_max(p)
        assert oracle is not None
        assert r.value == pytest.approx(oracle, abs=1e-7)
        checked += 1


def test_larger_lp_matches_oracle():
    # 12 nonnegative vars, few rows, so vertex enumeration stays cheap
    rng = np.random.default_rng(7)
    n = 12
    A = rng.uniform(0.1, 1.0, size=(3, n))
    b = rng.uniform(2.0, 4.0, size=3)
    c = rng.uniform(0.0, 1.0, size=n)
    p = LpProblem(c, A, ("<=",) * 3, b, bounds=((0.0, None),) * n)
    r = solve_lp(p)
    assert r.status == OPTIMAL
    assert r.value == pytest.approx(vertex_enumeration_max(p), abs=1e-7)


def test_optimal_point_feasible_and_value_consistent():
    rng = np.random.default_rng(99)
    for _ in range(10):
        p = random_bounded_lp(rng, int(rng.integers(2, 6)))
        r = solve_lp(p)
        assert r.status == OPTIMAL
        G, h, A, b = as_inequalities(p)
        assert np.max(G @ r.point - h) <= FEAS_TOL * 10
        assert abs(p.objective @ r.point - r.value) <= 1e-8


def test_weak_duality_spot_check():
    rng = np.random.default_rng(3)
    p = random_bounded_lp(rng, 4)
    r = solve_lp(p)
    assert r.status == OPTIMAL
    G, h, _, _ = as_inequalities(p)
    lo = np.array([bb[0] for bb in p.bounds])
    hi = np.array([bb[1] for bb in p.bounds])
    hits = 0
    for _ in range(2000):
        x = rng.uniform(lo, hi)
        if np.max(G @ x - h) <= 0:
            assert p.objective @ x <= r.value + 1e-7
            hits += 1
    assert hits > 0


def test_determinism():
    rng = np.random.default_rng(11)
    p = random_bounded_lp(rng, 5)
    r1 = solve_lp(p)
    r2 = solve_lp(p)
    assert r1.status == r2.status
    assert r1.value == r2.value
    assert np.array_equal(r1.point, r2.point)


def test_degenerate_equality_only_point():
    # feasible set is the single point x = (1, 2)
    p = LpProblem([3.0, -1.0], [[1, 0], [0, 1]], ("=", "="), [1.0, 2.0])
    r = solve_lp(p)
    assert r.status == OPTIMAL
    assert r.value == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(r.point, [1.0, 2.0], atol=1e-9)


def test_redundant_equalities():
    # duplicated equality row must not break phase 1 cleanup
    p = LpProblem([1.0, 1.0], [[1, 1], [2, 2], [1, -1]], ("=", "=", "<="), [1.0, 2.0, 5.0])
    r = solve_lp(p)
    assert r.status == OPTIMAL
    assert r.value == pytest.approx(1.0, abs=1e-9)


def test_statuses_and_values_match_reference_solver():
    """All-sense, mixed-bound random LPs against scipy's HiGHS backend.

    Presolve is disabled: HiGHS presolve labels some unbounded models
    infeasible, while the no-presolve path classifies them exactly.
    """
    from scipy.optimize import linprog

    rng = np.random.default_rng(2718)
    seen = set()
    for _ in range(60):
        n = int(rng.integers(1, 7))
        m = int(rng.integers(0, 6))
        A = rng.uniform(-2, 2, size=(m, n))
        senses = tuple(str(rng.choice(["<=", ">=", "="])) for _ in range(m))
        b = rng.uniform(-2, 2, size=m)
        c = rng.uniform(-2, 2, size=n)
        bounds = []
        for _j in range(n):
            kind = rng.integers(0, 4)
            lo = float(rng.uniform(-3, 0)) if kind in (0, 2) else None
            hi = float(rng.uniform(0, 3)) if kind in (1, 2) else None
            bounds.append((lo, hi))
        p = LpProblem(c, A, senses, b, bounds=tuple(bounds))
        mine = solve_lp(p)
        seen.add(mine.status)

        A_ub, b_ub, A_eq, b_eq = [], [], [], []
        for row, s, r in zip(A, senses, b):
            if s == "<=":
                A_ub.append(row), b_ub.append(r)
            elif s == ">=":
                A_ub.append(-row), b_ub.append(-r)
            else:
                A_eq.append(row), b_eq.append(r)
        ref = linprog(
            -c,
            A_ub=np.array(A_ub) if A_ub else None,
            b_ub=b_ub or None,
            A_eq=np.array(A_eq) if A_eq else None,
            b_eq=b_eq or None,
            bounds=bounds,
            method="highs",
            options={"presolve": False},
        )
        expected = {0: OPTIMAL, 2: INFEASIBLE, 3: UNBOUNDED}[ref.status]
        assert mine.status == expected
        if expected == OPTIMAL:
            assert mine.value == pytest.approx(-ref.fun, abs=1e-6)
    assert seen == {OPTIMAL, INFEASIBLE, UNBOUNDED}
