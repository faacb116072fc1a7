from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import lp_vertex_enumeration
from signalkit.errors import ContractViolation, DimensionError
from signalkit.lp import (
    LinearProgram,
    SeparationAnswer,
    complementary_slackness_residual,
    ellipsoid_feasibility,
    primal_residual,
    solve_lp,
)


def random_lp(rng):
    n = int(rng.integers(1, 5))
    m = int(rng.integers(1, 7))
    A = rng.integers(-4, 5, size=(m, n)).astype(float)
    b = rng.integers(-3, 8, size=m).astype(float)
    c = rng.integers(-5, 6, size=n).astype(float)
    senses = tuple(rng.choice(["<=", "<=", ">=", "="], size=m))
    sense = str(rng.choice(["max", "min"]))
    return LinearProgram(c, A, b, senses, sense=sense)


def test_single_variable_bound():
    sol = solve_lp(LinearProgram([1.0], [[1.0]], [3.0], ("<=",)))
    assert sol.status == "optimal"
    assert sol.value == pytest.approx(3.0)
    assert sol.dual[0] == pytest.approx(1.0)


def test_empty_region_is_infeasible():
    sol = solve_lp(LinearProgram([2.0], [[1.0]], [-1.0], ("<=",)))
    assert sol.status == "infeasible"


def test_unbounded():
    sol = solve_lp(LinearProgram([1.0, 1.0], [[1.0, -1.0]], [1.0], ("<=",)))
    assert sol.status == "unbounded"


def test_shape_mismatch_raises():
    with pytest.raises(DimensionError):
        LinearProgram([1.0, 2.0], [[1.0]], [1.0], ("<=",))
    with pytest.raises(DimensionError):
        LinearProgram([1.0], [[np.inf]], [1.0], ("<=",))
    with pytest.raises(DimensionError):
        LinearProgram([1.0], [[1.0]], [1.0], ("<",))


@pytest.mark.parametrize("method", ["simplex", "exact", "highs"])
def test_random_lps_match_vertex_enumeration(method):
    rng = np.random.default_rng(1234)
    for _ in range(50):
        lp = random_lp(rng)
        status, value = lp_vertex_enumeration(
            lp.objective, lp.constraint_matrix, lp.rhs, lp.row_senses, lp.sense
        )
        sol = solve_lp(lp, method=method)
        assert sol.status == status
        if status == "optimal":
            assert float(sol.value) == pytest.approx(value, abs=1e-7)
            assert primal_residual(lp, sol.primal) <= 1e-8
            assert complementary_slackness_residual(lp, sol.primal, sol.dual) <= 1e-8
            assert abs(float(sol.value) - float(sol.dual_value)) <= 1e-7


def test_exact_mode_returns_fractions():
    lp = LinearProgram([1, 1], [[3, 1], [1, 3]], [1, 1], ("<=", "<="))
    sol = solve_lp(lp, method="exact")
    assert sol.value == Fraction(1, 2)
    assert all(isinstance(v, Fraction) for v in sol.primal)
    assert sol.dual_value == sol.value


def test_free_variables_and_shifted_bounds():
    # min x + y with x free, y >= 2, x >= -3 via a row
    lp = LinearProgram(
        [1.0, 1.0], [[1.0, 0.0]], [-3.0], (">=",),
        variable_lower_bounds=[-np.inf, 2.0], sense="min",
    )
    sol = solve_lp(lp)
    assert sol.status == "optimal"
    assert sol.value == pytest.approx(-1.0)
    assert sol.dual_value == pytest.approx(-1.0)


def test_duals_are_shadow_prices():
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(150):
        lp = random_lp(rng)
        sol = solve_lp(lp)
        if not sol.optimal:
            continue
        i = int(rng.integers(lp.shape[0]))
        h = 1e-6
        b2 = lp.rhs.copy()
        b2[i] += h
        sol2 = solve_lp(LinearProgram(lp.objective, lp.constraint_matrix, b2, lp.row_senses, sense=lp.sense))
        if sol2.optimal:
            # degenerate vertices may have one-sided derivatives; only check the non-degenerate ones
            b3 = lp.rhs.copy()
            b3[i] -= h
            sol3 = solve_lp(LinearProgram(lp.objective, lp.constraint_matrix, b3, lp.row_senses, sense=lp.sense))
            if sol3.optimal and abs((sol2.value - sol.value) - (sol.value - sol3.value)) < 1e-9:
                assert (sol2.value - sol.value) / h == pytest.approx(sol.dual[i], abs=1e-4)
                checked += 1
    assert checked > 5


def test_iteration_cap_reports_numerical_failure():
    lp = LinearProgram([1.0, 1.0], [[1.0, 2.0], [2.0, 1.0]], [4.0, 4.0], ("<=", "<="))
    assert solve_lp(lp, max_iter=1).status == "numerical_failure"


def unit_box_oracle(x):
    i = int(np.argmax(np.abs(x)))
    if abs(x[i]) <= 1.0:
        return SeparationAnswer.inside()
    a = np.zeros_like(x)
    a[i] = np.sign(x[i])
    return SeparationAnswer.cut(a, 1.0)


def test_ellipsoid_finds_point_in_unit_box():
    res = ellipsoid_feasibility(unit_box_oracle, 2, 10.0, 1e-6, center=[7.0, -9.0])
    assert res.feasible
    assert np.max(np.abs(res.point)) <= 1.0


def test_ellipsoid_infeasible_certificate():
    def oracle(x):
        if x[0] < 1:
            return SeparationAnswer.cut([-1.0, 0.0], -1.0)
        if x[0] > 0:
            return SeparationAnswer.cut([1.0, 0.0], 0.0)
        return SeparationAnswer.inside()

    res = ellipsoid_feasibility(oracle, 2, 10.0, 1e-6)
    assert not res.feasible
    assert res.cuts


def test_ellipsoid_one_dimension_bisects():
    def oracle(x):
        if x[0] > 0.31:
            return SeparationAnswer.cut([1.0], 0.31)
        if x[0] < 0.29:
            return SeparationAnswer.cut([-1.0], -0.29)
        return SeparationAnswer.inside()

    res = ellipsoid_feasibility(oracle, 1, 1.0, 1e-6)
    assert res.feasible and 0.29 <= res.point[0] <= 0.31


def test_ellipsoid_rejects_bad_cut():
    with pytest.raises(ContractViolation):
        ellipsoid_feasibility(lambda x: SeparationAnswer.cut([1.0, 0.0], x[0] + 1.0), 2, 1.0, 1e-3)


def polytope_oracle(G, h):
    def oracle(x):
        viol = G @ x - h
        i = int(np.argmax(viol))
        if viol[i] <= 0:
            return SeparationAnswer.inside()
        return SeparationAnswer.cut(G[i], h[i])
    return oracle


def phase_one_feasible(G, h, radius):
    d = G.shape[1]
    box = LinearProgram(np.zeros(d), np.vstack([G, np.eye(d)]), np.concatenate([h, [radius] * d]),
                        ("<=",) * (len(h) + d), variable_lower_bounds=[-radius] * d)
    return solve_lp(box).status == "optimal"


def test_ellipsoid_agrees_with_phase_one_on_random_polytopes():
    rng = np.random.default_rng(99)
    for trial in range(20):
        G = rng.normal(size=(6, 3))
        center = rng.uniform(-3, 3, size=3)
        if trial % 2:
            # a feasible region with a ball of slack around ``center``
            h = G @ center + 0.5 * np.linalg.norm(G, axis=1)
        else:
            h = G @ center + rng.uniform(-1.5, 0.5, size=6)
        radius = 5.0
        verdict = phase_one_feasible(G, h, radius)
        res = ellipsoid_feasibility(polytope_oracle(G, h), 3, radius, 1e-7)
        if res.feasible:
            assert np.all(G @ res.point <= h + 1e-9)
            assert verdict
        else:
            # never infeasible when the region holds a ball of radius > volume_tol
            lp_slack = _max_slack(G, h, radius)
            assert lp_slack < 1e-6


def _max_slack(G, h, radius):
    d = G.shape[1]
    norms = np.linalg.norm(G, axis=1)
    A = np.hstack([G, norms[:, None]])
    A = np.vstack([A, np.hstack([np.eye(d), np.ones((d, 1))]), np.hstack([-np.eye(d), np.ones((d, 1))])])
    b = np.concatenate([h, [radius] * d, [radius] * d])
    lp = LinearProgram(np.r_[np.zeros(d), 1.0], A, b, ("<=",) * len(b),
                       variable_lower_bounds=[-np.inf] * d + [-np.inf])
    sol = solve_lp(lp)
    return sol.value if sol.optimal else -np.inf


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=3, max_size=3), st.integers(0, 10))
def test_single_row_knapsack_matches_closed_form(c, cap):
    # max c.x s.t. x1+x2+x3 <= cap, x >= 0 has value cap * max(0, max c)
    lp = LinearProgram(np.array(c, float), np.ones((1, 3)), [float(cap)], ("<=",))
    sol = solve_lp(lp)
    assert sol.value == pytest.approx(cap * max(0, max(c)))
