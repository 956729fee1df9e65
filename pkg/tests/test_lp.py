"""Move-limit LP solver versus brute-force vertex enumeration."""

from itertools import combinations, product

import numpy as np
import pytest

from meip.lp import (LpInfeasibleError, MoveLimitLp, default_penalty,
                     solve_move_limit_lp)


def enumerate_vertices(prob: MoveLimitLp):
    """Independent oracle: scan all basic solutions of the original LP.

    Vertices have at most 3 free variables (2 equality rows always active,
    the inequality active or not); everything else sits at a bound.
    Returns the optimal objective, or +inf if no feasible vertex exists.
    """
    n_p, n_q = prob.c_p.size, prob.c_q.size
    n = n_p + n_q
    c = np.concatenate([prob.c_p, prob.c_q])
    a = np.concatenate([prob.a_p, prob.a_q])
    lo = np.concatenate([prob.lower_p, prob.lower_q])
    hi = np.full(n, prob.upper)
    eq_rows = [(np.concatenate([np.ones(n_p), np.zeros(n_q)]), prob.tolx_p),
               (np.concatenate([np.zeros(n_p), np.ones(n_q)]), prob.tolx_q)]
    b_ineq = -prob.g0
    best = np.inf
    for tight in (False, True):
        rows = eq_rows + ([(a, b_ineq)] if tight else [])
        k = len(rows)
        A = np.array([r[0] for r in rows])
        rhs_full = np.array([r[1] for r in rows])
        for free in combinations(range(n), k):
            M = A[:, list(free)]
            if abs(np.linalg.det(M)) < 1e-12:
                continue
            rest = [i for i in range(n) if i not in free]
            for bits in product((0, 1), repeat=len(rest)):
                x = np.empty(n)
                for i, bit in zip(rest, bits):
                    x[i] = hi[i] if bit else lo[i]
                rhs = rhs_full - A[:, rest] @ x[rest]
                x[list(free)] = np.linalg.solve(M, rhs)
                if np.any(x < lo - 1e-9) or np.any(x > hi + 1e-9):
                    continue
                if not tight and a @ x > b_ineq + 1e-9:
                    continue
                best = min(best, float(c @ x))
    return best


def random_feasible_problem(rng, n_p=3, n_q=3, force_tight=False):
    lo_p = -rng.uniform(0.2, 1.0, n_p)
    lo_q = -rng.uniform(0.2, 1.0, n_q)
    up = float(rng.uniform(0.3, 1.2))
    ref = np.concatenate([rng.uniform(lo_p, up), rng.uniform(lo_q, up)])
    a_p, a_q = rng.standard_normal(n_p), rng.standard_normal(n_q)
    margin = 0.0 if force_tight else abs(rng.standard_normal())
    g0 = -(np.concatenate([a_p, a_q]) @ ref + margin)
    return MoveLimitLp(
        c_p=rng.standard_normal(n_p), c_q=rng.standard_normal(n_q),
        a_p=a_p, a_q=a_q, g0=float(g0),
        tolx_p=float(ref[:n_p].sum()), tolx_q=float(ref[n_p:].sum()),
        lower_p=lo_p, lower_q=lo_q, upper=up)


class TestHandSolvableInstances:
    def test_two_variable_equality(self):
        # min x1 - 2 x2 subject to x1 + x2 = 0, boxes [-1, 1]^2
        prob = MoveLimitLp(
            c_p=np.array([1.0, -2.0]), c_q=np.array([0.0]),
            a_p=np.zeros(2), a_q=np.zeros(1), g0=-1.0,
            tolx_p=0.0, tolx_q=0.0,
            lower_p=np.array([-1.0, -1.0]), lower_q=np.array([0.0]),
            upper=1.0)
        sol = solve_move_limit_lp(prob)
        assert sol.objective == pytest.approx(-3.0, abs=1e-12)
        assert np.allclose(sol.x_p, [-1.0, 1.0], atol=1e-12)
        assert sol.feasible

    def test_inequality_binds(self):
        # min -x1 with x1 <= 0.5 and box [0, 1]; the filler variable keeps
        # the budget row feasible
        prob = MoveLimitLp(
            c_p=np.array([-1.0, 0.0]), c_q=np.array([0.0]),
            a_p=np.array([1.0, 0.0]), a_q=np.zeros(1), g0=-0.5,
            tolx_p=1.5, tolx_q=0.0,
            lower_p=np.zeros(2), lower_q=np.zeros(1), upper=1.0)
        sol = solve_move_limit_lp(prob)
        assert sol.x_p[0] == pytest.approx(0.5, abs=1e-12)
        assert sol.objective == pytest.approx(-0.5, abs=1e-12)


class TestOracle:
    def test_matches_vertex_enumeration(self):
        rng = np.random.default_rng(2024)
        for trial in range(200):
            prob = random_feasible_problem(rng,
                                           force_tight=(trial % 4 == 0))
            sol = solve_move_limit_lp(prob)
            ref = enumerate_vertices(prob)
            assert sol.objective == pytest.approx(ref, abs=1e-9, rel=1e-9), \
                f"trial {trial}"
            assert sol.slack_used <= 1e-9

    def test_solution_feasibility(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            prob = random_feasible_problem(rng)
            sol = solve_move_limit_lp(prob)
            x = np.concatenate([sol.x_p, sol.x_q])
            lo = np.concatenate([prob.lower_p, prob.lower_q])
            assert np.all(x >= lo - 1e-12)
            assert np.all(x <= prob.upper + 1e-12)
            assert sol.x_p.sum() == pytest.approx(prob.tolx_p, abs=1e-9)
            assert sol.x_q.sum() == pytest.approx(prob.tolx_q, abs=1e-9)
            if sol.slack_used == 0.0:
                a = np.concatenate([prob.a_p, prob.a_q])
                assert a @ x <= -prob.g0 + 1e-9


class TestOptimalityCertificate:
    def test_reduced_cost_signs(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            prob = random_feasible_problem(rng)
            sol = solve_move_limit_lp(prob)
            d = sol.reduced_costs
            for j in range(d.size):
                if sol.basic[j]:
                    continue
                if sol.at_upper[j]:
                    assert d[j] <= 1e-9
                else:
                    assert d[j] >= -1e-9


class TestDeterminism:
    def test_bit_identical_reruns(self):
        rng = np.random.default_rng(5)
        prob = random_feasible_problem(rng)
        s1 = solve_move_limit_lp(prob)
        s2 = solve_move_limit_lp(prob)
        assert np.array_equal(s1.x_p, s2.x_p)
        assert np.array_equal(s1.x_q, s2.x_q)
        assert s1.objective == s2.objective


class TestInfeasibleAndPenalty:
    def test_equality_row_infeasible(self):
        prob = MoveLimitLp(
            c_p=np.zeros(2), c_q=np.zeros(2),
            a_p=np.zeros(2), a_q=np.zeros(2), g0=-1.0,
            tolx_p=10.0,  # beyond 2 * upper
            tolx_q=0.0,
            lower_p=-np.ones(2), lower_q=-np.ones(2), upper=1.0)
        with pytest.raises(LpInfeasibleError, match="p budget row"):
            solve_move_limit_lp(prob)

    def test_violated_constraint_uses_slack(self):
        # G-row unreachable within boxes: minimize c'x + penalty*s instead
        rng = np.random.default_rng(13)
        prob = MoveLimitLp(
            c_p=rng.standard_normal(2), c_q=rng.standard_normal(2),
            a_p=np.full(2, 0.1), a_q=np.full(2, 0.1), g0=5.0,
            tolx_p=0.0, tolx_q=0.0,
            lower_p=-np.full(2, 0.5), lower_q=-np.full(2, 0.5), upper=0.5)
        sol = solve_move_limit_lp(prob)
        assert not sol.feasible
        x = np.concatenate([sol.x_p, sol.x_q])
        a = np.concatenate([prob.a_p, prob.a_q])
        assert sol.slack_used == pytest.approx(prob.g0 + a @ x, abs=1e-9)
        # the solution minimizes the penalized combination over the
        # equality/box polytope (enumeration with the shifted cost)
        pen = default_penalty(prob)
        shifted = MoveLimitLp(
            c_p=prob.c_p + pen * prob.a_p, c_q=prob.c_q + pen * prob.a_q,
            a_p=np.zeros(2), a_q=np.zeros(2), g0=-1e9,
            tolx_p=0.0, tolx_q=0.0,
            lower_p=prob.lower_p, lower_q=prob.lower_q, upper=prob.upper)
        ref = enumerate_vertices(shifted)
        got = float(prob.c_p @ sol.x_p + prob.c_q @ sol.x_q
                    + pen * (prob.a_p @ sol.x_p + prob.a_q @ sol.x_q))
        assert got == pytest.approx(ref, abs=1e-8, rel=1e-9)

    def test_empty_box(self):
        prob = MoveLimitLp(
            c_p=np.zeros(1), c_q=np.zeros(1),
            a_p=np.zeros(1), a_q=np.zeros(1), g0=-1.0,
            tolx_p=0.0, tolx_q=0.0,
            lower_p=np.array([0.5]), lower_q=np.array([0.0]), upper=0.1)
        with pytest.raises(LpInfeasibleError):
            solve_move_limit_lp(prob)
