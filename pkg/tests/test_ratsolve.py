from __future__ import annotations

import random
from fractions import Fraction

import pytest

from entroplex.lpbuild import LinearConstraint, build
from entroplex.model import ProblemInstance
from entroplex.ratsolve import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    CertificationError,
    linprog_exact,
    solve,
    sparse_dual,
)

from oracles import vertex_lp_min

F = Fraction


def test_single_variable():
    res = linprog_exact([{0: 1}], [">="], [F(1, 3)], [1])
    assert res.status == OPTIMAL and res.objective == F(1, 3)
    assert res.primal[0] == F(1, 3)


def test_unbounded_and_infeasible():
    assert linprog_exact([{0: 1}], ["<="], [1], [1]).status == UNBOUNDED
    assert linprog_exact([{0: 1}, {0: 1}], [">=", "<="], [1, 0], [1]).status == INFEASIBLE
    assert linprog_exact([{0: 1}, {0: 1}], [">=", "<="], [1, 0], [0]).status == INFEASIBLE


def test_equality_rows():
    res = linprog_exact([{0: 1, 1: 1}, {0: 1}, {1: 1}], ["=", ">=", ">="], [3, 0, 0], [2, 1])
    assert res.objective == 3
    assert res.primal == {0: 0, 1: 3}


def _check_duality(rows, rhs, cost, res):
    acc = [F(0)] * len(cost)
    for i, y in res.dual.items():
        assert y >= 0
        for k, v in rows[i].items():
            acc[k] += y * v
    assert acc == [F(c) for c in cost]
    assert sum((y * F(rhs[i]) for i, y in res.dual.items()), F(0)) == res.objective


@pytest.mark.parametrize("seed", range(40))
def test_random_lps_against_vertex_enumeration(seed):
    rng = random.Random(seed)
    n = rng.choice([2, 3])
    rows, rhs = [], []
    for _ in range(rng.randint(2, 5)):
        rows.append([F(rng.randint(-3, 3)) for _ in range(n)])
        rhs.append(F(rng.randint(-6, 6), rng.randint(1, 3)))
    for j in range(n):
        for s in (1, -1):
            r = [F(0)] * n
            r[j] = F(s)
            rows.append(r)
            rhs.append(F(-5))
    cost = [F(rng.randint(-4, 4), rng.randint(1, 2)) for _ in range(n)]
    want = vertex_lp_min(rows, rhs, cost)
    sparse = [{k: v for k, v in enumerate(r) if v} for r in rows]
    res = linprog_exact(sparse, [">="] * len(rows), rhs, cost)
    if want is None:
        assert res.status == INFEASIBLE
    else:
        assert res.status == OPTIMAL
        assert res.objective == want
        x = [res.primal.get(k, F(0)) for k in range(n)]
        assert all(sum(r[k] * x[k] for k in range(n)) >= b for r, b in zip(rows, rhs))
        _check_duality(sparse, rhs, cost, res)


@pytest.mark.parametrize("objective", [{"M": 2, "R": 1}, {"M": 14, "R": 11}, {"M": 9, "R": 8}, {"M": 1, "R": 2}, {"R": 1}])
def test_exact_and_guided_agree(objective):
    lp = build(ProblemInstance(2, 4, restriction=("X1112", "X1122")), objective)
    a = solve(lp, method="exact")
    b = solve(lp, method="guided")
    assert a.status == b.status == OPTIMAL
    assert a.objective == b.objective
    for res in (a, b):
        lhs = {}
        for r, y in res.dual.items():
            for v, q in lp.constraint(r).coeffs.items():
                lhs[v] = lhs.get(v, 0) + y * q
        assert {k: v for k, v in lhs.items() if v} == {k: F(v) for k, v in objective.items()}
        assert sum((y * lp.rhs[r] for r, y in res.dual.items()), F(0)) == res.objective
        assert not lp.violations(res.primal)


def test_known_optima():
    assert solve(build(ProblemInstance(3, 2), {"M": 1, "R": 3})).objective == 3
    assert solve(build(ProblemInstance(2, 3), {"M": 3, "R": 3})).objective == 5


def test_unknown_method():
    with pytest.raises(ValueError):
        solve(build(ProblemInstance(2, 2)), method="interior")


def _resum(lp, y):
    acc, rhs = {}, F(0)
    for r, v in y.items():
        for k, q in lp.constraint(r).coeffs.items():
            acc[k] = acc.get(k, 0) + v * q
        rhs += v * lp.rhs[r]
    return {k: q for k, q in acc.items() if q}, rhs


def test_sparse_dual_is_small_and_exact():
    lp = build(ProblemInstance(3, 2))
    y = sparse_dual(lp, LinearConstraint({"M": 1, "R": 1}, ">=", 2))
    assert 0 < len(y) <= 10
    acc, rhs = _resum(lp, y)
    assert acc == {"M": 1, "R": 1}
    assert rhs >= 2
    assert all(v > 0 or lp.is_eq[r] for r, v in y.items())


def test_sparse_dual_trivial_and_invalid():
    lp = build(ProblemInstance(3, 2))
    assert sparse_dual(lp, LinearConstraint({}, ">=", 0)) == {}
    with pytest.raises(CertificationError) as info:
        sparse_dual(lp, LinearConstraint({"M": 1, "R": 1}, ">=", 3))
    assert info.value.optimum == 2
    with pytest.raises(CertificationError):
        sparse_dual(lp, LinearConstraint({}, ">=", 1))
