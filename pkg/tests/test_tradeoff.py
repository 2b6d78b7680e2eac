from __future__ import annotations

import random
from fractions import Fraction

import pytest

from entroplex import codes
from entroplex.lpbuild import LinearConstraint, build
from entroplex.model import ProblemInstance, parse_vars, shift_relaxation
from entroplex.ratsolve import OPTIMAL, solve
from entroplex.tradeoff import (
    Facet,
    Gamma,
    Lexicographic,
    TradeoffError,
    TradeoffPoint,
    bracket_corners,
    corner_points,
    cutset_bound,
    facets,
    inside,
    lower_envelope,
    man_inner,
    man_points,
    stable_range,
    witness_point,
)

from oracles import brute_lower_envelope

F = Fraction
P = TradeoffPoint
R24 = ProblemInstance(2, 4, restriction=("X1112", "X1122"))


def pts(corners):
    return [(p.M, p.R) for p in corners]


def test_point_and_facet_basics():
    with pytest.raises(ValueError):
        P(-1, 0)
    f = Facet.through(P(F(2, 3), 1), P(1, F(2, 3)))
    assert (f.a, f.b, f.c) == (3, 3, 5)
    assert str(f) == "3M+3R>=5"
    assert f.tight(P(F(2, 3), 1)) and f.holds(P(2, 2)) and not f.holds(P(0, 0))
    assert str(Facet.through(P(0, 2), P(F(3, 2), F(1, 2)))) == "M+R>=2"


def test_corners_small_instances():
    assert pts(corner_points(ProblemInstance(2, 2))) == [(0, 2), (F(1, 2), 1), (1, F(1, 2)), (2, 0)]
    assert pts(corner_points(ProblemInstance(3, 2))) == [(0, 2), (F(3, 2), F(1, 2)), (3, 0)]


@pytest.mark.parametrize("inst", [ProblemInstance(2, 2), ProblemInstance(3, 2), ProblemInstance(2, 3), R24])
def test_corner_invariants(inst):
    corners = corner_points(inst)
    # convex position: interior points strictly below their neighbours' chord
    for a, b, c in zip(corners, corners[1:], corners[2:]):
        assert not Facet.through(a, c).holds(b)
    # every corner is attained by a point satisfying every row exactly
    lp = build(inst)
    for p in corners:
        pinned = lp.with_constraints([LinearConstraint({"M": 1}, "=", p.M), LinearConstraint({"R": 1}, "=", p.R)])
        res = solve(pinned)
        assert res.status == OPTIMAL
        assert not lp.violations(res.primal)
    # (N,2) soundness against the analytic region, which needs N >= 3
    if inst.n_users == 2 and inst.n_files >= 3 and not inst.restricted:
        N = inst.n_files
        for p in corners:
            assert 3 * p.M + N * p.R >= 2 * N and p.M + N * p.R >= N


def test_man_inner_inside_outer():
    for inst in (ProblemInstance(2, 2), ProblemInstance(3, 2), ProblemInstance(2, 3), R24):
        outer = facets(corner_points(inst))
        for p in man_inner(inst.n_files, inst.n_users):
            assert all(f.holds(p) for f in outer)


def test_cutset_bound():
    assert cutset_bound(2, 4, 0) == 2
    # s=1: 1 - 2/4, s=2: 2 - 2*2/2
    assert cutset_bound(4, 2, 2) == max(1 - F(2, 4), 2 - F(2 * 2, 2))
    assert cutset_bound(4, 2, 2) == F(1, 2)
    for n, k in ((2, 4), (3, 3), (4, 2)):
        assert cutset_bound(n, k, n) == 0
    with pytest.raises(ValueError):
        cutset_bound(2, 2, 3)


def test_man_points():
    assert P(1, F(2, 3)) in man_points(2, 4)
    assert man_points(5, 3)[-1] == P(5, 0)
    assert man_points(3, 2)[1] == P(F(3, 2), F(1, 2))


@pytest.mark.parametrize("seed", range(30))
def test_lower_envelope_against_brute_force(seed):
    rng = random.Random(seed)
    raw = [(F(rng.randint(0, 8), rng.randint(1, 3)), F(rng.randint(0, 8), rng.randint(1, 3))) for _ in range(rng.randint(1, 9))]
    got = lower_envelope(P(m, r) for m, r in raw)
    assert pts(got) == brute_lower_envelope(raw)


def test_inside():
    chain = [P(0, 2), P(1, F(1, 2)), P(2, 0)]
    assert inside(P(1, 1), chain)
    assert inside(P(1, F(1, 2)), chain)
    assert not inside(P(F(1, 2), 1), chain)
    assert not inside(P(1, 1), [])


def test_witness_points_are_man_points():
    lp = build(ProblemInstance(3, 2))
    got = [witness_point(lp, codes.man_scheme(3, 2, t)) for t in range(3)]
    assert got == man_points(3, 2)


def test_bracket_matches_direct_solve():
    inst = ProblemInstance(3, 2)
    direct = corner_points(inst)
    assert bracket_corners(inst, shift_relaxation(inst)) == direct
    assert corner_points(inst, relaxation=shift_relaxation(inst)) == direct


def test_bracket_reports_an_open_gap():
    inst = ProblemInstance(3, 2)
    ends = [codes.man_scheme(3, 2, 0), codes.man_scheme(3, 2, 2)]
    with pytest.raises(TradeoffError, match="does not close"):
        bracket_corners(inst, shift_relaxation(inst), ends)
    with pytest.raises(TradeoffError, match="not a relaxation"):
        bracket_corners(shift_relaxation(inst), inst)


def test_stable_range_examples():
    corner = P(F(2, 3), 1)
    rep = stable_range(R24, corner, parse_vars("Z1,Z2"))
    assert (rep.min_value, rep.max_value) == (1, F(4, 3))
    assert not rep.stable
    cond = stable_range(R24, corner, parse_vars("Z1"), given=parse_vars("W1"))
    assert cond.stable and cond.min_value == F(1, 2)
    assert cond.label() == "H(Z1|W1)"


def test_gamma_mode():
    with pytest.raises(ValueError):
        Gamma(0)
    corner = P(F(2, 3), 1)
    lex = stable_range(R24, corner, parse_vars("Z1,Z2"), Lexicographic())
    for g in (F(1, 100), F(1, 1000)):
        rep = stable_range(R24, corner, parse_vars("Z1,Z2"), Gamma(g))
        assert lex.min_value <= rep.min_value <= rep.max_value <= lex.max_value


def test_unreachable_corner():
    with pytest.raises(TradeoffError):
        stable_range(R24, P(0, 0), parse_vars("Z1"))
