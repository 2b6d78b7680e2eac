from __future__ import annotations

import itertools
import random
from fractions import Fraction
from math import comb

import numpy as np
import pytest

from entroplex import codes
from entroplex.lpbuild import build
from entroplex.model import Cache, File, OfType, ProblemInstance, parse_vars
from entroplex.tradeoff import man_points, witness_point

from oracles import span_rank

F = Fraction
R24 = ProblemInstance(2, 4, restriction=("X1112", "X1122"))


def test_is_prime():
    primes = [p for p in range(60) if codes.is_prime(p)]
    assert primes == [p for p in range(2, 60) if all(p % q for q in range(2, p))]


@pytest.mark.parametrize("p", [2, 3, 5])
def test_rank_mod_against_span_enumeration(p):
    rng = random.Random(p)
    for _ in range(40):
        rows, cols = rng.randint(1, 4), rng.randint(1, 5)
        mat = [[rng.randrange(p) for _ in range(cols)] for _ in range(rows)]
        assert codes.rank_mod(np.array(mat, dtype=np.int64), p) == span_rank(mat, p)


def test_field_rejects_composite_modulus():
    with pytest.raises(ValueError):
        codes.PrimeField(4)


@pytest.mark.parametrize("name", sorted(codes.PAPER_CODES))
def test_table_codes_decode_at_their_points(name):
    code = codes.paper_code(name)
    report = codes.verify_code(code)
    assert report.ok, report.failures
    assert report.point == codes.CAPTION_POINTS[name]
    want = comb(2 + 4 - 1, 4) if codes.CODE_TYPES[name] is None else None
    if want is None:
        t = codes.CODE_TYPES[name]
        assert all(sorted((d.count(1), d.count(2)), reverse=True) == list(t) for d in code.demands)
    else:
        assert report.checked == 2**4


def test_table2_single_user_entropies():
    code = codes.paper_code("table2")
    assert codes.entropy(code, [File(1)]) == 1
    assert codes.entropy(code, [Cache(1)]) == F(2, 3)
    assert codes.entropy(code, [File(1), File(2)]) == 2


@pytest.mark.parametrize("n,k", [(n, k) for n in (1, 2, 3) for k in (1, 2, 3, 4)])
def test_man_scheme_is_decodable(n, k):
    pts = man_points(n, k)
    for t in range(k + 1):
        code = codes.man_scheme(n, k, t)
        report = codes.verify_code(code)
        assert report.ok
        assert (report.point.M, report.point.R) == (F(t * n, k), F(k - t, t + 1))
        assert report.point.R >= pts[t].R


@pytest.mark.parametrize("nkt", [(2, 2, 1), (3, 2, 1), (2, 3, 1), (2, 3, 2)])
def test_brute_force_agrees_with_rank_test_on_man(nkt):
    code = codes.man_scheme(*nkt)
    for d in code.demands:
        for k in range(1, code.n_users + 1):
            assert codes.brute_force_decodable(code, d, k) == codes.decodable(code, d, k)


@pytest.mark.parametrize("name", ["table16", "table17", "table18"])
def test_brute_force_agrees_with_rank_test_on_table_codes(name):
    code = codes.paper_code(name)
    for d in code.demands:
        for k in range(1, code.n_users + 1):
            assert codes.brute_force_decodable(code, d, k)


def test_brute_force_detects_broken_delivery():
    code = codes.man_scheme(2, 2, 1)
    d = code.demands[-1]
    code.delivery[d] = code.delivery[d][:0]
    assert not codes.decodable(code, d, 1)
    assert not codes.brute_force_decodable(code, d, 1)
    assert not codes.verify_code(code).ok


def test_brute_force_limit():
    with pytest.raises(ValueError):
        codes.brute_force_decodable(codes.paper_code("table2"), (1, 1, 1, 2), 1)


def test_witnesses_satisfy_every_row():
    p = witness_point(build(R24), codes.paper_code("table2"))
    assert (p.M, p.R) == (F(2, 3), 1)
    for name in ("table16", "table17", "table18"):
        lp = build(ProblemInstance(2, 4, OfType(codes.CODE_TYPES[name])))
        p = witness_point(lp, codes.paper_code(name))
        assert p is not None and (p.M, p.R) == (codes.CAPTION_POINTS[name].M, codes.CAPTION_POINTS[name].R)


def test_man_witnesses_on_small_lps():
    for n, k in ((2, 2), (3, 2), (2, 3)):
        lp = build(ProblemInstance(n, k))
        for t in range(k + 1):
            assert witness_point(lp, codes.man_scheme(n, k, t)) == man_points(n, k)[t]


def test_symmetrized_entropy_is_group_invariant():
    code = codes.paper_code("table17")
    a = codes.symmetrized_entropy(code, parse_vars("Z1,W1"))
    b = codes.symmetrized_entropy(code, parse_vars("Z3,W2"))
    assert a == b


def test_entropy_vector_and_missing_delivery():
    code = codes.man_scheme(2, 2, 1)
    sets = [tuple(parse_vars(s)) for s in ("W1", "W1,W2", "Z1,X12")]
    vec = codes.entropy_vector(code, sets)
    assert vec[sets[0]] == 1 and vec[sets[1]] == 2
    with pytest.raises(KeyError):
        codes.entropy(codes.paper_code("table17"), parse_vars("X1112"))


def test_extend_by_symmetry_covers_orbit():
    code = codes.paper_code("table18")
    want = {d for d in itertools.product((1, 2), repeat=4) if sorted(d).count(1) == 2}
    assert set(code.demands) == want


def test_json_round_trip():
    code = codes.paper_code("table17")
    back = codes.LinearCode.from_json(code.to_json())
    assert back.to_json() == code.to_json()
    assert codes.verify_code(back).ok


def test_unknown_code():
    with pytest.raises(ValueError):
        codes.paper_code("table99")
