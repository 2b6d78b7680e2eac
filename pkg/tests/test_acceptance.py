"""End-to-end acceptance checks.  Each test prints one ``criterion NN: PASS/FAIL`` line."""

from __future__ import annotations

import copy
import itertools
import time
from fractions import Fraction
from importlib.resources import files

import pytest

from entroplex import codes, prooftab
from entroplex.lpbuild import LinearConstraint, build
from entroplex.model import OfType, ProblemInstance, demand_types, parse_vars, shift_relaxation, type_representative
from entroplex.tradeoff import (
    TradeoffPoint,
    corner_points,
    facets,
    inside,
    man_inner,
    stable_range,
    witness_point,
)

from oracles import halfplane_lower_hull

F = Fraction
R24 = ProblemInstance(2, 4, restriction=("X1112", "X1122"))
TYPE_SETS = {
    (3, 0, 0): ("X111", "X222", "X333"),
    (2, 1, 0): ("X112", "X122", "X233", "X212", "X133", "X211", "X311"),
    (1, 1, 1): ("X123", "X132", "X213"),
}


def pts(corners):
    return [(p.M, p.R) for p in corners]


def strs(corners):
    return [str(f) for f in facets(corners)]


def parse_facet(text: str) -> tuple[Fraction, Fraction, Fraction]:
    lhs, rhs = text.split(">=")
    a = b = F(0)
    for term in lhs.split("+"):
        coef = F(term[:-1]) if term[:-1] else F(1)
        if term[-1] == "M":
            a = coef
        else:
            b = coef
    return a, b, F(rhs)


def timed(fn, *args, **kw):
    t = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t


def test_criterion_01_n2_regions(record):
    c32, t32 = timed(corner_points, ProblemInstance(3, 2))
    c42, t42 = timed(corner_points, ProblemInstance(4, 2, max_universe=22))
    ok = (
        pts(c32) == [(0, 2), (F(3, 2), F(1, 2)), (3, 0)]
        and pts(c42) == [(0, 2), (2, F(1, 2)), (4, 0)]
        and strs(c32) == ["M+R>=2", "M+3R>=3"]
        and strs(c42) == ["3M+4R>=8", "M+4R>=4"]
        and max(t32, t42) < 300
    )
    record(1, ok, f"(3,2) {strs(c32)} in {t32:.1f}s; (4,2) {strs(c42)} in {t42:.1f}s")
    assert ok


def test_criterion_02_n2k3(record):
    c, t = timed(corner_points, ProblemInstance(2, 3))
    ok = pts(c) == [(0, 2), (F(1, 3), F(4, 3)), (F(4, 3), F(1, 3)), (2, 0)] and strs(c) == ["2M+R>=2", "3M+3R>=5", "M+2R>=2"] and t < 600
    record(2, ok, f"(2,3) {strs(c)} in {t:.1f}s")
    assert ok


def test_criterion_03_n2k4_restricted(record):
    c, t = timed(corner_points, R24)
    want = ["2M+R>=2", "14M+11R>=20", "9M+8R>=14", "3M+3R>=5", "5M+6R>=9", "M+2R>=2"]
    ok = strs(c) == want and (F(6, 13), F(16, 13)) in pts(c) and (F(2, 3), 1) in pts(c) and t < 300
    record(3, ok, f"(2,4) restricted {strs(c)} in {t:.1f}s")
    assert ok


def test_criterion_04_n3k3_single_types(record):
    want = {
        (3, 0, 0): ["M+3R>=3"],
        (2, 1, 0): ["M+R>=2", "2M+3R>=5", "M+3R>=3"],
        (1, 1, 1): ["3M+R>=3", "6M+3R>=8", "M+R>=2", "12M+18R>=29", "3M+6R>=8", "M+3R>=3"],
    }
    got, t0 = {}, time.perf_counter()
    for t, kept in TYPE_SETS.items():
        got[t] = strs(corner_points(ProblemInstance(3, 3, OfType(t), kept)))
    elapsed = time.perf_counter() - t0
    computed = halfplane_lower_hull([parse_facet(f) for fs in got.values() for f in fs])
    analytic = halfplane_lower_hull([parse_facet(f) for fs in want.values() for f in fs])
    ok = got == want and computed == analytic
    record(4, ok, f"types {sorted(got, reverse=True)} match; intersection vertices {[(str(m), str(r)) for m, r in computed]} in {elapsed:.1f}s")
    assert ok


FIXTURES = sorted(p.name for p in files("entroplex").joinpath("fixtures").iterdir() if p.name.endswith(".json"))


def fixture(name):
    return prooftab.parse(files("entroplex").joinpath("fixtures", name).read_text(encoding="utf-8"))


def test_criterion_05_fixtures(record):
    t0 = time.perf_counter()
    verified, missed, tried = 0, [], 0
    for name in FIXTURES:
        table = fixture(name)
        verified += prooftab.verify(table).ok
        cells = [("row", i, c) for i, r in enumerate(table.rows) for c in r.coeffs] + [("final", None, c) for c in table.final]
        for where, i, c in cells:
            bad = copy.deepcopy(table)
            if where == "row":
                bad.rows[i].coeffs[c] += 1
            else:
                bad.final[c] += 1
            tried += 1
            if prooftab.verify(bad).ok:
                missed.append((name, where, i, c))
    elapsed = time.perf_counter() - t0
    ok = len(FIXTURES) == 14 and verified == 14 and not missed and elapsed < 60
    record(5, ok, f"{verified}/{len(FIXTURES)} tables verify, {tried - len(missed)}/{tried} corruptions caught, {elapsed:.1f}s")
    assert ok


def _resums_to(table, bound: LinearConstraint) -> bool:
    cols: dict[int, Fraction] = {}
    for r in table.rows:
        for c, v in r.coeffs.items():
            cols[c] = cols.get(c, 0) + v
    if {c: v for c, v in cols.items() if v} != table.final:
        return False
    by_name = {str(table.terms[c]): v for c, v in table.final.items()}
    mem = by_name.pop("Z1", 0) + by_name.pop("M", 0)
    rate = by_name.pop("R", 0)
    const = -by_name.pop("F", 0)
    if by_name:
        return False
    a, b, c = F(bound.coeffs.get("M", 0)), F(bound.coeffs.get("R", 0)), F(bound.rhs)
    scale = next(x / y for x, y in ((mem, a), (rate, b), (const, c)) if y)
    return scale > 0 and (mem, rate, const) == (scale * a, scale * b, scale * c)


def test_criterion_06_round_trip(record):
    cases = [
        (ProblemInstance(3, 2), ProblemInstance(3, 2)),
        (ProblemInstance(4, 2, max_universe=22), ProblemInstance(4, 2, max_universe=22)),
        (ProblemInstance(2, 3), ProblemInstance(2, 3)),
        (R24, R24),
    ]
    done, failed = 0, []
    t0 = time.perf_counter()
    for inst, _ in cases:
        for f in facets(corner_points(inst)):
            bound = LinearConstraint({"M": f.a, "R": f.b}, ">=", f.c)
            table = prooftab.extract(inst, bound)
            text = prooftab.serialize(table)
            back = prooftab.parse(text)
            if prooftab.verify(back).ok and _resums_to(back, bound):
                done += 1
            else:
                failed.append(f"{inst.describe()} {f}")
    ok = not failed and done == 2 + 2 + 3 + 6
    record(6, ok, f"{done} facets extracted, verified and re-summed in {time.perf_counter() - t0:.1f}s" + (f"; failed {failed}" if failed else ""))
    assert ok


TABLE_III = [
    ("Z1", 3),
    ("Z1,Z2", 5),
    ("Z1,Z2,Z3", 6),
    ("X1222", 3),
    ("Z1,X1222", 4),
    ("X1112", 3),
    ("Z1,X1112", 4),
    ("Z1,Z2,X1112", 5),
    ("X1122", 3),
    ("Z1,X1122", 4),
    ("Z1,Z2,X1122", 5),
]


def test_criterion_07_stable_entropies(record):
    corner = TradeoffPoint(F(2, 3), F(1))
    bad = []
    for target, sixths in TABLE_III:
        rep = stable_range(R24, corner, parse_vars(target), given=parse_vars("W1"))
        if not (rep.stable and rep.min_value == F(sixths, 6)):
            bad.append((target, rep.min_value, rep.max_value))
    z12 = stable_range(R24, corner, parse_vars("Z1,Z2"))
    ok = not bad and (z12.min_value, z12.max_value) == (1, F(4, 3))
    record(
        7,
        ok,
        f"{len(TABLE_III) - len(bad)}/{len(TABLE_III)} conditional values stable and equal; H(Z1,Z2) in [{z12.min_value}, {z12.max_value}]"
        + "".join(f"; H({t}|W1) in [{lo}, {hi}]" for t, lo, hi in bad),
    )
    assert ok


def _all_codes():
    out = [(name, codes.paper_code(name), codes.CODE_TYPES[name]) for name in sorted(codes.PAPER_CODES)]
    for n, k in itertools.product((1, 2, 3), (1, 2, 3, 4)):
        for t in range(k + 1):
            out.append((f"man({n},{k},{t})", codes.man_scheme(n, k, t), None))
    return out


def test_criterion_08_codes(record):
    bad, brute, skipped = [], 0, 0
    for name, code, ctype in _all_codes():
        demands = list(itertools.product(range(1, code.n_files + 1), repeat=code.n_users))
        if ctype is not None:
            demands = [d for d in demands if OfType(ctype).admits(d, code.n_files)]
        report = codes.verify_code(code, demands)
        if not report.ok:
            bad.append(name)
        if name in codes.CAPTION_POINTS and report.point != codes.CAPTION_POINTS[name]:
            bad.append(name + " point")
        if name == "table2" and report.checked != 16:
            bad.append("table2 count")
        if code.field.p**code.width > 1 << 20:
            skipped += 1
            continue
        for d in demands:
            for k in range(1, code.n_users + 1):
                brute += 1
                if codes.brute_force_decodable(code, d, k) != codes.decodable(code, d, k):
                    bad.append(f"{name} {d} user {k}")
    ok = not bad
    record(8, ok, f"{len(_all_codes())} codes decodable at their points; {brute} brute-force checks agree ({skipped} codes beyond 2^20 states)")
    assert ok


def _lp_for(code, ctype):
    n, k = code.n_files, code.n_users
    if ctype is not None:
        return build(ProblemInstance(n, k, OfType(ctype)))
    inst = ProblemInstance(n, k)
    if len(inst.universe_unchecked()) > 18:
        # one delivery per demand type keeps every kind of rate row
        reps = ["X" + "".join(map(str, type_representative(t))) for t in demand_types(n, k)]
        inst = ProblemInstance(n, k, restriction=tuple(reps))
    return build(inst)


def test_criterion_09_soundness(record):
    notes, bad = [], []
    # code entropy vectors satisfy every constraint of an LP their demands cover
    checked = 0
    for name, code, ctype in _all_codes():
        if code.n_users < 2:
            continue
        lp = _lp_for(code, ctype)
        p = witness_point(lp, code)
        checked += 1
        if p is None:
            bad.append(name)
    notes.append(f"{checked} code entropy vectors feasible")
    # MAN inner points inside every computed outer bound
    for inst in (ProblemInstance(2, 2), ProblemInstance(3, 2), ProblemInstance(2, 3), R24):
        outer = facets(corner_points(inst))
        for q in man_inner(inst.n_files, inst.n_users):
            if not all(f.holds(q) for f in outer):
                bad.append(f"man {inst.describe()} {q}")
    # the analytic (N,2) region lies inside the restricted computed region
    for n in (5, 6):
        relaxed = shift_relaxation(ProblemInstance(n, 2))
        chain = corner_points(relaxed)
        region = halfplane_lower_hull([(F(3), F(n), F(2 * n)), (F(1), F(n), F(n))])
        if not all(inside(TradeoffPoint(m, r), chain) for m, r in region):
            bad.append(f"({n},2) containment")
        same = pts(chain) == region
        notes.append(f"({n},2) {'coincides' if same else 'strictly contains'}: {strs(chain)}")
    ok = not bad
    record(9, ok, "; ".join(notes) + (f"; failed {bad}" if bad else ""))
    assert ok


@pytest.mark.slow
def test_criterion_10_n2k5_stretch(record):
    inst = ProblemInstance(2, 5, restriction=("X21111", "X12111", "X11211", "X11121", "X11112"))
    c, t = timed(corner_points, inst)
    fs = facets(c)
    hit = [f for f in fs if str(f) == "15M+20R>=28"]
    ok = bool(hit) and (F(6, 5), F(1, 2)) in pts(c) and (F(8, 5), F(1, 5)) in pts(c)
    if ok:
        i = pts(c).index((F(6, 5), F(1, 2)))
        ok = pts(c)[i + 1] == (F(8, 5), F(1, 5))
    record(10, ok, f"(2,5) restricted facets {[str(f) for f in fs]} in {t:.1f}s")
    assert ok
