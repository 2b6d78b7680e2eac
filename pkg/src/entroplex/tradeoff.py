"""Corner points of the (M, R) lower hull, analytic baselines and stable entropies."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import Iterable, Sequence

from . import codes as _codes
from .lpbuild import LinearConstraint, LPInstance, Provenance, build, exact_feasible
from .model import (
    DIRECT_SOLVE_LIMIT,
    Cache,
    Delivery,
    ProblemInstance,
    RandomVar,
    format_rational,
    format_var,
    is_relaxation,
    shift_relaxation,
)
from .ratsolve import OPTIMAL, SolveResult, solve


class TradeoffError(RuntimeError):
    pass


@dataclass(frozen=True, order=True)
class TradeoffPoint:
    M: Fraction
    R: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "M", Fraction(self.M))
        object.__setattr__(self, "R", Fraction(self.R))
        if self.M < 0 or self.R < 0:
            raise ValueError("tradeoff points are nonnegative")

    def as_json(self) -> dict:
        return {"M": format_rational(self.M), "R": format_rational(self.R)}


@dataclass(frozen=True)
class Facet:
    """The half-plane ``a*M + b*R >= c`` with coprime integer coefficients."""

    a: int
    b: int
    c: int

    @classmethod
    def through(cls, p: TradeoffPoint, q: TradeoffPoint) -> "Facet":
        a = p.R - q.R
        b = q.M - p.M
        c = a * p.M + b * p.R
        den = lcm(a.denominator, b.denominator, c.denominator)
        a, b, c = int(a * den), int(b * den), int(c * den)
        g = gcd(gcd(a, b), c)
        return cls(a // g, b // g, c // g)

    def holds(self, p: TradeoffPoint) -> bool:
        return self.a * p.M + self.b * p.R >= self.c

    def tight(self, p: TradeoffPoint) -> bool:
        return self.a * p.M + self.b * p.R == self.c

    def __str__(self) -> str:
        def term(k: int, v: str) -> str:
            return v if k == 1 else f"{k}{v}"

        return f"{term(self.a, 'M')}+{term(self.b, 'R')}>={self.c}"


class Probe:
    """Repeated LP solves over one built instance."""

    def __init__(self, lp: LPInstance, threads: int = 1):
        self.lp = lp
        self.threads = threads
        self.solves = 0

    def minimize(self, objective: dict, extra: Sequence[LinearConstraint] = ()) -> SolveResult:
        lp = self.lp.with_constraints(extra).with_objective(objective)
        self.solves += 1
        res = solve(lp, threads=self.threads)
        if res.status != OPTIMAL:
            raise TradeoffError(f"LP is {res.status} for objective {objective}")
        return res


def _custom(coeffs: dict, rel: str, rhs, note: str) -> LinearConstraint:
    return LinearConstraint(coeffs, rel, Fraction(rhs), Provenance("custom", note=note))


def corner_points(
    inst_or_lp: ProblemInstance | LPInstance,
    threads: int = 1,
    relaxation: ProblemInstance | None = None,
    witnesses: Sequence[_codes.LinearCode] | None = None,
) -> list[TradeoffPoint]:
    """Extreme points of the lower hull, with M increasing.

    Universes above ``DIRECT_SOLVE_LIMIT`` variables (or any call that names a
    ``relaxation``) are bracketed instead of solved directly; see ``bracket_corners``.
    """
    inst = inst_or_lp.inst if isinstance(inst_or_lp, LPInstance) else inst_or_lp
    if relaxation is not None or len(inst.universe_unchecked()) > DIRECT_SOLVE_LIMIT:
        return bracket_corners(inst_or_lp, relaxation, witnesses, threads)
    return _lassez(inst_or_lp if isinstance(inst_or_lp, LPInstance) else build(inst_or_lp), threads)


def _lassez(lp: LPInstance, threads: int) -> list[TradeoffPoint]:
    probe = Probe(lp, threads)
    left = probe.minimize({"R": 1}, [_custom({"M": 1}, "=", 0, "M=0")])
    right = probe.minimize({"M": 1}, [_custom({"R": 1}, "=", 0, "R=0")])
    pts = [TradeoffPoint(0, left.objective), TradeoffPoint(right.objective, 0)]
    if pts[0] == pts[1]:
        return [pts[0]]
    i = 0
    while i < len(pts) - 1:
        p, q = pts[i], pts[i + 1]
        a = p.R - q.R
        b = q.M - p.M
        beta = a * p.M + b * p.R
        res = probe.minimize({"M": a, "R": b})
        if res.objective < beta:
            # extreme end of the optimal face: least M on it
            face = _custom({"M": a, "R": b}, "<=", res.objective, "face")
            low = probe.minimize({"M": 1}, [face])
            m_star = low.objective
            r_star = (res.objective - a * m_star) / b
            pts.insert(i + 1, TradeoffPoint(m_star, r_star))
        else:
            i += 1
    return pts


def witness_point(lp: LPInstance, code: _codes.LinearCode) -> TradeoffPoint | None:
    """The (M, R) of a code whose rank entropies satisfy every row of ``lp`` exactly.

    Returns None when some row fails, for instance when the code is not symmetric
    enough to respect the orbit identification of the LP.
    """
    sp = lp.table.space
    x = []
    try:
        for tid in range(lp.n_terms):
            x.append(_codes.entropy(code, sp.vars_of(lp.table.rep(tid))))
    except KeyError:
        return None
    M = max(_codes.entropy(code, [Cache(k)]) for k in range(1, code.n_users + 1))
    R = max((_codes.entropy(code, [rv]) for rv in sp.members if isinstance(rv, Delivery)), default=Fraction(0))
    if not exact_feasible(lp, x + [M, R]).all():
        return None
    return TradeoffPoint(M, R)


def inside(p: TradeoffPoint, chain: Sequence[TradeoffPoint]) -> bool:
    """Whether ``p`` lies in the up-closed convex region whose lower hull is ``chain``."""
    if not chain or p.M < chain[0].M or p.R < chain[-1].R:
        return False
    return all(f.holds(p) for f in facets(chain))


def bracket_corners(
    inst_or_lp: ProblemInstance | LPInstance,
    relaxation: ProblemInstance | None = None,
    witnesses: Sequence[_codes.LinearCode] | None = None,
    threads: int = 1,
) -> list[TradeoffPoint]:
    """Corner points pinned between a relaxation and exactly checked code witnesses.

    The relaxation drops deliveries, so its region contains the region of the
    full LP.  Each witness is a feasible point of the full LP.  When every corner
    of the relaxation lies in the hull of the witness points the two regions
    coincide and the relaxation's corners are those of the full LP.
    """
    lp = inst_or_lp if isinstance(inst_or_lp, LPInstance) else build(inst_or_lp)
    inst = lp.inst
    relaxation = relaxation if relaxation is not None else shift_relaxation(inst)
    if not is_relaxation(relaxation, inst):
        raise TradeoffError(f"{relaxation.describe()} is not a relaxation of {inst.describe()}")
    if witnesses is None:
        witnesses = [_codes.man_scheme(inst.n_files, inst.n_users, t) for t in range(inst.n_users + 1)]
    outer = _lassez(build(relaxation), threads)
    pts = [p for p in (witness_point(lp, c) for c in witnesses) if p is not None]
    inner = lower_envelope(pts)
    missing = [p for p in outer if not inside(p, inner)]
    if missing:
        shown = " ".join(f"({format_rational(p.M)},{format_rational(p.R)})" for p in missing)
        raise TradeoffError(f"bracket does not close: relaxation corners {shown} are not reached by the witnesses")
    return outer


def facets(corners: Sequence[TradeoffPoint]) -> list[Facet]:
    return [Facet.through(p, q) for p, q in zip(corners, corners[1:])]


def cutset_bound(n_files: int, n_users: int, M) -> Fraction:
    M = Fraction(M)
    if not 0 <= M <= n_files:
        raise ValueError(f"M={M} outside [0, {n_files}]")
    best = Fraction(0)
    for s in range(1, min(n_files, n_users) + 1):
        best = max(best, s - s * M / (n_files // s))
    return best


def lower_envelope(points: Iterable[TradeoffPoint]) -> list[TradeoffPoint]:
    """Lower-left convex envelope (the achievable hull of a point set)."""
    pts = sorted(set(points))
    # keep, for each M, the least R and drop dominated points
    pruned: list[TradeoffPoint] = []
    for p in pts:
        if pruned and pruned[-1].R <= p.R:
            continue
        while pruned and pruned[-1].M == p.M:
            pruned.pop()
        pruned.append(p)
    hull: list[TradeoffPoint] = []
    for p in pruned:
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (a.M - o.M) * (p.R - o.R) - (a.R - o.R) * (p.M - o.M)
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


def man_points(n_files: int, n_users: int) -> list[TradeoffPoint]:
    out = []
    N, K = n_files, n_users
    for t in range(K + 1):
        M = Fraction(t * N, K)
        R = K * (1 - Fraction(t, K)) * min(Fraction(1, 1 + t), Fraction(N, K))
        out.append(TradeoffPoint(M, R))
    return out


def man_inner(n_files: int, n_users: int) -> list[TradeoffPoint]:
    return lower_envelope(man_points(n_files, n_users))


# ---------------------------------------------------------------------------
# stable entropies


@dataclass(frozen=True)
class Lexicographic:
    pass


@dataclass(frozen=True)
class Gamma:
    gamma: Fraction

    def __post_init__(self) -> None:
        g = Fraction(self.gamma)
        if g == 0:
            raise ValueError("gamma must be nonzero")
        object.__setattr__(self, "gamma", abs(g))


@dataclass(frozen=True)
class StableReport:
    target: tuple
    given: tuple
    corner: TradeoffPoint
    min_value: Fraction
    max_value: Fraction

    @property
    def stable(self) -> bool:
        return self.min_value == self.max_value

    def label(self) -> str:
        t = ",".join(format_var(v) for v in self.target)
        if self.given:
            return f"H({t}|{','.join(format_var(v) for v in self.given)})"
        return f"H({t})"

    def as_json(self) -> dict:
        return {
            "target": self.label(),
            "corner": self.corner.as_json(),
            "min": format_rational(self.min_value),
            "max": format_rational(self.max_value),
            "stable": self.stable,
        }


def _target_objective(lp: LPInstance, target: Sequence[RandomVar], given: Sequence[RandomVar]) -> dict:
    obj: dict = {}
    joint = lp.term_id(list(target) + list(given))
    obj[joint] = obj.get(joint, 0) + 1
    if given:
        g = lp.term_id(list(given))
        obj[g] = obj.get(g, 0) - 1
    return {k: v for k, v in obj.items() if v}


def _value(res: SolveResult, obj: dict) -> Fraction:
    return sum((Fraction(q) * res.value(v) for v, q in obj.items()), Fraction(0))


def stable_range(
    inst_or_lp: ProblemInstance | LPInstance,
    corner: TradeoffPoint,
    target: Sequence[RandomVar],
    mode: Lexicographic | Gamma = Lexicographic(),
    given: Sequence[RandomVar] = (),
    threads: int = 1,
) -> StableReport:
    """Range of ``H(target | given)`` over LP solutions sitting at ``corner``."""
    lp = inst_or_lp if isinstance(inst_or_lp, LPInstance) else build(inst_or_lp)
    probe = Probe(lp, threads)
    obj = _target_objective(lp, target, given)
    z1 = lp.term_id([_cache1()])
    if isinstance(mode, Lexicographic):
        pins = [
            _custom({z1: 1}, "=", corner.M, "H(Z1)=M*"),
            _custom({"R": 1}, "=", corner.R, "R=R*"),
        ]
        try:
            lo = probe.minimize(obj, pins)
            hi = probe.minimize({k: -v for k, v in obj.items()}, pins)
        except TradeoffError as exc:
            raise TradeoffError(f"corner {corner} is not attained by the LP") from exc
        return StableReport(tuple(target), tuple(given), corner, lo.objective, -hi.objective)
    g = Fraction(mode.gamma)
    caps = [
        _custom({"R": 1}, "<=", corner.R, "R<=R*"),
        _custom({"M": 1}, "<=", corner.M, "M<=M*"),
    ]
    vals = []
    for sgn in (1, -1):
        objective = {z1: Fraction(1)}
        for k, v in obj.items():
            objective[k] = objective.get(k, 0) + sgn * g * v
        try:
            res = probe.minimize(objective, caps)
        except TradeoffError as exc:
            raise TradeoffError(f"corner {corner} is not attained by the LP") from exc
        vals.append(_value(res, obj))
    return StableReport(tuple(target), tuple(given), corner, min(vals), max(vals))


def _cache1():
    return Cache(1)
