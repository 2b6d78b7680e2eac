"""Exact rational linear programming with dual certificates.

The core is an integer-preserving revised simplex (Bland's rule).  For large
entropy programs a floating-point pass is used only to *guess* a primal point
and a small dual support; the answer is then certified in exact arithmetic:
the rational primal point is checked against every row and an exact dual on
the guessed support must reach the same objective value.  Whatever cannot be
certified falls back to the exact simplex.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Mapping, Sequence

import numpy as np

from .lpbuild import CUSTOM, LinearConstraint, LPInstance, Var, exact_feasible

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

# LPs at most this size go straight to the exact simplex
EXACT_MAX_VARS = 40
EXACT_MAX_ROWS = 400


class CertificationError(RuntimeError):
    def __init__(self, message: str, optimum: Fraction | None = None):
        super().__init__(message)
        self.optimum = optimum


@dataclass(frozen=True)
class SolveResult:
    status: str
    objective: Fraction | None = None
    primal: dict = field(default_factory=dict)
    dual: dict = field(default_factory=dict)
    method: str = "exact"

    def value(self, v: Var) -> Fraction:
        return self.primal.get(v, Fraction(0))


# ---------------------------------------------------------------------------
# integer revised simplex on  min c.x  s.t.  A x = b, x >= 0, b >= 0


@dataclass
class _SimplexOut:
    status: str
    x: dict  # column -> Fraction (nonzero basics only)
    pi: list  # row multipliers c_B B^-1
    value: Fraction | None


def _standard_simplex(m: int, cols: Sequence[Sequence[tuple[int, int]]], b: Sequence[int], cost: Sequence[int]) -> _SimplexOut:
    """Two-phase revised simplex with Bland's rule, all arithmetic on integers.

    ``B^-1`` is kept as an integer matrix over the common denominator ``det(B)``
    (fraction-free updates), so no rational normalization happens in the loop.
    """
    n = len(cols)
    if any(v < 0 for v in b):
        raise ValueError("right-hand side must be nonnegative")
    basis = [n + i for i in range(m)]
    in_basis = set(basis)
    binv = [[1 if i == j else 0 for j in range(m)] for i in range(m)]
    xb = list(b)
    d = 1

    def column(j: int):
        return cols[j] if j < n else ((j - n, 1),)

    def ftran(j: int) -> list[int]:
        col = column(j)
        return [sum(row[r] * a for r, a in col) for row in binv]

    def pivot(r: int, q: int, alpha: list[int]) -> None:
        nonlocal d
        piv = alpha[r]
        rowr = binv[r]
        xr = xb[r]
        for i in range(m):
            if i == r:
                continue
            ai = alpha[i]
            row = binv[i]
            if ai == 0:
                if piv != d:
                    binv[i] = [(v * piv) // d for v in row]
                    xb[i] = (xb[i] * piv) // d
                continue
            binv[i] = [(v * piv - ai * w) // d for v, w in zip(row, rowr)]
            xb[i] = (xb[i] * piv - ai * xr) // d
        d = piv
        if d < 0:
            for i in range(m):
                binv[i] = [-v for v in binv[i]]
                xb[i] = -xb[i]
            d = -d
        in_basis.discard(basis[r])
        basis[r] = q
        in_basis.add(q)

    def run(costs: Sequence[int], allowed: int) -> str:
        while True:
            cb = [costs[j] for j in basis]
            y = [0] * m
            for i in range(m):
                if cb[i]:
                    ci = cb[i]
                    row = binv[i]
                    for r in range(m):
                        if row[r]:
                            y[r] += ci * row[r]
            q = -1
            for j in range(allowed):
                if j in in_basis:
                    continue
                rc = costs[j] * d - sum(y[r] * a for r, a in column(j))
                if rc < 0:
                    q = j
                    break
            if q < 0:
                return OPTIMAL
            alpha = ftran(q)
            r = -1
            for i in range(m):
                if alpha[i] > 0:
                    if r < 0:
                        r = i
                        continue
                    lhs = xb[i] * alpha[r]
                    rhs = xb[r] * alpha[i]
                    if lhs < rhs or (lhs == rhs and basis[i] < basis[r]):
                        r = i
            if r < 0:
                return UNBOUNDED
            pivot(r, q, alpha)

    phase1 = [0] * n + [1] * m
    run(phase1, n + m)
    if any(basis[i] >= n and xb[i] != 0 for i in range(m)):
        return _SimplexOut(INFEASIBLE, {}, [], None)
    # drive zero-level artificials out of the basis where possible
    for i in range(m):
        if basis[i] < n:
            continue
        row = binv[i]
        for j in range(n):
            if j in in_basis:
                continue
            if sum(row[r] * a for r, a in cols[j]) != 0:
                pivot(i, j, ftran(j))
                break
    phase2 = list(cost) + [0] * m
    status = run(phase2, n)
    if status != OPTIMAL:
        return _SimplexOut(status, {}, [], None)
    x = {}
    for i in range(m):
        if basis[i] < n and xb[i]:
            x[basis[i]] = Fraction(xb[i], d)
    cb = [phase2[j] for j in basis]
    pi = []
    for r in range(m):
        pi.append(Fraction(sum(cb[i] * binv[i][r] for i in range(m)), d))
    value = sum((Fraction(cost[j]) * v for j, v in x.items()), Fraction(0))
    return _SimplexOut(OPTIMAL, x, pi, value)


# ---------------------------------------------------------------------------
# general LP: min c.x over free x subject to rows (>= or =)


@dataclass
class RowLP:
    """A plain LP: ``rows[i]`` is a sparse dict col -> int coefficient."""

    n_vars: int
    rows: list
    is_eq: list
    rhs: list
    cost: list

    @classmethod
    def from_lp(cls, lp: LPInstance, rows: Sequence[int] | None = None) -> "RowLP":
        A = lp.A
        idx = range(lp.n_rows) if rows is None else rows
        out_rows, eqs, rhs = [], [], []
        for r in idx:
            lo, hi = A.indptr[r], A.indptr[r + 1]
            out_rows.append({int(c): int(v) for c, v in zip(A.indices[lo:hi], A.data[lo:hi])})
            eqs.append(bool(lp.is_eq[r]))
            rhs.append(Fraction(lp.rhs[r]))
        return cls(lp.n_vars, out_rows, eqs, rhs, lp.cost_vector())


def solve_rows(p: RowLP) -> tuple[str, Fraction | None, list, list]:
    """Exact solve of a RowLP through its dual standard form.

    Returns (status, objective, x, y) with ``x`` a dense primal vector and ``y``
    a dense vector of row multipliers.
    """
    scale = 1
    for q in p.cost:
        scale = lcm(scale, Fraction(q).denominator)
    c = [int(Fraction(q) * scale) for q in p.cost]
    rows, rhs = [], []
    row_scale = []
    for row, b in zip(p.rows, p.rhs):
        den = Fraction(b).denominator
        for v in row.values():
            den = lcm(den, Fraction(v).denominator)
        rows.append({k: int(Fraction(v) * den) for k, v in row.items() if v})
        rhs.append(int(Fraction(b) * den))
        row_scale.append(den)
    used = sorted({k for row in rows for k in row} | {k for k, v in enumerate(c) if v})
    pos = {k: i for i, k in enumerate(used)}
    m = len(used)
    sign = [1 if c[k] >= 0 else -1 for k in used]
    cols, costs, owner = [], [], []
    for i, row in enumerate(rows):
        col = sorted((pos[k], sign[pos[k]] * v) for k, v in row.items())
        cols.append(tuple(col))
        costs.append(-rhs[i])
        owner.append((i, 1))
        if p.is_eq[i]:
            cols.append(tuple((r, -v) for r, v in col))
            costs.append(rhs[i])
            owner.append((i, -1))
    b = [abs(c[k]) for k in used]
    out = _standard_simplex(m, cols, b, costs)
    if out.status == INFEASIBLE:
        if any(c):
            zero = RowLP(p.n_vars, p.rows, p.is_eq, p.rhs, [0] * p.n_vars)
            st, _, _, _ = solve_rows(zero)
            return (UNBOUNDED if st == OPTIMAL else INFEASIBLE), None, [], []
        return INFEASIBLE, None, [], []
    if out.status == UNBOUNDED:
        return INFEASIBLE, None, [], []
    x = [Fraction(0)] * p.n_vars
    for k, i in pos.items():
        x[k] = -sign[i] * out.pi[i]
    y = [Fraction(0)] * len(rows)
    for j, v in out.x.items():
        i, s = owner[j]
        y[i] += s * v
    # undo scalings: objective was multiplied by `scale`, row i by row_scale[i]
    y = [yi * row_scale[i] / scale for i, yi in enumerate(y)]
    obj = sum((Fraction(q) * xv for q, xv in zip(p.cost, x)), Fraction(0))
    return OPTIMAL, obj, x, y


def _check_certificate(p: RowLP, x, y, obj) -> None:
    for row, eq, b in zip(p.rows, p.is_eq, p.rhs):
        lhs = sum((Fraction(v) * x[k] for k, v in row.items()), Fraction(0))
        if (eq and lhs != b) or (not eq and lhs < b):
            raise AssertionError("primal infeasible")
    acc = [Fraction(0)] * p.n_vars
    for i, (row, eq) in enumerate(zip(p.rows, p.is_eq)):
        if y[i] == 0:
            continue
        if not eq and y[i] < 0:
            raise AssertionError("dual sign")
        for k, v in row.items():
            acc[k] += y[i] * v
    if any(a != Fraction(q) for a, q in zip(acc, p.cost)):
        raise AssertionError("dual infeasible")
    if sum((yi * b for yi, b in zip(y, p.rhs)), Fraction(0)) != obj:
        raise AssertionError("duality gap")


# ---------------------------------------------------------------------------
# floating-point guide (HiGHS) with lazy row generation


class _FloatSession:
    """A HiGHS model over a subset of an LP's rows, grown on demand."""

    MAX_ADD = 20000
    TOL = 1e-9

    def __init__(self, lp: LPInstance, threads: int = 1):
        import highspy

        self.hs = highspy
        self.A = lp.A.astype(float).tocsr()
        self.lo = np.array([float(q) for q in lp.rhs])
        self.hi = np.where(lp.is_eq, self.lo, np.inf)
        self.base_rows = lp.n_rows
        nv = lp.n_vars
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        h.setOptionValue("threads", max(1, int(threads)))
        h.setOptionValue("random_seed", 0)
        inf = highspy.kHighsInf
        self.n_terms = lp.n_terms
        self.ub = np.full(nv, float(lp.inst.n_files))
        self.ub[lp.n_terms:] = inf
        h.addVars(nv, np.zeros(nv), self.ub)
        self.h = h
        self.nv = nv
        self.active = np.zeros(lp.n_rows, dtype=bool)
        self.order: list[int] = []  # lp row index of every HiGHS row
        seed = lp.kind != 0
        seed &= lp.kind != 1
        self._add(np.nonzero(seed)[0])

    def _add(self, idx: np.ndarray) -> None:
        if len(idx) == 0:
            return
        sub = self.A[idx]
        inf = self.hs.kHighsInf
        self.h.addRows(
            len(idx),
            self.lo[idx],
            np.where(np.isinf(self.hi[idx]), inf, self.hi[idx]),
            sub.nnz,
            sub.indptr[:-1].astype(np.int32),
            sub.indices.astype(np.int32),
            sub.data,
        )
        self.active[idx] = True
        self.order.extend(int(i) for i in idx)

    def _set_box(self, on: bool) -> None:
        inf = self.hs.kHighsInf
        cols = np.arange(self.nv, dtype=np.int32)
        lb = np.zeros(self.nv) if on else np.full(self.nv, -inf)
        ub = self.ub if on else np.full(self.nv, inf)
        self.h.changeColsBounds(self.nv, cols, lb, ub)

    def _iterate(self) -> str:
        """Run HiGHS, adding violated rows (or rows cutting an unbounded ray) until none remain."""
        h = self.h
        while True:
            h.run()
            status = h.modelStatusToString(h.getModelStatus())
            if status == "Optimal":
                x = np.array(h.getSolution().col_value)
                act = self.A @ x
                viol = ((act < self.lo - self.TOL) | (act > self.hi + self.TOL)) & ~self.active
                gap = np.maximum(self.lo - act, act - self.hi)
            elif status == "Unbounded":
                _, has_ray, ray = h.getPrimalRay()
                if not has_ray:
                    return status
                act = self.A @ np.asarray(ray)
                viol = ((act < -self.TOL) | ((act > self.TOL) & np.isfinite(self.hi))) & ~self.active
                gap = np.abs(act)
            else:
                return status
            if not viol.any():
                return status
            vi = np.nonzero(viol)[0]
            if len(vi) > self.MAX_ADD:
                vi = np.sort(vi[np.argsort(-gap[vi], kind="stable")[: self.MAX_ADD]])
            self._add(vi)

    def solve(self, cost: np.ndarray, extra: list[tuple[dict, float, float]]):
        h = self.h
        inf = self.hs.kHighsInf
        h.changeColsCost(self.nv, np.arange(self.nv, dtype=np.int32), cost)
        for coeffs, lo, hi in extra:
            cols = np.array(sorted(coeffs), dtype=np.int32)
            vals = np.array([coeffs[c] for c in cols], dtype=float)
            h.addRow(lo if np.isfinite(lo) else -inf, hi if np.isfinite(hi) else inf, len(cols), cols, vals)
        self.order.extend([-1 - k for k in range(len(extra))])
        status = self._iterate()
        unboxed = False
        if status == "Optimal":
            # the box only stands in for rows not yet generated; drop it when it binds
            col_dual = np.array(h.getSolution().col_dual)
            unboxed = np.any(np.abs(col_dual) > self.TOL)
            if unboxed:
                self._set_box(False)
                status = self._iterate()
        result = None
        if status == "Optimal":
            sol = h.getSolution()
            x = np.array(sol.col_value)
            duals = np.array(sol.row_dual)
            result = (x, duals, list(self.order))
        if status != "Optimal" or unboxed:
            self._set_box(True)
        if extra:
            positions = [i for i, r in enumerate(self.order) if r < 0]
            h.deleteRows(len(positions), np.array(positions, dtype=np.int32))
            self.order = [r for r in self.order if r >= 0]
        assert h.getNumRow() == len(self.order)
        return status, result


def _session(lp: LPInstance, threads: int = 1) -> _FloatSession:
    key = ("float_session", lp.A.shape[1], lp.table.space.inst)
    s = lp._cache.get(key)
    base_rows = int(np.sum(lp.kind != CUSTOM))
    if s is None or s.base_rows != base_rows:
        base = _base_view(lp)
        s = _FloatSession(base, threads)
        lp._cache[key] = s
    return s


def _base_view(lp: LPInstance) -> LPInstance:
    keep = np.nonzero(lp.kind != CUSTOM)[0]
    if len(keep) == lp.n_rows:
        return lp
    return LPInstance(lp.inst, lp.table, lp.A[keep], lp.is_eq[keep], [lp.rhs[i] for i in keep], lp.kind[keep], lp.info[keep], dict(lp.objective), [], _cache=lp._cache)


def _rationalize(x: np.ndarray, limit: int) -> list[Fraction]:
    return [Fraction(float(v)).limit_denominator(limit) for v in x]


def _custom_rows(lp: LPInstance) -> list[int]:
    return [int(r) for r in np.nonzero(lp.kind == CUSTOM)[0]]


def _guided(lp: LPInstance, threads: int = 1) -> SolveResult | None:
    sess = _session(lp, threads)
    cost = np.array([float(q) for q in lp.cost_vector()])
    extra = []
    for r in _custom_rows(lp):
        lo_, hi_ = lp.A.indptr[r], lp.A.indptr[r + 1]
        coeffs = {int(c): float(v) for c, v in zip(lp.A.indices[lo_:hi_], lp.A.data[lo_:hi_])}
        b = float(lp.rhs[r])
        extra.append((coeffs, b, b if lp.is_eq[r] else np.inf))
    status, res = sess.solve(cost, extra)
    if status == "Infeasible":
        return None  # confirm exactly
    if status != "Optimal":
        return None
    x, duals, order = res
    c = lp.cost_vector()
    primal = None
    for limit in (12, 60, 360, 2520, 27720, 10**6):
        cand = _rationalize(x, limit)
        if exact_feasible(lp, cand).all():
            primal = cand
            break
    if primal is None:
        log.info("rational rounding of the float point is infeasible")
        return None
    upper = sum((ci * xi for ci, xi in zip(c, primal)), Fraction(0))
    # map HiGHS rows back to lp rows
    custom = _custom_rows(lp)
    base_index = np.nonzero(lp.kind != CUSTOM)[0]
    support = []
    for pos, r in enumerate(order):
        row = int(base_index[r]) if r >= 0 else custom[-1 - r]
        support.append((row, duals[pos]))
    y = _exact_dual_on_support(lp, upper, [r for r, _ in support], hint={r: v for r, v in support})
    if y is None:
        return None
    dual = {r: v for r, v in y.items() if v}
    prim = {lp.var(k): v for k, v in enumerate(primal) if v}
    return SolveResult(OPTIMAL, upper, prim, dual, method="certified")


def _l1_support(lp: LPInstance, target: Mapping[int, Fraction], rhs_min: Fraction, rows: Sequence[int], hint: Mapping[int, float] | None = None) -> list[int] | None:
    """Float L1-minimal multipliers over ``rows`` reproducing ``target`` with rhs >= ``rhs_min``."""
    import highspy

    rows = np.array(sorted(set(rows)), dtype=np.int64)
    sub = lp.A[rows].astype(float).tocsr()
    used = np.unique(sub.indices)
    used = np.union1d(used, np.array(sorted(target), dtype=np.int64))
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("random_seed", 0)
    inf = highspy.kHighsInf
    k = len(rows)
    eq = lp.is_eq[rows]
    lb = np.where(eq, -inf, 0.0)
    h.addVars(k, lb, np.full(k, inf))
    # |y| for equality rows via extra variables t >= |y|
    n_eq = int(eq.sum())
    h.addVars(n_eq, np.zeros(n_eq), np.full(n_eq, inf))
    costs = np.where(eq, 0.0, 1.0)
    h.changeColsCost(k + n_eq, np.arange(k + n_eq, dtype=np.int32), np.concatenate([costs, np.ones(n_eq)]))
    subr = sub.T.tocsr()  # variables x rows
    subr = subr[used]
    tgt = np.array([float(target.get(int(c), 0)) for c in used])
    h.addRows(len(used), tgt, tgt, subr.nnz, subr.indptr[:-1].astype(np.int32), subr.indices.astype(np.int32), subr.data)
    b = np.array([float(lp.rhs[r]) for r in rows])
    nzb = np.nonzero(b)[0]
    h.addRow(float(rhs_min) - 1e-9, inf, len(nzb), nzb.astype(np.int32), b[nzb])
    eq_idx = np.nonzero(eq)[0]
    for t, j in enumerate(eq_idx):
        h.addRow(0.0, inf, 2, np.array([k + t, j], dtype=np.int32), np.array([1.0, -1.0]))
        h.addRow(0.0, inf, 2, np.array([k + t, j], dtype=np.int32), np.array([1.0, 1.0]))
    h.run()
    if h.modelStatusToString(h.getModelStatus()) != "Optimal":
        return None
    y = np.array(h.getSolution().col_value)[:k]
    return [int(rows[i]) for i in np.nonzero(np.abs(y) > 1e-10)[0]]


def _exact_combination(lp: LPInstance, target: Mapping[int, Fraction], rhs_min: Fraction, rows: Sequence[int]) -> dict | None:
    """Exact L1-minimal multipliers on ``rows`` (standard-form simplex)."""
    rows = sorted(set(rows))
    used = sorted({int(c) for r in rows for c in lp.A.indices[lp.A.indptr[r]:lp.A.indptr[r + 1]]} | set(target))
    pos = {c: i for i, c in enumerate(used)}
    m = len(used) + 1
    scale = 1
    for q in list(target.values()) + [Fraction(rhs_min)]:
        scale = lcm(scale, Fraction(q).denominator)
    b = [int(Fraction(target.get(c, 0)) * scale) for c in used] + [int(Fraction(rhs_min) * scale)]
    sign = [1 if v >= 0 else -1 for v in b]
    b = [abs(v) for v in b]
    cols, costs, owner = [], [], []
    for r in rows:
        lo_, hi_ = lp.A.indptr[r], lp.A.indptr[r + 1]
        col = [(pos[int(c)], sign[pos[int(c)]] * int(v)) for c, v in zip(lp.A.indices[lo_:hi_], lp.A.data[lo_:hi_])]
        rb = Fraction(lp.rhs[r])
        if rb.denominator != 1:
            return None
        if rb:
            col.append((m - 1, sign[m - 1] * int(rb)))
        col = tuple(sorted(col))
        cols.append(col)
        costs.append(1)
        owner.append((r, 1))
        if lp.is_eq[r]:
            cols.append(tuple((i, -v) for i, v in col))
            costs.append(1)
            owner.append((r, -1))
    # surplus on the rhs row: b.y - s = rhs_min
    cols.append(((m - 1, -sign[m - 1]),))
    costs.append(0)
    owner.append((None, 0))
    out = _standard_simplex(m, cols, b, costs)
    if out.status != OPTIMAL:
        return None
    y: dict[int, Fraction] = {}
    for j, v in out.x.items():
        r, s = owner[j]
        if r is None:
            continue
        y[r] = y.get(r, Fraction(0)) + s * v / scale
    return {r: v for r, v in y.items() if v}


def _resum(lp: LPInstance, y: Mapping[int, Fraction]) -> tuple[dict, Fraction]:
    acc: dict[int, Fraction] = {}
    rhs = Fraction(0)
    for r, v in y.items():
        lo_, hi_ = lp.A.indptr[r], lp.A.indptr[r + 1]
        for c, a in zip(lp.A.indices[lo_:hi_], lp.A.data[lo_:hi_]):
            acc[int(c)] = acc.get(int(c), Fraction(0)) + v * int(a)
        rhs += v * Fraction(lp.rhs[r])
    return {c: v for c, v in acc.items() if v}, rhs


def _exact_dual_on_support(lp: LPInstance, value: Fraction, rows: Sequence[int], hint=None) -> dict | None:
    c = lp.cost_vector()
    target = {k: q for k, q in enumerate(c) if q}
    if hint is not None:
        rows_nz = [r for r in rows if abs(hint.get(r, 0.0)) > 1e-10]
    else:
        rows_nz = list(rows)
    support = _l1_support(lp, target, value, rows_nz or rows)
    candidates = []
    if support is not None:
        candidates.append(support)
    candidates.append(rows_nz)
    for cand in candidates:
        if not cand and target:
            continue
        if len(cand) > 4000:
            continue
        y = _exact_combination(lp, target, value, cand)
        if y is None:
            continue
        acc, rhs = _resum(lp, y)
        if acc == target and rhs >= value and all(v >= 0 or lp.is_eq[r] for r, v in y.items()):
            if rhs == value:
                return y
    return None


# ---------------------------------------------------------------------------
# public API


def solve(lp: LPInstance, method: str = "auto", threads: int = 1) -> SolveResult:
    """Exact optimum of ``lp`` with a primal point and a dual certificate."""
    if method not in ("auto", "exact", "guided"):
        raise ValueError(f"unknown method {method!r}")
    tiny = lp.n_vars <= EXACT_MAX_VARS and lp.n_rows <= EXACT_MAX_ROWS
    if method == "guided" or (method == "auto" and not tiny):
        res = _guided(lp, threads)
        if res is not None:
            return res
        log.info("falling back to the exact simplex on %d rows", lp.n_rows)
    return _solve_exact(lp)


def _solve_exact(lp: LPInstance) -> SolveResult:
    p = RowLP.from_lp(lp)
    status, obj, x, y = solve_rows(p)
    if status != OPTIMAL:
        return SolveResult(status)
    _check_certificate(p, x, y, obj)
    prim = {lp.var(k): v for k, v in enumerate(x) if v}
    dual = {r: v for r, v in enumerate(y) if v}
    return SolveResult(OPTIMAL, obj, prim, dual, method="exact")


def linprog_exact(rows: Sequence[Mapping[int, Fraction]], relations: Sequence[str], rhs: Sequence[Fraction], cost: Sequence[Fraction]) -> SolveResult:
    """Exact LP over free variables: ``rows[i] . x (>=|=|<=) rhs[i]``, minimize ``cost . x``."""
    n = len(cost)
    rr, eqs, bb = [], [], []
    for row, rel, b in zip(rows, relations, rhs):
        row = {int(k): Fraction(v) for k, v in row.items() if Fraction(v)}
        b = Fraction(b)
        if rel == "<=":
            row = {k: -v for k, v in row.items()}
            b = -b
        elif rel not in (">=", "="):
            raise ValueError(f"bad relation {rel!r}")
        rr.append(row)
        eqs.append(rel == "=")
        bb.append(b)
    p = RowLP(n, rr, eqs, bb, [Fraction(c) for c in cost])
    status, obj, x, y = solve_rows(p)
    if status != OPTIMAL:
        return SolveResult(status)
    _check_certificate(p, x, y, obj)
    sign = [(-1 if rel == "<=" else 1) for rel in relations]
    return SolveResult(OPTIMAL, obj, {k: v for k, v in enumerate(x)}, {i: s * v for i, (s, v) in enumerate(zip(sign, y)) if v})


def sparse_dual(lp: LPInstance, bound: LinearConstraint, threads: int = 1) -> dict[int, Fraction]:
    """Multipliers over ``lp``'s rows whose combination is ``bound`` (as an identity).

    The sum of multipliers (absolute values for equality rows) is minimized over
    the searched rows; the result is re-summed exactly before it is returned.
    """
    bound = bound.normalized()
    if bound.relation != ">=":
        raise ValueError("bounds must be inequalities")
    target = {lp.col(v): q for v, q in bound.coeffs.items()}
    if not target:
        if bound.rhs <= 0:
            return {}
        raise CertificationError("0 >= rhs with positive rhs is not implied", Fraction(0))
    res = solve(lp.with_objective(bound.coeffs), threads=threads)
    if res.status != OPTIMAL:
        raise CertificationError(f"LP is {res.status}", None)
    if res.objective < bound.rhs:
        raise CertificationError(f"bound not implied: LP optimum {res.objective} < {bound.rhs}", res.objective)
    small = lp.n_vars <= EXACT_MAX_VARS and lp.n_rows <= EXACT_MAX_ROWS
    y = None
    if small:
        y = _exact_combination(lp, target, bound.rhs, range(lp.n_rows))
    else:
        sess = _session(lp, threads)
        base_index = np.nonzero(lp.kind != CUSTOM)[0]
        rows = [int(base_index[r]) for r in sess.order if r >= 0] + _custom_rows(lp)
        support = _l1_support(lp, target, bound.rhs, rows)
        for cand in ([support] if support else []) + [sorted(res.dual)]:
            y = _exact_combination(lp, target, bound.rhs, cand)
            if y is not None:
                break
    if y is None:
        raise CertificationError("no certificate found on the searched rows", res.objective)
    acc, rhs = _resum(lp, y)
    if acc != target or rhs < bound.rhs:
        raise CertificationError("certificate re-summation mismatch", res.objective)
    for r, v in y.items():
        if v < 0 and not lp.is_eq[r]:
            raise CertificationError("negative multiplier on an inequality", res.objective)
    return dict(sorted(y.items()))
