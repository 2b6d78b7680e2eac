"""Symmetry-reduced entropy linear program: terms, elemental rows and system rows."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Iterable, Iterator, Mapping, Sequence, Union

import numpy as np
import scipy.sparse as sp

from .model import (
    Cache,
    Delivery,
    File,
    ProblemInstance,
    format_rational,
    format_var,
    parse_rational,
)
from .symmetry import Space, space_for

Var = Union[int, str]  # term id, or "M" / "R"

# provenance kinds
ELEMENTAL = 0
MONOTONE = 1
FILESIZE = 2
MEMORY = 3
RATE = 4
CUSTOM = 5
KIND_NAMES = {ELEMENTAL: "elemental", MONOTONE: "monotone", FILESIZE: "filesize", MEMORY: "memory", RATE: "rate", CUSTOM: "custom"}


@dataclass(frozen=True)
class Provenance:
    kind: str
    i: int = -1
    j: int = -1
    phi: int = 0
    note: str = ""

    def describe(self, space: Space) -> str:
        name = lambda b: space.name(1 << b)
        if self.kind == "elemental":
            cond = space.name(self.phi)
            return f"I({name(self.i)};{name(self.j)}|{cond})" if cond else f"I({name(self.i)};{name(self.j)})"
        if self.kind == "monotone":
            return f"H({name(self.i)}|rest)"
        if self.kind == "filesize":
            return f"H({space.name(self.phi)})={bin(self.phi).count('1')}"
        if self.kind == "memory":
            return "M>=H(Z1)"
        if self.kind == "rate":
            return f"R>=H({name(self.i)})"
        return self.note or "custom"


@dataclass(frozen=True)
class LinearConstraint:
    coeffs: Mapping[Var, Fraction]
    relation: str = ">="
    rhs: Fraction = Fraction(0)
    provenance: Provenance = Provenance("custom")

    def __post_init__(self) -> None:
        if self.relation not in (">=", "=", "<="):
            raise ValueError(f"bad relation {self.relation!r}")
        clean = {k: Fraction(v) for k, v in self.coeffs.items() if Fraction(v) != 0}
        object.__setattr__(self, "coeffs", clean)
        object.__setattr__(self, "rhs", Fraction(self.rhs))

    def normalized(self) -> "LinearConstraint":
        """Rewrite ``<=`` as ``>=``."""
        if self.relation != "<=":
            return self
        return LinearConstraint({k: -v for k, v in self.coeffs.items()}, ">=", -self.rhs, self.provenance)

    def evaluate(self, values: Mapping[Var, Fraction]) -> Fraction:
        return sum((c * Fraction(values.get(k, 0)) for k, c in self.coeffs.items()), Fraction(0))

    def holds(self, values: Mapping[Var, Fraction]) -> bool:
        lhs = self.evaluate(values)
        if self.relation == ">=":
            return lhs >= self.rhs
        if self.relation == "<=":
            return lhs <= self.rhs
        return lhs == self.rhs


# ---------------------------------------------------------------------------
# term table


class TermTable:
    """Dense ids for orbit representatives of closed nonempty sets."""

    def __init__(self, space: Space, reps: np.ndarray, canon: np.ndarray | None):
        self.space = space
        self.reps = reps
        self.canon = canon
        self._rep_index = {int(m): i for i, m in enumerate(reps)}

    def __len__(self) -> int:
        return len(self.reps)

    def id_of_rep(self, mask: int) -> int:
        return self._rep_index[int(mask)]

    def id_of(self, mask: int) -> int:
        """Term id of any nonempty subset of the universe (-1 for the empty set)."""
        if mask == 0:
            return -1
        if self.canon is not None:
            return int(self.canon[mask])
        return self._rep_index[self.space.canonical_mask(mask)]

    def rep(self, tid: int) -> int:
        return int(self.reps[tid])

    def name(self, tid: int) -> str:
        return self.space.name(self.rep(tid))

    def names(self) -> list[list[str]]:
        return [[format_var(rv) for rv in self.space.vars_of(int(m))] for m in self.reps]


def _canonical_tables(space: Space):
    cl = space.closure_table()
    closed = np.unique(cl)
    best = closed.copy()
    best_key = space.order_key_array(closed)
    for gi in range(len(space.group)):
        im, bad = space.image_array(gi, closed)
        c2 = cl[im]
        key = space.order_key_array(c2)
        key[bad] = np.iinfo(np.int64).max
        upd = key < best_key
        best_key[upd] = key[upd]
        best[upd] = c2[upd]
    reps = np.unique(best)
    reps = reps[reps != 0]
    order = np.argsort(space.order_key_array(reps), kind="stable")
    reps = reps[order]
    # map each closed set to the id of its representative
    rep_sorted = np.sort(reps)
    pos_in_sorted = np.searchsorted(rep_sorted, best)
    sorted_to_id = np.empty(len(reps), dtype=np.int64)
    sorted_to_id[np.searchsorted(rep_sorted, reps)] = np.arange(len(reps))
    closed_id = np.where(best == 0, -1, sorted_to_id[np.minimum(pos_in_sorted, len(reps) - 1)])
    canon = closed_id[np.searchsorted(closed, cl)]
    return cl, closed, canon, reps


def enumerate_terms(inst: ProblemInstance) -> TermTable:
    space = space_for(inst)
    _, _, canon, reps = _canonical_tables(space)
    return TermTable(space, reps, canon)


# ---------------------------------------------------------------------------
# row blocks


@dataclass
class RowBlock:
    """Rows stored by term ids: ``+p1 +p2 -n1 -n2`` (``-1`` marks an absent slot)."""

    terms: np.ndarray  # (m, 4) int64
    kind: np.ndarray  # (m,) int8
    info: np.ndarray  # (m, 3) int64: i, j, phi


def _normalize_quads(q: np.ndarray) -> np.ndarray:
    q = q.copy()
    a, b, c, d = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    for x in (a, b):
        hit = (x >= 0) & (x == c)
        x[hit] = -1
        c[hit] = -1
        hit = (x >= 0) & (x == d)
        x[hit] = -1
        d[hit] = -1
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    nlo, nhi = np.minimum(c, d), np.maximum(c, d)
    # 2x - 2y  ->  x - y
    dbl = (lo == hi) & (nlo == nhi) & (lo >= 0)
    hi = np.where(dbl, -1, hi)
    nhi = np.where(dbl, -1, nhi)
    lo, hi = np.minimum(lo, hi), np.maximum(lo, hi)
    nlo, nhi = np.minimum(nlo, nhi), np.maximum(nlo, nhi)
    return np.stack([hi, lo, nhi, nlo], axis=1)


def elemental_block(space: Space, table: TermTable, closed: np.ndarray | None = None) -> RowBlock:
    """Elemental inequalities after closure/orbit identification and deduplication.

    Only closed conditioning sets are needed: when Φ is not closed the row equals the
    one for its closure, or is trivial.  On an unrestricted universe only orbit
    representatives of Φ are needed.
    """
    n = space.n
    canon = table.canon
    if closed is None:
        closed = np.unique(space.closure_table())
    if space.inst.restricted:
        phis = closed
    else:
        phis = np.concatenate([[0], table.reps])
        phis = np.unique(phis)
    quads, infos = [], []
    full = space.full
    mono = []
    for i in range(n):
        rest = full ^ (1 << i)
        mono.append([canon[full], -1, canon[rest], -1])
    quads.append(np.array(mono, dtype=np.int64))
    infos.append(np.array([[i, -1, 0] for i in range(n)], dtype=np.int64))
    kinds = [np.full(n, MONOTONE, dtype=np.int8)]
    for i in range(n):
        bi = 1 << i
        for j in range(i + 1, n):
            bj = 1 << j
            ph = phis[((phis & bi) == 0) & ((phis & bj) == 0)]
            if len(ph) == 0:
                continue
            c = np.where(ph == 0, -1, canon[ph])
            q = np.stack([canon[ph | bi], canon[ph | bj], c, canon[ph | bi | bj]], axis=1)
            quads.append(q)
            infos.append(np.stack([np.full(len(ph), i), np.full(len(ph), j), ph], axis=1))
            kinds.append(np.full(len(ph), ELEMENTAL, dtype=np.int8))
    q = _normalize_quads(np.concatenate(quads))
    info = np.concatenate(infos)
    kind = np.concatenate(kinds)
    nontrivial = (q[:, 0] >= 0) | (q[:, 1] >= 0)
    q, info, kind = q[nontrivial], info[nontrivial], kind[nontrivial]
    _, first = np.unique(q, axis=0, return_index=True)
    return RowBlock(q[first], kind[first], info[first])


def naive_elementals(space: Space) -> Iterator[tuple[int, int, int]]:
    """Every raw elemental inequality as (i, j, Φ); ``j = -1`` marks H(X_i | rest) ≥ 0."""
    n = space.n
    for i in range(n):
        yield (i, -1, space.full ^ (1 << i))
    for i in range(n):
        for j in range(i + 1, n):
            others = [b for b in range(n) if b != i and b != j]
            for r in range(1 << len(others)):
                phi = 0
                for t, b in enumerate(others):
                    if r >> t & 1:
                        phi |= 1 << b
                yield (i, j, phi)


# ---------------------------------------------------------------------------
# LP instance


@dataclass
class LPInstance:
    inst: ProblemInstance
    table: TermTable
    A: sp.csr_matrix  # integer coefficients, columns: terms..., M, R
    is_eq: np.ndarray
    rhs: list  # Fraction per row (integers for generated rows)
    kind: np.ndarray
    info: np.ndarray
    objective: dict = field(default_factory=dict)
    custom: list = field(default_factory=list)
    sense: str = "minimize"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_terms(self) -> int:
        return len(self.table)

    @property
    def n_vars(self) -> int:
        return len(self.table) + 2

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    def col(self, v: Var) -> int:
        if v == "M":
            return self.n_terms
        if v == "R":
            return self.n_terms + 1
        v = int(v)
        if not 0 <= v < self.n_terms:
            raise KeyError(f"unknown variable {v}")
        return v

    def var(self, c: int) -> Var:
        if c == self.n_terms:
            return "M"
        if c == self.n_terms + 1:
            return "R"
        return c

    def var_name(self, v: Var) -> str:
        if v in ("M", "R"):
            return str(v)
        return "H(" + self.table.name(int(v)) + ")"

    def cost_vector(self) -> list[Fraction]:
        c = [Fraction(0)] * self.n_vars
        for v, q in self.objective.items():
            c[self.col(v)] = Fraction(q)
        return c

    def provenance(self, r: int) -> Provenance:
        k = int(self.kind[r])
        i, j, phi = (int(x) for x in self.info[r])
        if k == CUSTOM:
            return self.custom[i].provenance
        return Provenance(KIND_NAMES[k], i, j, phi)

    def constraint(self, r: int) -> LinearConstraint:
        row = self.A.getrow(r)
        coeffs = {self.var(int(c)): Fraction(int(v)) for c, v in zip(row.indices, row.data)}
        return LinearConstraint(coeffs, "=" if self.is_eq[r] else ">=", self.rhs[r], self.provenance(r))

    @property
    def constraints(self) -> list[LinearConstraint]:
        return [self.constraint(r) for r in range(self.n_rows)]

    def term_id(self, rvs) -> int:
        return self.table.id_of(self.table.space.resolve(rvs))

    # -- derived instances
    def with_objective(self, objective: Mapping[Var, Fraction]) -> "LPInstance":
        obj = _check_objective(self, objective)
        return LPInstance(self.inst, self.table, self.A, self.is_eq, self.rhs, self.kind, self.info, obj, list(self.custom), _cache=self._cache)

    def with_constraints(self, extra: Iterable[LinearConstraint]) -> "LPInstance":
        extra = [c.normalized() for c in extra]
        if not extra:
            return self
        rows, cols, vals, rhs, eqs = [], [], [], [], []
        for r, c in enumerate(extra):
            den = 1
            for q in list(c.coeffs.values()) + [c.rhs]:
                den = lcm(den, q.denominator)
            for v, q in c.coeffs.items():
                rows.append(r)
                cols.append(self.col(v))
                vals.append(int(q * den))
            rhs.append(c.rhs * den)
            eqs.append(c.relation == "=")
        block = sp.csr_matrix((vals, (rows, cols)), shape=(len(extra), self.n_vars), dtype=np.int64)
        base = len(self.custom)
        info = np.array([[base + r, -1, 0] for r in range(len(extra))], dtype=np.int64)
        return LPInstance(
            self.inst,
            self.table,
            sp.vstack([self.A, block], format="csr"),
            np.concatenate([self.is_eq, np.array(eqs, dtype=bool)]),
            list(self.rhs) + rhs,
            np.concatenate([self.kind, np.full(len(extra), CUSTOM, dtype=np.int8)]),
            np.concatenate([self.info, info]),
            dict(self.objective),
            list(self.custom) + extra,
            _cache=self._cache,
        )

    # -- evaluation
    def violations(self, values: Mapping[Var, Fraction]) -> list[int]:
        """Rows violated by an exact point (empty list means feasible)."""
        x = [Fraction(0)] * self.n_vars
        for v, q in values.items():
            x[self.col(v)] = Fraction(q)
        ok = exact_feasible(self, x)
        return [int(r) for r in np.nonzero(~ok)[0]]

    def to_json(self) -> str:
        terms = self.table.names()
        out_rows = []
        for r in range(self.n_rows):
            c = self.constraint(r)
            out_rows.append(
                {
                    "coeffs": {_json_key(v): format_rational(q) for v, q in sorted(c.coeffs.items(), key=lambda kv: _var_order(kv[0]))},
                    "relation": c.relation,
                    "rhs": format_rational(c.rhs),
                    "provenance": c.provenance.describe(self.table.space),
                }
            )
        doc = {
            "instance": self.inst.describe(),
            "terms": {f"T{i}": names for i, names in enumerate(terms)},
            "variables": ["M", "R"] + [f"T{i}" for i in range(len(terms))],
            "objective": {_json_key(v): format_rational(q) for v, q in sorted(self.objective.items(), key=lambda kv: _var_order(kv[0]))},
            "sense": self.sense,
            "constraints": out_rows,
        }
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def _var_order(v: Var):
    return (0, 0) if v == "M" else (0, 1) if v == "R" else (1, int(v))


def _json_key(v: Var) -> str:
    return str(v) if v in ("M", "R") else f"T{int(v)}"


def _check_objective(lp: LPInstance, objective: Mapping[Var, Fraction]) -> dict:
    obj = {}
    for v, q in objective.items():
        lp.col(v)  # raises for unknown variables
        q = Fraction(q)
        if q:
            obj[v if v in ("M", "R") else int(v)] = q
    return obj


def exact_feasible(lp: LPInstance, x: Sequence[Fraction]) -> np.ndarray:
    """Per-row exact satisfaction test using scaled integer arithmetic."""
    den = 1
    for q in x:
        den = lcm(den, Fraction(q).denominator)
    for q in lp.rhs:
        den = lcm(den, Fraction(q).denominator)
    xi = [int(Fraction(q) * den) for q in x]
    bi = [int(Fraction(q) * den) for q in lp.rhs]
    max_abs = max([abs(v) for v in xi] + [abs(v) for v in bi] + [1])
    row_l1 = np.asarray(abs(lp.A).sum(axis=1)).ravel()
    bound = int(row_l1.max() if len(row_l1) else 1) * max_abs
    if bound < 2**62:
        act = lp.A @ np.array(xi, dtype=np.int64)
        b = np.array(bi, dtype=np.int64)
    else:
        A = lp.A.tocsr()
        act = np.array(
            [sum(int(A.data[k]) * xi[A.indices[k]] for k in range(A.indptr[r], A.indptr[r + 1])) for r in range(A.shape[0])],
            dtype=object,
        )
        b = np.array(bi, dtype=object)
    return np.where(lp.is_eq, act == b, act >= b)


def _quads_to_rows(q: np.ndarray):
    m = len(q)
    rows = np.repeat(np.arange(m), 4)
    cols = q.ravel()
    vals = np.tile(np.array([1, 1, -1, -1], dtype=np.int64), m)
    keep = cols >= 0
    return rows[keep], cols[keep], vals[keep]


def elemental_constraints(inst: ProblemInstance) -> list[LinearConstraint]:
    lp = build(inst, {})
    return [lp.constraint(r) for r in range(lp.n_rows) if lp.kind[r] in (ELEMENTAL, MONOTONE)]


def problem_constraints(inst: ProblemInstance) -> list[LinearConstraint]:
    lp = build(inst, {})
    return [lp.constraint(r) for r in range(lp.n_rows) if lp.kind[r] in (FILESIZE, MEMORY, RATE)]


def _problem_rows(space: Space, table: TermTable):
    """(term-coefficient dict over columns, is_eq, rhs, kind, info) for system rows."""
    inst = space.inst
    T = len(table)
    iM, iR = T, T + 1
    out = []
    for c in range(1, inst.n_files + 1):
        mask = space.mask_of(File(n) for n in range(1, c + 1))
        out.append(({table.id_of(mask): 1}, True, c, FILESIZE, (-1, -1, mask)))
    z1 = space.index[Cache(1)]
    out.append(({iM: 1, table.id_of(1 << z1): -1}, False, 0, MEMORY, (z1, -1, 0)))
    seen = set()
    for b, rv in enumerate(space.members):
        if isinstance(rv, Delivery):
            tid = table.id_of(1 << b)
            if tid in seen:
                continue
            seen.add(tid)
            out.append(({iR: 1, tid: -1}, False, 0, RATE, (b, -1, 0)))
    return out


def build(inst: ProblemInstance, objective: Mapping[Var, Fraction] | None = None) -> LPInstance:
    space = space_for(inst)
    cl, closed, canon, reps = _canonical_tables(space)
    table = TermTable(space, reps, canon)
    block = elemental_block(space, table, closed)
    nv = len(table) + 2
    r0, c0, v0 = _quads_to_rows(block.terms)
    m0 = len(block.terms)
    prows = _problem_rows(space, table)
    rr, cc, vv = [r0], [c0], [v0]
    extra_r, extra_c, extra_v = [], [], []
    for k, (coeffs, _, _, _, _) in enumerate(prows):
        for col, val in coeffs.items():
            extra_r.append(m0 + k)
            extra_c.append(col)
            extra_v.append(val)
    rr.append(np.array(extra_r, dtype=np.int64))
    cc.append(np.array(extra_c, dtype=np.int64))
    vv.append(np.array(extra_v, dtype=np.int64))
    m = m0 + len(prows)
    A = sp.csr_matrix((np.concatenate(vv), (np.concatenate(rr), np.concatenate(cc))), shape=(m, nv), dtype=np.int64)
    A.sum_duplicates()
    A.eliminate_zeros()
    A.sort_indices()
    is_eq = np.concatenate([np.zeros(m0, dtype=bool), np.array([p[1] for p in prows], dtype=bool)])
    rhs = [Fraction(0)] * m0 + [Fraction(p[2]) for p in prows]
    kind = np.concatenate([block.kind, np.array([p[3] for p in prows], dtype=np.int8)])
    info = np.concatenate([block.info, np.array([p[4] for p in prows], dtype=np.int64).reshape(-1, 3)])
    lp = LPInstance(inst, table, A, is_eq, rhs, kind, info)
    return lp.with_objective(objective or {})


def lp_from_json(text: str) -> dict:
    """Parse an exported LP into plain Python structures (terms, rows, objective)."""
    doc = json.loads(text)
    rows = []
    for row in doc["constraints"]:
        rows.append(
            (
                {k: parse_rational(v) for k, v in row["coeffs"].items()},
                row["relation"],
                parse_rational(row["rhs"]),
            )
        )
    return {"terms": doc["terms"], "rows": rows, "objective": {k: parse_rational(v) for k, v in doc["objective"].items()}}
