"""Tabulated proofs: extraction from dual certificates, independent checking and rendering."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import lcm
from typing import Mapping, Sequence

import numpy as np

from .lpbuild import (
    ELEMENTAL,
    FILESIZE,
    MEMORY,
    MONOTONE,
    RATE,
    LinearConstraint,
    LPInstance,
    build,
)
from .model import (
    DIRECT_SOLVE_LIMIT,
    Cache,
    Delivery,
    File,
    OfType,
    ProblemInstance,
    RandomVar,
    format_rational,
    format_var,
    is_relaxation,
    parse_rational,
    parse_var,
    shift_relaxation,
)
from .ratsolve import linprog_exact, sparse_dual, OPTIMAL
from .symmetry import Space, space_for

# largest local universe used to certify an unannotated row
MAX_LOCAL_VARS = 14


class ProofTableError(ValueError):
    """A malformed proof table; ``line`` and ``column`` are 1-based when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.column = column


# ---------------------------------------------------------------------------
# data model


@dataclass(frozen=True)
class Term:
    """One column of a proof table: ``F``, ``R``, ``M`` or a joint entropy."""

    kind: str
    vars: tuple[RandomVar, ...] = ()

    @classmethod
    def parse(cls, text: str) -> "Term":
        text = text.strip()
        if text in ("F", "R", "M"):
            return cls(text)
        names = [s for s in text.split(",") if s.strip()]
        if not names:
            raise ValueError(f"empty term {text!r}")
        return cls("H", tuple(parse_var(s.strip()) for s in names))

    def __str__(self) -> str:
        if self.kind != "H":
            return self.kind
        return ",".join(format_var(v) for v in self.vars)

    def label(self) -> str:
        return self.kind if self.kind != "H" else f"H({self})"


@dataclass
class ProofRow:
    coeffs: dict[int, Fraction]
    annotation: str | None = None


@dataclass
class ProofTable:
    terms: list[Term]
    rows: list[ProofRow]
    final: dict[int, Fraction]
    meta: dict = field(default_factory=dict)

    def column(self, c: int) -> str:
        return f"T{c + 1}"


def instance_from_json(doc: Mapping) -> ProblemInstance:
    kw = {}
    if "demand_type" in doc:
        kw["demand_filter"] = OfType(tuple(doc["demand_type"]))
    if "restriction" in doc:
        kw["restriction"] = tuple(doc["restriction"])
    if "max_universe" in doc:
        kw["max_universe"] = int(doc["max_universe"])
    return ProblemInstance(int(doc["n_files"]), int(doc["n_users"]), **kw)


def instance_to_json(inst: ProblemInstance) -> dict:
    doc = {"n_files": inst.n_files, "n_users": inst.n_users}
    if isinstance(inst.demand_filter, OfType):
        doc["demand_type"] = list(inst.demand_filter.t)
    if inst.restriction is not None:
        doc["restriction"] = [format_var(v) for v in inst.restriction]
    if inst.max_universe is not None:
        doc["max_universe"] = inst.max_universe
    return doc


# ---------------------------------------------------------------------------
# parse / serialize


def _locate(text: str, needle: str) -> tuple[int, int] | tuple[None, None]:
    pos = text.find(json.dumps(needle))
    if pos < 0:
        return None, None
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


def _coeff_map(text: str, obj, n_terms: int, where: str) -> dict[int, Fraction]:
    if not isinstance(obj, dict):
        raise ProofTableError(f"{where}: expected an object of coefficients")
    out: dict[int, Fraction] = {}
    for key, val in obj.items():
        m = re.fullmatch(r"T([1-9][0-9]*)", key)
        if not m or int(m.group(1)) > n_terms:
            raise ProofTableError(f"{where}: unknown column {key!r}", *_locate(text, key))
        try:
            q = parse_rational(str(val))
        except ValueError:
            raise ProofTableError(f"{where}: bad rational {val!r}", *_locate(text, str(val))) from None
        if q:
            out[int(m.group(1)) - 1] = q
    return out


def parse(text: str) -> ProofTable:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProofTableError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    if not isinstance(doc, dict):
        raise ProofTableError("a proof table is a JSON object", 1, 1)
    for key in ("terms", "rows", "final"):
        if key not in doc:
            raise ProofTableError(f"missing field {key!r}")
    terms = []
    for s in doc["terms"]:
        try:
            terms.append(Term.parse(s))
        except (ValueError, TypeError) as exc:
            raise ProofTableError(f"unknown term {s!r}: {exc}", *_locate(text, s)) from None
    rows = []
    for i, r in enumerate(doc["rows"]):
        if not isinstance(r, dict) or "coeffs" not in r:
            raise ProofTableError(f"row {i + 1}: expected an object with 'coeffs'")
        rows.append(ProofRow(_coeff_map(text, r["coeffs"], len(terms), f"row {i + 1}"), r.get("annotation")))
    final = _coeff_map(text, doc["final"], len(terms), "final row")
    meta = {k: v for k, v in doc.items() if k not in ("terms", "rows", "final")}
    return ProofTable(terms, rows, final, meta)


def _coeff_json(c: Mapping[int, Fraction]) -> dict:
    return {f"T{k + 1}": format_rational(v) for k, v in c.items() if v}


def to_json(table: ProofTable) -> dict:
    doc = dict(table.meta)
    doc["terms"] = [str(t) for t in table.terms]
    rows = []
    for r in table.rows:
        d = {"coeffs": _coeff_json(r.coeffs)}
        if r.annotation is not None:
            d["annotation"] = r.annotation
        rows.append(d)
    doc["rows"] = rows
    doc["final"] = _coeff_json(table.final)
    return doc


def serialize(table: ProofTable) -> str:
    return json.dumps(to_json(table), indent=1, sort_keys=True) + "\n"


def load(path) -> ProofTable:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


# ---------------------------------------------------------------------------
# canonical keys


class _Keys:
    """Maps table terms and variable sets to canonical keys of an instance."""

    def __init__(self, inst: ProblemInstance):
        self.inst = inst
        # keys never enumerate the lattice, so the build cap does not apply
        self.space: Space = space_for(inst, enforce_cap=False)
        self._cache: dict[int, int] = {}

    def mask(self, rvs: Sequence[RandomVar]) -> int:
        try:
            return self.space.resolve(rvs)
        except ValueError as exc:
            raise ProofTableError(str(exc)) from None

    def of_mask(self, mask: int):
        if mask == 0:
            return None
        hit = self._cache.get(mask)
        if hit is None:
            hit = self.space.canonical_mask(mask)
            self._cache[mask] = hit
        return hit

    def of_term(self, t: Term):
        if t.kind != "H":
            return t.kind
        return self.of_mask(self.mask(t.vars))

    def of_vars(self, rvs: Sequence[RandomVar]):
        return self.of_mask(self.mask(rvs)) if rvs else None


def _add(acc: dict, key, q: Fraction) -> None:
    if key is None or not q:
        return
    v = acc.get(key, Fraction(0)) + q
    if v:
        acc[key] = v
    else:
        acc.pop(key, None)


def _keyed(coeffs: Mapping[int, Fraction], keys: Sequence) -> dict:
    acc: dict = {}
    for c, q in coeffs.items():
        _add(acc, keys[c], q)
    return acc


# ---------------------------------------------------------------------------
# annotations


_ANN = re.compile(r"^(?:(?P<mult>-?[0-9]+(?:/[0-9]+)?)\*)?(?P<form>.+)$")
_VAR_LIST = r"[WZX][0-9]+(?:,[WZX][0-9]+)*"


def _vars(text: str) -> list[RandomVar]:
    return [parse_var(s) for s in text.split(",")] if text else []


def format_annotation(mult: Fraction, form: str) -> str:
    return form if mult == 1 else f"{format_rational(mult)}*{form}"


def expand_annotation(text: str, keys: _Keys) -> tuple[dict, bool]:
    """Term-key expansion of an annotation and whether it is a two-sided identity."""
    m = _ANN.match(text.replace(" ", ""))
    if not m:
        raise ProofTableError(f"unreadable annotation {text!r}")
    mult = Fraction(m.group("mult")) if m.group("mult") else Fraction(1)
    form = m.group("form")
    acc: dict = {}
    equality = False
    if mi := re.fullmatch(rf"I\(({_VAR_LIST});({_VAR_LIST})(?:\|({_VAR_LIST}))?\)>=0", form):
        a, b, c = _vars(mi.group(1)), _vars(mi.group(2)), _vars(mi.group(3) or "")
        _add(acc, keys.of_vars(a + c), Fraction(1))
        _add(acc, keys.of_vars(b + c), Fraction(1))
        _add(acc, keys.of_vars(a + b + c), Fraction(-1))
        _add(acc, keys.of_vars(c), Fraction(-1))
    elif mi := re.fullmatch(rf"H\(({_VAR_LIST})(?:\|({_VAR_LIST}))?\)>=0", form):
        a, b = _vars(mi.group(1)), _vars(mi.group(2) or "")
        _add(acc, keys.of_vars(a + b), Fraction(1))
        _add(acc, keys.of_vars(b), Fraction(-1))
    elif mi := re.fullmatch(rf"H\(({_VAR_LIST})\)=(-?[0-9]*)F", form):
        s = _vars(mi.group(1))
        c = int(mi.group(2)) if mi.group(2) not in ("", "-") else (1 if mi.group(2) == "" else -1)
        if not all(isinstance(v, File) for v in s) or len(set(s)) != c:
            raise ProofTableError(f"{text!r} is not a file-size identity")
        _add(acc, keys.of_vars(s), Fraction(1))
        _add(acc, "F", Fraction(-c))
        equality = True
    elif mi := re.fullmatch(rf"M>=H\(({_VAR_LIST})\)", form):
        s = _vars(mi.group(1))
        if len(s) != 1 or not isinstance(s[0], Cache):
            raise ProofTableError(f"{text!r} is not a memory constraint")
        _add(acc, "M", Fraction(1))
        _add(acc, keys.of_vars(s), Fraction(-1))
    elif mi := re.fullmatch(rf"R>=H\(({_VAR_LIST})\)", form):
        s = _vars(mi.group(1))
        if len(s) != 1 or not isinstance(s[0], Delivery):
            raise ProofTableError(f"{text!r} is not a rate constraint")
        _add(acc, "R", Fraction(1))
        _add(acc, keys.of_vars(s), Fraction(-1))
    elif mi := re.fullmatch(rf"H\(({_VAR_LIST})\)=H\(({_VAR_LIST})\)", form):
        a, b = keys.mask(_vars(mi.group(1))), keys.mask(_vars(mi.group(2)))
        sp = keys.space
        if sp.closure(a) != sp.closure(b):
            raise ProofTableError(f"{text!r}: the two sets determine different variables")
        _add(acc, keys.of_mask(a), Fraction(1))
        _add(acc, keys.of_mask(b), Fraction(-1))
        equality = True
    else:
        raise ProofTableError(f"unreadable annotation {text!r}")
    if mult < 0 and not equality:
        raise ProofTableError(f"{text!r}: negative multiple of an inequality")
    return {k: mult * v for k, v in acc.items()}, equality


# ---------------------------------------------------------------------------
# local cone certification


def _local_universe(keys: _Keys, sets: Sequence[Sequence[RandomVar]]) -> list[int]:
    sp = keys.space
    mask = 0
    for s in sets:
        mask |= keys.mask(s)
    # decoding closure without the all-files rule
    while True:
        grown = mask
        for need, add in sp.rules:
            if grown & need == need:
                grown |= add
        if grown == mask:
            break
        mask = grown
    return [b for b in range(sp.n) if mask >> b & 1]


def _local_generators(keys: _Keys, bits: Sequence[int]):
    """Valid rows over ``bits`` as (key-coefficient dict, is_equality)."""
    sp = keys.space
    n = len(bits)
    subsets = np.zeros(1 << n, dtype=np.int64)
    for r in range(1, 1 << n):
        low = r & -r
        subsets[r] = subsets[r ^ low] | (1 << bits[low.bit_length() - 1])
    canon = sp.canonical_array(subsets)
    key = [None] + [int(c) for c in canon[1:]]
    gens = []
    full = (1 << n) - 1
    for i in range(n):
        gens.append(({key[full]: 1, key[full ^ (1 << i)]: -1}, False))
    for i, j in combinations(range(n), 2):
        others = full ^ (1 << i) ^ (1 << j)
        sub = others
        while True:
            row: dict = {}
            for k, q in ((sub | 1 << i, 1), (sub | 1 << j, 1), (sub | 1 << i | 1 << j, -1), (sub, -1)):
                _add(row, key[k], Fraction(q))
            if row:
                gens.append((row, False))
            if sub == 0:
                break
            sub = (sub - 1) & others
    inst = keys.inst
    for c in range(1, inst.n_files + 1):
        k = keys.of_vars([File(n) for n in range(1, c + 1)])
        gens.append(({k: 1, "F": -c}, True))
    gens.append(({"M": 1, keys.of_vars([Cache(1)]): -1}, False))
    seen = set()
    for b, rv in enumerate(sp.members):
        if isinstance(rv, Delivery):
            k = keys.of_mask(1 << b)
            if k not in seen:
                seen.add(k)
                gens.append(({"R": 1, k: -1}, False))
    out, dedup = [], set()
    for row, eq in gens:
        row = {k: Fraction(v) for k, v in row.items() if v}
        sig = (tuple(sorted(row.items(), key=lambda kv: str(kv[0]))), eq)
        if row and sig not in dedup:
            dedup.add(sig)
            out.append((row, eq))
    return out


def _cone_support(gens, target: Mapping) -> list[int] | None:
    import highspy

    cols = sorted({k for g, _ in gens for k in g} | set(target), key=str)
    pos = {k: i for i, k in enumerate(cols)}
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("random_seed", 0)
    inf = highspy.kHighsInf
    n = len(gens)
    lb = np.array([-inf if eq else 0.0 for _, eq in gens])
    h.addVars(n, lb, np.full(n, inf))
    # split equalities into two nonnegative parts for an L1 objective
    eq_idx = [i for i, (_, eq) in enumerate(gens) if eq]
    h.addVars(len(eq_idx), np.zeros(len(eq_idx)), np.full(len(eq_idx), inf))
    cost = np.array([0.0 if eq else 1.0 for _, eq in gens] + [1.0] * len(eq_idx))
    h.changeColsCost(len(cost), np.arange(len(cost), dtype=np.int32), cost)
    by_row: list[list[tuple[int, float]]] = [[] for _ in cols]
    for j, (g, _) in enumerate(gens):
        for k, v in g.items():
            by_row[pos[k]].append((j, float(v)))
    for k in cols:
        entries = by_row[pos[k]]
        t = float(target.get(k, 0))
        h.addRow(t, t, len(entries), np.array([e[0] for e in entries], dtype=np.int32), np.array([e[1] for e in entries]))
    for t, j in enumerate(eq_idx):
        for s in (1.0, -1.0):
            h.addRow(0.0, inf, 2, np.array([n + t, j], dtype=np.int32), np.array([1.0, s]))
    h.run()
    if h.modelStatusToString(h.getModelStatus()) != "Optimal":
        return None
    y = np.array(h.getSolution().col_value)[:n]
    return [int(j) for j in np.nonzero(np.abs(y) > 1e-9)[0]]


def _exact_cone(gens, target: Mapping, support: Sequence[int]) -> dict[int, Fraction] | None:
    cols = sorted({k for j in support for k in gens[j][0]} | set(target), key=str)
    rows, rels, rhs = [], [], []
    # variables: multipliers on the support
    for k in cols:
        rows.append({t: gens[j][0].get(k, Fraction(0)) for t, j in enumerate(support)})
        rels.append("=")
        rhs.append(Fraction(target.get(k, 0)))
    for t, j in enumerate(support):
        if not gens[j][1]:
            rows.append({t: Fraction(1)})
            rels.append(">=")
            rhs.append(Fraction(0))
    res = linprog_exact(rows, rels, rhs, [Fraction(0)] * len(support))
    if res.status != OPTIMAL:
        return None
    lam = {support[t]: Fraction(v) for t, v in res.primal.items() if v}
    acc: dict = {}
    for j, v in lam.items():
        for k, q in gens[j][0].items():
            _add(acc, k, v * q)
    if acc != {k: v for k, v in target.items() if v}:
        return None
    if any(v < 0 and not gens[j][1] for j, v in lam.items()):
        return None
    return lam


def certify_row(keys: _Keys, terms: Sequence[Term], row: ProofRow, term_keys: Sequence) -> str | None:
    """None when the row is a valid inequality, otherwise the reason it is not."""
    target = _keyed(row.coeffs, term_keys)
    if row.annotation is not None:
        try:
            exp, _ = expand_annotation(row.annotation, keys)
        except (ProofTableError, ValueError) as exc:
            return str(exc)
        if exp != target:
            return f"annotation {row.annotation!r} does not expand to the row"
        return None
    if not target:
        return None
    sets = [terms[c].vars for c in row.coeffs if terms[c].kind == "H"]
    bits = _local_universe(keys, sets)
    if len(bits) > MAX_LOCAL_VARS:
        return f"row mentions {len(bits)} variables, above the local limit of {MAX_LOCAL_VARS}"
    gens = _local_generators(keys, bits)
    support = _cone_support(gens, target)
    if support is not None and _exact_cone(gens, target, support) is not None:
        return None
    if len(gens) <= 400 and _exact_cone(gens, target, list(range(len(gens)))) is not None:
        return None
    return "row is not a nonnegative combination of valid inequalities on its variables"


# ---------------------------------------------------------------------------
# verification


@dataclass
class VerifyReport:
    ok: bool
    stage: str | None = None  # "sum" or "row" on failure
    row: int | None = None  # 1-based
    columns: list[str] = field(default_factory=list)
    message: str = ""

    def __str__(self) -> str:
        if self.ok:
            return "proof verified"
        if self.stage == "sum":
            return f"sum check failed at columns {', '.join(self.columns)}: {self.message}"
        return f"row {self.row} failed: {self.message}"


def verify(table: ProofTable, inst: ProblemInstance | None = None) -> VerifyReport:
    if inst is None:
        if "instance" not in table.meta:
            raise ProofTableError("no instance given and none recorded in the table")
        inst = instance_from_json(table.meta["instance"])
    keys = _Keys(inst)
    term_keys = [keys.of_term(t) for t in table.terms]
    total: dict = {}
    for r in table.rows:
        for k, v in _keyed(r.coeffs, term_keys).items():
            _add(total, k, v)
    final = _keyed(table.final, term_keys)
    bad = {k for k in set(total) | set(final) if total.get(k, 0) != final.get(k, 0)}
    if bad:
        cols = [table.column(c) for c, k in enumerate(term_keys) if k in bad]
        return VerifyReport(False, "sum", None, cols, "column sums differ from the final row")
    for i, r in enumerate(table.rows):
        why = certify_row(keys, table.terms, r, term_keys)
        if why is not None:
            cols = [table.column(c) for c in sorted(r.coeffs)]
            return VerifyReport(False, "row", i + 1, cols, why)
    return VerifyReport(True)


# ---------------------------------------------------------------------------
# extraction


def _scale(values: Sequence[Fraction]) -> int:
    d = 1
    for v in values:
        d = lcm(d, Fraction(v).denominator)
    return d


def _annotation_form(lp: LPInstance, r: int) -> tuple[str, bool]:
    sp = lp.table.space
    name = lambda b: format_var(sp.members[b])
    kind = int(lp.kind[r])
    i, j, phi = (int(x) for x in lp.info[r])
    if kind == ELEMENTAL:
        cond = sp.name(phi)
        return (f"I({name(i)};{name(j)}|{cond})>=0" if cond else f"I({name(i)};{name(j)})>=0"), False
    if kind == MONOTONE:
        rest = sp.full ^ (1 << i)
        return (f"H({name(i)}|{sp.name(rest)})>=0" if rest else f"H({name(i)})>=0"), False
    if kind == FILESIZE:
        return f"H({sp.name(phi)})={bin(phi).count('1')}F", True
    if kind == RATE:
        return f"R>=H({name(i)})", False
    raise ValueError(f"row {r} has no annotation form")


def _generating(sp: Space, mask: int) -> int:
    """A small subset of ``mask`` with the same closure, for display."""
    target = sp.closure(mask)
    kinds = (Delivery, Cache, File)
    for kind in kinds:
        for b in reversed(range(sp.n)):
            if mask >> b & 1 and isinstance(sp.members[b], kind):
                if sp.closure(mask ^ (1 << b)) == target:
                    mask ^= 1 << b
    return mask


def extract(
    inst_or_lp: ProblemInstance | LPInstance,
    bound: LinearConstraint,
    threads: int = 1,
    relaxation: ProblemInstance | None = None,
) -> ProofTable:
    """A proof table for ``bound`` (over M and R) read off a sparse dual certificate.

    For universes above ``DIRECT_SOLVE_LIMIT`` variables the certificate is taken
    from a relaxation that drops deliveries.  Every row of such a table is still a
    valid inequality of the full instance, which the table records and is checked
    against.
    """
    if isinstance(inst_or_lp, LPInstance):
        lp = inst_or_lp
        inst = lp.inst
    else:
        inst = inst_or_lp
        if relaxation is None and len(inst.universe_unchecked()) > DIRECT_SOLVE_LIMIT:
            relaxation = shift_relaxation(inst)
        if relaxation is not None and not is_relaxation(relaxation, inst):
            raise ValueError(f"{relaxation.describe()} is not a relaxation of {inst.describe()}")
        lp = build(relaxation if relaxation is not None else inst)
    bound = bound.normalized()
    if set(bound.coeffs) - {"M", "R"}:
        raise ValueError("bounds are stated over M and R")
    y = sparse_dual(lp, bound, threads)
    table_rows: list[tuple[dict, str]] = []
    final: dict = {}
    for r, v in y.items():
        kind = int(lp.kind[r])
        if kind == MEMORY:
            continue  # the bound keeps H(Z1) in place of M
        row = lp.A.getrow(r)
        coeffs: dict = {}
        for c, a in zip(row.indices, row.data):
            coeffs[lp.var(int(c))] = v * int(a)
        if kind == FILESIZE:
            coeffs["F"] = -v * lp.rhs[r]
        form, _ = _annotation_form(lp, r)
        table_rows.append((coeffs, form))
        for k, q in coeffs.items():
            _add(final, k, q)
    scale = _scale([q for c, _ in table_rows for q in c.values()])
    # columns: F, R, M, then entropy terms in id order
    used = {k for c, _ in table_rows for k in c} | set(final)
    order = [k for k in ("F", "R", "M") if k in used] + sorted(k for k in used if isinstance(k, int))
    col = {k: i for i, k in enumerate(order)}
    sp = lp.table.space
    terms = [Term(k) if isinstance(k, str) else Term("H", tuple(sp.vars_of(_generating(sp, lp.table.rep(k))))) for k in order]
    keys = _Keys(lp.inst)
    rows = []
    for coeffs, form in table_rows:
        scaled = {col[k]: q * scale for k, q in coeffs.items() if q}
        # annotation multiplier relative to the raw expansion of the form
        exp, _ = expand_annotation(form, keys)
        term_keys = [keys.of_term(t) for t in terms]
        target = _keyed(scaled, term_keys)
        k0 = next(iter(exp))
        mult = target[k0] / exp[k0]
        rows.append(ProofRow(scaled, format_annotation(mult, form)))
    fin = {col[k]: q * scale for k, q in final.items() if q}
    meta = {"instance": instance_to_json(inst)}
    return ProofTable(terms, rows, fin, meta)


# ---------------------------------------------------------------------------
# text rendering


def _expr(acc: Mapping, names: Mapping) -> str:
    order = {"M": 0, "R": 1}
    items = sorted(acc.items(), key=lambda kv: (order.get(kv[0], 2) if isinstance(kv[0], str) and kv[0] != "F" else 3 if kv[0] == "F" else 2, str(names[kv[0]])))
    if not items:
        return "0"
    out = ""
    for k, v in items:
        mag = abs(v)
        coef = "" if mag == 1 else format_rational(mag)
        piece = f"{coef}{names[k]}"
        if not out:
            out = piece if v > 0 else "-" + piece
        else:
            out += ("+" if v > 0 else "-") + piece
    return out


def render_text(table: ProofTable, inst: ProblemInstance | None = None) -> str:
    """A chain of inequalities applying the rows in order."""
    report = verify(table, inst)
    if not report.ok:
        raise ProofTableError(f"refusing to render an unverified table: {report}")
    if not table.rows:
        return ""
    inst = inst or instance_from_json(table.meta["instance"])
    keys = _Keys(inst)
    term_keys = [keys.of_term(t) for t in table.terms]
    names: dict = {}
    for t, k in zip(table.terms, term_keys):
        names.setdefault(k, t.label())
    z1 = keys.of_vars([Cache(1)])
    names.setdefault("M", "M")
    final = _keyed(table.final, term_keys)
    state = {k: v for k, v in final.items() if k != "F"}
    lhs = dict(state)
    if z1 in lhs and lhs[z1] > 0:
        _add(lhs, "M", lhs.pop(z1))
    lines = []
    first = _expr(lhs, names)
    pad = " " * len(first)
    for i, r in enumerate(table.rows):
        for k, v in _keyed(r.coeffs, term_keys).items():
            _add(state, k, -v)
        lead = first if i == 0 else pad
        lines.append(f"{lead} ≥ {_expr(state, names)}   ({i + 1})")
    return "\n".join(lines)
