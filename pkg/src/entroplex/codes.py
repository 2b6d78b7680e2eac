"""Linear caching codes over prime fields: constructions, decoding checks, rank entropies."""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .model import Cache, Delivery, File, RandomVar, demand_type_of, format_rational, format_var
from .symmetry import GroupElement, act, group_elements


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    f = 2
    while f * f <= p:
        if p % f == 0:
            return False
        f += 1
    return True


@dataclass(frozen=True)
class PrimeField:
    p: int

    def __post_init__(self) -> None:
        if not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")


def rank_mod(mat: np.ndarray, p: int) -> int:
    """Rank of an integer matrix over GF(p) by Gaussian elimination."""
    a = np.array(mat, dtype=np.int64) % p
    if a.size == 0:
        return 0
    rows, cols = a.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(a[r:, c])[0]
        if len(nz) == 0:
            continue
        piv = r + nz[0]
        if piv != r:
            a[[r, piv]] = a[[piv, r]]
        inv = pow(int(a[r, c]), p - 2, p)
        a[r] = (a[r] * inv) % p
        others = np.nonzero(a[:, c])[0]
        others = others[others != r]
        if len(others):
            a[others] = (a[others] - np.outer(a[others, c], a[r])) % p
        r += 1
    return r


@dataclass(frozen=True)
class CodePoint:
    M: Fraction
    R: Fraction


@dataclass
class LinearCode:
    """Placement matrices per user and delivery matrices per demand, columns ``(file, segment)``.

    Column ``(n-1)*s + (i-1)`` holds segment ``i`` of file ``n``.
    """

    name: str
    n_files: int
    n_users: int
    s: int
    field: PrimeField
    placement: list
    delivery: dict
    labels: list | None = None

    def __post_init__(self) -> None:
        width = self.n_files * self.s
        self.placement = [np.array(m, dtype=np.int64).reshape(-1, width) % self.field.p for m in self.placement]
        self.delivery = {
            tuple(d): np.array(m, dtype=np.int64).reshape(-1, width) % self.field.p for d, m in self.delivery.items()
        }
        if len(self.placement) != self.n_users:
            raise ValueError("one placement matrix per user is required")

    @property
    def width(self) -> int:
        return self.n_files * self.s

    @property
    def demands(self) -> list[tuple[int, ...]]:
        return sorted(self.delivery)

    def point(self) -> CodePoint:
        M = max(Fraction(m.shape[0], self.s) for m in self.placement)
        R = max((Fraction(m.shape[0], self.s) for m in self.delivery.values()), default=Fraction(0))
        return CodePoint(M, R)

    def file_block(self, n: int) -> np.ndarray:
        out = np.zeros((self.s, self.width), dtype=np.int64)
        for i in range(self.s):
            out[i, (n - 1) * self.s + i] = 1
        return out

    def matrix(self, rv: RandomVar) -> np.ndarray:
        if isinstance(rv, File):
            return self.file_block(rv.n)
        if isinstance(rv, Cache):
            return self.placement[rv.k - 1]
        if rv.d not in self.delivery:
            raise KeyError(f"no delivery defined for {format_var(rv)}")
        return self.delivery[rv.d]

    def stacked(self, rvs: Iterable[RandomVar]) -> np.ndarray:
        mats = [self.matrix(rv) for rv in rvs]
        if not mats:
            return np.zeros((0, self.width), dtype=np.int64)
        return np.vstack(mats)

    def to_json(self) -> str:
        doc = {
            "name": self.name,
            "n_files": self.n_files,
            "n_users": self.n_users,
            "segments": self.s,
            "modulus": self.field.p,
            "placement": [m.tolist() for m in self.placement],
            "delivery": {"X" + "".join(map(str, d)): self.delivery[d].tolist() for d in self.demands},
        }
        return json.dumps(doc, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "LinearCode":
        doc = json.loads(text)
        deliv = {tuple(int(c) for c in k[1:]): v for k, v in doc["delivery"].items()}
        return cls(doc["name"], doc["n_files"], doc["n_users"], doc["segments"], PrimeField(doc["modulus"]), doc["placement"], deliv)


# ---------------------------------------------------------------------------
# decoding


@dataclass
class CodeReport:
    code: str
    point: CodePoint
    checked: int
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def as_json(self) -> dict:
        return {
            "code": self.code,
            "M": format_rational(self.point.M),
            "R": format_rational(self.point.R),
            "checked": self.checked,
            "failures": [{"demand": "X" + "".join(map(str, d)), "user": k} for d, k in self.failures],
            "ok": self.ok,
        }


def decodable(code: LinearCode, d: Sequence[int], k: int) -> bool:
    p = code.field.p
    base = np.vstack([code.placement[k - 1], code.delivery[tuple(d)]])
    r0 = rank_mod(base, p)
    return rank_mod(np.vstack([base, code.file_block(d[k - 1])]), p) == r0


def verify_code(code: LinearCode, demands: str | Sequence[Sequence[int]] = "all") -> CodeReport:
    if isinstance(demands, str):
        if demands != "all":
            raise ValueError("demands must be 'all' or a list")
        ds = code.demands
    else:
        ds = [tuple(d) for d in demands]
    failures = []
    for d in ds:
        if d not in code.delivery:
            failures.extend((d, k) for k in range(1, code.n_users + 1))
            continue
        for k in range(1, code.n_users + 1):
            if not decodable(code, d, k):
                failures.append((d, k))
    return CodeReport(code.name, code.point(), len(ds), failures)


def brute_force_decodable(code: LinearCode, d: Sequence[int], k: int, limit: int = 1 << 20) -> bool:
    """Functional determinism by enumerating every file content over the field."""
    p = code.field.p
    n = code.width
    if p**n > limit:
        raise ValueError(f"search space {p}^{n} exceeds {limit}")
    msgs = np.array(list(itertools.product(range(p), repeat=n)), dtype=np.int64)
    obs = msgs @ np.vstack([code.placement[k - 1], code.delivery[tuple(d)]]).T % p
    want = msgs[:, (d[k - 1] - 1) * code.s : d[k - 1] * code.s]
    weights = p ** np.arange(obs.shape[1], dtype=np.int64) if obs.shape[1] else np.zeros(0, dtype=np.int64)
    okey = obs @ weights if obs.shape[1] else np.zeros(len(msgs), dtype=np.int64)
    wkey = want @ (p ** np.arange(code.s, dtype=np.int64))
    pairs = np.unique(np.stack([okey, wkey], axis=1), axis=0)
    return len(np.unique(pairs[:, 0])) == len(pairs)


# ---------------------------------------------------------------------------
# entropies


def entropy(code: LinearCode, rvs: Iterable[RandomVar]) -> Fraction:
    return Fraction(rank_mod(code.stacked(list(rvs)), code.field.p), code.s)


def entropy_vector(code: LinearCode, sets: Iterable) -> dict:
    """Rank entropy (file-size units) of each set of random variables."""
    out = {}
    for s in sets:
        out[s] = entropy(code, list(s))
    return out


def symmetrized_entropy(code: LinearCode, rvs: Sequence[RandomVar]) -> Fraction:
    """Entropy of the space-shared code that runs every relabelled copy of ``code``."""
    total = Fraction(0)
    count = 0
    for g in group_elements(code.n_files, code.n_users):
        total += entropy(code, [act(g, rv) for rv in rvs])
        count += 1
    return total / count


# ---------------------------------------------------------------------------
# symmetry extension of representative deliveries


def _column_map(code: LinearCode, g: GroupElement) -> list[int] | None:
    """Permutation of columns induced by ``g`` through the segment labels."""
    if code.labels is None:
        return None
    where = {lab: i for i, lab in enumerate(code.labels)}
    out = []
    for n in range(1, code.n_files + 1):
        for i, lab in enumerate(code.labels):
            img = frozenset(g.user_perm[u - 1] for u in lab)
            j = where.get(img)
            if j is None:
                return None
            out.append((g.file_perm[n - 1] - 1) * code.s + j)
    return out


def _apply_columns(mat: np.ndarray, cmap: list[int]) -> np.ndarray:
    out = np.zeros_like(mat)
    out[:, cmap] = mat
    return out


def _same_rowspace(a: np.ndarray, b: np.ndarray, p: int) -> bool:
    ra, rb = rank_mod(a, p), rank_mod(b, p)
    return ra == rb == rank_mod(np.vstack([a, b]), p)


def _symmetries(code: LinearCode) -> list[tuple[GroupElement, list[int]]]:
    out = []
    for g in group_elements(code.n_files, code.n_users):
        cmap = _column_map(code, g)
        if cmap is None:
            continue
        good = True
        for k in range(1, code.n_users + 1):
            moved = _apply_columns(code.placement[k - 1], cmap)
            if not _same_rowspace(moved, code.placement[g.user_perm[k - 1] - 1], code.field.p):
                good = False
                break
        if good:
            out.append((g, cmap))
    return out


def extend_by_symmetry(code: LinearCode, demands: Iterable[Sequence[int]]) -> LinearCode:
    """Fill deliveries for ``demands`` by relabelling the representative deliveries."""
    syms = _symmetries(code)
    reps = dict(code.delivery)
    out = dict(reps)
    for d in demands:
        d = tuple(d)
        if d in out:
            continue
        for rep, mat in reps.items():
            hit = None
            for g, cmap in syms:
                if act(g, Delivery(rep)).d == d:
                    hit = cmap
                    break
            if hit is not None:
                out[d] = _apply_columns(mat, hit)
                break
        else:
            raise ValueError(f"no symmetry maps a representative demand onto {d}")
    return LinearCode(code.name, code.n_files, code.n_users, code.s, code.field, code.placement, out, code.labels)


# ---------------------------------------------------------------------------
# constructions


_TOKEN = re.compile(r"([+-]?)(\d*)([A-Z])(\d+)")


def _symbols(text: str, s: int, p: int, n_files: int = 2) -> list[int]:
    """Parse a combination such as ``A1+2A5-B2`` into a coefficient row."""
    row = [0] * (n_files * s)
    t = text.replace(" ", "").replace("−", "-")
    for sign, coef, letter, idx in _TOKEN.findall(t):
        c = int(coef) if coef else 1
        if sign == "-":
            c = -c
        col = (ord(letter) - ord("A")) * s + int(idx) - 1
        row[col] = (row[col] + c) % p
    return row





def _rows(items: Sequence[str], s: int, p: int) -> list[list[int]]:
    return [_symbols(x, s, p) for x in items]


def man_scheme(n_files: int, n_users: int, t: int, p: int = 2) -> LinearCode:
    N, K = n_files, n_users
    if not 0 <= t <= K:
        raise ValueError(f"t={t} outside 0..{K}")
    subsets = list(itertools.combinations(range(1, K + 1), t))
    s = len(subsets)
    pos = {T: i for i, T in enumerate(subsets)}

    def col(n: int, T: tuple) -> int:
        return (n - 1) * s + pos[T]

    placement = []
    for k in range(1, K + 1):
        rows = []
        for n in range(1, N + 1):
            for T in subsets:
                if k in T:
                    r = [0] * (N * s)
                    r[col(n, T)] = 1
                    rows.append(r)
        placement.append(np.array(rows, dtype=np.int64).reshape(-1, N * s))
    delivery = {}
    for d in itertools.product(range(1, N + 1), repeat=K):
        rows = []
        for S in itertools.combinations(range(1, K + 1), t + 1):
            r = [0] * (N * s)
            for k in S:
                T = tuple(u for u in S if u != k)
                r[col(d[k - 1], T)] = (r[col(d[k - 1], T)] + 1) % p
            rows.append(r)
        delivery[d] = np.array(rows, dtype=np.int64).reshape(-1, N * s)
    return LinearCode(f"man({N},{K},{t})", N, K, s, PrimeField(p), placement, delivery, [frozenset(T) for T in subsets])


def man_uncoded(n_files: int, n_users: int, t: int, p: int = 2) -> LinearCode:
    """Every user caches the first ``t`` of ``K`` segments of each file; the rest is broadcast."""
    N, K = n_files, n_users
    if not 0 <= t <= K:
        raise ValueError(f"t={t} outside 0..{K}")
    s = K
    cached = [(n - 1) * s + i for n in range(1, N + 1) for i in range(t)]
    rest = [(n - 1) * s + i for n in range(1, N + 1) for i in range(t, s)]
    eye = np.eye(N * s, dtype=np.int64)
    placement = [eye[cached] for _ in range(K)]
    delivery = {d: eye[rest] for d in itertools.product(range(1, N + 1), repeat=K)}
    return LinearCode(f"uncoded({N},{K},{t})", N, K, s, PrimeField(p), placement, delivery)


_PAIR_LABELS = [frozenset(x) for x in itertools.combinations(range(1, 5), 2)]


def _table2() -> LinearCode:
    p, s = 5, 6
    segs = [[1, 2, 3], [1, 4, 5], [2, 4, 6], [3, 5, 6]]
    placement = []
    for a, b, c in segs:
        rows = [f"A{a}+B{a}", f"A{b}+B{b}", f"A{c}+B{c}", f"A{a}+A{b}+A{c}+2B{a}+2B{b}+2B{c}"]
        placement.append(_rows(rows, s, p))
    delivery = {
        (1, 1, 1, 2): _rows(["B1", "B2", "B4", "A3+2A5+3A6", "A3+3A5+4A6", "A1+A2+A4"], s, p),
        (1, 1, 2, 2): _rows(["B1", "A6", "A2+2A4", "A3+2A5", "B2+2B3", "B4+2B5"], s, p),
        (1, 1, 1, 1): _rows([f"A{i}" for i in range(1, 7)], s, p),
    }
    code = LinearCode("table2", 2, 4, s, PrimeField(p), placement, delivery, _PAIR_LABELS)
    return extend_by_symmetry(code, itertools.product((1, 2), repeat=4))


def _type_demands(t: tuple[int, ...]) -> list[tuple[int, ...]]:
    return [d for d in itertools.product((1, 2), repeat=4) if demand_type_of(d, 2) == t]


def _table16() -> LinearCode:
    p, s = 2, 6
    segs = [[1, 2, 3], [1, 4, 5], [2, 4, 6], [3, 5, 6]]
    placement = [_rows([f"A{i}+B{i}" for i in trio], s, p) for trio in segs]
    delivery = {(1, 1, 1, 2): _rows(["A3", "A5", "A6", "B1", "B2", "B4", "A1+A2+A4"], s, p)}
    code = LinearCode("table16", 2, 4, s, PrimeField(p), placement, delivery, _PAIR_LABELS)
    return extend_by_symmetry(code, _type_demands((3, 1)))


def _table17() -> LinearCode:
    p, s = 2, 3
    placement = _rows_each(["A1+B1"], ["A2+B2"], ["A3+B3"], ["A1+A2+A3+B1+B2+B3"], s=s, p=p)
    delivery = {(1, 1, 2, 2): _rows(["B1", "B2", "A3", "A1+A2+A3"], s, p)}
    labels = [frozenset({1}), frozenset({2}), frozenset({3})]
    code = LinearCode("table17", 2, 4, s, PrimeField(p), placement, delivery, labels)
    return extend_by_symmetry(code, _type_demands((2, 2)))


def _table18() -> LinearCode:
    p, s = 2, 3
    placement = _rows_each(
        ["A1", "A2", "B1", "B2"],
        ["A2", "A3", "B2", "B3"],
        ["A1", "A3", "B1", "B3"],
        ["A1+A2", "A2+A3", "B1+B2", "B2+B3"],
        s=s,
        p=p,
    )
    delivery = {(1, 1, 2, 2): _rows(["A1-A3+B2"], s, p)}
    labels = [frozenset({1, 3}), frozenset({1, 2}), frozenset({2, 3})]
    code = LinearCode("table18", 2, 4, s, PrimeField(p), placement, delivery, labels)
    return extend_by_symmetry(code, _type_demands((2, 2)))


def _rows_each(*users: Sequence[str], s: int, p: int) -> list:
    return [_rows(u, s, p) for u in users]


PAPER_CODES = {"table2": _table2, "table16": _table16, "table17": _table17, "table18": _table18}

CAPTION_POINTS = {
    "table2": CodePoint(Fraction(2, 3), Fraction(1)),
    "table16": CodePoint(Fraction(1, 2), Fraction(7, 6)),
    "table17": CodePoint(Fraction(1, 3), Fraction(4, 3)),
    "table18": CodePoint(Fraction(4, 3), Fraction(1, 3)),
}

CODE_TYPES = {"table2": None, "table16": (3, 1), "table17": (2, 2), "table18": (2, 2)}


def paper_code(name: str) -> LinearCode:
    key = name.lower().replace(" ", "")
    if key not in PAPER_CODES:
        raise ValueError(f"unknown code {name!r}; choose from {sorted(PAPER_CODES)}")
    return PAPER_CODES[key]()
