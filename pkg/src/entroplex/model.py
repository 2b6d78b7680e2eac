"""Problem instances, random variables, demands and their text names."""

from __future__ import annotations

import itertools
import os
import re
from dataclasses import dataclass, field
from math import comb
from typing import Iterable, Iterator, Sequence, Union

DEFAULT_MAX_UNIVERSE = 16
_CAP_ENV = "ENTROPLEX_MAX_UNIVERSE"


class CapacityError(ValueError):
    """Raised when an instance would require an enumeration beyond the configured cap."""


def default_max_universe() -> int:
    raw = os.environ.get(_CAP_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_MAX_UNIVERSE
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"{_CAP_ENV} must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ValueError(f"{_CAP_ENV} must be positive, got {value}")
    return value


# ---------------------------------------------------------------------------
# random variables


@dataclass(frozen=True, order=True)
class File:
    n: int

    def sort_key(self) -> tuple:
        return (0, (self.n,))


@dataclass(frozen=True, order=True)
class Cache:
    k: int

    def sort_key(self) -> tuple:
        return (1, (self.k,))


@dataclass(frozen=True, order=True)
class Delivery:
    d: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "d", tuple(int(x) for x in self.d))

    def sort_key(self) -> tuple:
        return (2, self.d)


RandomVar = Union[File, Cache, Delivery]


def var_key(rv: RandomVar) -> tuple:
    """Total order on random variables: files, then caches, then deliveries."""
    return rv.sort_key()


def format_var(rv: RandomVar) -> str:
    if isinstance(rv, File):
        return f"W{rv.n}"
    if isinstance(rv, Cache):
        return f"Z{rv.k}"
    if isinstance(rv, Delivery):
        return "X" + "".join(str(x) for x in rv.d)
    raise TypeError(f"not a random variable: {rv!r}")


_NAME = re.compile(r"^([WZX])([1-9]+)$")


def parse_var(name: str, inst: "ProblemInstance | None" = None) -> RandomVar:
    """Parse ``W<n>``, ``Z<k>`` or ``X<d1..dK>`` (single-digit indices)."""
    text = name.strip()
    m = _NAME.match(text)
    if not m:
        raise ValueError(f"malformed variable name {name!r}")
    tag, digits = m.groups()
    if tag in "WZ" and len(digits) != 1:
        raise ValueError(f"malformed variable name {name!r}: index must be one digit")
    if tag == "W":
        rv: RandomVar = File(int(digits))
    elif tag == "Z":
        rv = Cache(int(digits))
    else:
        rv = Delivery(tuple(int(c) for c in digits))
    if inst is not None:
        inst.check_var(rv)
    return rv


def parse_vars(text: str | Iterable[str], inst: "ProblemInstance | None" = None) -> list[RandomVar]:
    if isinstance(text, str):
        parts = [p for p in re.split(r"[,\s]+", text) if p]
    else:
        parts = list(text)
    return [parse_var(p, inst) for p in parts]


# ---------------------------------------------------------------------------
# demands


def check_demand(d: Sequence[int], n_files: int, n_users: int) -> tuple[int, ...]:
    d = tuple(int(x) for x in d)
    if len(d) != n_users:
        raise ValueError(f"demand {d} has length {len(d)}, expected {n_users}")
    for x in d:
        if not 1 <= x <= n_files:
            raise ValueError(f"demand {d} requests file {x} outside 1..{n_files}")
    return d


def demand_type_of(d: Sequence[int], n_files: int) -> tuple[int, ...]:
    counts = [0] * n_files
    for x in d:
        if not 1 <= x <= n_files:
            raise ValueError(f"file index {x} outside 1..{n_files}")
        counts[x - 1] += 1
    return tuple(sorted(counts, reverse=True))


def _partitions(total: int, parts: int, cap: int) -> Iterator[tuple[int, ...]]:
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(min(total, cap), -1, -1):
        if first * parts < total:
            break
        for rest in _partitions(total - first, parts - 1, first):
            yield (first,) + rest


def demand_types(n_files: int, n_users: int) -> list[tuple[int, ...]]:
    """Non-increasing N-part compositions of K, lexicographically descending."""
    if n_files < 1 or n_users < 1:
        raise ValueError("N and K must be positive")
    return sorted(_partitions(n_users, n_files, n_users), reverse=True)


def check_demand_type(t: Sequence[int], n_files: int, n_users: int) -> tuple[int, ...]:
    t = tuple(int(x) for x in t)
    if len(t) < n_files:
        t = t + (0,) * (n_files - len(t))
    if t not in demand_types(n_files, n_users):
        raise ValueError(f"{t} is not a demand type for N={n_files}, K={n_users}")
    return t


def elemental_count(n: int) -> int:
    if n < 2:
        raise ValueError("elemental_count needs n >= 2")
    return n + comb(n, 2) * 2 ** (n - 2)


# ---------------------------------------------------------------------------
# demand filters


@dataclass(frozen=True)
class AllDemands:
    def admits(self, d: tuple[int, ...], n_files: int) -> bool:
        return True

    def describe(self) -> str:
        return "all"


@dataclass(frozen=True)
class OfType:
    t: tuple[int, ...]

    def admits(self, d: tuple[int, ...], n_files: int) -> bool:
        return demand_type_of(d, n_files) == self.t

    def describe(self) -> str:
        return "type " + ",".join(map(str, self.t))


@dataclass(frozen=True)
class Explicit:
    demands: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        ds = tuple(tuple(int(x) for x in d) for d in self.demands)
        if not ds:
            raise ValueError("explicit demand list must be nonempty")
        if len(set(ds)) != len(ds):
            raise ValueError("explicit demand list has duplicates")
        object.__setattr__(self, "demands", ds)

    def admits(self, d: tuple[int, ...], n_files: int) -> bool:
        return d in self.demands

    def describe(self) -> str:
        return "demands " + ",".join("X" + "".join(map(str, d)) for d in self.demands)


DemandFilter = Union[AllDemands, OfType, Explicit]


# ---------------------------------------------------------------------------
# instances


@dataclass(frozen=True)
class ProblemInstance:
    n_files: int
    n_users: int
    demand_filter: DemandFilter = field(default_factory=AllDemands)
    restriction: tuple[Delivery, ...] | None = None
    max_universe: int | None = None

    def __post_init__(self) -> None:
        if self.n_files < 1 or self.n_users < 1:
            raise ValueError("N and K must be positive")
        flt = self.demand_filter
        if isinstance(flt, OfType):
            object.__setattr__(
                self, "demand_filter", OfType(check_demand_type(flt.t, self.n_files, self.n_users))
            )
        elif isinstance(flt, Explicit):
            for d in flt.demands:
                check_demand(d, self.n_files, self.n_users)
        if self.restriction is not None:
            rs = []
            for rv in self.restriction:
                if isinstance(rv, str):
                    rv = parse_var(rv)
                if not isinstance(rv, Delivery):
                    raise ValueError(f"restriction may only list deliveries, got {format_var(rv)}")
                check_demand(rv.d, self.n_files, self.n_users)
                rs.append(rv)
            if len(set(rs)) != len(rs):
                raise ValueError("restriction has duplicates")
            object.__setattr__(self, "restriction", tuple(sorted(rs, key=var_key)))

    @property
    def cap(self) -> int:
        return self.max_universe if self.max_universe is not None else default_max_universe()

    @property
    def restricted(self) -> bool:
        """True when some delivery variable of the full system is left out."""
        return len(self.universe_unchecked()) != self.n_files + self.n_users + self.n_files**self.n_users

    def all_demands(self) -> Iterator[tuple[int, ...]]:
        return itertools.product(range(1, self.n_files + 1), repeat=self.n_users)

    def admitted_demands(self) -> list[tuple[int, ...]]:
        return [d for d in self.all_demands() if self.demand_filter.admits(d, self.n_files)]

    def check_var(self, rv: RandomVar) -> None:
        if isinstance(rv, File):
            ok = 1 <= rv.n <= self.n_files
        elif isinstance(rv, Cache):
            ok = 1 <= rv.k <= self.n_users
        else:
            ok = len(rv.d) == self.n_users and all(1 <= x <= self.n_files for x in rv.d)
        if not ok:
            raise ValueError(f"{format_var(rv)} is out of range for N={self.n_files}, K={self.n_users}")

    def universe_unchecked(self) -> list[RandomVar]:
        ws: list[RandomVar] = [File(n) for n in range(1, self.n_files + 1)]
        zs: list[RandomVar] = [Cache(k) for k in range(1, self.n_users + 1)]
        if self.restriction is not None:
            xs = [x for x in self.restriction if self.demand_filter.admits(x.d, self.n_files)]
        else:
            xs = [Delivery(d) for d in self.admitted_demands()]
        return ws + zs + list(xs)

    def with_cap(self, cap: int | None) -> "ProblemInstance":
        return ProblemInstance(self.n_files, self.n_users, self.demand_filter, self.restriction, cap)

    def describe(self) -> str:
        parts = [f"N={self.n_files}", f"K={self.n_users}", self.demand_filter.describe()]
        if self.restriction is not None:
            parts.append("restricted to " + ",".join(format_var(x) for x in self.restriction))
        return " ".join(parts)


def universe(inst: ProblemInstance) -> list[RandomVar]:
    """All files and caches plus the selected deliveries, in canonical order."""
    members = inst.universe_unchecked()
    if len(members) > inst.cap:
        raise CapacityError(
            f"universe has {len(members)} random variables, above the cap of {inst.cap} "
            f"(raise it with max_universe or {_CAP_ENV})"
        )
    return members


DIRECT_SOLVE_LIMIT = 18


def type_representative(t: Sequence[int]) -> tuple[int, ...]:
    """The sorted demand of a type: the first t[0] users ask for file 1, and so on."""
    d: list[int] = []
    for n, c in enumerate(t, start=1):
        d.extend([n] * c)
    return tuple(d)


def shift_relaxation(inst: ProblemInstance) -> ProblemInstance:
    """Keep only the cyclic shifts of each admitted type's sorted demand.

    Dropping deliveries loses constraints and never adds any, so any bound for
    the returned instance also holds for ``inst``.
    """
    keep: list[Delivery] = []
    for t in demand_types(inst.n_files, inst.n_users):
        d = type_representative(t)
        for s in range(len(d)):
            rv = Delivery(d[s:] + d[:s])
            if rv not in keep and inst.demand_filter.admits(rv.d, inst.n_files):
                if inst.restriction is None or rv in inst.restriction:
                    keep.append(rv)
    if not keep:
        raise ValueError(f"no delivery of {inst.describe()} survives the relaxation")
    return ProblemInstance(inst.n_files, inst.n_users, inst.demand_filter, tuple(keep), inst.max_universe)


# Delivery subsets whose bounds are known to match the larger system they come from.
KNOWN_RESTRICTIONS: dict[tuple[int, int, tuple[int, ...] | None], tuple[str, ...]] = {
    (2, 4, None): ("X1112", "X1122"),
    (3, 3, (3, 0, 0)): ("X111", "X222", "X333"),
    (3, 3, (2, 1, 0)): ("X112", "X122", "X233", "X212", "X133", "X211", "X311"),
    (3, 3, (1, 1, 1)): ("X123", "X132", "X213"),
}


def suggested_relaxation(inst: ProblemInstance) -> ProblemInstance:
    """A registered restriction for ``inst`` if there is one, else ``shift_relaxation``."""
    t = inst.demand_filter.t if isinstance(inst.demand_filter, OfType) else None
    known = KNOWN_RESTRICTIONS.get((inst.n_files, inst.n_users, t))
    if known is not None and inst.restriction is None and not isinstance(inst.demand_filter, Explicit):
        return ProblemInstance(inst.n_files, inst.n_users, inst.demand_filter, known, inst.max_universe)
    return shift_relaxation(inst)


def is_relaxation(relaxed: ProblemInstance, inst: ProblemInstance) -> bool:
    """Same files and users, and a universe inside that of ``inst``."""
    return (relaxed.n_files, relaxed.n_users) == (inst.n_files, inst.n_users) and set(
        relaxed.universe_unchecked()
    ) <= set(inst.universe_unchecked())


def format_rational(q) -> str:
    from fractions import Fraction

    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def parse_rational(text: str):
    from fractions import Fraction

    s = str(text).strip().replace("−", "-")
    if not re.fullmatch(r"[+-]?\d+(/\d+)?", s):
        raise ValueError(f"not a rational: {text!r}")
    q = Fraction(s)
    return q
