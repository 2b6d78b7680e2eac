"""User/file permutation symmetry, functional-dependence closure and canonical terms."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator

import numpy as np

from .model import (
    Cache,
    CapacityError,
    Delivery,
    File,
    ProblemInstance,
    RandomVar,
    format_var,
    universe,
    var_key,
)

MAX_GROUP = 400_000
# largest universe for which whole-lattice lookup tables are built
MAX_TABLE_BITS = 24


@dataclass(frozen=True)
class GroupElement:
    """A pair (user permutation, file permutation); ``user_perm[k-1]`` is the image of user k."""

    user_perm: tuple[int, ...]
    file_perm: tuple[int, ...]

    def __post_init__(self) -> None:
        for p in (self.user_perm, self.file_perm):
            if sorted(p) != list(range(1, len(p) + 1)):
                raise ValueError(f"{p} is not a permutation")

    @classmethod
    def identity(cls, n_files: int, n_users: int) -> "GroupElement":
        return cls(tuple(range(1, n_users + 1)), tuple(range(1, n_files + 1)))

    def compose(self, other: "GroupElement") -> "GroupElement":
        """``self ∘ other``: apply ``other`` first."""
        u = tuple(self.user_perm[other.user_perm[k] - 1] for k in range(len(self.user_perm)))
        f = tuple(self.file_perm[other.file_perm[n] - 1] for n in range(len(self.file_perm)))
        return GroupElement(u, f)

    def inverse(self) -> "GroupElement":
        u = [0] * len(self.user_perm)
        for i, j in enumerate(self.user_perm):
            u[j - 1] = i + 1
        f = [0] * len(self.file_perm)
        for i, j in enumerate(self.file_perm):
            f[j - 1] = i + 1
        return GroupElement(tuple(u), tuple(f))

    def is_identity(self) -> bool:
        return self == GroupElement.identity(len(self.file_perm), len(self.user_perm))


def group_size(n_files: int, n_users: int) -> int:
    return math.factorial(n_files) * math.factorial(n_users)


def group_elements(n_files: int, n_users: int, cap: int = MAX_GROUP) -> Iterator[GroupElement]:
    size = group_size(n_files, n_users)
    if size > cap:
        raise CapacityError(f"symmetry group has {size} elements, above the cap of {cap}")
    for up in itertools.permutations(range(1, n_users + 1)):
        for fp in itertools.permutations(range(1, n_files + 1)):
            yield GroupElement(up, fp)


def act(g: GroupElement, rv: RandomVar) -> RandomVar:
    n_users, n_files = len(g.user_perm), len(g.file_perm)
    if isinstance(rv, File):
        if not 1 <= rv.n <= n_files:
            raise ValueError(f"{format_var(rv)} does not fit a group on {n_files} files")
        return File(g.file_perm[rv.n - 1])
    if isinstance(rv, Cache):
        if not 1 <= rv.k <= n_users:
            raise ValueError(f"{format_var(rv)} does not fit a group on {n_users} users")
        return Cache(g.user_perm[rv.k - 1])
    if len(rv.d) != n_users:
        raise ValueError(f"{format_var(rv)} does not fit a group on {n_users} users")
    e = [0] * n_users
    for j in range(n_users):
        # position k of the demand moves to position user_perm(k)
        e[g.user_perm[j] - 1] = g.file_perm[rv.d[j] - 1]
    return Delivery(tuple(e))


# ---------------------------------------------------------------------------
# bit-encoded universe


def _popcount(x: int) -> int:
    return bin(x).count("1")


class Space:
    """The universe of an instance, bit-encoded, with closure and canonicalization."""

    def __init__(self, inst: ProblemInstance, enforce_cap: bool = True):
        self.inst = inst
        members = universe(inst) if enforce_cap else inst.universe_unchecked()
        self.members: tuple[RandomVar, ...] = tuple(members)
        self.n = len(members)
        self.index = {rv: i for i, rv in enumerate(members)}
        self.full = (1 << self.n) - 1
        N, K = inst.n_files, inst.n_users
        self.file_mask = sum(1 << self.index[File(n)] for n in range(1, N + 1))
        self.cache_bits = [self.index[Cache(k)] for k in range(1, K + 1)]
        rules = []
        for rv in members:
            if isinstance(rv, Delivery):
                for k in range(K):
                    need = (1 << self.index[Cache(k + 1)]) | (1 << self.index[rv])
                    rules.append((need, 1 << self.index[File(rv.d[k])]))
        self.rules = rules
        self.group = list(group_elements(N, K))
        perms = []
        for g in self.group:
            perms.append(tuple(self.index.get(act(g, rv), -1) for rv in members))
        self.perms = perms
        self._canon_cache: dict[int, int] = {}

    # -- conversions
    def mask_of(self, rvs: Iterable[RandomVar]) -> int:
        m = 0
        for rv in rvs:
            try:
                m |= 1 << self.index[rv]
            except KeyError:
                raise ValueError(f"{format_var(rv)} is not in the universe of {self.inst.describe()}") from None
        return m

    def vars_of(self, mask: int) -> list[RandomVar]:
        return [self.members[i] for i in range(self.n) if mask >> i & 1]

    def varset(self, rvs: Iterable[RandomVar] | int) -> "VarSet":
        mask = rvs if isinstance(rvs, int) else self.mask_of(rvs)
        return VarSet(mask, self)

    def name(self, mask: int) -> str:
        return ",".join(format_var(rv) for rv in self.vars_of(mask))

    # -- closure and canonical form
    def closure(self, mask: int) -> int:
        while True:
            if mask & self.file_mask == self.file_mask:
                return self.full
            grown = mask
            for need, add in self.rules:
                if grown & need == need:
                    grown |= add
            if grown == mask:
                return mask
            mask = grown

    def image(self, gi: int, mask: int) -> int | None:
        p = self.perms[gi]
        out = 0
        i = 0
        m = mask
        while m:
            if m & 1:
                j = p[i]
                if j < 0:
                    return None
                out |= 1 << j
            m >>= 1
            i += 1
        return out

    def order_key(self, mask: int) -> int:
        rev = int(format(mask, f"0{self.n}b")[::-1], 2) if self.n else 0
        return (_popcount(mask) << self.n) | (self.full ^ rev)

    def canonical_mask(self, mask: int) -> int:
        c = self.closure(mask)
        hit = self._canon_cache.get(c)
        if hit is not None:
            return hit
        best, best_key = c, self.order_key(c)
        for gi in range(len(self.group)):
            im = self.image(gi, c)
            if im is None:
                continue
            im = self.closure(im)
            key = self.order_key(im)
            if key < best_key:
                best, best_key = im, key
        self._canon_cache[c] = best
        return best

    def resolve(self, rvs: Iterable[RandomVar]) -> int:
        """Mask of a group image of ``rvs`` that lies inside the universe.

        Variables of the unrestricted system that are missing from a restricted
        universe can still name an entropy when some symmetric image of the whole
        set is available.
        """
        rvs = list(rvs)
        try:
            return self.mask_of(rvs)
        except ValueError:
            pass
        best = None
        for g in self.group:
            try:
                m = self.mask_of(act(g, rv) for rv in rvs)
            except ValueError:
                continue
            c = self.canonical_mask(m)
            if best is None or self.order_key(c) < self.order_key(best):
                best = c
        if best is None:
            names = ",".join(format_var(rv) for rv in rvs)
            raise ValueError(f"no symmetric image of {{{names}}} lies in the universe of {self.inst.describe()}")
        return best

    # -- whole-lattice numpy tables
    def closure_table(self) -> np.ndarray:
        if self.n > MAX_TABLE_BITS:
            raise CapacityError(f"lattice tables limited to {MAX_TABLE_BITS} variables, got {self.n}")
        return self.closure_array(np.arange(1 << self.n, dtype=np.int64))

    def closure_array(self, masks: np.ndarray) -> np.ndarray:
        cl = np.array(masks, dtype=np.int64)
        while True:
            old = cl.copy()
            for need, add in self.rules:
                hit = (cl & need) == need
                cl[hit] |= add
            cl[(cl & self.file_mask) == self.file_mask] = self.full
            if np.array_equal(old, cl):
                return cl

    def canonical_array(self, masks: np.ndarray) -> np.ndarray:
        """Vectorized ``canonical_mask``."""
        best = self.closure_array(masks)
        base = best.copy()
        key = self.order_key_array(best)
        for gi in range(len(self.group)):
            im, bad = self.image_array(gi, base)
            im = self.closure_array(im)
            k = self.order_key_array(im)
            better = (k < key) & ~bad
            best[better] = im[better]
            key[better] = k[better]
        return best

    def popcount_array(self, masks: np.ndarray) -> np.ndarray:
        out = np.zeros_like(masks)
        for i in range(self.n):
            out += (masks >> i) & 1
        return out

    def order_key_array(self, masks: np.ndarray) -> np.ndarray:
        rev = np.zeros_like(masks)
        for i in range(self.n):
            rev |= ((masks >> i) & 1) << (self.n - 1 - i)
        return (self.popcount_array(masks) << self.n) | (self.full ^ rev)

    def image_array(self, gi: int, masks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        p = self.perms[gi]
        out = np.zeros_like(masks)
        bad = np.zeros(masks.shape, dtype=bool)
        for i in range(self.n):
            b = (masks >> i) & 1
            if p[i] < 0:
                bad |= b.astype(bool)
            else:
                out |= b << p[i]
        return out, bad


@lru_cache(maxsize=64)
def space_for(inst: ProblemInstance, enforce_cap: bool = True) -> Space:
    return Space(inst, enforce_cap)


@dataclass(frozen=True)
class VarSet:
    """A subset of an instance universe stored as a bit mask."""

    mask: int
    space: Space = field(compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.mask < 0 or self.mask > self.space.full:
            raise ValueError("mask outside the universe")

    def __eq__(self, other: object) -> bool:
        return isinstance(other, VarSet) and self.mask == other.mask and self.space.inst == other.space.inst

    def __hash__(self) -> int:
        return hash((self.mask, self.space.inst))

    def __contains__(self, rv: RandomVar) -> bool:
        i = self.space.index.get(rv)
        return i is not None and bool(self.mask >> i & 1)

    def __or__(self, other: "VarSet") -> "VarSet":
        return VarSet(self.mask | other.mask, self.space)

    def __and__(self, other: "VarSet") -> "VarSet":
        return VarSet(self.mask & other.mask, self.space)

    def __sub__(self, other: "VarSet") -> "VarSet":
        return VarSet(self.mask & ~other.mask, self.space)

    def __le__(self, other: "VarSet") -> bool:
        return self.mask & ~other.mask == 0

    def __len__(self) -> int:
        return _popcount(self.mask)

    def __iter__(self) -> Iterator[RandomVar]:
        return iter(self.space.vars_of(self.mask))

    def sort_key(self) -> int:
        return self.space.order_key(self.mask)

    def __str__(self) -> str:
        return "{" + self.space.name(self.mask) + "}"


def make_varset(inst: ProblemInstance, rvs: Iterable[RandomVar]) -> VarSet:
    return space_for(inst).varset(list(rvs))


def closure(s: VarSet, inst: ProblemInstance | None = None) -> VarSet:
    sp = s.space if inst is None else space_for(inst)
    return VarSet(sp.closure(s.mask), sp)


@dataclass(frozen=True)
class CanonicalTerm:
    rep: VarSet
    id: int | None = None


def canonical(s: VarSet, inst: ProblemInstance | None = None, table=None) -> CanonicalTerm:
    """Orbit representative of the closure of ``s``; ``id`` is filled from ``table`` when given."""
    sp = s.space if inst is None else space_for(inst)
    if s.mask == 0:
        raise ValueError("canonical form is defined for nonempty sets")
    rep = VarSet(sp.canonical_mask(s.mask), sp)
    tid = table.id_of_rep(rep.mask) if table is not None else None
    return CanonicalTerm(rep, tid)


def sorted_vars(rvs: Iterable[RandomVar]) -> list[RandomVar]:
    return sorted(set(rvs), key=var_key)
