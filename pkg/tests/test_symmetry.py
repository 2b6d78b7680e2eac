from __future__ import annotations

import random

import numpy as np
import pytest

from entroplex.lpbuild import enumerate_terms
from entroplex.model import Cache, Delivery, File, ProblemInstance, parse_vars
from entroplex.symmetry import (
    GroupElement,
    act,
    canonical,
    closure,
    group_elements,
    make_varset,
    space_for,
)

from oracles import burnside_closed_orbits, closed_orbits


def vs(inst, text):
    return make_varset(inst, parse_vars(text))


def test_act_examples():
    x = Delivery((1, 2, 3, 2))
    assert act(GroupElement((2, 3, 1, 4), (1, 2, 3)), x) == Delivery((3, 1, 2, 2))
    assert act(GroupElement((1, 2, 3, 4), (2, 3, 1)), x) == Delivery((2, 3, 1, 3))
    e = GroupElement.identity(3, 4)
    for rv in (x, File(2), Cache(4)):
        assert act(e, rv) == rv


def test_act_degree_mismatch():
    with pytest.raises(ValueError):
        act(GroupElement.identity(2, 2), Delivery((1, 2, 1)))
    with pytest.raises(ValueError):
        act(GroupElement.identity(2, 2), File(3))


@pytest.mark.parametrize("nk,size", [((3, 2), 12), ((2, 4), 48), ((1, 1), 1)])
def test_group_size(nk, size):
    elems = list(group_elements(*nk))
    assert len(elems) == size
    assert len(set(elems)) == size


def test_action_is_a_homomorphism():
    rng = random.Random(7)
    elems = list(group_elements(3, 3))
    xs = [Delivery(d) for d in [(1, 2, 3), (1, 1, 2), (3, 3, 3), (2, 1, 3)]] + [File(2), Cache(3)]
    for _ in range(200):
        g, h = rng.choice(elems), rng.choice(elems)
        rv = rng.choice(xs)
        assert act(g.compose(h), rv) == act(g, act(h, rv))
        assert act(g.inverse(), act(g, rv)) == rv


def test_closure_examples():
    inst = ProblemInstance(3, 3, max_universe=33)
    assert closure(vs(inst, "W2,Z3,X233")) == vs(inst, "W2,W3,Z3,X233")
    assert closure(make_varset(inst, [])) == make_varset(inst, [])
    inst24 = ProblemInstance(2, 4, max_universe=22)
    assert closure(vs(inst24, "W1,W2")).mask == space_for(inst24).full


def test_closure_is_idempotent_and_monotone():
    sp = space_for(ProblemInstance(3, 2))
    rng = random.Random(3)
    for _ in range(300):
        a = rng.randrange(sp.full + 1)
        b = a | rng.randrange(sp.full + 1)
        ca = sp.closure(a)
        assert sp.closure(ca) == ca
        assert ca & a == a
        assert sp.closure(b) & ca == ca


def test_canonical_examples():
    inst = ProblemInstance(3, 3, max_universe=33)
    assert canonical(vs(inst, "W2,Z3,X233")) == canonical(vs(inst, "W1,Z2,X122"))
    inst24 = ProblemInstance(2, 4, max_universe=22)
    assert canonical(vs(inst24, "Z1")) == canonical(vs(inst24, "Z4"))
    with pytest.raises(ValueError):
        canonical(make_varset(inst24, []))


@pytest.mark.parametrize("nk", [(2, 2), (2, 3), (3, 2)])
def test_term_count_matches_brute_force_orbits(nk):
    table = enumerate_terms(ProblemInstance(*nk))
    orbits = closed_orbits(*nk)
    assert len(table) == len(orbits)
    assert len(table) == burnside_closed_orbits(*nk)


def test_canonical_is_invariant_under_the_group():
    inst = ProblemInstance(3, 2)
    sp = space_for(inst)
    rng = random.Random(11)
    for _ in range(200):
        mask = rng.randrange(1, sp.full + 1)
        gi = rng.randrange(len(sp.group))
        img = sp.image(gi, mask)
        assert sp.canonical_mask(img) == sp.canonical_mask(mask)


def test_canonical_array_matches_scalar():
    for inst in (ProblemInstance(3, 2), ProblemInstance(2, 4, restriction=("X1112", "X1122"))):
        sp = space_for(inst)
        masks = np.arange(1, sp.full + 1, dtype=np.int64)
        arr = sp.canonical_array(masks)
        assert all(int(a) == sp.canonical_mask(int(m)) for m, a in zip(masks, arr))


def test_restricted_universe_uses_images_inside_it():
    inst = ProblemInstance(2, 4, restriction=("X1112", "X1122"))
    sp = space_for(inst)
    # X2221 is not in the universe, but its image X1112 is
    assert sp.resolve(parse_vars("X2221")) == sp.canonical_mask(sp.mask_of(parse_vars("X1112")))
    with pytest.raises(ValueError):
        sp.resolve(parse_vars("X1212,X2121"))
