import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import naive_one_step, small_sca
from stochca.constructions import blank_noise_pair, constant_ca, identity_ca, noise_ca, shift_ca, xor_ca
from stochca.core import Alphabet, AlphabetMismatch, Sca, ScaError, Word, iter_dist, iter_dist_bruteforce, one_step_dist
from stochca.equivalence import (
    EQUAL,
    UNEQUAL,
    Coupling,
    build_coupling,
    lift_to_noise,
    nondet_equal,
    one_step_equal,
    product_coupling,
    uniformity_check,
    verify_coupling,
)

A, B = blank_noise_pair()
BIASED = Sca(Alphabet(2), Alphabet(3), (0,), (0,), [0, 0, 1, 0, 0, 1], name="biased-noise")


def test_reflexive_and_blank_noise():
    assert one_step_equal(A, A, 2).status == EQUAL
    v = one_step_equal(A, B, 3)
    assert v.equal and v.bound[0] == 3


def test_flipped_entry_gives_one_cell_witness():
    bent = B.with_table_entry((1,), (0,), 0)
    v = one_step_equal(A, bent, 3)
    assert v.status == UNEQUAL
    w = v.witness
    assert len(w.word) == 1 and w.left != w.right
    # the witness is recomputable from the inputs
    assert one_step_dist(A, w.context, w.window)[w.word] == w.left
    assert one_step_dist(bent, w.context, w.window)[w.word] == w.right


def test_supports_versus_weights():
    n = noise_ca()
    assert nondet_equal(n, BIASED, 3).equal
    v = one_step_equal(n, BIASED, 3)
    assert not v.equal and {v.witness.left, v.witness.right} == {Fraction(1, 2), Fraction(2, 3)}
    assert not nondet_equal(n, identity_ca(random=2), 1).equal


def test_alphabet_mismatch():
    with pytest.raises(AlphabetMismatch):
        one_step_equal(noise_ca(2), noise_ca(3), 1)


def test_coupling_examples():
    ctx = Word(Alphabet(2), (0, 1, 1), -1)
    g = build_coupling(A, A, ctx, 1)
    assert all(v1 == v2 and w == Fraction(1, 8) for (v1, v2), w in g.items())
    assert verify_coupling(A, A, ctx, g)
    for c in (0, 1):
        ctx = Word(Alphabet(2), (c,), 0)
        g = build_coupling(A, B, ctx, 0)
        assert {(v1[0], v2[0]) for (v1, v2) in g.weights} == {((y + c) % 2, y) for y in (0, 1)}
        assert set(g.weights.values()) == {Fraction(1, 2)}
    prod = product_coupling(A, B, 0)
    assert not verify_coupling(A, B, Word(Alphabet(2), (0,), 0), prod)
    # a valid coupling for context 0 does not transfer to context 1
    g0 = build_coupling(A, B, Word(Alphabet(2), (0,), 0), 0)
    assert not verify_coupling(A, B, Word(Alphabet(2), (1,), 0), g0)


def test_coupling_json_roundtrip():
    g = build_coupling(A, B, Word(Alphabet(2), (1, 0, 1), -1), 1)
    back = Coupling.from_json(g.to_json(), A.random, B.random)
    assert back == g


def test_coupling_width_check():
    g = build_coupling(A, B, Word(Alphabet(2), (0,), 0), 0)
    p = Sca.from_function(Alphabet(2), Alphabet(2), (-1, 0), (0,), lambda qs, rs: rs[0])
    with pytest.raises(ScaError):
        verify_coupling(p, B, Word(Alphabet(2), (0, 0, 0), -1), g)


def _window_dist(a, ctx, n):
    return one_step_dist(a, ctx, (-n, 2 * n + 1))


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_coupling_theorem_bounded(data):
    """build succeeds iff the centered window laws agree; accepted couplings imply equal laws."""
    a = data.draw(small_sca(max_q=2, max_r=2, rho=1))
    if data.draw(st.booleans()):
        b = a.replace(random=a.random)  # same rule, fresh object
        if a.random.size == 2 and a.r_rand:
            # swap random symbols: equal law, different explicit map
            b = Sca.from_function(a.states, a.random, a.nbr, a.rnd_nbr,
                                  lambda qs, rs: a.rule(qs, [1 - s for s in rs]))
    else:
        b = data.draw(small_sca(max_q=2, max_r=2, rho=1).filter(lambda s: s.states.size == a.states.size))
    n = data.draw(st.integers(0, 1))
    rho = max(a.radius, b.radius)
    w = 2 * (n + rho) + 1
    syms = data.draw(st.lists(st.integers(0, a.states.size - 1), min_size=w, max_size=w))
    ctx = Word(a.states, tuple(syms), -(n + rho))
    same = _window_dist(a, ctx, n) == _window_dist(b, ctx, n)
    g = build_coupling(a, b, ctx, n)
    assert isinstance(g, Coupling) == same
    if same:
        assert verify_coupling(a, b, ctx, g)
        side = a.random.size ** w
        assert all(m == Fraction(1, side) for m in g.marginal(0).values())
        assert len(g.marginal(0)) == side
        assert g.total() == 1
    else:
        assert g.witness.left != g.witness.right


def test_equal_one_step_gives_equal_iterates():
    ctx = Word(Alphabet(2), (0, 1, 1, 0, 1, 0, 0), -3)
    assert one_step_equal(A, B, 2).equal
    for t in (1, 2, 3):
        assert iter_dist(A, ctx, (0, 1), t) == iter_dist(B, ctx, (0, 1), t) == iter_dist_bruteforce(B, ctx, (0, 1), t)


# ---------------------------------------------------------------- lift and uniformity


def test_lift_examples():
    assert one_step_equal(lift_to_noise(identity_ca()), noise_ca(), 3).equal
    ok, _ = uniformity_check(lift_to_noise(shift_ca()), 4)
    assert ok
    lifted = lift_to_noise(constant_ca())
    d = one_step_dist(lifted, Word(Alphabet(2), (1, 1), 0), (0, 2))
    assert dict(d.weights) == {(0, 0): Fraction(1)}
    ok, w = uniformity_check(lifted, 2)
    assert not ok and w.word == (1,) and w.left == 0
    with pytest.raises(ScaError):
        lift_to_noise(noise_ca())


@settings(max_examples=40, deadline=None)
@given(small_sca(max_q=3, max_r=1), st.data())
def test_lift_ignores_context(a, data):
    lifted = lift_to_noise(a)
    rho = lifted.radius
    L = data.draw(st.integers(1, 2))
    n = L + 2 * rho
    c1 = Word(a.states, tuple(data.draw(st.lists(st.integers(0, a.states.size - 1), min_size=n, max_size=n))), -rho)
    c2 = Word(a.states, tuple(data.draw(st.lists(st.integers(0, a.states.size - 1), min_size=n, max_size=n))), -rho)
    d = one_step_dist(lifted, c1, (0, L))
    assert d == one_step_dist(lifted, c2, (0, L))
    assert dict(d.weights) == naive_one_step(lifted, c1, 0, L)


def test_uniformity_of_xor():
    ok, w = uniformity_check(lift_to_noise(xor_ca()), 4)
    assert ok and w is None
