import itertools
from fractions import Fraction

import pytest

from stochca.constructions import (
    SymbolGenMap,
    blank_noise_coupling,
    blank_noise_pair,
    noise_ca,
    parity_sca,
    pca_embed,
    rand_symbol_map,
    shift_ca,
    xor_ca,
    zoo,
)
from stochca.core import Alphabet, PeriodicConfig, Word, apply_deterministic, one_step_dist
from stochca.equivalence import one_step_equal, product_coupling, verify_coupling
from stochca.simulation import is_deterministic, is_noisy_bounded, verify_witness
from stochca.transform import RescaleParams, rescale

P = parity_sca()


def test_parity_examples():
    d = one_step_dist(P, Word.parse(P.states, "#01#", -1), (0, 2))
    assert {P.states.format(u): w for u, w in d.items()} == {"00": Fraction(1, 2), "11": Fraction(1, 2)}
    d = one_step_dist(P, Word.parse(P.states, "#010#", -1), (0, 3))
    assert {P.states.format(u) for u in d.support()} == {"000", "011", "101", "110"}
    assert set(d.weights.values()) == {Fraction(1, 4)}
    out = apply_deterministic(P, PeriodicConfig.parse(P.states, "#01"))
    assert out.same_config(PeriodicConfig.parse(P.states, "#00"))


def test_parity_cells_outside_segments():
    d = one_step_dist(P, Word.parse(P.states, "0#1", -1), (0, 1))
    assert P.states.format(d.items()[0][0]) == "#" and d.is_point_mass()


def test_blank_noise_pair():
    a, b = blank_noise_pair()
    assert one_step_equal(a, b, 3).equal
    assert is_noisy_bounded(a, 3) and is_noisy_bounded(b, 3)
    assert not is_deterministic(a) and not is_deterministic(b)


@pytest.mark.parametrize("c,pairs", [(0, {(0, 0), (1, 1)}), (1, {(1, 0), (0, 1)})])
def test_blank_noise_coupling(c, pairs):
    a, b = blank_noise_pair()
    ctx = Word(Alphabet(2), (c,), 0)
    g = blank_noise_coupling(ctx)
    assert {(v1[0], v2[0]) for v1, v2 in g.weights} == pairs
    assert set(g.weights.values()) == {Fraction(1, 2)}
    assert verify_coupling(a, b, ctx, g)
    assert not verify_coupling(a, b, ctx, product_coupling(a, b, 0))


def test_zoo_names():
    assert set(zoo()) == {"noise", "identity", "shift", "xor", "constant", "parity",
                          "blank-noise-A", "blank-noise-B"}


@pytest.mark.parametrize("name", list(zoo()))
def test_pca_embedding(name):
    a = zoo()[name]
    b, i, w = pca_embed(a)
    assert b.states.size == a.states.size * (1 + a.random.size)
    assert b.rnd_nbr.offsets == (0,)
    assert w.right_params == RescaleParams(1, 2, 0)
    assert verify_witness(a, b, "S-i", w, 3)


def test_pca_embedding_needs_the_restriction():
    a = noise_ca()
    b, _, _ = pca_embed(a)
    twice = rescale(b, RescaleParams(1, 2, 0))
    assert twice.states.size != a.states.size
    # from a pair state the two-step image can leave Q
    ctx = Word(b.states, (2, 2, 2), -1)
    d = one_step_dist(twice, ctx, (0, 1))
    assert any(u[0] >= a.states.size for u in d.support())


@pytest.mark.parametrize("target,source,width,uniform", [(2, 2, 1, True), (4, 2, 2, True), (3, 2, 2, False),
                                                         (6, 6, 1, True), (1, 2, 1, True), (5, 3, 2, False)])
def test_rand_symbol_map(target, source, width, uniform):
    g = rand_symbol_map(target, source)
    assert (g.width, g.uniform) == (width, uniform)
    dist = g.distribution()
    assert sum(dist.values()) == 1 and all(x > 0 for x in dist.values())
    # second route: count values directly
    counts = [0] * target
    for digits in itertools.product(range(source), repeat=width):
        counts[g.value(digits)] += 1
    assert [Fraction(c, source**width) for c in counts] == [dist[s] for s in range(target)]


def test_rand_symbol_map_three_from_two():
    assert rand_symbol_map(3, 2).distribution() == {0: Fraction(1, 2), 1: Fraction(1, 4), 2: Fraction(1, 4)}
    with pytest.raises(ValueError):
        rand_symbol_map(0, 2)
    assert SymbolGenMap(2, 3, 2).to_json()["uniform"] is False
