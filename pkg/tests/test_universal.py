from fractions import Fraction

import numpy as np
import pytest

from stochca import rng
from stochca.constructions import identity_ca, noise_ca, xor_ca
from stochca.core import Alphabet, Sca, ScaError
from stochca.simulation import prime_factors, verify_witness
from stochca.universal import (
    Engine,
    clean_block,
    decode_config,
    encode_config,
    encode_into_universal,
    layout_for,
    pack,
    simulate_window,
    universal_pca,
    universal_verdict,
    unpack,
)

U, LAYOUT = universal_pca({2})


def literal_step(u, cells, symbols):
    n = len(cells)
    return [u.rule((cells[z - 1], cells[z], cells[(z + 1) % n]), (symbols[z],)) for z in range(n)]


def test_universal_is_a_plain_pca():
    assert U.rnd_nbr.offsets == (0,) and U.nbr.offsets == (-1, 0, 1)
    assert prime_factors(U.random.size) == {2}
    assert U.depends_on_random()
    with pytest.raises(ScaError):
        U.table
    with pytest.raises(ValueError):
        universal_pca({4})


def test_pack_roundtrip():
    v = pack([3, 0, 5], 7)
    assert unpack(v, 7, 3) == [3, 0, 5]


def test_layout():
    lay = LAYOUT(noise_ca())
    assert lay.gen.width == 1 and lay.gen.uniform
    assert lay.m == sum(w for _, w in lay.fields.values())
    with pytest.raises(ScaError):
        layout_for(Sca(Alphabet(2), Alphabet(1), (2,), (0,), [0, 1]), U)


def test_encode_decode_roundtrip():
    a = xor_ca()
    lay, i, _ = encode_into_universal(a, U)
    cells = encode_config(U, i, lay.m, [0, 1, 1])
    assert decode_config(U, i, lay.m, cells) == [0, 1, 1]


@pytest.mark.parametrize("a", [noise_ca(), xor_ca(2)], ids=["noise", "xor-R2"])
def test_engine_matches_literal_rule(a):
    lay, i, w = encode_into_universal(a, U)
    m = lay.m
    start = encode_config(U, i, m, [0, 1, 1])
    # symbol 0 everywhere: the single deterministic branch
    eng = Engine(U, np.array([start], dtype=np.int64).reshape(1, 3, m), m)
    cells = list(start)
    for t in range(lay.t_U):
        cells = literal_step(U, cells, [0] * len(cells))
        eng.step(branch=False)
        assert eng.blocks().reshape(-1).tolist() == cells, t
    # random symbols: the literal trajectory is one of the engine's branches
    eng = Engine(U, np.array([start], dtype=np.int64).reshape(1, 3, m), m)
    eng.run(lay.t_U)
    cells = list(start)
    for t in range(lay.t_U):
        cells = literal_step(U, cells, rng.row(5, t, len(cells), U.random.size))
    rows = {tuple(r) for r in eng.blocks().reshape(len(eng.cells), -1).tolist()}
    assert tuple(cells) in rows
    assert sum(eng.mult) == U.base**eng.k


def test_clean_blocks_are_canonical_after_a_cycle():
    a = noise_ca()
    _, counts, _ = simulate_window(a, U, encode_into_universal(a, U)[2], 2)
    assert all(None not in c for c in counts)


def test_padding_invariance():
    a = xor_ca(2)
    lay, i, _ = encode_into_universal(a, U)
    m = lay.m
    blocks = [unpack(img, U.states.size, m) for img in i.mapping]
    for ctx in ([0, 1, 0], [1, 1, 0]):
        results = []
        for pad in (0, 1):
            word = [0] * pad + ctx + [0] * pad
            eng = Engine(U, np.array([[blocks[q] for q in word]], dtype=np.int64), m)
            eng.run(lay.t_U)
            out = {}
            for row, mult in zip(eng.blocks(), eng.mult):
                key = tuple(row[pad + 1].tolist())
                out[key] = out.get(key, 0) + mult
            results.append({k: Fraction(v, U.base**eng.k) for k, v in out.items()})
        assert results[0] == results[1]


def test_identity_decodes_to_identity():
    a = identity_ca()
    w = encode_into_universal(a, U)[2]
    ctxs, counts, denom = simulate_window(a, U, w, 1)
    for ctx, c in zip(ctxs, counts):
        assert c == {(ctx[1],): denom}


def test_s_and_n_witnesses_for_binary_noise():
    a = noise_ca()
    w = encode_into_universal(a, U)[2]
    assert verify_witness(a, U, "S-i", w) and verify_witness(a, U, "N-i", w)


def test_ternary_noise_is_only_n_simulated():
    a = Sca(Alphabet(2), Alphabet(3), (0,), (0,), [1, 0, 0, 1, 0, 0])
    w = encode_into_universal(a, U, L_max=1)[2]
    assert universal_verdict(a, U, w, "N", 1).equal
    v = universal_verdict(a, U, w, "S", 1)
    assert not v.equal and v.witness.left != v.witness.right


def test_wrong_prime_set():
    with pytest.raises(ValueError):
        encode_into_universal(noise_ca(), U, {3})
