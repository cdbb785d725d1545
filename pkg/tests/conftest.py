"""Shared oracles, strategies and the acceptance summary hook."""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
from hypothesis import strategies as st

from stochca.core import Alphabet, Sca, Word

# Lines recorded by tests/test_acceptance.py, printed once at the end of the run.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# ---------------------------------------------------------------- naive oracles
# Pure Python, reading the rule only through Sca.rule, so they share no code
# path with the vectorized transfer counts.


def naive_step(a: Sca, states: dict, rand: dict, cells) -> dict:
    return {
        z: a.rule([states[z + v] for v in a.nbr], [rand[z + v] for v in a.rnd_nbr])
        for z in cells
    }


def naive_one_step(a: Sca, context: Word, z: int, length: int) -> dict:
    """Output distribution on ``[z, z+length)`` by enumerating random words."""
    states = {context.anchor + i: s for i, s in enumerate(context.symbols)}
    cells = range(z, z + length)
    offs = list(a.rnd_nbr)
    rcells = sorted({c + v for c in cells for v in offs})
    total = a.random.size ** len(rcells)
    out: dict = {}
    for word in itertools.product(range(a.random.size), repeat=len(rcells)):
        rand = dict(zip(rcells, word))
        img = naive_step(a, states, rand, cells)
        key = tuple(img[c] for c in cells)
        out[key] = out.get(key, 0) + 1
    return {k: Fraction(v, total) for k, v in out.items()}


def naive_iter(a: Sca, context: Word, z: int, length: int, t: int) -> dict:
    """``t``-step distribution by nesting the one-step oracle on the cone."""
    rho = a.radius
    if t == 0:
        return {context.slice(z, z + length - 1): Fraction(1)}
    inner = naive_iter(a, context, z - rho, length + 2 * rho, t - 1)
    out: dict = {}
    for v, p in inner.items():
        for u, q in naive_one_step(a, Word(a.states, v, z - rho), z, length).items():
            out[u] = out.get(u, Fraction(0)) + p * q
    return out


def dist_dict(d) -> dict:
    return dict(d.weights)


# ---------------------------------------------------------------- random automata


def random_sca(rng: np.random.Generator, max_q: int = 3, max_r: int = 3, rho: int = 1) -> Sca:
    Q = int(rng.integers(1, max_q + 1))
    R = int(rng.integers(1, max_r + 1))
    pool = list(range(-rho, rho + 1))

    def nbr():
        k = int(rng.integers(1, len(pool) + 1))
        return tuple(sorted(rng.choice(pool, size=k, replace=False).tolist()))

    V, Vr = nbr(), nbr()
    table = rng.integers(0, Q, size=Q ** len(V) * R ** len(Vr))
    return Sca(Alphabet(Q), Alphabet(R), V, Vr, table)


def random_context(rng: np.random.Generator, a: Sca, lo: int, hi: int) -> Word:
    return Word(a.states, tuple(rng.integers(0, a.states.size, size=hi - lo + 1).tolist()), lo)


@st.composite
def small_sca(draw, max_q: int = 3, max_r: int = 3, rho: int = 1, min_q: int = 1):
    Q = draw(st.integers(min_q, max_q))
    R = draw(st.integers(1, max_r))
    pool = list(range(-rho, rho + 1))
    V = tuple(sorted(draw(st.sets(st.sampled_from(pool), min_size=1))))
    Vr = tuple(sorted(draw(st.sets(st.sampled_from(pool), min_size=1))))
    n = Q ** len(V) * R ** len(Vr)
    table = draw(st.lists(st.integers(0, Q - 1), min_size=n, max_size=n))
    return Sca(Alphabet(Q), Alphabet(R), V, Vr, table)


@st.composite
def context_for(draw, a: Sca, lo: int, hi: int):
    syms = draw(st.lists(st.integers(0, a.states.size - 1), min_size=hi - lo + 1, max_size=hi - lo + 1))
    return Word(a.states, tuple(syms), lo)
