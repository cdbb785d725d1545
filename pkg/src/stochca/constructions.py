"""Concrete automata: the zoo, the parity rule, blank noise, and the PCA embedding."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import Alphabet, Sca, Word, _all_words, check_budget
from .equivalence import Coupling
from .transform import RescaleParams, TrimMap


def _alpha(n_or_names) -> Alphabet:
    if isinstance(n_or_names, Alphabet):
        return n_or_names
    if isinstance(n_or_names, int):
        return Alphabet(n_or_names)
    return Alphabet.of(n_or_names)


# ---------------------------------------------------------------- zoo


def noise_ca(n: int = 2) -> Sca:
    """``F(c, s) = s`` over ``n`` symbols."""
    a = _alpha(n)
    return Sca.from_function(a, a, (0,), (0,), lambda qs, rs: rs[0], name="noise")


def identity_ca(states=2, random=1) -> Sca:
    return Sca.from_function(_alpha(states), _alpha(random), (0,), (0,),
                             lambda qs, rs: qs[0], name="identity")


def shift_ca(states=2, random=1, k: int = 1) -> Sca:
    """``F(c)_z = c_{z+k}``."""
    return Sca.from_function(_alpha(states), _alpha(random), (k,), (0,),
                             lambda qs, rs: qs[0], name=f"shift{k}")


def xor_ca(random=1) -> Sca:
    """``F(c)_z = c_z xor c_{z+1}``."""
    return Sca.from_function(Alphabet(2), _alpha(random), (0, 1), (0,),
                             lambda qs, rs: qs[0] ^ qs[1], name="xor")


def constant_ca(states=2, random=1, value: int = 0) -> Sca:
    return Sca.from_function(_alpha(states), _alpha(random), (0,), (0,),
                             lambda qs, rs: value, name=f"const{value}")


def parity_sca() -> Sca:
    """Segments between ``#`` cells are refilled with uniform even-parity words.

    ``s_{-1} + s_0`` telescopes along a segment; the boundary cells take a
    single random symbol, and an isolated cell (``#`` on both sides) takes 0.
    """
    Q, R = Alphabet.of("#01"), Alphabet.of("01")

    def rule(qs, rs):
        left, centre, right = qs
        s_left, s_here = rs
        if centre == 0:
            return 0
        if left == 0 and right == 0:
            return 1
        if left == 0:
            return 1 + s_here
        if right == 0:
            return 1 + s_left
        return 1 + (s_left + s_here) % 2

    return Sca.from_function(Q, R, (-1, 0, 1), (-1, 0), rule, name="parity")


def blank_noise_pair() -> tuple[Sca, Sca]:
    """``F(c, s) = s`` and ``G(c, s) = c + s mod 2``: the same blank noise."""
    Q = Alphabet(2)
    a = Sca.from_function(Q, Q, (0,), (0,), lambda qs, rs: rs[0], name="blank-noise-A")
    b = Sca.from_function(Q, Q, (0,), (0,), lambda qs, rs: (qs[0] + rs[0]) % 2, name="blank-noise-B")
    return a, b


def blank_noise_coupling(context: Word, z: int = 0) -> Coupling:
    """Weight 1/2 on the pairs ``(x, y)`` with ``x = y + c_z mod 2``."""
    c = context.slice(z, z)[0]
    R = Alphabet(2)
    weights = {((( y + c) % 2,), (y,)): Fraction(1, 2) for y in range(2)}
    return Coupling(R, R, 1, weights)


def zoo() -> dict[str, Sca]:
    """Small automata used throughout the tests and the CLI."""
    a, b = blank_noise_pair()
    return {
        "noise": noise_ca(),
        "identity": identity_ca(),
        "shift": shift_ca(),
        "xor": xor_ca(),
        "constant": constant_ca(),
        "parity": parity_sca(),
        "blank-noise-A": a,
        "blank-noise-B": b,
    }


# ---------------------------------------------------------------- PCA embedding


def pca_embed(a: Sca):
    """A plain PCA simulating ``a`` in two steps.

    States are ``Q`` followed by the pairs ``(q, s)``.  A ``Q`` cell stores
    its fresh random symbol; a pair cell whose whole neighborhood holds pairs
    applies ``a``'s rule to the stored states and symbols and drops back to
    ``Q``.  Returns ``(b, i, witness)`` with ``i`` the inclusion of ``Q``.
    """
    from .simulation import SimWitness

    Q, R = a.states.size, a.random.size
    nbr = tuple(sorted(set(a.nbr.offsets) | set(a.rnd_nbr.offsets) | {0}))
    centre = nbr.index(0)
    pos_q = [nbr.index(v) for v in a.nbr]
    pos_s = [nbr.index(v) for v in a.rnd_nbr]
    QB = Q + Q * R
    check_budget(QB ** len(nbr) * R, "PCA embedding table")
    names = a.states.labels + tuple(f"{q}:{s}" for q in a.states.labels for s in a.random.labels)
    words = _all_words(QB, len(nbr))
    c = words[:, centre]
    stored = np.maximum(words - Q, 0)
    q_of, s_of = np.where(words < Q, words, stored // R), stored % R
    out = np.where(c < Q, c, q_of[:, centre])  # default: fall back to the stored state
    full = (words >= Q).all(axis=1)
    if full.any():
        idx = np.zeros(len(words), dtype=np.int64)
        for p in pos_q:
            idx = idx * Q + q_of[:, p]
        for p in pos_s:
            idx = idx * R + s_of[:, p]
        out = np.where(full, a.table[idx], out)
    # phase 1: a Q cell becomes (q, fresh symbol)
    table = np.repeat(out[:, None], R, axis=1)
    is_q = c < Q
    table[is_q, :] = Q + c[is_q, None] * R + np.arange(R)[None, :]
    b = Sca(Alphabet(QB, names), a.random, nbr, (0,), table.reshape(-1),
            name=f"embed({a.name})" if a.name else "embed")
    i = TrimMap.restriction(range(Q), QB)
    witness = SimWitness(RescaleParams(1, 1, 0), RescaleParams(1, 2, 0), (i,), 3)
    return b, i, witness


# ---------------------------------------------------------------- random symbol generation


@dataclass(frozen=True)
class SymbolGenMap:
    """Read ``width`` symbols of size ``source_size`` as a number, reduce mod ``target_size``."""

    source_size: int
    target_size: int
    width: int

    @property
    def uniform(self) -> bool:
        return self.source_size**self.width % self.target_size == 0

    def value(self, digits) -> int:
        v = 0
        for d in digits:
            v = v * self.source_size + int(d)
        return v % self.target_size

    def distribution(self) -> dict[int, Fraction]:
        n = self.source_size**self.width
        counts = np.bincount(np.arange(n) % self.target_size, minlength=self.target_size)
        return {s: Fraction(int(x), n) for s, x in enumerate(counts)}

    def to_json(self) -> dict:
        return {"source": self.source_size, "target": self.target_size,
                "width": self.width, "uniform": self.uniform}


def _prime_support(n: int) -> set:
    out, p = set(), 2
    while p * p <= n:
        while n % p == 0:
            out.add(p)
            n //= p
        p += 1
    if n > 1:
        out.add(n)
    return out


def rand_symbol_map(target: int, source: int) -> SymbolGenMap:
    """Narrowest map onto ``target`` symbols; uniform whenever the primes allow it."""
    if target < 1 or source < 2:
        raise ValueError("need target >= 1 and source >= 2")
    w = 1
    if _prime_support(target) <= _prime_support(source):
        while source**w % target:
            w += 1
    else:
        while source**w < target:
            w += 1
    return SymbolGenMap(source, target, w)
