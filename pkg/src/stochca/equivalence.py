"""Bounded equality of global maps, couplings, and the noise lift."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

import numpy as np

from .core import (
    Alphabet,
    AlphabetMismatch,
    ScaError,
    Sca,
    Word,
    _all_words,
    _encode,
    apply_window,
    check_budget,
    fmt_rational,
    parse_rational,
    window_counts,
)

EQUAL = "EqualUpToBound"
UNEQUAL = "Unequal"


@dataclass(frozen=True)
class Witness:
    """A context and output word on which two weights differ."""

    context: Word
    window: tuple[int, int]
    word: tuple[int, ...]
    left: Fraction
    right: Fraction

    def to_json(self) -> dict:
        alpha = self.context.alphabet
        return {
            "context": str(self.context),
            "window": list(self.window),
            "word": alpha.format(self.word),
            "left": fmt_rational(self.left),
            "right": fmt_rational(self.right),
        }


@dataclass(frozen=True)
class EqualityVerdict:
    status: str
    bound: tuple[int, int]  # (L_max, number of contexts compared)
    witness: Witness | None = None

    @property
    def equal(self) -> bool:
        return self.status == EQUAL

    def __bool__(self) -> bool:
        return self.equal

    def to_json(self) -> dict:
        out = {"status": self.status, "max_window": self.bound[0], "contexts": self.bound[1]}
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        return out


def _same_states(a: Sca, b: Sca):
    if a.states.size != b.states.size:
        raise AlphabetMismatch(
            f"state alphabets differ in size: {a.states.size} vs {b.states.size}"
        )


def _context_chunks(Q: int, width: int, per_context: int) -> Iterator[tuple[int, np.ndarray]]:
    """All words of ``width`` over ``Q`` in lexicographic order, in chunks."""
    total = Q**width
    step = max(1, (1 << 20) // max(1, per_context))
    for start in range(0, total, step):
        idx = np.arange(start, min(start + step, total), dtype=np.int64)
        words = np.empty((idx.size, width), dtype=np.int64)
        for j in range(width - 1, -1, -1):
            words[:, j] = idx % Q
            idx = idx // Q
        yield start, words


def _scaled(counts: np.ndarray, factor: int) -> np.ndarray:
    """``counts * factor`` without silent int64 overflow."""
    if counts.size and int(counts.max()) * factor >= 1 << 62:
        return counts.astype(object) * factor
    return counts * factor


def _sweep(a: Sca, b: Sca, L_max: int, compare) -> EqualityVerdict:
    _same_states(a, b)
    Q = a.states.size
    rho = max(a.radius, b.radius)
    n_contexts = 0
    for L in range(1, L_max + 1):
        width = L + 2 * rho
        check_budget(Q**width * Q**L, f"equality sweep at window length {L}")
        per = Q**L * max(a.random.size, b.random.size) ** (L + 2 * rho)
        for _, ctx in _context_chunks(Q, width, per):
            ca, ta = window_counts(a, ctx, -rho, 0, L)
            cb, tb = window_counts(b, ctx, -rho, 0, L)
            g = math.gcd(ta, tb)
            bad = compare(_scaled(ca, tb // g), _scaled(cb, ta // g))
            if bad.any():
                c, u = np.argwhere(bad)[0]
                w = Word(a.states, tuple(int(x) for x in ctx[c]), -rho)
                word = tuple(int(x) for x in _all_words(Q, L)[u])
                return EqualityVerdict(
                    UNEQUAL,
                    (L_max, n_contexts + int(c) + 1),
                    Witness(w, (0, L), word, Fraction(int(ca[c, u]), ta), Fraction(int(cb[c, u]), tb)),
                )
            n_contexts += len(ctx)
    return EqualityVerdict(EQUAL, (L_max, n_contexts))


def one_step_equal(a: Sca, b: Sca, L_max: int) -> EqualityVerdict:
    """Compare one-step distributions on every context up to window length ``L_max``.

    Contexts of length ``L + 2*rho`` are swept in lexicographic order; the
    first differing output word (lexicographic) is the witness.
    """
    return _sweep(a, b, L_max, lambda x, y: x != y)


def nondet_equal(a: Sca, b: Sca, L_max: int) -> EqualityVerdict:
    """Same sweep as :func:`one_step_equal`, comparing supports only."""
    return _sweep(a, b, L_max, lambda x, y: (x > 0) != (y > 0))


# ---------------------------------------------------------------- couplings


@dataclass(frozen=True)
class Coupling:
    """Joint rational weights on pairs of random words of a common width."""

    left_alphabet: Alphabet
    right_alphabet: Alphabet
    width: int
    weights: dict = field(default_factory=dict)

    def total(self) -> Fraction:
        return sum(self.weights.values(), Fraction(0))

    def marginal(self, side: int) -> dict:
        out: dict = {}
        for pair, w in self.weights.items():
            out[pair[side]] = out.get(pair[side], Fraction(0)) + w
        return out

    def items(self):
        return sorted(self.weights.items())

    def to_json(self) -> dict:
        fl, fr = self.left_alphabet.format, self.right_alphabet.format
        return {
            "width": self.width,
            "entries": [
                {"left": fl(v1), "right": fr(v2), "weight": fmt_rational(w)}
                for (v1, v2), w in self.items()
            ],
        }

    @classmethod
    def from_json(cls, obj: dict, left: Alphabet, right: Alphabet) -> Coupling:
        weights = {}
        for e in obj["entries"]:
            key = (left.parse(e["left"]), right.parse(e["right"]))
            weights[key] = weights.get(key, Fraction(0)) + parse_rational(e["weight"])
        return cls(left, right, int(obj["width"]), weights)


def _outputs(a: Sca, ctx: np.ndarray, lo: int, rand: np.ndarray, n: int) -> np.ndarray:
    """Codes of the centered window ``[-n, n]`` for every row of ``rand``."""
    out = apply_window(a, ctx[None, :], lo, rand, lo, -n, 2 * n + 1)
    return _encode(out, a.states.size)


def _coupling_span(a: Sca, b: Sca, n: int) -> tuple[int, int]:
    rho = max(a.radius, b.radius)
    return -(n + rho), 2 * (n + rho) + 1


def build_coupling(a: Sca, b: Sca, context: Word, n: int):
    """Rank-interval coupling of the two random sources at level ``n``.

    Random words producing the same centered output ``u`` are ranked
    lexicographically; the word of rank ``j`` among ``p`` owns the interval
    ``[j/p, (j+1)/p)``, and a pair's weight is the overlap of its intervals
    times the common probability of ``u``.  Returns an Unequal verdict when
    the two output distributions differ.
    """
    _same_states(a, b)
    lo, w = _coupling_span(a, b, n)
    ctx_word = context.restrict(lo, lo + w - 1)
    ctx = np.array(ctx_word.symbols, dtype=np.int64)
    R1, R2 = a.random.size, b.random.size
    check_budget(R1**w + R2**w, "coupling enumeration")
    rand1, rand2 = _all_words(R1, w), _all_words(R2, w)
    out1, out2 = _outputs(a, ctx, lo, rand1, n), _outputs(b, ctx, lo, rand2, n)
    Q, L = a.states.size, 2 * n + 1
    n1 = np.bincount(out1, minlength=Q**L)
    n2 = np.bincount(out2, minlength=Q**L)
    T1, T2 = R1**w, R2**w
    for u in range(Q**L):
        if Fraction(int(n1[u]), T1) != Fraction(int(n2[u]), T2):
            word = tuple(int(x) for x in _all_words(Q, L)[u])
            witness = Witness(ctx_word, (-n, L), word, Fraction(int(n1[u]), T1), Fraction(int(n2[u]), T2))
            return EqualityVerdict(UNEQUAL, (L, 1), witness)
    # rows of _all_words are in lexicographic order, so stable grouping keeps rank order
    order1, order2 = np.argsort(out1, kind="stable"), np.argsort(out2, kind="stable")
    starts1 = np.concatenate([[0], np.cumsum(n1)])
    starts2 = np.concatenate([[0], np.cumsum(n2)])
    weights = {}
    for u in np.flatnonzero(n1):
        p1, p2 = int(n1[u]), int(n2[u])
        mu = Fraction(p1, T1)
        P1 = order1[starts1[u] : starts1[u + 1]]
        P2 = order2[starts2[u] : starts2[u + 1]]
        i = j = 0
        while i < p1 and j < p2:
            # intervals [i/p1,(i+1)/p1) and [j/p2,(j+1)/p2)
            left = max(Fraction(i, p1), Fraction(j, p2))
            right = min(Fraction(i + 1, p1), Fraction(j + 1, p2))
            if right > left:
                key = (tuple(int(x) for x in rand1[P1[i]]), tuple(int(x) for x in rand2[P2[j]]))
                weights[key] = (right - left) * mu
            if Fraction(i + 1, p1) <= Fraction(j + 1, p2):
                i += 1
            else:
                j += 1
    return Coupling(a.random, b.random, w, weights)


def verify_coupling(a: Sca, b: Sca, context: Word, g: Coupling) -> bool:
    """Uniform marginals and full agreement mass on the centered window."""
    _same_states(a, b)
    rho = max(a.radius, b.radius)
    if (g.width - 1) % 2 or (g.width - 1) // 2 < rho:
        raise ScaError(f"coupling width {g.width} does not fit radius {rho}")
    n = (g.width - 1) // 2 - rho
    lo, w = _coupling_span(a, b, n)
    if any(x < 0 for x in g.weights.values()):
        return False
    for side, alpha in ((0, a.random), (1, b.random)):
        check_budget(alpha.size**w, "coupling marginal check")
        marg = g.marginal(side)
        target = Fraction(1, alpha.size**w)
        if len(marg) != alpha.size**w or any(m != target for m in marg.values()):
            return False
        if any(len(v) != w for v in marg):
            return False
    if not g.weights:
        return False
    ctx = np.array(context.slice(lo, lo + w - 1), dtype=np.int64)
    pairs = list(g.weights)
    left = np.array([p[0] for p in pairs], dtype=np.int64)
    right = np.array([p[1] for p in pairs], dtype=np.int64)
    agree = _outputs(a, ctx, lo, left, n) == _outputs(b, ctx, lo, right, n)
    mass = sum((g.weights[p] for p, ok in zip(pairs, agree) if ok), Fraction(0))
    return mass == 1


def product_coupling(a: Sca, b: Sca, n: int) -> Coupling:
    """Independent coupling of the two uniform sources (usually not agreeing)."""
    _, w = _coupling_span(a, b, n)
    check_budget(a.random.size**w * b.random.size**w, "product coupling")
    weight = Fraction(1, a.random.size**w * b.random.size**w)
    weights = {
        (tuple(v1), tuple(v2)): weight
        for v1 in a.random.words(w)
        for v2 in b.random.words(w)
    }
    return Coupling(a.random, b.random, w, weights)


# ---------------------------------------------------------------- noise lift


def lift_to_noise(a: Sca) -> Sca:
    """``G(c, s) = F(s)``: the deterministic rule fed with uniform random states."""
    if a.depends_on_random():
        raise ScaError("lift_to_noise needs a deterministic automaton")
    Q = a.states.size
    zeros = (0,) * a.r_rand
    row = np.array([a.table[a.index(qs, zeros)] for qs in a.states.words(a.r)], dtype=np.int64)
    table = np.tile(row, Q)
    random = Alphabet(Q, a.states.names)
    name = f"lift({a.name})" if a.name else ""
    return Sca(a.states, random, (0,), a.nbr, table, name=name)


def uniformity_check(a: Sca, L_max: int) -> tuple[bool, Witness | None]:
    """Is every bounded one-step distribution uniform?

    The witness is the first (context, word) in lexicographic order whose
    weight falls below uniform, i.e. a word the map reaches too rarely.
    """
    Q = a.states.size
    rho = a.radius
    for L in range(1, L_max + 1):
        width = L + 2 * rho
        check_budget(Q**width * Q**L, f"uniformity sweep at window length {L}")
        for _, ctx in _context_chunks(Q, width, Q**L * a.random.size ** (L + 2 * rho)):
            counts, total = window_counts(a, ctx, -rho, 0, L)
            low = counts * Q**L < total
            if low.any():
                c, u = np.argwhere(low)[0]
                w = Word(a.states, tuple(int(x) for x in ctx[c]), -rho)
                word = tuple(int(x) for x in _all_words(Q, L)[u])
                return False, Witness(w, (0, L), word, Fraction(int(counts[c, u]), total), Fraction(1, Q**L))
    return True, None
