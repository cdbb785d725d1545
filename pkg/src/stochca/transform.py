"""Trimming (restriction, projection) and rescaling of automata."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Alphabet, ScaError, Sca, _all_words, _encode, apply_window, check_budget

RESTRICTION = "restriction"
PROJECTION = "projection"


class TrimError(ScaError, ValueError):
    """A trim that cannot be applied; ``witness`` locates the violation."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class UnstableRestriction(TrimError):
    pass


class IncompatibleProjection(TrimError):
    pass


@dataclass(frozen=True)
class TrimMap:
    """Restriction ``i: Q' -> Q`` (injective) or projection ``pi: Q -> Q''`` (surjective).

    ``mapping[x]`` is the image of symbol ``x`` of the domain.
    """

    kind: str
    mapping: tuple[int, ...]
    domain_size: int
    codomain_size: int

    def __post_init__(self):
        mapping = tuple(int(x) for x in self.mapping)
        object.__setattr__(self, "mapping", mapping)
        if self.kind not in (RESTRICTION, PROJECTION):
            raise TrimError(f"unknown trim kind {self.kind!r}")
        if len(mapping) != self.domain_size:
            raise TrimError(f"mapping has {len(mapping)} entries for a domain of {self.domain_size}")
        if any(not 0 <= x < self.codomain_size for x in mapping):
            raise TrimError(f"mapping {mapping} leaves the codomain of size {self.codomain_size}")
        if self.kind == RESTRICTION and len(set(mapping)) != len(mapping):
            raise TrimError(f"restriction {mapping} is not injective")
        if self.kind == PROJECTION and len(set(mapping)) != self.codomain_size:
            raise TrimError(f"projection {mapping} is not surjective")

    @classmethod
    def restriction(cls, images: Sequence[int], codomain_size: int) -> TrimMap:
        return cls(RESTRICTION, tuple(images), len(images), codomain_size)

    @classmethod
    def projection(cls, targets: Sequence[int], codomain_size: int | None = None) -> TrimMap:
        targets = tuple(targets)
        n = codomain_size if codomain_size is not None else (max(targets) + 1 if targets else 0)
        return cls(PROJECTION, targets, len(targets), n)

    @classmethod
    def identity(cls, n: int, kind: str = RESTRICTION) -> TrimMap:
        return cls(kind, tuple(range(n)), n, n)

    def is_identity(self) -> bool:
        return self.domain_size == self.codomain_size and self.mapping == tuple(range(self.domain_size))

    def to_json(self) -> dict:
        key = "restrict" if self.kind == RESTRICTION else "project"
        return {key: list(self.mapping)}

    @classmethod
    def from_json(cls, obj: dict, size: int) -> TrimMap:
        """``size`` is |Q| of the automaton the trim applies to."""
        if "restrict" in obj:
            return cls.restriction(obj["restrict"], size)
        if "project" in obj:
            return cls.projection(obj["project"])
        raise TrimError(f"not a trim: {obj}")


def _check_domain(a: Sca, i: TrimMap, kind: str):
    if i.kind != kind:
        raise TrimError(f"expected a {kind}, got a {i.kind}")
    side = i.codomain_size if kind == RESTRICTION else i.domain_size
    if side != a.states.size:
        raise TrimError(f"{kind} is defined for {side} states, automaton has {a.states.size}")


def _table_rows(a: Sca, state_words: np.ndarray) -> np.ndarray:
    """Rule outputs for the given state words; shape (N, |R|^r')."""
    Q, R = a.states.size, a.random.size
    sidx = _encode(state_words, Q) if a.r else np.zeros(len(state_words), np.int64)
    cols = R**a.r_rand
    return a.table[sidx[:, None] * cols + np.arange(cols, dtype=np.int64)[None, :]]


def _restriction_outputs(a: Sca, i: TrimMap):
    check_budget(i.domain_size**a.r * a.random.size**a.r_rand, "restriction scan")
    words = _all_words(i.domain_size, a.r)
    images = np.array(i.mapping, dtype=np.int64)
    out = _table_rows(a, images[words])
    inverse = np.full(a.states.size, -1, dtype=np.int64)
    inverse[images] = np.arange(i.domain_size)
    return words, out, inverse[out]


def find_restriction_violation(a: Sca, i: TrimMap):
    """First (state word over Q', random word) leaving i(Q'), or None."""
    _check_domain(a, i, RESTRICTION)
    words, _, new = _restriction_outputs(a, i)
    bad = np.argwhere(new < 0)
    if bad.size == 0:
        return None
    w, s = bad[0]
    return tuple(int(x) for x in words[w]), _decode_random(a, int(s))


def _decode_random(a: Sca, s: int) -> tuple[int, ...]:
    out = []
    for _ in range(a.r_rand):
        s, d = divmod(s, a.random.size)
        out.append(d)
    return tuple(reversed(out))


def check_restriction(a: Sca, i: TrimMap) -> bool:
    return find_restriction_violation(a, i) is None


def restrict(a: Sca, i: TrimMap) -> Sca:
    """The i-restriction; states become ``Q'`` named after their images."""
    _check_domain(a, i, RESTRICTION)
    words, _, new = _restriction_outputs(a, i)
    if (new < 0).any():
        w, s = np.argwhere(new < 0)[0]
        witness = (tuple(int(x) for x in words[w]), _decode_random(a, int(s)))
        raise UnstableRestriction(f"restriction is not stable: {witness} leaves the image", witness)
    names = tuple(a.states.name(x) for x in i.mapping)
    return a.replace(states=Alphabet(i.domain_size, names), table=new.reshape(-1))


def _projection_data(a: Sca, pi: TrimMap):
    Q, n = a.states.size, pi.codomain_size
    check_budget(Q**a.r * a.random.size**a.r_rand, "projection scan")
    target = np.array(pi.mapping, dtype=np.int64)
    words = _all_words(Q, a.r)
    out = target[_table_rows(a, words)]
    keys = _encode(target[words], n) if a.r else np.zeros(len(words), np.int64)
    # representative = first (lexicographically smallest) preimage word of each key
    rep = np.full(n**a.r, -1, dtype=np.int64)
    uniq, first = np.unique(keys, return_index=True)
    rep[uniq] = first
    return words, out, keys, rep


def find_projection_violation(a: Sca, pi: TrimMap):
    """(word, other word with the same image, random word) violating compatibility, or None."""
    _check_domain(a, pi, PROJECTION)
    words, out, keys, rep = _projection_data(a, pi)
    bad = np.argwhere(out != out[rep[keys]])
    if bad.size == 0:
        return None
    w, s = bad[0]
    return (
        tuple(int(x) for x in words[w]),
        tuple(int(x) for x in words[rep[keys[w]]]),
        _decode_random(a, int(s)),
    )


def check_projection(a: Sca, pi: TrimMap) -> bool:
    return find_projection_violation(a, pi) is None


def project(a: Sca, pi: TrimMap, names: Sequence[str] | None = None) -> Sca:
    """The pi-projection; each merged class is named after its first member by default."""
    witness = find_projection_violation(a, pi)
    if witness is not None:
        raise IncompatibleProjection(f"projection is not compatible: {witness}", witness)
    _, out, _, rep = _projection_data(a, pi)
    if names is None:
        first = {}
        for q, c in enumerate(pi.mapping):
            first.setdefault(c, a.states.name(q))
        names = tuple(first[c] for c in range(pi.codomain_size))
    return a.replace(states=Alphabet(pi.codomain_size, tuple(names)), table=out[rep].reshape(-1))


def apply_trim(a: Sca, trim: TrimMap) -> Sca:
    return restrict(a, trim) if trim.kind == RESTRICTION else project(a, trim)


def apply_trims(a: Sca, trims: Sequence[TrimMap]) -> Sca:
    for trim in trims:
        a = apply_trim(a, trim)
    return a


def compose_trims(trims: Sequence[TrimMap], a: Sca) -> tuple[TrimMap, TrimMap]:
    """Rewrite a sequence of trims as one restriction followed by one projection.

    Every trim is applied once along the way so that an inapplicable
    sequence raises exactly where it breaks.
    """
    current = a
    domain = list(range(a.states.size))  # a-states kept by the restriction
    image = list(range(a.states.size))  # their class in the current automaton
    for trim in trims:
        current = apply_trim(current, trim)
        if trim.kind == RESTRICTION:
            inverse = {q: x for x, q in enumerate(trim.mapping)}
            keep = [k for k, c in enumerate(image) if c in inverse]
            domain = [domain[k] for k in keep]
            image = [inverse[image[k]] for k in keep]
        else:
            image = [trim.mapping[c] for c in image]
    i = TrimMap.restriction(domain, a.states.size)
    pi = TrimMap.projection(image, current.states.size)
    return i, pi


# ---------------------------------------------------------------- rescaling


@dataclass(frozen=True)
class RescaleParams:
    m: int = 1
    t: int = 1
    k: int = 0

    def __post_init__(self):
        if self.m < 1 or self.t < 1:
            raise ValueError(f"rescaling needs m >= 1 and t >= 1, got {self}")

    def is_trivial(self) -> bool:
        return (self.m, self.t, self.k) == (1, 1, 0)

    def as_tuple(self) -> tuple[int, int, int]:
        return self.m, self.t, self.k

    def to_json(self) -> dict:
        return {"m": self.m, "t": self.t, "k": self.k}

    @classmethod
    def from_json(cls, obj) -> RescaleParams:
        if isinstance(obj, dict):
            return cls(int(obj["m"]), int(obj["t"]), int(obj.get("k", 0)))
        return cls(*obj)


def rescale_cone(a: Sca, p: RescaleParams) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Minimal block neighborhoods (V+, V'+) of the rescaled automaton.

    Offsets are the packed blocks holding a cell actually read by the t-fold
    cone of the k-shifted output block.
    """
    needed = {p.k + i for i in range(p.m)}
    rand: set = set()
    for _ in range(p.t):
        rand |= {x + v for x in needed for v in a.rnd_nbr}
        needed = {x + v for x in needed for v in a.nbr}
    blocks = tuple(sorted({x // p.m for x in needed}))
    rblocks = tuple(sorted({x // p.m for x in rand}))
    return blocks, rblocks


def _digits(idx: np.ndarray, base: int, n: int) -> np.ndarray:
    out = np.empty((idx.size, n), dtype=np.int64)
    for j in range(n - 1, -1, -1):
        out[:, j] = idx % base
        idx = idx // base
    return out


def _packed_names(alphabet: Alphabet, m: int) -> tuple[str, ...] | None:
    if alphabet.size**m > 4096:
        return None
    labels = alphabet.labels
    return tuple("|".join(labels[d] for d in w) for w in alphabet.words(m))


def rescale(a: Sca, p: RescaleParams, chunk: int = 1 << 15) -> Sca:
    """``b_m o sigma_k o F^t`` over packed states and t packed random layers.

    States are ``Q^m`` (big-endian, named ``"q0|q1|..."``); random symbols
    are ``(R^m)^t`` with layer 1 most significant.
    """
    if p.is_trivial():
        return a
    Q, R, m, t = a.states.size, a.random.size, p.m, p.t
    blocks, rblocks = rescale_cone(a, p)
    Qp, Rp = Q**m, (R**m) ** t
    n_state = Qp ** len(blocks)
    n_rand = Rp ** len(rblocks)
    size = n_state * n_rand
    check_budget(size, f"tabulating rescaling {p.as_tuple()}")
    rho = a.radius
    all_blocks = blocks + rblocks
    lo = min([b * m for b in all_blocks] + [p.k - t * rho])
    hi = max([(b + 1) * m - 1 for b in all_blocks] + [p.k + m - 1 + t * rho])
    width = hi - lo + 1
    state_cols = np.array([b * m + i - lo for b in blocks for i in range(m)], dtype=np.int64)
    rand_cols = [
        np.array([b * m + i - lo for b in rblocks for i in range(m)], dtype=np.int64)
        for _ in range(t)
    ]
    table = np.empty(size, dtype=np.int64)
    for start in range(0, size, chunk):
        idx = np.arange(start, min(start + chunk, size), dtype=np.int64)
        sidx, ridx = idx // n_rand, idx % n_rand
        states = np.zeros((idx.size, width), dtype=np.int64)
        if blocks:
            states[:, state_cols] = _digits(sidx, Q, len(blocks) * m)
        rdig = _digits(ridx, R, len(rblocks) * t * m).reshape(idx.size, len(rblocks), t, m)
        s_lo, s_w = lo, width
        for layer in range(t):
            rand = np.zeros((idx.size, width), dtype=np.int64)
            if rblocks:
                rand[:, rand_cols[layer]] = rdig[:, :, layer, :].reshape(idx.size, -1)
            out_lo, out_w = s_lo + rho, s_w - 2 * rho
            states = apply_window(a, states, s_lo, rand, lo, out_lo, out_w)
            s_lo, s_w = out_lo, out_w
        block = states[:, p.k - s_lo : p.k - s_lo + m]
        table[start : start + idx.size] = _encode(block, Q)
    rnames = None
    if Rp <= 4096:
        layer_names = _packed_names(a.random, m)
        rnames = tuple("/".join(layer_names[d] for d in w) for w in Alphabet(R**m).words(t))
    return Sca(
        Alphabet(Qp, _packed_names(a.states, m)),
        Alphabet(Rp, rnames),
        blocks,
        rblocks,
        table,
        name=f"{a.name}^({m},{t},{p.k})" if a.name else "",
    )
