"""Stochastic cellular automata on Z with explicit random sources.

An automaton is a rule table ``f: Q^r x R^r' -> Q``.  Bi-infinite
configurations are represented in two ways: :class:`PeriodicConfig` for
trajectories and anchored :class:`Word` contexts for exact distributions
(exact on Z by locality).  Probabilities are :class:`fractions.Fraction`.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import rng

DEFAULT_BUDGET = 1 << 24
_INT64_SAFE = 1 << 62


class ScaError(Exception):
    """Base class for errors raised by this package."""


class BudgetExceeded(ScaError):
    pass


class AlphabetMismatch(ScaError, ValueError):
    pass


class InsufficientContext(ScaError, ValueError):
    pass


def budget() -> int:
    """Enumeration cap; the ``SCA_BUDGET`` environment variable overrides it."""
    env = os.environ.get("SCA_BUDGET")
    return int(env) if env else DEFAULT_BUDGET


def check_budget(n: int, what: str) -> None:
    cap = budget()
    if n > cap:
        raise BudgetExceeded(f"{what}: {n} evaluations exceed the budget of {cap}")


def fmt_rational(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def parse_rational(text: str) -> Fraction:
    return Fraction(text)


# ---------------------------------------------------------------- alphabets


@dataclass(frozen=True)
class Alphabet:
    size: int
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("alphabet size must be at least 1")
        if self.names is not None:
            names = tuple(str(n) for n in self.names)
            if len(names) != self.size:
                raise ValueError(f"expected {self.size} names, got {len(names)}")
            if len(set(names)) != len(names):
                raise ValueError(f"duplicate symbol names in {names}")
            object.__setattr__(self, "names", names)

    @classmethod
    def of(cls, names: Iterable) -> Alphabet:
        names = tuple(str(n) for n in names)
        return cls(len(names), names)

    @property
    def labels(self) -> tuple[str, ...]:
        return self.names if self.names is not None else tuple(str(i) for i in range(self.size))

    def name(self, i: int) -> str:
        return self.labels[i]

    def index(self, name: str) -> int:
        try:
            return self.labels.index(str(name))
        except ValueError:
            raise ValueError(f"unknown symbol {name!r}; expected one of {self.labels}") from None

    def compact(self) -> bool:
        return all(len(n) == 1 for n in self.labels)

    def format(self, symbols: Sequence[int]) -> str:
        labels = self.labels
        sep = "" if self.compact() else ","
        return sep.join(labels[s] for s in symbols)

    def parse(self, text: str) -> tuple[int, ...]:
        """Inverse of :meth:`format`; separators are needed for long names."""
        if text == "":
            return ()
        if self.compact() and "," not in text:
            return tuple(self.index(ch) for ch in text)
        return tuple(self.index(part.strip()) for part in text.split(","))

    def words(self, length: int) -> Iterable[tuple[int, ...]]:
        return itertools.product(range(self.size), repeat=length)

    def __len__(self) -> int:
        return self.size


@dataclass(frozen=True)
class Neighborhood:
    offsets: tuple[int, ...]

    def __post_init__(self):
        offsets = tuple(int(v) for v in self.offsets)
        if len(set(offsets)) != len(offsets):
            raise ValueError(f"duplicate offsets in neighborhood {offsets}")
        object.__setattr__(self, "offsets", offsets)

    def __len__(self) -> int:
        return len(self.offsets)

    def __iter__(self):
        return iter(self.offsets)

    @property
    def radius(self) -> int:
        return max((abs(v) for v in self.offsets), default=0)

    @property
    def span(self) -> tuple[int, int]:
        """(min, max) offset; (0, 0) for the empty neighborhood."""
        if not self.offsets:
            return 0, 0
        return min(self.offsets), max(self.offsets)


def _nbr(x) -> Neighborhood:
    return x if isinstance(x, Neighborhood) else Neighborhood(tuple(x))


def _alpha(x) -> Alphabet:
    if isinstance(x, Alphabet):
        return x
    if isinstance(x, int):
        return Alphabet(x)
    return Alphabet.of(x)


# ---------------------------------------------------------------- automata


class Sca:
    """Syntactic stochastic CA ``(Q, R, V, V', f)`` with a flat rule table.

    The table index of ``(q_1..q_r, s_1..s_r')`` is
    ``(sum q_j |Q|^(r-1-j)) * |R|^r' + sum s_j |R|^(r'-1-j)``.
    """

    def __init__(self, states, random, nbr, rnd_nbr, table, name: str = ""):
        self.states = _alpha(states)
        self.random = _alpha(random)
        self.nbr = _nbr(nbr)
        self.rnd_nbr = _nbr(rnd_nbr)
        self.name = name
        expected = self.states.size ** len(self.nbr) * self.random.size ** len(self.rnd_nbr)
        arr = np.asarray(table, dtype=np.int64).reshape(-1)
        if arr.size != expected:
            raise ValueError(f"rule table has {arr.size} entries, expected {expected}")
        if arr.size and (arr.min() < 0 or arr.max() >= self.states.size):
            bad = int(np.flatnonzero((arr < 0) | (arr >= self.states.size))[0])
            raise ValueError(f"table entry {bad} = {int(arr[bad])} is not a state index")
        arr = arr.copy()
        arr.flags.writeable = False
        self.table = arr

    @classmethod
    def from_function(cls, states, random, nbr, rnd_nbr, fn, name: str = "") -> Sca:
        """Tabulate ``fn(qs, rs)`` over all neighborhood words."""
        states, random, nbr, rnd_nbr = _alpha(states), _alpha(random), _nbr(nbr), _nbr(rnd_nbr)
        check_budget(states.size ** len(nbr) * random.size ** len(rnd_nbr), "tabulating rule")
        table = [
            fn(qs, rs)
            for qs in states.words(len(nbr))
            for rs in random.words(len(rnd_nbr))
        ]
        return cls(states, random, nbr, rnd_nbr, table, name)

    # identity and hashing are structural
    def _key(self):
        return (self.states, self.random, self.nbr, self.rnd_nbr, self.table.tobytes())

    def __eq__(self, other):
        return isinstance(other, Sca) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return (
            f"<Sca{label} |Q|={self.states.size} |R|={self.random.size} "
            f"V={self.nbr.offsets} V'={self.rnd_nbr.offsets}>"
        )

    @property
    def r(self) -> int:
        return len(self.nbr)

    @property
    def r_rand(self) -> int:
        return len(self.rnd_nbr)

    @property
    def radius(self) -> int:
        return max(self.nbr.radius, self.rnd_nbr.radius)

    def index(self, qs: Sequence[int], rs: Sequence[int]) -> int:
        Q, R = self.states.size, self.random.size
        i = 0
        for q in qs:
            i = i * Q + q
        j = 0
        for s in rs:
            j = j * R + s
        return i * R ** self.r_rand + j

    def rule(self, qs: Sequence[int], rs: Sequence[int]) -> int:
        return int(self.table[self.index(qs, rs)])

    def replace(self, **kw) -> Sca:
        args = dict(
            states=self.states, random=self.random, nbr=self.nbr,
            rnd_nbr=self.rnd_nbr, table=self.table, name=self.name,
        )
        args.update(kw)
        return Sca(**args)

    def with_table_entry(self, qs, rs, value: int) -> Sca:
        table = np.array(self.table)
        table[self.index(qs, rs)] = value
        return self.replace(table=table)

    def depends_on_random(self) -> bool:
        if self.r_rand == 0 or self.random.size == 1:
            return False
        t = self.table.reshape(-1, self.random.size ** self.r_rand)
        return bool((t != t[:, :1]).any())

    @cached_property
    def _rand_window_part(self) -> np.ndarray:
        """Random part of the table index for every word on the V' span."""
        lo, hi = self.rnd_nbr.span
        s = hi - lo + 1
        R = self.random.size
        w = np.arange(R**s, dtype=np.int64)
        part = np.zeros_like(w)
        for v in self.rnd_nbr:
            digit = (w // R ** (hi - v)) % R
            part = part * R + digit
        part.flags.writeable = False
        return part


def radius(a: Sca) -> int:
    return a.radius


# ---------------------------------------------------------------- configurations


@dataclass(frozen=True)
class Word:
    """Finite word anchored at position ``anchor`` (its first symbol)."""

    alphabet: Alphabet
    symbols: tuple[int, ...]
    anchor: int = 0

    def __post_init__(self):
        symbols = tuple(int(s) for s in self.symbols)
        for s in symbols:
            if not 0 <= s < self.alphabet.size:
                raise ValueError(f"symbol {s} outside alphabet of size {self.alphabet.size}")
        object.__setattr__(self, "symbols", symbols)

    @classmethod
    def parse(cls, alphabet: Alphabet, text: str, anchor: int = 0) -> Word:
        return cls(alphabet, alphabet.parse(text), anchor)

    def __len__(self) -> int:
        return len(self.symbols)

    @property
    def end(self) -> int:
        return self.anchor + len(self.symbols)

    def covers(self, lo: int, hi: int) -> bool:
        """True when positions ``lo..hi`` (inclusive) are all present."""
        return hi < lo or (self.anchor <= lo and hi < self.end)

    def slice(self, lo: int, hi: int) -> tuple[int, ...]:
        if not self.covers(lo, hi):
            raise InsufficientContext(
                f"context [{self.anchor},{self.end - 1}] does not cover [{lo},{hi}]"
            )
        return self.symbols[lo - self.anchor : hi - self.anchor + 1]

    def restrict(self, lo: int, hi: int) -> Word:
        return Word(self.alphabet, self.slice(lo, hi), lo)

    def overwrite(self, anchor: int, symbols: Sequence[int]) -> Word:
        """Copy with ``symbols`` written from ``anchor`` on (inside the word)."""
        out = list(self.symbols)
        for i, s in enumerate(symbols):
            out[anchor - self.anchor + i] = s
        return Word(self.alphabet, tuple(out), self.anchor)

    def __str__(self) -> str:
        return f"{self.alphabet.format(self.symbols)}@{self.anchor}"


@dataclass(frozen=True)
class PeriodicConfig:
    """Configuration with ``c_z = period_word[z mod period]``."""

    alphabet: Alphabet
    period_word: tuple[int, ...]

    def __post_init__(self):
        pw = tuple(int(s) for s in self.period_word)
        if not pw:
            raise ValueError("period word must be nonempty")
        for s in pw:
            if not 0 <= s < self.alphabet.size:
                raise ValueError(f"symbol {s} outside alphabet of size {self.alphabet.size}")
        object.__setattr__(self, "period_word", pw)

    @classmethod
    def parse(cls, alphabet: Alphabet, text: str) -> PeriodicConfig:
        return cls(alphabet, alphabet.parse(text))

    @property
    def period(self) -> int:
        return len(self.period_word)

    def at(self, z: int) -> int:
        return self.period_word[z % self.period]

    def window(self, lo: int, length: int) -> Word:
        return Word(self.alphabet, tuple(self.at(z) for z in range(lo, lo + length)), lo)

    def canonical(self) -> PeriodicConfig:
        """Same configuration with the smallest period."""
        pw = self.period_word
        n = len(pw)
        for p in range(1, n + 1):
            if n % p == 0 and pw == pw[:p] * (n // p):
                return PeriodicConfig(self.alphabet, pw[:p])
        return self

    def same_config(self, other: PeriodicConfig) -> bool:
        return self.alphabet.size == other.alphabet.size and (
            self.canonical().period_word == other.canonical().period_word
        )

    def __str__(self) -> str:
        return self.alphabet.format(self.period_word)


@dataclass(frozen=True)
class RandomSeq:
    steps: tuple

    def __post_init__(self):
        steps = tuple(self.steps)
        sizes = {s.alphabet.size for s in steps}
        if len(sizes) > 1:
            raise AlphabetMismatch("random steps use different alphabets")
        object.__setattr__(self, "steps", steps)

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)


# ---------------------------------------------------------------- distributions


@dataclass(frozen=True, eq=False)
class CylinderDist:
    """Exact distribution over words of one window ``[anchor, anchor+length)``.

    ``weights`` holds the nonzero entries; every other word has weight 0.
    """

    alphabet: Alphabet
    anchor: int
    length: int
    weights: dict

    def __post_init__(self):
        clean = {}
        for u, w in self.weights.items():
            w = Fraction(w)
            if w < 0 or w > 1:
                raise ValueError(f"weight {w} outside [0, 1]")
            if w:
                u = tuple(u)
                if len(u) != self.length:
                    raise ValueError(f"word {u} does not have length {self.length}")
                clean[u] = w
        object.__setattr__(self, "weights", clean)

    @classmethod
    def point_mass(cls, alphabet: Alphabet, anchor: int, word: Sequence[int]) -> CylinderDist:
        return cls(alphabet, anchor, len(word), {tuple(word): Fraction(1)})

    @classmethod
    def uniform(cls, alphabet: Alphabet, anchor: int, length: int) -> CylinderDist:
        w = Fraction(1, alphabet.size**length)
        return cls(alphabet, anchor, length, {u: w for u in alphabet.words(length)})

    def __getitem__(self, u) -> Fraction:
        if isinstance(u, str):
            u = self.alphabet.parse(u)
        return self.weights.get(tuple(u), Fraction(0))

    def __eq__(self, other):
        return (
            isinstance(other, CylinderDist)
            and self.alphabet.size == other.alphabet.size
            and self.anchor == other.anchor
            and self.length == other.length
            and self.weights == other.weights
        )

    def items(self):
        return sorted(self.weights.items())

    def support(self) -> set:
        return set(self.weights)

    def total(self) -> Fraction:
        return sum(self.weights.values(), Fraction(0))

    def is_point_mass(self) -> bool:
        return len(self.weights) == 1

    def is_uniform(self) -> bool:
        n = self.alphabet.size**self.length
        return len(self.weights) == n and all(w == Fraction(1, n) for w in self.weights.values())

    def marginal(self, lo: int, length: int) -> CylinderDist:
        """Sum out every cell outside ``[lo, lo+length)``."""
        if lo < self.anchor or lo + length > self.anchor + self.length:
            raise ValueError("marginal window must lie inside the distribution window")
        off = lo - self.anchor
        out: dict = {}
        for u, w in self.weights.items():
            key = u[off : off + length]
            out[key] = out.get(key, Fraction(0)) + w
        return CylinderDist(self.alphabet, lo, length, out)

    def to_json(self) -> dict:
        return {self.alphabet.format(u): fmt_rational(w) for u, w in self.items()}


def _encode(words: np.ndarray, base: int) -> np.ndarray:
    """Big-endian integer codes of the rows of ``words``."""
    codes = np.zeros(words.shape[:-1], dtype=np.int64)
    for j in range(words.shape[-1]):
        codes = codes * base + words[..., j]
    return codes


def _decode(code: int, base: int, length: int) -> tuple[int, ...]:
    out = []
    for _ in range(length):
        code, d = divmod(code, base)
        out.append(d)
    return tuple(reversed(out))


def _all_words(base: int, length: int) -> np.ndarray:
    n = base**length
    idx = np.arange(n, dtype=np.int64)
    out = np.empty((n, length), dtype=np.int64)
    for j in range(length - 1, -1, -1):
        out[:, j] = idx % base
        idx //= base
    return out


def _state_part(a: Sca, states: np.ndarray, lo: int, out_lo: int, length: int) -> np.ndarray:
    """State part of table indices for output cells ``out_lo..out_lo+length-1``.

    ``states`` has shape (..., W) and covers positions ``lo..lo+W-1``.
    """
    Q = a.states.size
    part = np.zeros(states.shape[:-1] + (length,), dtype=np.int64)
    for v in a.nbr:
        start = out_lo + v - lo
        part = part * Q + states[..., start : start + length]
    return part


def _rand_part(a: Sca, rand: np.ndarray, lo: int, out_lo: int, length: int) -> np.ndarray:
    R = a.random.size
    part = np.zeros(rand.shape[:-1] + (length,), dtype=np.int64)
    for v in a.rnd_nbr:
        start = out_lo + v - lo
        part = part * R + rand[..., start : start + length]
    return part


def apply_window(a: Sca, states: np.ndarray, s_lo: int, rand: np.ndarray, r_lo: int,
                 out_lo: int, length: int) -> np.ndarray:
    """Evaluate ``F`` on output cells ``out_lo..out_lo+length-1``, vectorized."""
    sp = _state_part(a, states, s_lo, out_lo, length)
    rp = _rand_part(a, rand, r_lo, out_lo, length)
    return a.table[sp * a.random.size**a.r_rand + rp]


# ---------------------------------------------------------------- global maps


def _check_alpha(cfg, alphabet: Alphabet, what: str):
    if cfg.alphabet.size != alphabet.size:
        raise AlphabetMismatch(
            f"{what} over an alphabet of size {cfg.alphabet.size}, expected {alphabet.size}"
        )


def apply_explicit(a: Sca, c: PeriodicConfig, s: PeriodicConfig) -> PeriodicConfig:
    """``F(c, s)`` on periodic configurations."""
    _check_alpha(c, a.states, "configuration")
    _check_alpha(s, a.random, "random configuration")
    p = math.lcm(c.period, s.period)
    rho = a.radius
    z = np.arange(-rho, p + rho)
    cs = np.array(c.period_word, dtype=np.int64)[z % c.period]
    ss = np.array(s.period_word, dtype=np.int64)[z % s.period]
    out = apply_window(a, cs, -rho, ss, -rho, 0, p)
    return PeriodicConfig(a.states, tuple(int(x) for x in out))


def zero_config(alphabet: Alphabet) -> PeriodicConfig:
    return PeriodicConfig(alphabet, (0,))


def apply_deterministic(a: Sca, c: PeriodicConfig) -> PeriodicConfig:
    """``F(c, 0^Z)`` with random symbol index 0 as the distinguished symbol."""
    return apply_explicit(a, c, zero_config(a.random))


def iterate_explicit(a: Sca, c: PeriodicConfig, ss: Iterable[PeriodicConfig]) -> PeriodicConfig:
    for s in ss:
        c = apply_explicit(a, c, s)
    return c


def sample_trajectory(a: Sca, c: PeriodicConfig, t: int, seed: int) -> list[PeriodicConfig]:
    """Rows ``c^0..c^t`` with random cells drawn by :func:`rng.symbol`."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    _check_alpha(c, a.states, "configuration")
    rows = [c]
    for k in range(t):
        s = PeriodicConfig(a.random, rng.row(seed, k, c.period, a.random.size))
        c = apply_explicit(a, c, s)
        rows.append(c)
    return rows


# ---------------------------------------------------------------- exact one-step counts


def window_counts(a: Sca, contexts: np.ndarray, ctx_lo: int, z: int, length: int):
    """Exact output counts for many contexts at once.

    ``contexts`` has shape (C, W) over positions ``ctx_lo..ctx_lo+W-1``.
    Returns ``(counts, total)`` where ``counts[c, code]`` is the number of
    random words on the V'-span of the window mapping context ``c`` to the
    output word with big-endian code ``code``, out of ``total`` words.  The
    count runs as a left-to-right transfer over cells whose carried state is
    the overlapping part of consecutive random neighborhoods.
    """
    Q, R = a.states.size, a.random.size
    vlo, vhi = a.rnd_nbr.span
    s = vhi - vlo + 1
    contexts = np.asarray(contexts, dtype=np.int64)
    C = contexts.shape[0]
    slo, shi = a.nbr.span
    if a.r and (z + slo < ctx_lo or z + length - 1 + shi >= ctx_lo + contexts.shape[1]):
        raise InsufficientContext(
            f"context [{ctx_lo},{ctx_lo + contexts.shape[1] - 1}] does not cover the "
            f"dependence cone of window ({z},{length})"
        )
    total = R ** (length + s - 1)
    if total >= _INT64_SAFE:
        raise BudgetExceeded(f"random window count {total} overflows exact integer counters")
    check_budget(C * Q**length * R**s, "one-step transfer")
    S1 = R ** (s - 1)
    w = np.arange(R**s, dtype=np.int64)
    prev_state, next_state = w // R, w % S1
    spart = _state_part(a, contexts, ctx_lo, z, length) if a.r else np.zeros((C, length), np.int64)
    rpart = a._rand_window_part
    scale = R**a.r_rand
    counts = np.ones((C, 1, S1), dtype=np.int64)
    for j in range(length):
        out = a.table[spart[:, j : j + 1] * scale + rpart[None, :]]  # (C, R^s)
        P = counts.shape[1]
        contrib = counts[:, :, prev_state]  # (C, P, R^s)
        rows = np.arange(P, dtype=np.int64)[None, :, None] * Q + out[:, None, :]
        flat = (np.arange(C, dtype=np.int64)[:, None, None] * (P * Q) + rows) * S1 + next_state
        new = np.zeros(C * P * Q * S1, dtype=np.int64)
        np.add.at(new, flat.reshape(-1), contrib.reshape(-1))
        counts = new.reshape(C, P * Q, S1)
    return counts.sum(axis=2), total


def _counts_to_dist(alphabet: Alphabet, anchor: int, length: int, counts, total) -> CylinderDist:
    weights = {}
    for code in np.flatnonzero(counts):
        weights[_decode(int(code), alphabet.size, length)] = Fraction(int(counts[code]), int(total))
    return CylinderDist(alphabet, anchor, length, weights)


def one_step_dist(a: Sca, context: Word, window: tuple[int, int]) -> CylinderDist:
    """Exact ``S_F(c)`` on the cylinders of ``window = (z, L)``."""
    z, length = window
    if length < 1:
        raise ValueError("window length must be positive")
    _check_alpha(context, a.states, "context")
    rho = a.radius
    lo, hi = z - rho, z + length - 1 + rho
    ctx = np.array([context.slice(lo, hi)], dtype=np.int64)
    counts, total = window_counts(a, ctx, lo, z, length)
    return _counts_to_dist(a.states, z, length, counts[0], total)


def _point_mass_for(context: Word, z: int, length: int) -> CylinderDist:
    return CylinderDist.point_mass(context.alphabet, z, context.slice(z, z + length - 1))


def iter_dist(a: Sca, context: Word, window: tuple[int, int], t: int) -> CylinderDist:
    """``S_F^t(c)`` on ``window`` by the one-step recursion over inner windows.

    The inner window of step ``t-1`` is the one-step dependence cone; each of
    its words ``v`` is used as the context ``c_v`` for the last step.
    """
    z, length = window
    if t < 0:
        raise ValueError("t must be nonnegative")
    _check_alpha(context, a.states, "context")
    rho = a.radius
    if not context.covers(z - t * rho, z + length - 1 + t * rho):
        raise InsufficientContext(
            f"context {context} does not cover [{z - t * rho},{z + length - 1 + t * rho}]"
        )
    if t == 0:
        return _point_mass_for(context, z, length)
    Q = a.states.size
    # integer numerators over a common running denominator
    inner = context.slice(z - t * rho, z + length - 1 + t * rho)
    cur = {tuple(inner): 1}
    denom = 1
    lo = z - t * rho
    width = length + 2 * t * rho
    for step in range(t):
        new_lo, new_width = lo + rho, width - 2 * rho
        words = sorted(cur)
        ctx = np.array(words, dtype=np.int64).reshape(len(words), width)
        acc: dict = {}
        step_total = 1
        for start in range(0, len(words), 4096):
            counts, step_total = window_counts(a, ctx[start : start + 4096], lo, new_lo, new_width)
            for i, row in enumerate(counts):
                weight = cur[words[start + i]]
                for code in np.flatnonzero(row):
                    key = _decode(int(code), Q, new_width)
                    acc[key] = acc.get(key, 0) + weight * int(row[code])
        cur, denom = acc, denom * step_total
        lo, width = new_lo, new_width
    return CylinderDist(a.states, z, length, {u: Fraction(n, denom) for u, n in cur.items()})


def _step_windows(rho: int, z: int, length: int, t: int):
    """Per step j=1..t: (state window lo, random window lo, random width, output lo, width)."""
    out = []
    for j in range(1, t + 1):
        back = t - j + 1
        out.append((z - back * rho, z - back * rho, length + 2 * back * rho,
                    z - (t - j) * rho, length + 2 * (t - j) * rho))
    return out


def iter_dist_bruteforce(a: Sca, context: Word, window: tuple[int, int], t: int,
                         chunk: int = 1 << 18) -> CylinderDist:
    """``S_F^t(c)`` by enumerating every t-tuple of random words on the cones."""
    z, length = window
    _check_alpha(context, a.states, "context")
    rho = a.radius
    if not context.covers(z - t * rho, z + length - 1 + t * rho):
        raise InsufficientContext(
            f"context {context} does not cover [{z - t * rho},{z + length - 1 + t * rho}]"
        )
    if t == 0:
        return _point_mass_for(context, z, length)
    Q, R = a.states.size, a.random.size
    plan = _step_windows(rho, z, length, t)
    ncells = sum(p[2] for p in plan)
    total = R**ncells
    check_budget(total, "brute-force enumeration")
    init = np.array(context.slice(z - t * rho, z + length - 1 + t * rho), dtype=np.int64)
    counts = np.zeros(Q**length, dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = np.empty((idx.size, ncells), dtype=np.int64)
        for j in range(ncells - 1, -1, -1):
            digits[:, j] = idx % R
            idx = idx // R
        states = np.broadcast_to(init, (digits.shape[0], init.size))
        s_lo = z - t * rho
        col = 0
        for (st_lo, r_lo, r_w, o_lo, o_w) in plan:
            rand = digits[:, col : col + r_w]
            col += r_w
            states = apply_window(a, states, s_lo, rand, r_lo, o_lo, o_w)
            s_lo = o_lo
        counts += np.bincount(_encode(states, Q), minlength=Q**length)
    return _counts_to_dist(a.states, z, length, counts, total)


def one_step_image(a: Sca, words: np.ndarray, lo: int, out_lo: int, length: int) -> set:
    """All output codes reachable from any of ``words`` (set semantics, direct enumeration)."""
    rho = a.radius
    r_lo, r_w = out_lo - rho, length + 2 * rho
    R = a.random.size
    check_budget(len(words) * R**r_w, "non-deterministic image")
    rand = _all_words(R, r_w)
    image: set = set()
    for w in words:
        out = apply_window(a, np.asarray(w, dtype=np.int64)[None, :], lo, rand, r_lo, out_lo, length)
        image.update(np.unique(_encode(out, a.states.size)).tolist())
    return image


def nondet_window(a: Sca, context: Word, window: tuple[int, int], t: int) -> set:
    """Words on ``window`` reachable in ``t`` steps of the non-deterministic map."""
    z, length = window
    _check_alpha(context, a.states, "context")
    rho = a.radius
    if not context.covers(z - t * rho, z + length - 1 + t * rho):
        raise InsufficientContext(
            f"context {context} does not cover [{z - t * rho},{z + length - 1 + t * rho}]"
        )
    Q = a.states.size
    lo, width = z - t * rho, length + 2 * t * rho
    current = [context.slice(lo, lo + width - 1)]
    for _ in range(t):
        codes = one_step_image(a, np.array(current, dtype=np.int64).reshape(len(current), width),
                               lo, lo + rho, width - 2 * rho)
        lo, width = lo + rho, width - 2 * rho
        current = [_decode(c, Q, width) for c in sorted(codes)]
    return set(current)


def measure_distance_lb(d1: Sequence[CylinderDist], d2: Sequence[CylinderDist], n_max: int) -> Fraction:
    """Truncation of the cylinder distance: a lower bound on the full series."""
    total = Fraction(0)
    for n in range(n_max + 1):
        x, y = d1[n], d2[n]
        for d in (x, y):
            if d.anchor != -n or d.length != 2 * n + 1:
                raise ValueError(f"distribution {n} is not on the centered window [-{n},{n}]")
        gap = max((abs(x[u] - y[u]) for u in x.support() | y.support()), default=Fraction(0))
        total += Fraction(1, 2**n) * gap
    return total
