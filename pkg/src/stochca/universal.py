"""A plain PCA that simulates radius-1 automata block by block.

Each automaton cell becomes a block of ``m`` cells::

    SYNC | QST (state bits) | RSY (random digits) | NQ0 NQ1 NQ2 | NR0 NR1 NR2 | TABLE

and one Turing head per block cycles through four phases: write fresh
random digits into RSY, copy QST and RSY into the NBR fields of the left
neighbor, the block itself and the right neighbor, look the new state up
in the block's transition table, and clean everything but QST and the
table.  Head paths depend only on the layout, never on the data, so all
heads move in lockstep and never meet.

The table has one entry per key ``(q_-1, q_0, q_1, r_-1, r_0, r_1)`` where
``r`` is the raw value of the random digits; entries store
``f(q, r mod |R|)`` so that generation is "value mod |R|" throughout.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import Alphabet, Neighborhood, ScaError, Sca, Word, _all_words, one_step_dist
from .constructions import SymbolGenMap, rand_symbol_map
from .equivalence import EQUAL, UNEQUAL, EqualityVerdict, Witness
from .simulation import SimWitness, prime_factors
from .transform import RescaleParams, TrimMap

TAGS = ("SYNC", "QST", "RSY", "NQ0", "NQ1", "NQ2", "NR0", "NR1", "NR2", "TABS", "TAB")
SYNC, QST, RSY, NQ0, NQ1, NQ2, NR0, NR1, NR2, TABS, TAB = range(len(TAGS))
NBR_TAGS = frozenset(range(NQ0, NR2 + 1))
RND = -1  # "write the fresh random symbol"

# (source field, destination field, direction of the destination block)
PASSES = (
    (QST, NQ0, +1), (QST, NQ1, 0), (QST, NQ2, -1),
    (RSY, NR0, +1), (RSY, NR1, 0), (RSY, NR2, -1),
)


def control(h: tuple, tag: int, dig: int, mk: int, mk2: int, base: int):
    """Head program: ``(move, next head state, written (digit, mark, mark2))``.

    Only the written digit may depend on the random symbol (``RND``); moves
    and next states depend on the head state and the cell alone.
    """
    keep = (dig, mk, mk2)
    name = h[0]
    if name == "START":
        return +1, ("GEN_GO",), keep
    if name == "GEN_GO":
        if tag == RSY:
            return +1, h, (RND, mk, mk2)
        if tag <= QST:
            return +1, h, keep
        return -1, ("GEN_BACK",), keep
    if name == "GEN_BACK":
        return (0, ("WAIT_GEN",), keep) if tag == SYNC else (-1, h, keep)
    if name == "WAIT_GEN":
        return 0, ("CP_SRC", 0), keep

    if name == "CP_SRC":
        p = h[1]
        src, _, d = PASSES[p]
        if tag < src or (tag == src and mk2 == 1):
            return +1, h, keep
        if tag == src:
            return (-1 if d < 0 else +1), ("CP_DST", p, dig, 0), (dig, mk, 1)
        return -1, ("CP_UNMARK", p), keep
    if name == "CP_DST":
        _, p, x, st = h
        _, dst, d = PASSES[p]
        write = (x, 1, mk2)
        if d == 0:
            if tag == dst and mk == 0:
                return -1, ("CP_RET", p, 0), write
            return +1, h, keep
        if d > 0:
            if st == 0:
                return +1, (("CP_DST", p, x, 1) if tag == SYNC else h), keep
            if tag == dst and mk == 0:
                return -1, ("CP_RET", p, 0), write
            return +1, h, keep
        if st == 0:
            return -1, (("CP_DST", p, x, 1) if tag == SYNC else h), keep
        if st == 1:
            return -1, (("CP_DST", p, x, 2) if tag == dst and mk == 0 else h), keep
        if st == 2:
            if tag == dst and mk == 0:
                return -1, h, keep
            return +1, ("CP_DST", p, x, 3), keep
        return +1, ("CP_RET", p, 0), write
    if name == "CP_RET":
        _, p, st = h
        d = PASSES[p][2]
        if d > 0 and st == 0:
            return -1, (("CP_RET", p, 1) if tag == SYNC else h), keep
        if tag == SYNC:
            return 0, ("CP_SRC", p), keep
        return (+1 if d < 0 else -1), h, keep
    if name == "CP_UNMARK":
        p = h[1]
        if tag == SYNC:
            return 0, (("CP_SRC", p + 1) if p + 1 < len(PASSES) else ("LK_FIND",)), keep
        if tag == PASSES[p][0]:
            return -1, h, (dig, mk, 0)
        return -1, h, keep

    if name == "LK_FIND":
        return (-1, ("LK_SEEK",), keep) if tag == TABS else (+1, h, keep)
    if name == "LK_SEEK":
        if tag in NBR_TAGS:
            if mk == 1:
                b = 2 if tag <= NQ2 else base
                return +1, ("LK_SWEEP", dig, b, 0), (dig, 0, mk2)
            return -1, h, keep
        return -1, ("LK_DONE",), keep
    if name == "LK_SWEEP":
        _, d, b, cnt = h
        if tag == TABS:
            if mk == 0:
                return +1, ("LK_SWEEP", d, b, (cnt + 1) % b), (dig, 0 if cnt == d else 1, mk2)
            return +1, h, keep
        if tag == SYNC:
            return -1, ("LK_BACK",), keep
        return +1, h, keep
    if name == "LK_BACK":
        return (0, ("LK_FIND",), keep) if tag == SYNC else (-1, h, keep)
    if name == "LK_DONE":
        return (0, ("WAIT_LK",), keep) if tag == SYNC else (-1, h, keep)
    if name == "WAIT_LK":
        return +1, ("CO_RIGHT", -1, 0), keep

    if name == "CO_RIGHT":
        _, carry, seen = h
        if tag == SYNC:
            return +1, h, keep
        if tag == QST:
            if mk2 == 0:
                if carry >= 0:
                    return +1, ("CO_RIGHT", -1, seen), (carry, mk, 1)
                return +1, ("CO_RIGHT", -1, 1), keep
            return +1, h, keep
        if carry < 0 and not seen:
            return +1, ("CL_SWEEP",), keep
        return +1, ("CO_TABLE", carry, 0), keep
    if name == "CO_TABLE":
        _, carry, alive = h
        if tag == SYNC:
            return -1, ("CO_BACK", carry), keep
        if tag == TABS:
            alive = int(mk == 0)
        if tag in (TABS, TAB) and alive and carry < 0 and mk2 == 0:
            return +1, ("CO_TABLE", dig, alive), (dig, mk, 1)
        return +1, ("CO_TABLE", carry, alive), keep
    if name == "CO_BACK":
        return (+1, ("CO_RIGHT", h[1], 0), keep) if tag == SYNC else (-1, h, keep)

    if name == "CL_SWEEP":
        return (-1, ("CL_BACK",), keep) if tag == SYNC else (+1, h, keep)
    if name == "CL_BACK":
        if tag == SYNC:
            return 0, ("START",), keep
        if tag in (QST, TABS, TAB):
            return -1, h, (dig, 0, 0)
        return -1, h, (0, 0, 0)
    raise ScaError(f"unknown head state {h!r}")


# ---------------------------------------------------------------- the automaton


class UniversalPCA(Sca):
    """Rule-backed plain PCA; states are (cell fields, head) in mixed radix.

    A state code is ``cell * (H + 1) + head`` where ``head = 0`` means no
    head and ``cell = ((tag * D + digit) * 2 + mark) * 2 + mark2``.
    """

    def __init__(self, primes):
        primes = frozenset(int(p) for p in primes)
        if not primes or any(prime_factors(p) != {p} for p in primes):
            raise ValueError(f"expected a nonempty set of primes, got {sorted(primes)}")
        self.primes = primes
        self.base = math.prod(primes)
        self.digits = max(2, self.base)
        self.n_cells = len(TAGS) * self.digits * 4
        self._build_heads()
        n_states = self.n_cells * (len(self.heads) + 1)
        self.states = Alphabet(n_states)
        self.random = Alphabet(self.base)
        self.nbr = Neighborhood((-1, 0, 1))
        self.rnd_nbr = Neighborhood((0,))
        self.name = f"U{sorted(primes)}"

    # cell fields
    def cell(self, tag: int, dig: int = 0, mk: int = 0, mk2: int = 0) -> int:
        return ((tag * self.digits + dig) * 2 + mk) * 2 + mk2

    def fields(self, c: int) -> tuple[int, int, int, int]:
        c, mk2 = divmod(c, 2)
        c, mk = divmod(c, 2)
        tag, dig = divmod(c, self.digits)
        return tag, dig, mk, mk2

    def state(self, c: int, head=None) -> int:
        return c * (len(self.heads) + 1) + (0 if head is None else self.head_index[head] + 1)

    def split(self, code: int) -> tuple[int, int]:
        """``(cell, head index or -1)``."""
        c, h = divmod(int(code), len(self.heads) + 1)
        return c, h - 1

    def _build_heads(self):
        """All head states reachable from START, and the tabulated program."""
        cells = [self.fields(c) for c in range(self.n_cells)]
        heads = [("START",)]
        index = {heads[0]: 0}
        results = []
        k = 0
        while k < len(heads):
            row = []
            for f in cells:
                move, nh, write = control(heads[k], *f, self.base)
                if nh not in index:
                    index[nh] = len(heads)
                    heads.append(nh)
                row.append((move, nh, write))
            results.append(row)
            k += 1
        H, C, B = len(heads), self.n_cells, self.base
        self.heads, self.head_index = heads, index
        self.MOVE = np.zeros((H, C), dtype=np.int64)
        self.NEXT = np.zeros((H, C), dtype=np.int64)
        self.WRITE = np.zeros((H, C, B), dtype=np.int64)
        for h, row in enumerate(results):
            for c, (move, nh, (dig, mk, mk2)) in enumerate(row):
                self.MOVE[h, c] = move
                self.NEXT[h, c] = index[nh]
                tag = cells[c][0]
                for s in range(B):
                    self.WRITE[h, c, s] = self.cell(tag, s if dig == RND else dig, mk, mk2)

    # Sca interface
    @property
    def table(self):
        raise ScaError("the universal PCA has no materialized rule table")

    def _key(self):
        return ("universal", tuple(sorted(self.primes)))

    def depends_on_random(self) -> bool:
        return self.base > 1

    def rule(self, qs, rs) -> int:
        """The local rule, evaluated literally on (left, centre, right) and a symbol."""
        (cl, hl), (cc, hc), (cr, hr) = (self.split(q) for q in qs)
        s = int(rs[0])
        if hc >= 0:
            move = self.MOVE[hc, cc]
            out = int(self.WRITE[hc, cc, s])
            return self.state(out, self.heads[self.NEXT[hc, cc]] if move == 0 else None)
        head = None
        if hl >= 0 and self.MOVE[hl, cl] == 1:
            head = self.heads[self.NEXT[hl, cl]]
        elif hr >= 0 and self.MOVE[hr, cr] == -1:
            head = self.heads[self.NEXT[hr, cr]]
        return self.state(cc, head)

    def index(self, qs, rs) -> int:
        raise ScaError("the universal PCA has no materialized rule table")

    def verify_simulation(self, a: Sca, flavor, w: SimWitness) -> bool:
        return universal_verdict(a, self, w, flavor.global_kind).equal


# ---------------------------------------------------------------- layouts


@dataclass(frozen=True)
class UniversalLayout:
    m: int
    fields: dict  # tag name -> (start, width)
    qbits: int
    gen: SymbolGenMap
    entries: int
    t_U: int = 0

    @property
    def base(self) -> int:
        return 2

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "tU": self.t_U,
            "fields": {k: list(v) for k, v in self.fields.items()},
            "base": self.base,
            "random_base": self.gen.source_size,
            "generation": self.gen.to_json(),
        }


def layout_for(a: Sca, u: UniversalPCA) -> UniversalLayout:
    if a.radius > 1:
        raise ScaError(f"radius {a.radius} > 1: pack the automaton first")
    qbits = max(1, (a.states.size - 1).bit_length())
    gen = rand_symbol_map(a.random.size, u.base)
    w = gen.width
    widths = [("SYNC", 1), ("QST", qbits), ("RSY", w)]
    widths += [(n, qbits) for n in ("NQ0", "NQ1", "NQ2")]
    widths += [(n, w) for n in ("NR0", "NR1", "NR2")]
    entries = 2 ** (3 * qbits) * u.base ** (3 * w)
    widths.append(("TABLE", entries * qbits))
    fields, pos = {}, 0
    for name, width in widths:
        fields[name] = (pos, width)
        pos += width
    return UniversalLayout(pos, fields, qbits, gen, entries)


def _bits(x: int, n: int) -> list[int]:
    return [(x >> (n - 1 - j)) & 1 for j in range(n)]


def _table_bits(a: Sca, lay: UniversalLayout, base: int) -> list[int]:
    """Entry values in key order ``(q_-1, q_0, q_1, r_-1, r_0, r_1)``."""
    qb, w = lay.qbits, lay.gen.width
    R = a.random.size
    out = []
    for key in itertools.product(range(2**qb), repeat=3):
        for raw in itertools.product(range(base**w), repeat=3):
            q = dict(zip((-1, 0, 1), key))
            s = dict(zip((-1, 0, 1), (r % R for r in raw)))
            if max(key) >= a.states.size:
                value = 0
            else:
                value = a.rule([q[v] for v in a.nbr], [s[v] for v in a.rnd_nbr])
            out.extend(_bits(value, qb))
    return out


def clean_block(a: Sca, u: UniversalPCA, lay: UniversalLayout, q: int, table_bits=None) -> list[int]:
    """Cell codes of the canonical clean block encoding state ``q``."""
    if table_bits is None:
        table_bits = _table_bits(a, lay, u.base)
    cells = [u.cell(SYNC)]
    cells += [u.cell(QST, b) for b in _bits(q, lay.qbits)]
    cells += [u.cell(RSY)] * lay.gen.width
    for tag in (NQ0, NQ1, NQ2):
        cells += [u.cell(tag)] * lay.qbits
    for tag in (NR0, NR1, NR2):
        cells += [u.cell(tag)] * lay.gen.width
    for j, bit in enumerate(table_bits):
        cells.append(u.cell(TABS if j % lay.qbits == 0 else TAB, bit))
    states = [u.state(c) for c in cells]
    states[0] = u.state(cells[0], ("START",))
    return states


def pack(states, n_states: int) -> int:
    v = 0
    for s in states:
        v = v * n_states + int(s)
    return v


def unpack(v: int, n_states: int, m: int) -> list[int]:
    out = []
    for _ in range(m):
        v, d = divmod(v, n_states)
        out.append(d)
    return out[::-1]


# ---------------------------------------------------------------- head-level engine


class Engine:
    """Exact branch propagation of ``u`` on a torus of whole blocks.

    Rows are configurations with integer multiplicities over a common
    denominator ``base**k``.  Only cells next to a head can change, so each
    step evaluates the tabulated program once per head; a head whose write
    depends on the random symbol splits its row into ``base`` rows.
    """

    def __init__(self, u: UniversalPCA, blocks: np.ndarray, m: int):
        """``blocks``: (rows, n_blocks, m) array of state codes."""
        self.u, self.m = u, m
        rows, nb, _ = blocks.shape
        H1 = len(u.heads) + 1
        flat = blocks.reshape(rows, nb * m)
        self.cells = (flat // H1).astype(np.int64)
        heads = flat % H1
        hr, hp = np.nonzero(heads)
        order = np.lexsort((hp, hr))
        hr, hp = hr[order], hp[order]
        counts = np.bincount(hr, minlength=rows)
        if not (counts == counts[0]).all() or counts[0] == 0:
            raise ScaError("every row needs the same positive number of heads")
        self.pos = hp.reshape(rows, counts[0]).astype(np.int64)
        self.head = (heads[hr, hp] - 1).reshape(rows, counts[0]).astype(np.int64)
        self.origin = np.arange(rows)
        self.mult = np.ones(rows, dtype=object)
        self.k = 0
        self.width = nb * m

    def step(self, branch: bool = True):
        u, B = self.u, self.u.base
        r = np.arange(len(self.cells))[:, None]
        cur = self.cells[r, self.pos]
        move = u.MOVE[self.head, cur]
        nxt = u.NEXT[self.head, cur]
        writes = u.WRITE[self.head, cur]  # (rows, heads, base)
        dep = (writes != writes[..., :1]).any(axis=-1)
        if branch and dep.any():
            cols = np.flatnonzero(dep.any(axis=0))
            fan = B ** len(cols)
            n = len(self.cells)
            combos = _all_words(B, len(cols))
            choice = np.zeros((n * fan, self.pos.shape[1]), dtype=np.int64)
            choice[:, cols] = np.tile(combos, (n, 1))
            self.cells = np.repeat(self.cells, fan, axis=0)
            self.pos = np.repeat(self.pos, fan, axis=0)
            self.origin = np.repeat(self.origin, fan)
            self.mult = np.repeat(self.mult, fan)
            move, nxt = np.repeat(move, fan, axis=0), np.repeat(nxt, fan, axis=0)
            writes = np.repeat(writes, fan, axis=0)
            out = np.take_along_axis(writes, choice[..., None], axis=-1)[..., 0]
            self.k += len(cols)
            r = np.arange(len(self.cells))[:, None]
        else:
            out = writes[..., 0]
        self.cells[r, self.pos] = out
        self.pos = (self.pos + move) % self.width
        self.head = nxt

    def run(self, steps: int, branch: bool = True):
        for _ in range(steps):
            self.step(branch)

    def blocks(self) -> np.ndarray:
        """Current state codes as (rows, n_blocks, m)."""
        H1 = len(self.u.heads) + 1
        codes = self.cells * H1
        r = np.arange(len(codes))[:, None]
        codes[r, self.pos] += self.head + 1
        return codes.reshape(len(codes), -1, self.m)


def cycle_length(u: UniversalPCA, block: list[int], limit: int = 10**7) -> int:
    """Steps until every head is back in START on its SYNC cell (3-block torus)."""
    m = len(block)
    eng = Engine(u, np.array([[block] * 3], dtype=np.int64), m)
    start = eng.pos.copy()
    s0 = u.head_index[("START",)]
    for t in range(1, limit + 1):
        eng.step(branch=False)
        if (eng.head == s0).all() and (eng.pos == start).all():
            return t
    raise ScaError("the head program did not return to START")


# ---------------------------------------------------------------- public entry points


def universal_pca(P):
    """The universal PCA for the prime set ``P`` and its layout rule."""
    u = UniversalPCA(P)
    return u, (lambda a: _timed_layout(a, u))


def _timed_layout(a: Sca, u: UniversalPCA) -> UniversalLayout:
    lay = layout_for(a, u)
    block = clean_block(a, u, lay, 0)
    return UniversalLayout(lay.m, lay.fields, lay.qbits, lay.gen, lay.entries, cycle_length(u, block))


def encode_into_universal(a: Sca, u: UniversalPCA, P=None, L_max: int = 2):
    """Layout, clean-block injection and witness for ``a <= u``.

    The witness is stochastic when the generation map is uniform, i.e. when
    the primes of ``|R|`` are among those of the universal alphabet, and
    non-deterministic in every case; both readings share the same data.
    """
    if P is not None and frozenset(P) != u.primes:
        raise ValueError(f"universal PCA built for {sorted(u.primes)}, not {sorted(P)}")
    lay = _timed_layout(a, u)
    bits = _table_bits(a, lay, u.base)
    n_states = u.states.size
    images = [pack(clean_block(a, u, lay, q, bits), n_states) for q in range(a.states.size)]
    i = TrimMap.restriction(images, n_states**lay.m)
    witness = SimWitness(RescaleParams(1, 1, 0), RescaleParams(lay.m, lay.t_U, 0), (i,), L_max)
    return lay, i, witness


def encode_config(u: UniversalPCA, i: TrimMap, m: int, word) -> list[int]:
    """Concatenated clean blocks for a word of simulated states."""
    out = []
    for q in word:
        out.extend(unpack(i.mapping[q], u.states.size, m))
    return out


def decode_config(u: UniversalPCA, i: TrimMap, m: int, cells) -> list:
    """Simulated states of whole blocks (None for a block that is not clean)."""
    lookup = {img: q for q, img in enumerate(i.mapping)}
    return [lookup.get(pack(cells[j : j + m], u.states.size)) for j in range(0, len(cells), m)]


def simulate_window(a: Sca, u: UniversalPCA, w: SimWitness, L: int):
    """Decoded one-step counts for every context of length ``L + 2``.

    Returns ``(contexts, counts, denominator)`` with ``counts[c]`` a dict
    from decoded window words (None when some block is not clean) to
    multiplicities.
    """
    if w.left_params != RescaleParams(1, 1, 0) or w.right_params.k != 0 or len(w.trims) != 1:
        raise ScaError("not a universal-machine witness")
    m, t_U = w.right_params.m, w.right_params.t
    i = w.trims[0]
    n_states = u.states.size
    blocks = [unpack(img, n_states, m) for img in i.mapping]
    ctxs = list(itertools.product(range(a.states.size), repeat=L + 2))
    init = np.array([[blocks[q] for q in ctx] for ctx in ctxs], dtype=np.int64)
    eng = Engine(u, init, m)
    eng.run(t_U)
    final = eng.blocks()
    lookup = {tuple(b): q for q, b in enumerate(blocks)}
    counts = [dict() for _ in ctxs]
    for row in range(len(final)):
        word = tuple(lookup.get(tuple(final[row, j].tolist())) for j in range(1, L + 1))
        key = None if None in word else word
        d = counts[eng.origin[row]]
        d[key] = d.get(key, 0) + eng.mult[row]
    return ctxs, counts, u.base**eng.k


def universal_verdict(a: Sca, u: UniversalPCA, w: SimWitness, kind: str = "S",
                      L_max: int | None = None) -> EqualityVerdict:
    """Compare decoded block dynamics with ``a`` on all windows ``L <= L_max``.

    ``kind`` is ``"S"`` (exact weights) or ``"N"`` (supports); a block that
    does not end clean is reported as an Unequal witness with word ().
    """
    L_max = w.verified_bound if L_max is None else L_max
    n = 0
    for L in range(1, L_max + 1):
        ctxs, counts, denom = simulate_window(a, u, w, L)
        for ctx, got in zip(ctxs, counts):
            n += 1
            context = Word(a.states, ctx, -1)
            want = one_step_dist(a, context, (0, L))
            if None in got:
                return EqualityVerdict(UNEQUAL, (L_max, n), Witness(
                    context, (0, L), (), Fraction(got[None], denom), Fraction(0)))
            words = sorted(set(got) | want.support())
            for word in words:
                left = want[word]
                right = Fraction(got.get(word, 0), denom)
                differ = (left != right) if kind == "S" else ((left > 0) != (right > 0))
                if differ:
                    return EqualityVerdict(UNEQUAL, (L_max, n), Witness(context, (0, L), word, left, right))
    return EqualityVerdict(EQUAL, (L_max, n))
