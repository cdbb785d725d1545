"""Intrinsic simulation: bounded witness search, gates, and class membership."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .core import Alphabet, BudgetExceeded, ScaError, Sca, _all_words, check_budget, window_counts
from .equivalence import EqualityVerdict, nondet_equal, one_step_equal, _context_chunks
from .transform import (
    PROJECTION,
    RESTRICTION,
    RescaleParams,
    TrimError,
    TrimMap,
    apply_trims,
    check_projection,
    check_restriction,
    project,
    restrict,
    rescale,
)

PRIME_GATE = "PRIME_GATE"
DETERMINISTIC_IDEAL = "DETERMINISTIC_IDEAL"
NOISY_IDEAL = "NOISY_IDEAL"
EXHAUSTED = "EXHAUSTED"


def prime_factors(n: int) -> frozenset:
    if n < 1:
        raise ValueError("prime_factors needs a positive integer")
    out, p = set(), 2
    while p * p <= n:
        while n % p == 0:
            out.add(p)
            n //= p
        p += 1
    if n > 1:
        out.add(n)
    return frozenset(out)


def is_deterministic(a: Sca) -> bool:
    """The rule ignores its random arguments."""
    return not a.depends_on_random()


def is_noisy_bounded(a: Sca, L_max: int) -> bool:
    """Every word of length ``L <= L_max`` is reachable from every context."""
    return noisy_counterexample(a, L_max) is None


def noisy_counterexample(a: Sca, L_max: int):
    """First ``(context, L, unreachable word code)`` or None."""
    Q, rho = a.states.size, a.radius
    for L in range(1, L_max + 1):
        width = L + 2 * rho
        check_budget(Q**width * Q**L, f"noisiness sweep at window length {L}")
        for start, ctx in _context_chunks(Q, width, Q**L * a.random.size**width):
            counts, _ = window_counts(a, ctx, -rho, 0, L)
            miss = counts == 0
            if miss.any():
                c, u = np.argwhere(miss)[0]
                return tuple(int(x) for x in ctx[c]), L, int(u)
    return None


def certify_noisy(a: Sca) -> bool:
    """Exact sufficient condition for noisiness at every window length.

    If the rule is onto ``Q`` as a function of its random argument at the
    rightmost (or leftmost) random offset, whatever the other arguments,
    then any target word can be produced cell by cell: that random cell is
    read by no cell further left (right).
    """
    if a.r_rand == 0:
        return a.states.size == 1
    Q, R = a.states.size, a.random.size
    t = a.table.reshape(Q**a.r, *([R] * a.r_rand))
    offsets = a.rnd_nbr.offsets
    for v in {max(offsets), min(offsets)}:
        axis = 1 + offsets.index(v)
        moved = np.moveaxis(t, axis, -1).reshape(-1, R)
        if all(len(set(row.tolist())) == Q for row in moved):
            return True
    return False


def pf_gate(a: Sca, b: Sca) -> bool:
    """False only when both are non-deterministic with coprime random alphabets."""
    if is_deterministic(a) or is_deterministic(b):
        return True
    return bool(prime_factors(a.random.size) & prime_factors(b.random.size))


# ---------------------------------------------------------------- flavors and witnesses

_TRIM_KINDS = {"i": "injection", "pi": "projection", "m": "mixed"}


@dataclass(frozen=True)
class SimFlavor:
    global_kind: str  # D, N or S
    trim_kind: str  # injection, projection or mixed

    def __post_init__(self):
        if self.global_kind not in ("D", "N", "S"):
            raise ValueError(f"unknown global kind {self.global_kind!r}")
        if self.trim_kind not in _TRIM_KINDS.values():
            raise ValueError(f"unknown trim kind {self.trim_kind!r}")

    @classmethod
    def parse(cls, text: str) -> SimFlavor:
        g, _, t = text.partition("-")
        if t not in _TRIM_KINDS:
            raise ValueError(f"flavor {text!r} is not of the form {{D|N|S}}-{{i|pi|m}}")
        return cls(g, _TRIM_KINDS[t])

    def __str__(self) -> str:
        short = {v: k for k, v in _TRIM_KINDS.items()}
        return f"{self.global_kind}-{short[self.trim_kind]}"

    @classmethod
    def all(cls) -> list[SimFlavor]:
        return [cls(g, t) for g in "DNS" for t in _TRIM_KINDS.values()]


@dataclass(frozen=True)
class SimWitness:
    """``rescale(a, left) == trims(rescale(b, right))`` up to ``verified_bound``."""

    left_params: RescaleParams
    right_params: RescaleParams
    trims: tuple
    verified_bound: int

    def to_json(self) -> dict:
        return {
            "left": self.left_params.to_json(),
            "right": self.right_params.to_json(),
            "trims": [t.to_json() for t in self.trims],
            "verified_bound": self.verified_bound,
        }

    @classmethod
    def from_json(cls, obj: dict, b: Sca) -> SimWitness:
        right = RescaleParams.from_json(obj["right"])
        size = b.states.size**right.m
        trims = []
        for t in obj["trims"]:
            trim = TrimMap.from_json(t, size)
            trims.append(trim)
            size = trim.domain_size if trim.kind == RESTRICTION else trim.codomain_size
        return cls(RescaleParams.from_json(obj["left"]), right, tuple(trims), int(obj["verified_bound"]))


@dataclass(frozen=True)
class NotFound:
    """No witness within the caps; ``code`` says whether this is a proof."""

    code: str
    detail: str = ""
    skipped: tuple = field(default=())

    @property
    def is_obstruction(self) -> bool:
        return self.code != EXHAUSTED

    def to_json(self) -> dict:
        return {"code": self.code, "detail": self.detail,
                "skipped": [list(s) for s in self.skipped]}


def compose_witnesses(w1: SimWitness, w2: SimWitness) -> SimWitness:
    """``a <= b`` and ``b <= c`` sharing b's rescaling give ``a <= c``."""
    if w1.right_params != w2.left_params:
        raise ValueError("witnesses compose only when the middle rescalings coincide")
    return SimWitness(w1.left_params, w2.right_params, tuple(w2.trims) + tuple(w1.trims),
                      min(w1.verified_bound, w2.verified_bound))


# ---------------------------------------------------------------- search


def deterministic_part(a: Sca) -> Sca:
    """The automaton ``c -> F(c, 0)`` as a one-symbol-random CA."""
    rows = a.table.reshape(-1, a.random.size**a.r_rand)[:, 0]
    return Sca(a.states, Alphabet(1), a.nbr, (), rows, name=a.name)


def flavor_equal(flavor: SimFlavor, a: Sca, b: Sca, L_max: int) -> EqualityVerdict:
    if flavor.global_kind == "D":
        return one_step_equal(deterministic_part(a), deterministic_part(b), L_max)
    if flavor.global_kind == "N":
        return nondet_equal(a, b, L_max)
    return one_step_equal(a, b, L_max)


def _shifts(k_cap: int):
    yield 0
    for k in range(1, k_cap + 1):
        yield k
        yield -k


def _params(m_cap: int, t_cap: int, k_cap: int):
    for m in range(1, m_cap + 1):
        for t in range(1, t_cap + 1):
            for k in _shifts(k_cap):
                yield RescaleParams(m, t, k)


def _surjections(n: int, n_out: int):
    for targets in itertools.product(range(n_out), repeat=n):
        if len(set(targets)) == n_out:
            yield targets


def _trim_candidates(b2: Sca, n1: int, trim_kind: str):
    """Yield ``(trims, trimmed automaton)`` in the documented order."""
    n2 = b2.states.size
    if n1 > n2:
        return
    if trim_kind == "injection":
        stable: dict = {}
        for images in itertools.permutations(range(n2), n1):
            key = frozenset(images)
            if key not in stable:
                stable[key] = check_restriction(b2, TrimMap.restriction(sorted(key), n2))
            if stable[key]:
                i = TrimMap.restriction(images, n2)
                yield (i,), restrict(b2, i)
    elif trim_kind == "projection":
        for targets in _surjections(n2, n1):
            pi = TrimMap.projection(targets, n1)
            if check_projection(b2, pi):
                yield (pi,), project(b2, pi)
    else:
        for size in range(n1, n2 + 1):
            for subset in itertools.combinations(range(n2), size):
                i = TrimMap.restriction(subset, n2)
                if not check_restriction(b2, i):
                    continue
                sub = restrict(b2, i)
                for targets in _surjections(size, n1):
                    pi = TrimMap.projection(targets, n1)
                    if check_projection(sub, pi):
                        yield (i, pi), project(sub, pi)


def gate(a: Sca, b: Sca, flavor: SimFlavor, L_probe: int = 2) -> NotFound | None:
    """Sound obstructions checked before any enumeration."""
    if flavor.global_kind == "S" and not pf_gate(a, b):
        return NotFound(PRIME_GATE, f"PF({a.random.size}) and PF({b.random.size}) are disjoint")
    if flavor.global_kind in ("N", "S"):
        if is_deterministic(b) and not is_deterministic(a):
            return NotFound(DETERMINISTIC_IDEAL, "simulator is deterministic, simulated is not")
        if certify_noisy(b):
            try:
                bad = noisy_counterexample(a, L_probe)
            except BudgetExceeded:
                bad = None
            if bad is not None:
                return NotFound(NOISY_IDEAL, f"simulator is noisy, simulated misses a word: {bad}")
    return None


def search_simulation(a: Sca, b: Sca, flavor: SimFlavor, caps=(1, 1, 0, 2)):
    """First witness of ``a <= b`` within ``caps = (m, t, |k|, L_max)``.

    Order: right rescaling (m2, t2, |k2|), then left rescaling (m1, t1,
    |k1|), with shifts 0, 1, -1, 2, -2, ...; then trims by their mapped
    tuples.  Returns a :class:`SimWitness` or a :class:`NotFound`.
    """
    if isinstance(flavor, str):
        flavor = SimFlavor.parse(flavor)
    m_cap, t_cap, k_cap, L_max = caps
    blocked = gate(a, b, flavor)
    if blocked is not None:
        return blocked
    if flavor.global_kind == "D":
        a, b = deterministic_part(a), deterministic_part(b)
    skipped = []
    left_cache: dict = {}
    for p2 in _params(m_cap, t_cap, k_cap):
        try:
            b2 = rescale(b, p2)
        except BudgetExceeded:
            skipped.append(("right",) + p2.as_tuple())
            continue
        for p1 in _params(m_cap, t_cap, k_cap):
            n1 = a.states.size**p1.m
            if n1 > b2.states.size:
                continue
            if p1 not in left_cache:
                try:
                    left_cache[p1] = rescale(a, p1)
                except BudgetExceeded:
                    left_cache[p1] = None
            a1 = left_cache[p1]
            if a1 is None:
                skipped.append(("left",) + p1.as_tuple())
                continue
            try:
                for trims, trimmed in _trim_candidates(b2, n1, flavor.trim_kind):
                    if flavor_equal(flavor, a1, trimmed, L_max).equal:
                        return SimWitness(p1, p2, trims, L_max)
            except BudgetExceeded:
                skipped.append(("pair",) + p1.as_tuple() + p2.as_tuple())
    return NotFound(EXHAUSTED, "no witness within the caps", tuple(skipped))


def verify_witness(a: Sca, b: Sca, flavor: SimFlavor, w: SimWitness, L_max: int | None = None) -> bool:
    """Rebuild both sides and rerun the flavor's bounded equality."""
    if isinstance(flavor, str):
        flavor = SimFlavor.parse(flavor)
    verifier = getattr(b, "verify_simulation", None)
    if verifier is not None:
        return verifier(a, flavor, w)
    L = w.verified_bound if L_max is None else L_max
    if flavor.global_kind == "D":
        a, b = deterministic_part(a), deterministic_part(b)
    try:
        left = rescale(a, w.left_params)
        right = apply_trims(rescale(b, w.right_params), w.trims)
    except TrimError:
        return False
    if left.states.size != right.states.size:
        return False
    return flavor_equal(flavor, left, right, L).equal
