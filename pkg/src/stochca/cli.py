"""Command-line interface and the JSON automaton file format."""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

from .core import (
    Alphabet,
    BudgetExceeded,
    CylinderDist,
    PeriodicConfig,
    ScaError,
    Sca,
    Word,
    fmt_rational,
    iter_dist,
    iter_dist_bruteforce,
    one_step_dist,
    sample_trajectory,
)

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NEGATIVE, EXIT_BUDGET = 0, 1, 2, 3, 4


class InvalidFile(ScaError):
    pass


class UsageError(ScaError):
    pass


# ---------------------------------------------------------------- files


def automaton_to_json(a: Sca, description: str = "") -> dict:
    if type(a) is not Sca:
        raise ScaError(f"{a!r} has no materialized table and cannot be saved")
    names = a.states.labels
    obj = {
        "states": list(names),
        "random": list(a.random.labels),
        "neighborhood": list(a.nbr.offsets),
        "random_neighborhood": list(a.rnd_nbr.offsets),
        "table": [names[int(x)] for x in a.table],
    }
    meta = {}
    if a.name:
        meta["name"] = a.name
    if description:
        meta["description"] = description
    if meta:
        obj["metadata"] = meta
    return obj


def dumps_canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n"


def save_automaton(a: Sca, path, description: str = "") -> None:
    Path(path).write_text(dumps_canonical(automaton_to_json(a, description)), encoding="utf-8")


def _names(obj, key: str, where: str) -> list[str]:
    value = obj.get(key)
    if not isinstance(value, list) or not value:
        raise InvalidFile(f"{where}: '{key}' must be a nonempty list of names")
    names = [str(x) for x in value]
    seen = set()
    for j, n in enumerate(names):
        if n in seen:
            raise InvalidFile(f"{where}: duplicate name {n!r} at {key}[{j}]")
        seen.add(n)
    return names


def _offsets(obj, key: str, where: str) -> list[int]:
    value = obj.get(key)
    if not isinstance(value, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
        raise InvalidFile(f"{where}: '{key}' must be a list of integers")
    if len(set(value)) != len(value):
        raise InvalidFile(f"{where}: '{key}' has duplicate offsets")
    return value


def automaton_from_json(obj, where: str = "<json>") -> Sca:
    if not isinstance(obj, dict):
        raise InvalidFile(f"{where}: top level must be an object")
    states = _names(obj, "states", where)
    random = _names(obj, "random", where)
    nbr = _offsets(obj, "neighborhood", where)
    rnd = _offsets(obj, "random_neighborhood", where)
    table = obj.get("table")
    if not isinstance(table, list):
        raise InvalidFile(f"{where}: 'table' must be a list of state names")
    expected = len(states) ** len(nbr) * len(random) ** len(rnd)
    if len(table) != expected:
        raise InvalidFile(f"{where}: table has {len(table)} entries, expected {expected}")
    index = {n: j for j, n in enumerate(states)}
    values = []
    for j, entry in enumerate(table):
        if str(entry) not in index:
            raise InvalidFile(f"{where}: table[{j}] = {entry!r} is not a declared state")
        values.append(index[str(entry)])
    meta = obj.get("metadata") or {}
    return Sca(Alphabet.of(states), Alphabet.of(random), nbr, rnd, values, name=str(meta.get("name", "")))


def load_automaton(path) -> Sca:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidFile(f"{path}: {exc.strerror}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidFile(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return automaton_from_json(obj, str(path))


# ---------------------------------------------------------------- argument helpers


def parse_context(text: str, alphabet: Alphabet) -> Word:
    word, sep, anchor = text.rpartition("@")
    if not sep:
        word, anchor = text, "0"
    try:
        return Word.parse(alphabet, word, int(anchor))
    except ValueError as exc:
        raise UsageError(f"bad context {text!r}: {exc}") from None


def parse_window(text: str) -> tuple[int, int]:
    try:
        z, length = text.split(":")
        return int(z), int(length)
    except ValueError:
        raise UsageError(f"bad window {text!r}; expected Z:L") from None


def parse_caps(text: str) -> tuple[int, int, int, int]:
    try:
        m, t, k, L = (int(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"bad caps {text!r}; expected m,t,k,L") from None
    return m, t, k, L


def _dist_payload(d: CylinderDist, decimal: bool) -> dict:
    out = {"anchor": d.anchor, "length": d.length, "weights": d.to_json()}
    if decimal:
        out["decimal_approx"] = {d.alphabet.format(u): f"{float(w):.6g}" for u, w in d.items()}
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stochca", description="Exact workbench for stochastic cellular automata.")
    p.add_argument("--decimal", action="store_true", help="add approximate decimals (non-normative)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("info", help="summarize an automaton")
    s.add_argument("automaton")

    s = sub.add_parser("run", help="sample a trajectory on a periodic configuration")
    s.add_argument("automaton")
    s.add_argument("--config", required=True, help="period word of the initial configuration")
    s.add_argument("--steps", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("dist", help="exact output distribution on a window")
    s.add_argument("automaton")
    s.add_argument("--context", required=True, help="WORD@Z")
    s.add_argument("--window", required=True, help="Z:L")
    s.add_argument("--steps", type=int, default=1)
    s.add_argument("--brute-force", action="store_true")

    s = sub.add_parser("equal", help="bounded equality of global maps")
    s.add_argument("left")
    s.add_argument("right")
    s.add_argument("--max-window", type=int, required=True)
    s.add_argument("--nondet", action="store_true", help="compare supports only")

    s = sub.add_parser("couple", help="build and verify a coupling certificate")
    s.add_argument("left")
    s.add_argument("right")
    s.add_argument("--context", required=True, help="WORD@Z")
    s.add_argument("--level", type=int, required=True)

    s = sub.add_parser("simsearch", help="search an intrinsic simulation witness")
    s.add_argument("left")
    s.add_argument("right")
    s.add_argument("--flavor", required=True, help="{D|N|S}-{i|pi|m}")
    s.add_argument("--caps", default="1,1,0,2", help="m,t,k,L")

    s = sub.add_parser("build", help="constructions")
    s.add_argument("kind", choices=["pca-embed", "noise-lift", "universal"])
    s.add_argument("automaton")
    s.add_argument("--out", help="where to write the built automaton")
    s.add_argument("--primes", default="2", help="prime set of the universal PCA, e.g. 2,3")
    s.add_argument("--verify", type=int, default=0, metavar="L", help="verify the witness up to window L")

    s = sub.add_parser("zoo", help="write example automata")
    s.add_argument("name", choices=["parity", "blank-noise", "noise", "identity", "shift", "xor", "constant"])
    s.add_argument("--dir", default=".")
    return p


# ---------------------------------------------------------------- commands


def _cmd_info(args):
    from .simulation import certify_noisy, is_deterministic, prime_factors

    a = load_automaton(args.automaton)
    payload = {
        "name": a.name,
        "states": list(a.states.labels),
        "random": list(a.random.labels),
        "neighborhood": list(a.nbr.offsets),
        "random_neighborhood": list(a.rnd_nbr.offsets),
        "radius": a.radius,
        "deterministic": is_deterministic(a),
        "certified_noisy": certify_noisy(a),
        "random_primes": sorted(prime_factors(a.random.size)),
    }
    return EXIT_OK, "ok", payload


def _cmd_run(args):
    a = load_automaton(args.automaton)
    try:
        c = PeriodicConfig.parse(a.states, args.config)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rows = sample_trajectory(a, c, args.steps, args.seed)
    return EXIT_OK, "ok", {"seed": args.seed, "rows": [a.states.format(r.period_word) for r in rows]}


def _cmd_dist(args):
    a = load_automaton(args.automaton)
    ctx = parse_context(args.context, a.states)
    window = parse_window(args.window)
    if args.brute_force:
        d = iter_dist_bruteforce(a, ctx, window, args.steps)
    elif args.steps == 1:
        d = one_step_dist(a, ctx, window)
    else:
        d = iter_dist(a, ctx, window, args.steps)
    return EXIT_OK, "ok", _dist_payload(d, args.decimal)


def _cmd_equal(args):
    from .equivalence import nondet_equal, one_step_equal

    a, b = load_automaton(args.left), load_automaton(args.right)
    check = nondet_equal if args.nondet else one_step_equal
    v = check(a, b, args.max_window)
    return (EXIT_OK if v.equal else EXIT_NEGATIVE), v.status, v.to_json()


def _cmd_couple(args):
    from .equivalence import Coupling, build_coupling, verify_coupling

    a, b = load_automaton(args.left), load_automaton(args.right)
    ctx = parse_context(args.context, a.states)
    g = build_coupling(a, b, ctx, args.level)
    if not isinstance(g, Coupling):
        return EXIT_NEGATIVE, g.status, g.to_json()
    payload = g.to_json()
    payload["verified"] = verify_coupling(a, b, ctx, g)
    return EXIT_OK, "Coupled", payload


def _cmd_simsearch(args):
    from .simulation import SimFlavor, search_simulation

    a, b = load_automaton(args.left), load_automaton(args.right)
    try:
        flavor = SimFlavor.parse(args.flavor)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    result = search_simulation(a, b, flavor, parse_caps(args.caps))
    if hasattr(result, "code"):
        return EXIT_NEGATIVE, "NotFoundWithinBounds", result.to_json()
    return EXIT_OK, "Found", result.to_json()


def _cmd_build(args):
    from .constructions import pca_embed
    from .equivalence import lift_to_noise

    a = load_automaton(args.automaton)
    if args.kind == "pca-embed":
        b, i, w = pca_embed(a)
        payload = {"states": b.states.size, "injection": i.to_json(), "witness": w.to_json()}
        if args.verify:
            from .simulation import verify_witness

            payload["verified"] = verify_witness(a, b, "S-i", w, args.verify)
    elif args.kind == "noise-lift":
        b = lift_to_noise(a)
        payload = {"states": b.states.size}
    else:
        from .universal import encode_into_universal, universal_pca, universal_verdict

        primes = {int(x) for x in args.primes.split(",")}
        u, _ = universal_pca(primes)
        lay, i, w = encode_into_universal(a, u, primes)
        payload = {"layout": lay.to_json(), "states": u.states.size,
                   "right": w.right_params.to_json(), "verified_bound": w.verified_bound}
        if args.verify:
            payload["verdicts"] = {
                kind: universal_verdict(a, u, w, kind, args.verify).to_json() for kind in ("N", "S")
            }
        return EXIT_OK, "Built", payload
    if args.out:
        save_automaton(b, args.out)
        payload["out"] = args.out
    return EXIT_OK, "Built", payload


def _cmd_zoo(args):
    from . import constructions as C

    out = Path(args.dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.name == "blank-noise":
        a, b = C.blank_noise_pair()
        items = {"blankA.json": a, "blankB.json": b}
    else:
        make = {"parity": C.parity_sca, "noise": C.noise_ca, "identity": C.identity_ca,
                "shift": C.shift_ca, "xor": C.xor_ca, "constant": C.constant_ca}[args.name]
        items = {f"{args.name}.json": make()}
    written = []
    for fname, a in items.items():
        save_automaton(a, out / fname)
        written.append(str(out / fname))
    return EXIT_OK, "ok", {"written": written}


COMMANDS = {
    "info": _cmd_info, "run": _cmd_run, "dist": _cmd_dist, "equal": _cmd_equal,
    "couple": _cmd_couple, "simsearch": _cmd_simsearch, "build": _cmd_build, "zoo": _cmd_zoo,
}


def _digest(args) -> str:
    h = hashlib.sha256()
    for key in ("automaton", "left", "right"):
        path = getattr(args, key, None)
        if path and Path(path).is_file():
            h.update(Path(path).read_bytes())
    return h.hexdigest()[:16]


def run_command(argv=None, out=None) -> int:
    """Run one subcommand; the report goes to ``out`` (stdout by default)."""
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    started = time.perf_counter()
    try:
        code, verdict, payload = COMMANDS[args.command](args)
    except InvalidFile as exc:
        print(f"invalid input file: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (UsageError, ScaError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = {
        "command": list(sys.argv[1:] if argv is None else argv),
        "inputs": _digest(args),
        "verdict": verdict,
        "payload": payload,
    }
    out.write(dumps_canonical(report))
    print(f"wall time {time.perf_counter() - started:.3f}s", file=sys.stderr)
    return code


def main(argv=None) -> int:
    return run_command(argv)


if __name__ == "__main__":
    raise SystemExit(main())
