"""Command line front door: ``nclforge <command> ...``.

Results go to standard output as JSON, or as text with ``--pretty``.
Exit status: 0 success or a positive verdict, 1 a negative verdict
(not winnable, unsat, black wins, draw), 2 bad input, 3 a resource bound.
"""
from __future__ import annotations

import argparse
import json
import os
import signal
import sys
from pathlib import Path

from .errors import BoundExceeded, GraphError, NclForgeError, ReductionError

DEFAULT_STATES = 10_000_000
DEFAULT_TIMEOUT = 60.0
GAMES = ("klondike", "mahjong", "nonogram", "doushouqi")
NEGATIVE = {"not-winnable", "unsat", "black", "black_win", "draw"}


class InputError(NclForgeError):
    """Unreadable or malformed command input."""


class Timeout(BoundExceeded):
    pass


def _emit(args, doc: dict, text: str | None = None) -> None:
    if args.pretty and text is not None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    elif args.pretty:
        sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(json.dumps(doc, sort_keys=True) + "\n")


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None


def _json(path: str):
    try:
        return json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None


def _graph(path: str):
    from .graph import graph_from_dict
    return graph_from_dict(_json(path))


def _load_instance(target: str, path: str):
    if target == "klondike":
        from .klondike import KlondikeInstance
        return KlondikeInstance.from_dict(_json(path))
    if target == "mahjong":
        from .mahjong import Arrangement
        return Arrangement.from_dict(_json(path))
    if target == "nonogram":
        from .nonogram import NonogramPuzzle
        return NonogramPuzzle.from_text(_read(path))
    from .doushouqi import DouShouQiState
    text = _read(path)
    if text.lstrip().startswith("{"):
        return DouShouQiState.from_dict(_json(path))
    return DouShouQiState.from_text(text)


def _dump_instance(target: str, inst) -> tuple[str, str]:
    """(file suffix, contents) of an instance in its interchange format."""
    if target == "nonogram":
        return ".non", inst.to_text()
    return ".json", json.dumps(inst.to_dict(), indent=2, sort_keys=True) + "\n"


def _render(target: str, inst) -> str:
    if target == "nonogram":
        return inst.to_text()
    return inst.render()


def _status(verdict: str) -> int:
    return 1 if verdict in NEGATIVE else 0


# commands --------------------------------------------------------------------


def cmd_solve_graph(args) -> int:
    from .games import solve_2cl, solve_cgs, solve_ncl
    solver = {"solve-ncl": solve_ncl, "solve-2cl": solve_2cl, "solve-cgs": solve_cgs}[args.command]
    rep = solver(_graph(args.graph), args.max_states)
    doc = rep.to_dict()
    _emit(args, doc, f"{rep.verdict}\nwitness: {json.dumps(rep.witness, sort_keys=True)}")
    return _status(rep.verdict)


def cmd_planarize(args) -> int:
    from .graph import graph_to_dict
    from .planarize import expand_half_crossovers, insert_crossover
    g = _graph(args.graph)
    crossings = _json(args.crossings) if args.crossings else []
    if not isinstance(crossings, list) or any(set(c) != {"e1", "e2"} for c in crossings):
        raise InputError('crossings must be a JSON array of {"e1", "e2"} objects')
    inserted = []
    for c in crossings:
        g, inst = insert_crossover(g, c["e1"], c["e2"])
        inserted.append({"e1": c["e1"], "e2": c["e2"], "prefix": inst.prefix,
                         "edges": dict(sorted(inst.edge_map.items()))})
    halves = []
    if args.expand_half:
        g, insts = expand_half_crossovers(g)
        halves = [{"prefix": i.prefix, "replaced": i.replaced_vertex} for i in insts]
    doc = {"graph": graph_to_dict(g), "crossovers": inserted, "half_crossovers": halves}
    if args.output:
        Path(args.output).write_text(json.dumps(doc["graph"], indent=2, sort_keys=True) + "\n")
    _emit(args, doc, f"{len(inserted)} crossovers, {len(halves)} half-crossovers, "
                     f"{len(g.vertices)} vertices, {len(g.edges)} edges")
    return 0


def _reduce(target: str, g, args):
    if target == "klondike":
        from .klondike import reduce_ncl_to_klondike
        return reduce_ncl_to_klondike(g)
    if target == "mahjong":
        from .mahjong import reduce_ncl_to_mahjong
        return reduce_ncl_to_mahjong(g)
    if target == "nonogram":
        from .nonogram import reduce_cgs_to_nonogram
        return reduce_cgs_to_nonogram(g)
    from .doushouqi import reduce_2cl_to_doushouqi
    return reduce_2cl_to_doushouqi(g, protector_depth=args.protector_depth)


def trace_path(instance_path: str) -> str:
    p = Path(instance_path)
    return str(p.with_name(p.stem + ".trace.json"))


def cmd_reduce(args) -> int:
    g = _graph(args.graph)
    inst, trace = _reduce(args.target, g, args)
    suffix, body = _dump_instance(args.target, inst)
    out = args.output or str(Path(args.graph).with_suffix("")) + f".{args.target}{suffix}"
    Path(out).write_text(body)
    tpath = trace_path(out)
    Path(tpath).write_text(json.dumps(trace.to_dict(), indent=2, sort_keys=True) + "\n")
    doc = {"target": args.target, "instance": out, "trace": tpath}
    _emit(args, doc, f"wrote {out} and {tpath}")
    return 0


def cmd_solve_game(args) -> int:
    inst = _load_instance(args.target, args.instance)
    if args.target == "klondike":
        from .klondike import solve_klondike
        doc = solve_klondike(inst, args.max_states).to_dict()
    elif args.target == "mahjong":
        from .mahjong import solve_mahjong
        doc = solve_mahjong(inst, args.max_states).to_dict()
    elif args.target == "nonogram":
        from .nonogram import solve_nonogram
        sols = solve_nonogram(inst, 2)
        doc = {"verdict": "sat" if sols else "unsat", "witness": sols[0] if sols else None,
               "unique": len(sols) == 1}
    else:
        from .doushouqi import GameGraph
        gg = GameGraph(inst, args.max_states)
        rep = gg.report()
        doc = {"verdict": rep.value, "depth": rep.depth, "nodes_explored": rep.states,
               "witness": [[list(a), list(b)] for a, b in gg.line()]}
    text = doc["verdict"]
    if args.target == "nonogram" and doc["witness"]:
        from .nonogram import grid_to_text
        text += "\n" + grid_to_text(doc["witness"])
    _emit(args, doc, text)
    return _status(doc["verdict"])


def cmd_lift(args) -> int:
    from .trace import ReductionTrace, check_lifted, lift_witness
    try:
        trace = ReductionTrace.from_dict(_json(args.trace))
    except (KeyError, TypeError) as exc:
        raise InputError(f"{args.trace}: not a reduction trace ({exc})") from None
    wit = _json(args.witness)
    if isinstance(wit, dict):
        wit = wit.get("witness")
    if trace.game == "nonogram":
        from .graph import is_legal
        from .nonogram import orientation_from_grid
        orient = orientation_from_grid(trace, wit)
        doc = {"orientation": orient, "legal": is_legal(trace.source, orient)}
        _emit(args, doc, json.dumps(orient, sort_keys=True))
        return 0 if doc["legal"] else 1
    moves = lift_witness(trace, wit or [])
    ok = check_lifted(trace, moves)
    doc = {"moves": moves, "legal": ok}
    _emit(args, doc, " ".join(moves) + ("" if ok else "\n(not a legal winning play)"))
    return 0 if ok else 1


def cmd_render(args) -> int:
    inst = _load_instance(args.target, args.instance)
    text = _render(args.target, inst)
    _emit(args, {"target": args.target, "text": text}, text)
    return 0


def cmd_verify(args) -> int:
    from .campaign import run_campaign
    rep = run_campaign(args.target, args.count, args.seed, args.max_vertices, args.max_states,
                       workers=args.workers, out_dir=args.out_dir, protector_depth=args.protector_depth)
    _emit(args, rep, rep["summary"])
    return 1 if rep["mismatches"] else 0


# parser -----------------------------------------------------------------------


def _seed_default() -> int:
    raw = os.environ.get("NCLFORGE_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"NCLFORGE_SEED must be an integer, not {raw!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--pretty", action="store_true", help="human-readable output")
    common.add_argument("--max-states", type=int, default=DEFAULT_STATES, help="state bound per solve")
    common.add_argument("--timeout-seconds", type=float, default=DEFAULT_TIMEOUT,
                        help="wall-clock bound per solve (per instance for verify)")

    p = _Parser(prog="nclforge", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("solve-ncl", "solve-2cl", "solve-cgs"):
        s = sub.add_parser(name, parents=[common], help=f"{name[6:].upper()} solver")
        s.add_argument("graph")
        s.set_defaults(func=cmd_solve_graph)
    s = sub.add_parser("planarize", parents=[common], help="insert crossover gadgets")
    s.add_argument("graph")
    s.add_argument("--crossings", help='JSON array of {"e1", "e2"} crossing pairs')
    s.add_argument("--expand-half", action="store_true", help="also expand half-crossovers")
    s.add_argument("-o", "--output", help="write the planar graph here")
    s.set_defaults(func=cmd_planarize)
    s = sub.add_parser("reduce", parents=[common], help="reduce a graph to a game instance")
    s.add_argument("target", choices=GAMES)
    s.add_argument("graph")
    s.add_argument("-o", "--output", help="instance path; the trace goes next to it")
    s.add_argument("--protector-depth", type=int, default=3,
                   help="one-way channels on each side of a Dou Shou Qi gadget protector")
    s.set_defaults(func=cmd_reduce)
    s = sub.add_parser("solve-game", parents=[common], help="solve a game instance")
    s.add_argument("target", choices=GAMES)
    s.add_argument("instance")
    s.set_defaults(func=cmd_solve_game)
    s = sub.add_parser("lift-witness", parents=[common], help="map a game witness back to edge reversals")
    s.add_argument("trace")
    s.add_argument("witness", help="solve-game output or a bare witness array")
    s.set_defaults(func=cmd_lift)
    s = sub.add_parser("render", parents=[common], help="draw a game instance as text")
    s.add_argument("target", choices=GAMES)
    s.add_argument("instance")
    s.set_defaults(func=cmd_render)
    s = sub.add_parser("verify", parents=[common], help="seeded oracle-equivalence campaign")
    s.add_argument("target", choices=GAMES)
    s.add_argument("--count", type=int, default=100)
    s.add_argument("--seed", type=int, default=None, help="default: $NCLFORGE_SEED or 0")
    s.add_argument("--max-vertices", type=int, default=8)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--out-dir", default=".", help="where mismatch reproducers are written")
    s.add_argument("--protector-depth", type=int, default=3)
    s.set_defaults(func=cmd_verify)
    return p


def _alarm(signum, frame):
    raise Timeout("wall-clock limit reached")


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if getattr(args, "seed", 0) is None:
            args.seed = _seed_default()
        limit = args.timeout_seconds * (args.count if args.command == "verify" else 1)
        if limit > 0 and hasattr(signal, "SIGALRM"):
            signal.signal(signal.SIGALRM, _alarm)
            signal.setitimer(signal.ITIMER_REAL, limit)
        try:
            return args.func(args)
        finally:
            if hasattr(signal, "SIGALRM"):
                signal.setitimer(signal.ITIMER_REAL, 0)
    except BoundExceeded as exc:
        sys.stderr.write(f"nclforge: resource bound exceeded: {exc}\n")
        return 3
    except (InputError, GraphError, ReductionError) as exc:
        sys.stderr.write(f"nclforge: {exc}\n")
        return 2
    except NclForgeError as exc:
        sys.stderr.write(f"nclforge: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
