"""Seeded oracle-equivalence campaigns: graph solver versus game solver.

Instance ``i`` of a campaign with seed ``s`` is drawn from
``random.Random(s * 1_000_003 + i)``, so any single instance can be rebuilt
without replaying the ones before it. Reports hold no timings and list
instances in index order, which keeps them byte-identical across runs.
"""
from __future__ import annotations

import json
import os
import random
from concurrent.futures import ThreadPoolExecutor

from .errors import BoundExceeded, NclForgeError
from .games import DEFAULT_MAX_STATES, solve_2cl, solve_cgs, solve_ncl
from .generate import random_2cl_circuit, random_acyclic_ncl, random_andor_cubic
from .graph import graph_to_dict

TARGETS = ("klondike", "mahjong", "nonogram", "doushouqi")
# Dou Shou Qi boards are only solved when this many pieces or fewer are on them
DSQ_SOLVE_PIECES = 6


def instance_rng(seed: int, i: int) -> random.Random:
    return random.Random(seed * 1_000_003 + i)


def sample(target: str, seed: int, i: int, max_vertices: int):
    rng = instance_rng(seed, i)
    if target in ("klondike", "mahjong"):
        return random_acyclic_ncl(rng, max_vertices)
    if target == "nonogram":
        return random_andor_cubic(rng, max_vertices)
    if target == "doushouqi":
        return random_2cl_circuit(rng, max_vertices)
    raise NclForgeError(f"unknown target {target!r}")


def check_instance(target: str, g, max_states: int = DEFAULT_MAX_STATES, protector_depth: int = 3) -> dict:
    """Reduce ``g``, solve both sides and compare."""
    from .trace import check_lifted, lift_witness

    row: dict = {"vertices": len(g.vertices), "edges": len(g.edges)}
    if target == "klondike":
        from .klondike import reduce_ncl_to_klondike, solve_klondike
        want = solve_ncl(g, max_states).verdict
        inst, tr = reduce_ncl_to_klondike(g)
        rep = solve_klondike(inst, max_states)
    elif target == "mahjong":
        from .mahjong import reduce_ncl_to_mahjong, solve_mahjong
        want = solve_ncl(g, max_states).verdict
        inst, tr = reduce_ncl_to_mahjong(g)
        rep = solve_mahjong(inst, max_states)
    elif target == "nonogram":
        from .graph import is_legal
        from .nonogram import orientation_from_grid, reduce_cgs_to_nonogram, solve_nonogram
        want = solve_cgs(g, max_states).verdict
        puzzle, tr = reduce_cgs_to_nonogram(g)
        sols = solve_nonogram(puzzle, 1)
        got = "sat" if sols else "unsat"
        row.update(graph=want, game=got, equivalent=want == got, size=[puzzle.m, puzzle.n])
        if sols:
            row["orientation_legal"] = is_legal(g, orientation_from_grid(tr, sols[0]))
        return row
    elif target == "doushouqi":
        return _check_dsq(g, max_states, protector_depth, row)
    else:
        raise NclForgeError(f"unknown target {target!r}")
    row.update(graph=want, game=rep.verdict, equivalent=want == rep.verdict)
    if rep.verdict == "winnable":
        row["lifted_ok"] = check_lifted(tr, lift_witness(tr, rep.witness))
    return row


def _check_dsq(g, max_states, depth, row) -> dict:
    from . import doushouqi as dsq
    from .trace import check_lifted

    want = solve_2cl(g, max_states).verdict
    state, tr = dsq.reduce_2cl_to_doushouqi(g, protector_depth=depth)
    row.update(graph=want, size=[state.m, state.n], pieces=len(state.pieces),
               race_calibrated=dsq.race_calibrated(tr),
               strengths_ok=dsq.garrison_strengths(state) <= {2, 3, 4, 5})
    if len(state.pieces) > DSQ_SOLVE_PIECES:
        row.update(game="unsolved", equivalent=None)
        return row
    try:
        gg = dsq.GameGraph(state, max_states)
    except BoundExceeded:
        row.update(game="unsolved", equivalent=None)
        return row
    value = gg.report().value
    got = "white" if value == dsq.WHITE_WIN else "black"
    row.update(game=value, equivalent=want == got)
    if got == "white":
        row["lifted_ok"] = check_lifted(tr, dsq.lift_doushouqi(tr, gg.line()))
    return row


def run_campaign(target: str, count: int, seed: int, max_vertices: int,
                 max_states: int = DEFAULT_MAX_STATES, workers: int | None = None,
                 out_dir: str | None = None, protector_depth: int = 3) -> dict:
    """Check ``count`` seeded instances; mismatches are written as reproducers."""
    if target not in TARGETS:
        raise NclForgeError(f"unknown target {target!r}")

    def one(i):
        g = sample(target, seed, i, max_vertices)
        try:
            row = check_instance(target, g, max_states, protector_depth)
        except BoundExceeded as exc:
            row = {"vertices": len(g.vertices), "edges": len(g.edges), "game": "unsolved",
                   "equivalent": None, "error": str(exc)}
        return g, {"index": i, **row}

    workers = workers or min(4, os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(one, range(count)))
    rows = [r for _, r in results]
    bad = [(g, r) for g, r in results if r["equivalent"] is False
           or r.get("lifted_ok") is False or r.get("orientation_legal") is False
           or r.get("race_calibrated") is False or r.get("strengths_ok") is False]
    reproducers = []
    if bad:
        # the smallest failing graph is the reproducer worth reading first
        bad.sort(key=lambda gr: (gr[1]["vertices"], gr[1]["edges"], gr[1]["index"]))
        for g, r in bad:
            path = os.path.join(out_dir or ".", f"repro-{target}-{seed}-{r['index']}.json")
            with open(path, "w") as fh:
                json.dump({"target": target, "seed": seed, "index": r["index"], "result": r,
                           "graph": graph_to_dict(g)}, fh, indent=2, sort_keys=True)
                fh.write("\n")
            reproducers.append(path)
    equivalent = sum(r["equivalent"] is True for r in rows)
    unsolved = sum(r["equivalent"] is None for r in rows)
    summary = f"{equivalent}/{count} equivalent"
    if unsolved:
        summary += f", {unsolved} beyond the state bound"
    return {
        "target": target, "count": count, "seed": seed, "max_vertices": max_vertices,
        "equivalent": equivalent, "mismatches": len(bad), "unsolved": unsolved,
        "summary": summary, "reproducers": reproducers, "instances": rows,
    }
