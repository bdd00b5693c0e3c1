"""Acceptance suite: one PASS/FAIL line per criterion, with pinned budgets.

Run with ``pytest tests/test_acceptance.py -v``; the lines are printed even
when output capture is on.
"""
import inspect
import subprocess
import sys
import time

import pytest

from nclforge.campaign import run_campaign, sample
from nclforge.graph import Kind

# wall-clock budgets in seconds
BUDGET = {
    1: 10, 2: 600, 3: 600, 4: 600, 5: 1, 6: 1, 7: 60, 8: 900, 9: 1, 10: 300, 11: 600, 12: 600,
}


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail, seconds):
        within = seconds <= BUDGET[n]
        line = (f"ACCEPTANCE {n:>2} {'PASS' if ok and within else 'FAIL'}  {detail}  "
                f"[{seconds:.2f}s of {BUDGET[n]}s]")
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
        assert within, line
    return emit


def test_1_crossover(report):
    from nclforge.planarize import crossover_harness, verify_crossover, verify_half_blockage
    t0 = time.perf_counter()
    g, inst = crossover_harness()
    unb = verify_crossover(inst, g, "unbounded")
    bnd = verify_crossover(inst, g, "bounded")
    ge, inste = crossover_harness(expanded=True)
    exp = verify_crossover(inste, ge, "bounded")
    half = verify_half_blockage()
    dt = time.perf_counter() - t0
    parts = {
        "iff": unb["vertical_iff"] and unb["horizontal_iff"],
        "replay": bnd["vertical_replay"] and bnd["horizontal_replay"],
        "exclusion": exp["vertical_blocks_horizontal"] and exp["horizontal_blocks_vertical"],
        "half": bool(half),
    }
    report(1, all(parts.values()), f"crossover {parts} (exclusion on the expanded crossover)", dt)


def test_2_klondike_campaign(report, tmp_path):
    t0 = time.perf_counter()
    rep = run_campaign("klondike", 100, 0, 8, out_dir=str(tmp_path))
    dt = time.perf_counter() - t0
    lifted = all(r.get("lifted_ok", True) for r in rep["instances"])
    ok = rep["equivalent"] == 100 and rep["mismatches"] == 0 and lifted
    report(2, ok, f"klondike campaign: {rep['summary']}, lifted witnesses legal: {lifted}", dt)


def test_3_klondike_move_counts(report):
    from nclforge.klondike import move_counts, reduce_ncl_to_klondike, solve_klondike
    t0 = time.perf_counter()
    checked, bad = 0, []
    for i in range(100):
        k, _ = reduce_ncl_to_klondike(sample("klondike", 0, i, 8))
        rep = solve_klondike(k)
        if rep.verdict != "winnable":
            continue
        c, mn = move_counts(rep.witness), k.m * k.n
        checked += 1
        if not (c["TurnUp"] == mn and c["ToSuitStack"] == mn and c["MoveBlock"] <= mn):
            bad.append(i)
    dt = time.perf_counter() - t0
    report(3, checked > 0 and not bad, f"klondike move counts on {checked} winning witnesses, violations {bad}", dt)


def test_4_mahjong_campaign(report, tmp_path):
    t0 = time.perf_counter()
    rep = run_campaign("mahjong", 100, 0, 8, out_dir=str(tmp_path))
    dt = time.perf_counter() - t0
    lifted = all(r.get("lifted_ok", True) for r in rep["instances"])
    ok = rep["equivalent"] == 100 and rep["mismatches"] == 0 and lifted
    report(4, ok, f"mahjong campaign: {rep['summary']}, lifted witnesses legal: {lifted}", dt)


def test_5_mahjong_gadgets(report):
    from nclforge.mahjong import gadget_behavior
    want = {
        Kind.AND: {(): [()], (0,): [()], (1,): [()], (0, 1): [(0,)]},
        Kind.OR: {(): [()], (0,): [(0,)], (1,): [(0,)], (0, 1): [(0,)]},
        Kind.FANOUT: {(): [()], (0,): [(0, 1)]},
        Kind.CHOICE: {(): [()], (0,): [(0,), (1,)]},
    }
    slowest, ok = 0.0, True
    for kind, exp in want.items():
        t0 = time.perf_counter()
        got = gadget_behavior(kind)
        slowest = max(slowest, time.perf_counter() - t0)
        ok &= got == {frozenset(k): {frozenset(s) for s in v} for k, v in exp.items()}
    report(5, ok, "mahjong gadget behavior for AND, OR, FANOUT, CHOICE (slowest gadget timed)", slowest)


def test_6_nonogram_golden(report):
    from nclforge.nonogram import small_example, solve_nonogram
    t0 = time.perf_counter()
    sols = solve_nonogram(small_example(), 5)
    dt = time.perf_counter() - t0
    black = {6 * r + c for r in range(6) for c in range(6) if sols and sols[0][r][c]}
    want = {0, 1, 5, 7, 9, 10, 11, 13, 15, 16, 19, 20, 21, 25, 26, 27, 28, 33}
    report(6, len(sols) == 1 and black == want, f"small nonogram: {len(sols)} solution, {len(black)} black cells", dt)


def test_7_nonogram_gadgets(report):
    from nclforge.nonogram import gadget_tuples
    t0 = time.perf_counter()
    and_t, or_t = gadget_tuples("AND"), gadget_tuples("OR")
    dt = time.perf_counter() - t0
    ok = (set(and_t) == {(1, 1, 0), (1, 0, 1), (1, 1, 1), (0, 0, 1), (0, 1, 1)}
          and set(or_t) == {(1, 0, 0), (1, 1, 0), (1, 0, 1), (1, 1, 1), (0, 0, 1), (0, 1, 0), (0, 1, 1)}
          and or_t[(1, 0, 1)] >= 2)
    report(7, ok, f"nonogram gadget tuples, OR (1,0,1) has {or_t.get((1, 0, 1))} solutions", dt)


def test_8_nonogram_campaign(report, tmp_path):
    t0 = time.perf_counter()
    rep = run_campaign("nonogram", 50, 0, 6, out_dir=str(tmp_path))
    dt = time.perf_counter() - t0
    legal = all(r.get("orientation_legal", True) for r in rep["instances"])
    ok = rep["equivalent"] == 50 and rep["mismatches"] == 0 and legal
    report(8, ok, f"nonogram campaign: {rep['summary']}, orientations legal: {legal}", dt)


def _rule_cases():
    import test_doushouqi_rules as rules
    out = []
    for name, f in vars(rules).items():
        if not name.startswith("test_") or hasattr(f, "hypothesis") or "exhaustive" in name:
            continue
        if inspect.signature(f).parameters:
            continue
        out.append(f)
    return out


def test_9_doushouqi_rules(report):
    cases = _rule_cases()
    t0 = time.perf_counter()
    failed = []
    for f in cases:
        try:
            f()
        except AssertionError:
            failed.append(f.__name__)
    dt = time.perf_counter() - t0
    ok = len(cases) >= 30 and not failed and "test_standard_board_picture" in [f.__name__ for f in cases]
    report(9, ok, f"dou shou qi standard board and {len(cases)} rule cases, failed {failed}", dt)


def test_10_doushouqi_support(report):
    from nclforge.doushouqi import SUPPORT_KINDS, verify_support
    t0 = time.perf_counter()
    res = {k: verify_support(k).ok for k in SUPPORT_KINDS}
    dt = time.perf_counter() - t0
    report(10, len(res) == 5 and all(res.values()), f"support constructions {res}", dt)


def test_11_doushouqi_smoke(report, dsq_smoke):
    from nclforge.doushouqi import BLACK_WIN, WHITE_WIN
    side = {"white": WHITE_WIN, "black": BLACK_WIN}[dsq_smoke["winner_2cl"]]
    ok = dsq_smoke["report"].value == side
    report(11, ok, f"smallest 2CL: graph winner {dsq_smoke['winner_2cl']}, board value "
                   f"{dsq_smoke['report'].value} over {dsq_smoke['report'].states} positions",
           dsq_smoke["seconds"])


def test_12_verify_determinism(report, tmp_path):
    cmd = [sys.executable, "-m", "nclforge.cli", "verify", "klondike", "--count", "20", "--seed", "0",
           "--out-dir", str(tmp_path)]
    t0 = time.perf_counter()
    a = subprocess.run(cmd, capture_output=True, check=False)
    b = subprocess.run(cmd, capture_output=True, check=False)
    dt = time.perf_counter() - t0
    ok = a.returncode == 0 and a.stdout == b.stdout and len(a.stdout) > 0
    report(12, ok, f"verify output identical across two runs ({len(a.stdout)} bytes)", dt)
