import json
import random
import shutil
from pathlib import Path

import pytest

from nclforge.cli import main, trace_path
from nclforge.generate import random_acyclic_ncl
from nclforge.graph import Edge, Kind, Vertex, ConstraintGraph, graph_to_dict

DEMOS = Path(__file__).resolve().parent.parent / "demos"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def write(path, doc):
    path.write_text(json.dumps(doc))
    return path


@pytest.fixture
def demo(tmp_path):
    def copy(name):
        dst = tmp_path / name
        shutil.copy(DEMOS / name, dst)
        return dst
    return copy


def test_solve_ncl_json(capsys):
    code, out, _ = run(capsys, "solve-ncl", DEMOS / "or.json")
    assert code == 0
    assert json.loads(out) == {"nodes_explored": 2, "verdict": "winnable", "witness": ["e2"]}


def test_solve_pretty(capsys):
    code, out, _ = run(capsys, "solve-2cl", DEMOS / "smallest_2cl.json", "--pretty")
    assert code == 0 and out.startswith("white\n")


def test_negative_verdict_exits_one(capsys, tmp_path):
    vs = [Vertex.make("a", Kind.FREE, 2), Vertex.make("b", Kind.FREE)]
    g = ConstraintGraph.build(vs, [Edge("e", "a", "b", 2, "a")], "e")
    code, out, _ = run(capsys, "solve-ncl", write(tmp_path / "g.json", graph_to_dict(g)))
    assert code == 1 and json.loads(out)["verdict"] == "not-winnable"


def test_missing_file_exits_two(capsys, tmp_path):
    code, _, err = run(capsys, "solve-ncl", tmp_path / "nope.json")
    assert code == 2 and "nclforge:" in err


def test_bad_json_exits_two(capsys, tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{")
    assert run(capsys, "solve-ncl", p)[0] == 2


def test_unknown_field_exits_two(capsys, tmp_path):
    doc = json.loads((DEMOS / "or.json").read_text())
    doc["colour"] = "red"
    assert run(capsys, "solve-ncl", write(tmp_path / "g.json", doc))[0] == 2


def test_usage_errors_exit_two(capsys):
    assert run(capsys, "reduce", "chess", "x.json")[0] == 2
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys)[0] == 2


def test_missing_target_exits_two(capsys):
    assert run(capsys, "solve-ncl", DEMOS / "andor.json")[0] == 2


def test_state_bound_exits_three(capsys, tmp_path):
    g = random_acyclic_ncl(random.Random(0), 8)
    code, _, err = run(capsys, "solve-ncl", write(tmp_path / "g.json", graph_to_dict(g)), "--max-states", 1)
    assert code == 3 and "bound" in err


def test_timeout_exits_three(capsys):
    code, _, err = run(capsys, "verify", "mahjong", "--count", 1, "--timeout-seconds", 1e-6)
    assert code == 3


def test_bad_seed_env_exits_two(capsys, monkeypatch):
    monkeypatch.setenv("NCLFORGE_SEED", "abc")
    assert run(capsys, "verify", "klondike", "--count", 1)[0] == 2


def test_reduce_solve_lift_klondike(capsys, demo):
    g = demo("acyclic.json")
    code, out, _ = run(capsys, "reduce", "klondike", g)
    assert code == 0
    doc = json.loads(out)
    assert Path(doc["instance"]).exists() and Path(doc["trace"]).exists()
    assert doc["trace"] == trace_path(doc["instance"])
    code, out, _ = run(capsys, "solve-game", "klondike", doc["instance"])
    assert code == 0 and json.loads(out)["verdict"] == "winnable"
    sol = g.with_name("sol.json")
    sol.write_text(out)
    code, out, _ = run(capsys, "lift-witness", doc["trace"], sol)
    assert code == 0 and json.loads(out)["legal"]


def test_reduce_mahjong_and_render(capsys, demo, tmp_path):
    out_path = tmp_path / "m.json"
    assert run(capsys, "reduce", "mahjong", demo("acyclic.json"), "-o", out_path)[0] == 0
    assert (tmp_path / "m.trace.json").exists()
    code, out, _ = run(capsys, "render", "mahjong", out_path, "--pretty")
    assert code == 0 and "cross section 0:" in out


def test_reduce_nonogram_and_lift(capsys, demo):
    code, out, _ = run(capsys, "reduce", "nonogram", demo("andor.json"))
    doc = json.loads(out)
    assert code == 0 and doc["instance"].endswith(".non")
    code, out, _ = run(capsys, "solve-game", "nonogram", doc["instance"])
    assert code == 0
    sol = Path(doc["instance"]).with_name("sol.json")
    sol.write_text(out)
    code, out, _ = run(capsys, "lift-witness", doc["trace"], sol)
    assert code == 0 and json.loads(out)["legal"]


def test_reduce_nonogram_rejects_nonplanar(capsys, tmp_path):
    vs = [Vertex.make(f"l{i}", Kind.OR, 2) for i in range(3)] + [Vertex.make(f"r{i}", Kind.OR, 2) for i in range(3)]
    es = [Edge(f"e{i}{j}", f"l{i}", f"r{j}", 2, None) for i in range(3) for j in range(3)]
    g = ConstraintGraph.build(vs, es)
    code, _, err = run(capsys, "reduce", "nonogram", write(tmp_path / "k33.json", graph_to_dict(g)))
    assert code == 2 and "planar" in err


def test_reduce_doushouqi_and_render(capsys, demo):
    code, out, _ = run(capsys, "reduce", "doushouqi", demo("smallest_2cl.json"), "--protector-depth", 0)
    doc = json.loads(out)
    assert code == 0
    code, out, _ = run(capsys, "render", "doushouqi", doc["instance"], "--pretty")
    assert code == 0 and "D" in out and "d" in out


def test_planarize(capsys, tmp_path):
    vs = [Vertex.make(x, Kind.FREE) for x in ("top", "bottom", "left", "right")]
    es = [Edge("e1", "top", "bottom", 2, "top"), Edge("e2", "left", "right", 2, "left")]
    g = write(tmp_path / "g.json", graph_to_dict(ConstraintGraph.build(vs, es)))
    cross = write(tmp_path / "c.json", [{"e1": "e1", "e2": "e2"}])
    out_path = tmp_path / "planar.json"
    code, out, _ = run(capsys, "planarize", g, "--crossings", cross, "-o", out_path)
    assert code == 0
    doc = json.loads(out)
    assert len(doc["crossovers"]) == 1 and len(doc["graph"]["edges"]) == 19
    assert json.loads(out_path.read_text()) == doc["graph"]
    bad = write(tmp_path / "bad.json", [{"e1": "e1"}])
    assert run(capsys, "planarize", g, "--crossings", bad)[0] == 2


def test_verify_is_deterministic(capsys, tmp_path):
    args = ("verify", "klondike", "--count", 6, "--seed", 3, "--max-vertices", 6, "--out-dir", tmp_path)
    a = run(capsys, *args)
    b = run(capsys, *args, "--workers", 2)
    assert a[0] == 0 and a[1] == b[1]


def test_verify_seed_from_environment(capsys, monkeypatch, tmp_path):
    args = ("verify", "mahjong", "--count", 3, "--max-vertices", 5, "--out-dir", tmp_path)
    monkeypatch.setenv("NCLFORGE_SEED", "7")
    a = run(capsys, *args)[1]
    b = run(capsys, *args[:-2], "--seed", 7, "--out-dir", tmp_path)[1]
    assert a == b
