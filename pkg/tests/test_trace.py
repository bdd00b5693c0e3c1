import pytest

from nclforge.errors import NclForgeError
from nclforge.graph import ConstraintGraph, Edge, Kind, Vertex, graph_to_dict
from nclforge.trace import ReductionTrace, check_lifted, lift_witness


def chain():
    # a -e1-> v(OR) ... e2 is the target, reversible once e1 points at v
    vs = [Vertex.make("v", Kind.OR), Vertex.make("a", Kind.FREE), Vertex.make("b", Kind.FREE),
          Vertex.make("c", Kind.FREE)]
    es = [Edge("e1", "v", "a", 2, "a"), Edge("e2", "v", "b", 2, "v"), Edge("e3", "v", "c", 2, "c")]
    return ConstraintGraph.build(vs, es, "e2")


def test_roles_are_checked():
    tr = ReductionTrace("klondike", chain())
    tr.add_edge("e1", "S6", "lock")
    with pytest.raises(ValueError):
        tr.add_edge("e1", "S6", "door")
    assert tr.element_of("e1", "lock") == "S6"
    assert tr.element_of("e1", "key") is None


def test_round_trip(tmp_path):
    tr = ReductionTrace("mahjong", chain(), params={"x": [1, 2]})
    tr.add_edge("e2", "tile3", "key")
    tr.vertices["v"] = {"gadget": "G0", "kind": "OR", "index": 0}
    path = tmp_path / "t.json"
    tr.dump(path)
    back = ReductionTrace.load(path)
    assert back.to_dict() == tr.to_dict()
    assert graph_to_dict(back.source) == graph_to_dict(tr.source)


def test_check_lifted():
    tr = ReductionTrace("klondike", chain())
    assert check_lifted(tr, ["e1", "e2"])
    assert not check_lifted(tr, ["e2"])          # v would fall below its minimum
    assert not check_lifted(tr, ["e1"])          # never reaches the target
    assert not check_lifted(tr, [])
    assert not check_lifted(tr, ["e1", "e1", "e2"])   # bounded: each edge once


def test_lift_witness_dispatch():
    tr = ReductionTrace("nonogram", chain())
    assert lift_witness(tr, []) == []
    with pytest.raises(NclForgeError):
        lift_witness(tr, [[1]])
