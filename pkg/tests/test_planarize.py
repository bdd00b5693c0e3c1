import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from nclforge.errors import GraphError, ReductionError
from nclforge.games import solve_ncl
from nclforge.generate import random_acyclic_ncl
from nclforge.graph import ConstraintGraph, Edge, Kind, Vertex, is_legal
from nclforge.planarize import (
    CROSSOVER_EDGES, HALF_EDGES, crossover_harness, expand_half_crossovers, four_red_vertices,
    half_crossover_harness, insert_crossover, verify_crossover, verify_half_blockage,
)


def four_free():
    vs = [Vertex.make(x, Kind.FREE) for x in ("top", "bottom", "left", "right")]
    es = [Edge("e1", "top", "bottom", 2, "top"), Edge("e2", "left", "right", 2, "left")]
    return ConstraintGraph.build(vs, es)


def test_crossover_labels_and_weights():
    assert len(CROSSOVER_EDGES) == 19
    assert all(CROSSOVER_EDGES[k][2] == 2 for k in "ABCDE")
    assert all(CROSSOVER_EDGES[k][2] == 1 for k in "FGHIJKLMNOPQRS")
    blue = {k for k, (_, _, w) in HALF_EDGES.items() if w == 2}
    assert blue == set("cejafkbd") and set(HALF_EDGES) - blue == set("hignom")


def test_insert_crossover_counts():
    g = four_free()
    g2, inst = insert_crossover(g, "e1", "e2")
    assert len(g2.vertices) == len(g.vertices) + 10
    assert len(g2.edges) == 19
    assert "e1" not in g2.edges and "e2" not in g2.edges
    assert set(inst.edge_map) == set(CROSSOVER_EDGES)
    assert is_legal(g2)


def test_insert_crossover_shared_endpoint():
    vs = [Vertex.make(x, Kind.FREE) for x in "abc"]
    g = ConstraintGraph.build(vs, [Edge("e1", "a", "b", 2, "a"), Edge("e2", "a", "c", 2, "a")])
    with pytest.raises(GraphError):
        insert_crossover(g, "e1", "e2")


def test_insert_crossover_consumed_edge():
    g2, _ = insert_crossover(four_free(), "e1", "e2")
    with pytest.raises(GraphError):
        insert_crossover(g2, "e1", "x1.C")


def test_insert_crossover_red_edge_needs_conversion():
    vs = [Vertex.make(x, Kind.FREE) for x in "abcd"]
    g = ConstraintGraph.build(vs, [Edge("e1", "a", "b", 1, "a"), Edge("e2", "c", "d", 2, "c")])
    with pytest.raises(ReductionError):
        insert_crossover(g, "e1", "e2")


def test_crossover_induced_subgraph_isomorphic():
    nx = pytest.importorskip("networkx")
    g2, inst = insert_crossover(four_free(), "e1", "e2")
    gadget = set(inst.vertex_map.values())
    got = nx.MultiGraph()
    for e in g2.edges.values():
        if e.u in gadget and e.v in gadget:
            got.add_edge(e.u, e.v, w=e.weight)
    want = nx.MultiGraph()
    for lab, (p, q, w) in CROSSOVER_EDGES.items():
        if lab not in "ABCD":
            want.add_edge(p, q, w=w)
    assert got.number_of_nodes() == 10
    assert nx.is_isomorphic(got, want, edge_match=lambda a, b: sorted(x["w"] for x in a.values())
                            == sorted(x["w"] for x in b.values()))


def test_propagation_sequences_replay():
    g, inst = crossover_harness()
    rep = verify_crossover(inst, g, "bounded")
    assert rep["vertical_replay"] and rep["horizontal_replay"]


def test_unbounded_iff_properties():
    g, inst = crossover_harness()
    rep = verify_crossover(inst, g, "unbounded")
    assert rep["vertical_iff"] and rep["horizontal_iff"]


def test_bare_crossover_does_not_exclude_in_bounded_mode():
    g, inst = crossover_harness()
    rep = verify_crossover(inst, g, "bounded")
    assert rep["vertical_blocks_horizontal"] is False
    assert rep["horizontal_blocks_vertical"] is False


def test_half_blockage():
    assert verify_half_blockage()
    assert verify_half_blockage(half_crossover_harness())


def test_expand_noop_without_four_red_vertices():
    g = four_free()
    g2, insts = expand_half_crossovers(g)
    assert insts == [] and set(g2.edges) == set(g.edges)


def test_expand_counts_and_idempotence():
    g, _ = crossover_harness()
    reds = four_red_vertices(g)
    assert len(reds) == 4
    g2, insts = expand_half_crossovers(g)
    assert len(insts) == 4
    # per replacement: 8 gadget vertices and 4 converters replace one vertex;
    # 14 gadget edges are added and the 4 red edges keep their ids
    assert len(g2.vertices) == len(g.vertices) + 11 * 4
    assert len(g2.edges) == len(g.edges) + 14 * 4
    assert four_red_vertices(g2) == []
    g3, again = expand_half_crossovers(g2)
    assert again == [] and set(g3.edges) == set(g2.edges)
    assert is_legal(g2)


def test_expanded_vertices_have_basic_kinds_or_converters():
    g2, _ = crossover_harness(expanded=True)
    for v in g2.vertices.values():
        if v.kind is Kind.FREE and ".h.y" in v.id:
            assert v.min_inflow == 1
    assert is_legal(g2)


def _declared_crossings(g, rng, limit=2):
    blues = [e for e in sorted(g.edges) if g.edges[e].weight == 2 and e != g.target]
    pairs = [(a, b) for a, b in itertools.combinations(blues, 2)
             if not {g.edges[a].u, g.edges[a].v} & {g.edges[b].u, g.edges[b].v}]
    rng.shuffle(pairs)
    out, used = [], set()
    for a, b in pairs:
        if len(out) == limit:
            break
        if a in used or b in used:
            continue
        out.append((a, b))
        used |= {a, b}
    return out


def test_planarizing_acyclic_graphs_preserves_winnability():
    checked = 0
    seed = 0
    while checked < 20:
        rng = random.Random(seed)
        seed += 1
        g = random_acyclic_ncl(rng, 6)
        crossings = _declared_crossings(g, rng)
        if not crossings:
            continue
        h = g
        for a, b in crossings:
            h, _ = insert_crossover(h, a, b)
        assert is_legal(h)
        assert solve_ncl(h).verdict == solve_ncl(g).verdict, seed - 1
        checked += 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_insertion_preserves_legality(seed):
    rng = random.Random(seed)
    g = random_acyclic_ncl(rng, 7)
    for a, b in _declared_crossings(g, rng):
        g, _ = insert_crossover(g, a, b)
        assert is_legal(g)
