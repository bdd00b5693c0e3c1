import itertools
import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from nclforge.errors import BoundExceeded, GraphError
from nclforge.games import (
    BoundedState, Compiled, explore_unbounded, inflow, legal_moves_ncl, reachable_reversal_sets,
    solve_2cl, solve_cgs, solve_ncl, topological_edge_order, topological_vertex_order,
    with_black_fillers,
)
from nclforge.generate import random_acyclic_ncl, random_andor_cubic
from nclforge.graph import (
    ConstraintGraph, Edge, Kind, Owner, Vertex, graph_from_dict, graph_to_dict, is_legal,
)

V = Vertex.make
W, B = Owner.WHITE, Owner.BLACK


def or_example():
    vs = [V("v", Kind.OR), V("a", Kind.FREE), V("b", Kind.FREE), V("c", Kind.FREE)]
    es = [Edge("e1", "v", "a", 2, "v"), Edge("e2", "v", "b", 2, "b"), Edge("e3", "v", "c", 2, "c")]
    return ConstraintGraph.build(vs, es, "e2")


def and_blocked(target="r1"):
    """AND v with reds in from FREE helpers and its blue out to w (min 2, sole edge)."""
    vs = [V("v", Kind.AND), V("p", Kind.FREE), V("q", Kind.FREE), V("w", Kind.FREE, 2)]
    es = [Edge("r1", "v", "p", 1, "v"), Edge("r2", "v", "q", 1, "v"), Edge("b", "v", "w", 2, "w")]
    return ConstraintGraph.build(vs, es, target)


# inflow / is_legal ------------------------------------------------------------

def test_inflow_or_all_in():
    vs = [V("v", Kind.OR)] + [V(x, Kind.FREE) for x in "abc"]
    es = [Edge(f"e{x}", "v", x, 2, "v") for x in "abc"]
    assert inflow(BoundedState(ConstraintGraph.build(vs, es)), "v") == 6


def test_inflow_and_reds_in():
    g = and_blocked()
    assert inflow(BoundedState(g), "v") == 2


def test_inflow_nothing_inward():
    g = and_blocked()
    assert inflow(BoundedState(g), "p") == 0


def test_inflow_unknown_vertex():
    with pytest.raises(GraphError):
        inflow(BoundedState(and_blocked()), "nope")


def test_is_legal_and_blue_in():
    vs = [V("v", Kind.AND), V("p", Kind.FREE), V("q", Kind.FREE), V("s", Kind.FREE)]
    es = [Edge("r1", "v", "p", 1, "p"), Edge("r2", "v", "q", 1, "q"), Edge("b", "v", "s", 2, "v")]
    assert is_legal(ConstraintGraph.build(vs, es))


def test_is_legal_and_one_red_in():
    vs = [V("v", Kind.AND), V("p", Kind.FREE), V("q", Kind.FREE), V("s", Kind.FREE)]
    es = [Edge("r1", "v", "p", 1, "v"), Edge("r2", "v", "q", 1, "q"), Edge("b", "v", "s", 2, "s")]
    assert not is_legal(ConstraintGraph.build(vs, es))


def test_is_legal_empty_graph():
    assert is_legal(ConstraintGraph.build([], []))


def test_is_legal_rejects_undirected():
    g = ConstraintGraph.build([V("a", Kind.FREE), V("b", Kind.FREE)], [Edge("e", "a", "b", 2, None)])
    with pytest.raises(GraphError):
        is_legal(g)


# graph validation ---------------------------------------------------------------

def test_kind_weights_enforced():
    with pytest.raises(GraphError):
        ConstraintGraph.build([V("v", Kind.OR), V("a", Kind.FREE)], [Edge("e", "v", "a", 1, "v")])


def test_self_loop_rejected():
    with pytest.raises(GraphError):
        ConstraintGraph.build([V("a", Kind.FREE)], [Edge("e", "a", "a", 2, "a")])


def test_parallel_edges_allowed():
    g = ConstraintGraph.build([V("a", Kind.FREE), V("b", Kind.FREE)],
                              [Edge("e1", "a", "b", 2, "a"), Edge("e2", "a", "b", 1, "b")])
    assert len(g.incident["a"]) == 2


def test_game_kinds_need_min_inflow_two():
    vs = [Vertex("v", Kind.VARIABLE, 1), V("a", Kind.FREE), V("b", Kind.FREE)]
    with pytest.raises(GraphError):
        ConstraintGraph.build(vs, [Edge("x", "v", "a", 2, "v"), Edge("y", "v", "b", 2, "v")])


def test_json_round_trip_and_unknown_fields():
    g = or_example()
    doc = graph_to_dict(g)
    again = graph_from_dict(json.loads(json.dumps(doc)))
    assert graph_to_dict(again) == doc
    doc["edges"][0]["colour"] = "red"
    with pytest.raises(GraphError):
        graph_from_dict(doc)


# legal_moves_ncl -------------------------------------------------------------

def test_free_free_edge_is_movable():
    g = ConstraintGraph.build([V("a", Kind.FREE), V("b", Kind.FREE)], [Edge("e", "a", "b", 2, "a")])
    assert legal_moves_ncl(BoundedState(g)) == {"e"}


def test_blocked_and_has_no_moves_at_v_or_w():
    g = and_blocked()
    assert legal_moves_ncl(BoundedState(g)) == set()
    # both flips really are illegal
    for e in ("r1", "r2", "b"):
        orient = {x.id: x.points_to for x in g.edges.values()}
        orient[e] = g.edges[e].tail
        assert not is_legal(g, orient)


def test_reversed_edges_are_spent():
    g = or_example()
    st_ = BoundedState(g).reverse("e2")
    assert "e2" not in legal_moves_ncl(st_)


# solve_ncl ----------------------------------------------------------------------

def test_solve_ncl_or_example():
    rep = solve_ncl(or_example())
    assert rep.verdict == "winnable" and rep.witness == ["e2"]


def test_solve_ncl_and_not_winnable():
    assert solve_ncl(and_blocked()).verdict == "not-winnable"


def test_solve_ncl_fanout_feeds_and():
    # FANOUT f gets its blue from a FREE source; its reds already point into AND a
    vs = [V("s", Kind.FREE), V("f", Kind.FANOUT), V("a", Kind.AND), V("t", Kind.FREE)]
    es = [Edge("in", "s", "f", 2, "f"), Edge("r1", "f", "a", 1, "a"), Edge("r2", "f", "a", 1, "a"),
          Edge("out", "a", "t", 2, "t")]
    rep = solve_ncl(ConstraintGraph.build(vs, es, "out"))
    assert rep.verdict == "winnable" and rep.witness == ["out"]


def test_solve_ncl_needs_target_and_legal_start():
    g = or_example().replace(target=None)
    with pytest.raises(GraphError):
        solve_ncl(g)
    vs = [V("v", Kind.OR), V("a", Kind.FREE), V("b", Kind.FREE), V("c", Kind.FREE)]
    es = [Edge("e1", "v", "a", 2, "a"), Edge("e2", "v", "b", 2, "b"), Edge("e3", "v", "c", 2, "c")]
    with pytest.raises(GraphError):
        solve_ncl(ConstraintGraph.build(vs, es, "e1"))


def test_solve_ncl_state_bound():
    g = random_acyclic_ncl(random.Random(5), 8)
    with pytest.raises(BoundExceeded):
        solve_ncl(with_black_fillers(g, 12), max_states=3)


# solve_2cl ----------------------------------------------------------------------

def test_solve_2cl_immediate_target():
    g = ConstraintGraph.build([V("a", Kind.FREE), V("b", Kind.FREE)], [Edge("t", "a", "b", 2, "a", W)], "t")
    rep = solve_2cl(g)
    assert rep.verdict == "white" and rep.witness == ["t"]


def test_solve_2cl_white_stuck_loses():
    vs = [V("a", Kind.FREE, 2), V("b", Kind.FREE), V("c", Kind.FREE), V("d", Kind.FREE)]
    es = [Edge("t", "a", "b", 2, "a", W), Edge("k", "c", "d", 2, "c", B)]
    assert solve_2cl(ConstraintGraph.build(vs, es, "t")).verdict == "black"


def _naive_2cl(state):
    """Plain minimax on BoundedState with the rules read literally."""
    g = state.graph
    moves = sorted(legal_moves_ncl(state))
    if state.to_move is W:
        if g.target in moves:
            return True
        return any(_naive_2cl(state.reverse(e)) for e in moves)
    return all(_naive_2cl(state.reverse(e)) for e in moves)


def variable_race(filler: bool):
    # VARIABLE x: white edge w and black edge bx both point in. Target t
    # leaves FREE vertex h (min 2), which only w can refill.
    vs = [V("x", Kind.VARIABLE), V("h", Kind.FREE, 2), V("k", Kind.FREE), V("s", Kind.FREE)]
    es = [Edge("w", "x", "h", 2, "x", W), Edge("bx", "x", "k", 2, "x", B),
          Edge("t", "h", "s", 2, "h", W)]
    g = ConstraintGraph.build(vs, es, "t")
    return with_black_fillers(g, 1) if filler else g


def test_solve_2cl_variable_race_black_stuck():
    g = variable_race(False)
    rep = solve_2cl(g)
    # after w flips, bx would starve x, so black has no move and loses
    assert rep.verdict == "white" and rep.witness == ["w"]
    assert _naive_2cl(BoundedState(g, to_move=W))


def test_solve_2cl_variable_race_with_filler():
    g = variable_race(True)
    rep = solve_2cl(g)
    assert rep.verdict == "white" and rep.witness == ["w", "fill0", "t"]
    assert _naive_2cl(BoundedState(g, to_move=W))


def test_solve_2cl_target_must_be_white():
    g = ConstraintGraph.build([V("a", Kind.FREE), V("b", Kind.FREE)], [Edge("t", "a", "b", 2, "a", B)], "t")
    with pytest.raises(GraphError):
        solve_2cl(g)


# solve_cgs ----------------------------------------------------------------------

def test_solve_cgs_two_ands():
    vs = [V("u", Kind.AND), V("v", Kind.AND)]
    es = [Edge("B", "u", "v", 2, None), Edge("R1", "u", "v", 1, None), Edge("R2", "u", "v", 1, None)]
    g = ConstraintGraph.build(vs, es)
    rep = solve_cgs(g)
    assert rep.verdict == "sat" and is_legal(g, rep.witness)
    assert rep.witness == {"B": "u", "R1": "v", "R2": "v"}


def test_solve_cgs_unsat_single_red():
    g = ConstraintGraph.build([V("a", Kind.FREE, 2), V("b", Kind.FREE)], [Edge("e", "a", "b", 1, None)])
    assert solve_cgs(g).verdict == "unsat"


def test_solve_cgs_empty():
    assert solve_cgs(ConstraintGraph.build([], [])).verdict == "sat"


def test_solve_cgs_needs_undirected():
    with pytest.raises(GraphError):
        solve_cgs(or_example())


# topological orders ----------------------------------------------------------------

def test_topological_single_edge():
    g = ConstraintGraph.build([V("u", Kind.FREE), V("v", Kind.FREE)], [Edge("e", "u", "v", 2, "v")])
    assert topological_edge_order(g) == ["e"]


def test_topological_diamond():
    vs = [V(x, Kind.FREE) for x in "uvwx"]
    es = [Edge("uv", "u", "v", 2, "v"), Edge("uw", "u", "w", 2, "w"),
          Edge("vx", "v", "x", 2, "x"), Edge("wx", "w", "x", 2, "x")]
    order = topological_edge_order(ConstraintGraph.build(vs, es))
    assert set(order[:2]) == {"uv", "uw"}
    assert topological_vertex_order(ConstraintGraph.build(vs, es))[0] == "u"


def test_topological_cycle_rejected():
    vs = [V("u", Kind.FREE), V("v", Kind.FREE)]
    es = [Edge("a", "u", "v", 2, "v"), Edge("b", "u", "v", 2, "u")]
    with pytest.raises(GraphError, match="cycle"):
        topological_edge_order(ConstraintGraph.build(vs, es))


# properties ---------------------------------------------------------------------

seeds = st.integers(min_value=0, max_value=10**6)


def _replay_legal(g, moves):
    state = BoundedState(g)
    for e in moves:
        assert e in legal_moves_ncl(state)
        state = state.reverse(e)
    return state


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_reachable_states_are_legal(seed):
    g = random_acyclic_ncl(random.Random(seed), 6)
    c = Compiled(g)
    for mask in reachable_reversal_sets(g):
        orient = {e: (g.edges[e].tail if mask >> c.index[e] & 1 else g.edges[e].points_to) for e in g.edges}
        assert is_legal(g, orient)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_ncl_witness_replays(seed):
    g = random_acyclic_ncl(random.Random(seed), 7)
    rep = solve_ncl(g)
    if rep.verdict == "winnable":
        end = _replay_legal(g, rep.witness)
        assert g.target in end.reversed and rep.witness[-1] == g.target
        # every prefix of the witness is a reachable state
        masks = reachable_reversal_sets(g)
        c = Compiled(g)
        m = 0
        for e in rep.witness:
            m |= 1 << c.index[e]
            assert m in masks
    else:
        c = Compiled(g)
        t = 1 << c.index[g.target]
        assert not any(m & t for m in reachable_reversal_sets(g))


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_reversal_involution(seed):
    g = random_acyclic_ncl(random.Random(seed), 5)
    c = Compiled(g)
    states = explore_unbounded(g)
    for m in list(states)[:200]:
        inf = c.inflows(m)
        for i in range(len(c.eids)):
            bit = 1 << i
            h = c.tail[i] if m & bit else c.head[i]
            if inf[h] - c.weight[i] >= c.minin[h]:
                back = m ^ bit
                # flipping the edge back is legal and restores the orientation
                inf2 = c.inflows(back)
                h2 = c.tail[i] if back & bit else c.head[i]
                assert inf2[h2] - c.weight[i] >= c.minin[h2]
                assert back ^ bit == m and back in states


def _random_undirected(rng):
    n = rng.randint(1, 5)
    vs = [Vertex(f"v{i}", Kind.FREE, rng.randint(0, 3)) for i in range(n)]
    es = []
    if n > 1:
        for j in range(rng.randint(0, 12)):
            a, b = rng.sample(range(n), 2)
            es.append(Edge(f"e{j}", f"v{a}", f"v{b}", rng.choice((1, 2)), None))
    return ConstraintGraph.build(vs, es)


def _naive_cgs(g):
    eids = g.edge_ids()
    for ends in itertools.product(*[(g.edges[e].u, g.edges[e].v) for e in eids]):
        if is_legal(g, dict(zip(eids, ends))):
            return True
    return False


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_cgs_matches_enumeration(seed):
    rng = random.Random(seed)
    g = _random_undirected(rng) if seed % 2 else random_andor_cubic(rng, 6)
    assert len(g.edges) <= 12
    rep = solve_cgs(g)
    assert (rep.verdict == "sat") == _naive_cgs(g)
    if rep.verdict == "sat":
        assert is_legal(g, rep.witness)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_2cl_with_passing_black_matches_ncl(seed):
    g = random_acyclic_ncl(random.Random(seed), 5)
    white = g.replace(edges=[Edge(e.id, e.u, e.v, e.weight, e.points_to, W) for e in g.edges.values()])
    with_fill = with_black_fillers(white)
    assert (solve_2cl(with_fill).verdict == "white") == (solve_ncl(g).verdict == "winnable")


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_witness_tie_break_is_deterministic(seed):
    g = random_acyclic_ncl(random.Random(seed), 6)
    assert solve_ncl(g).witness == solve_ncl(g).witness


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_2cl_matches_naive_minimax(seed):
    from nclforge.generate import random_2cl
    g = with_black_fillers(random_2cl(random.Random(seed), 5), 2)
    want = _naive_2cl(BoundedState(g, to_move=W))
    assert (solve_2cl(g).verdict == "white") == want
