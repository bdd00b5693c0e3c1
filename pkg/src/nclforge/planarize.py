"""Crossover and half-crossover gadgets for planarizing constraint graphs.

Geometry is kept in gadget-local coordinates (y grows downward), which is
also how fresh vertex ids are named: ``<prefix>.v3.5_1`` is the vertex at
x=3.5, y=1 of a crossover instance.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .errors import GraphError, ReductionError
from .games import BoundedState, Compiled, explore_unbounded, legal_moves_ncl
from .graph import ConstraintGraph, Edge, Kind, Vertex, natural_key

# crossover: label -> (end1, end2, weight); externals list the gadget end first
CROSSOVER_EDGES = {
    "A": ((3.5, 1), (3.5, 0), 2), "B": ((3.5, 3), (3.5, 4), 2),
    "C": ((1, 2), (0, 2), 2), "D": ((6, 2), (7, 2), 2), "E": ((3, 2), (4, 2), 2),
    "F": ((2, 1), (3.5, 1), 1), "G": ((2, 3), (3.5, 3), 1), "H": ((2, 1), (2, 3), 1),
    "I": ((2, 1), (3, 2), 1), "J": ((2, 3), (3, 2), 1), "K": ((1, 2), (2, 1), 1),
    "L": ((1, 2), (2, 3), 1), "M": ((3.5, 1), (5, 1), 1), "N": ((3.5, 3), (5, 3), 1),
    "O": ((5, 1), (5, 3), 1), "P": ((4, 2), (5, 1), 1), "Q": ((4, 2), (5, 3), 1),
    "R": ((5, 1), (6, 2), 1), "S": ((5, 3), (6, 2), 1),
}
CROSSOVER_VERTICES = [(1, 2), (2, 1), (2, 3), (3, 2), (3.5, 1), (3.5, 3), (4, 2), (5, 1), (5, 3), (6, 2)]
CROSSOVER_EXTERNAL = ("A", "B", "C", "D")

# Reference state with A, B pointing up and C, D pointing left: the
# endpoint each internal edge points to. It is the unique legal completion.
CROSSOVER_STATE = {
    "E": (3, 2), "F": (3.5, 1), "G": (2, 3), "H": (2, 1), "I": (2, 1), "J": (2, 3),
    "K": (1, 2), "L": (1, 2), "M": (3.5, 1), "N": (5, 3), "O": (5, 1), "P": (4, 2),
    "Q": (4, 2), "R": (5, 1), "S": (5, 3),
}
VERTICAL_SEQUENCE = ("A", "F", "H", "G", "M", "O", "N", "B")
HORIZONTAL_SEQUENCE = ("C", "K", "I", "L", "J", "E", "P", "R", "Q", "S", "D")

HALF_EDGES = {
    "a": ((3.5, 1), (3.5, 0), 2), "b": ((3.5, 3), (3.5, 4), 2),
    "c": ((1, 2), (0, 2), 2), "d": ((6, 2), (7, 2), 2),
    "e": ((2, 1), (3.5, 1), 2), "f": ((2, 3), (3.5, 3), 2), "j": ((3.5, 1), (5, 1), 2),
    "k": ((3.5, 3), (5, 3), 2), "g": ((2, 1), (2, 3), 1), "h": ((1, 2), (2, 1), 1),
    "i": ((1, 2), (2, 3), 1), "m": ((5, 1), (5, 3), 1), "n": ((6, 2), (5, 1), 1),
    "o": ((6, 2), (5, 3), 1),
}
HALF_VERTICES = [(1, 2), (2, 1), (2, 3), (3.5, 1), (3.5, 3), (5, 1), (5, 3), (6, 2)]
HALF_EXTERNAL = ("a", "b", "c", "d")

# Which crossover edge plays which half-crossover role at each 4-red vertex:
# a/b carry the vertical signal in and out, c/d the horizontal one.
HALF_ROLES = {
    (2, 1): {"a": "F", "b": "H", "c": "K", "d": "I"},
    (2, 3): {"a": "H", "b": "G", "c": "L", "d": "J"},
    (5, 1): {"a": "M", "b": "O", "c": "P", "d": "R"},
    (5, 3): {"a": "O", "b": "N", "c": "Q", "d": "S"},
}


def _pt(p) -> str:
    x, y = p
    fx = lambda t: str(int(t)) if float(t).is_integer() else str(t)
    return f"v{fx(x)}_{fx(y)}"


def _kind_for(weights) -> tuple[Kind, int]:
    ws = tuple(sorted(weights, reverse=True))
    if ws == (2, 1, 1):
        return Kind.AND, 2
    if ws == (2, 2, 2):
        return Kind.OR, 2
    if ws == (1, 1, 1):
        return Kind.CHOICE, 2
    if ws == (2, 2):
        return Kind.VARIABLE, 2
    return Kind.FREE, 2


@dataclass
class CrossoverInstance:
    prefix: str
    edge_map: dict[str, str]
    # external label -> ambient vertex it attaches to
    boundary: dict[str, str]
    vertex_map: dict[tuple, str] = field(default_factory=dict)


@dataclass
class HalfCrossoverInstance:
    prefix: str
    replaced_vertex: str
    edge_map: dict[str, str]
    # role label -> original edge id kept between neighbour and converter
    boundary: dict[str, str]


def insert_crossover(graph: ConstraintGraph, e1: str, e2: str, prefix: str | None = None):
    """Replace crossing edges ``e1`` (vertical) and ``e2`` (horizontal)."""
    for e in (e1, e2):
        if e not in graph.edges:
            raise GraphError(f"unknown edge {e}")
    x1, x2 = graph.edges[e1], graph.edges[e2]
    if {x1.u, x1.v} & {x2.u, x2.v}:
        raise GraphError(f"edges {e1} and {e2} share an endpoint")
    if x1.weight != 2 or x2.weight != 2:
        raise ReductionError("crossing a weight-1 edge needs red-blue conversion, which is not supported")
    if graph.target in (e1, e2):
        raise ReductionError("the target edge cannot be crossed")
    directed = x1.points_to is not None
    if directed != (x2.points_to is not None):
        raise GraphError("crossing edges must both be directed or both undirected")
    if prefix is None:
        n = 1
        while any(v.startswith(f"x{n}.") for v in graph.vertices):
            n += 1
        prefix = f"x{n}"
    if any(v.startswith(prefix + ".") for v in graph.vertices):
        raise GraphError(f"prefix {prefix} already in use")

    # A goes to the endpoint e1 points to, B to its tail; likewise C and D
    if directed:
        att = {"A": x1.points_to, "B": x1.tail, "C": x2.points_to, "D": x2.tail}
    else:
        att = {"A": x1.u, "B": x1.v, "C": x2.u, "D": x2.v}
    vmap = {p: f"{prefix}.{_pt(p)}" for p in CROSSOVER_VERTICES}
    incident: dict[tuple, list[int]] = {p: [] for p in CROSSOVER_VERTICES}
    for lab, (p, q, w) in CROSSOVER_EDGES.items():
        incident[p].append(w)
        if lab not in CROSSOVER_EXTERNAL:
            incident[q].append(w)
    vs = list(graph.vertices.values())
    for p in CROSSOVER_VERTICES:
        kind, mi = _kind_for(incident[p])
        vs.append(Vertex(vmap[p], kind, mi))
    es = [e for eid, e in graph.edges.items() if eid not in (e1, e2)]
    emap = {}
    for lab, (p, q, w) in CROSSOVER_EDGES.items():
        eid = f"{prefix}.{lab}"
        emap[lab] = eid
        if lab in CROSSOVER_EXTERNAL:
            u, v = vmap[p], att[lab]
            to = (v if lab in ("A", "C") else u) if directed else None
            owner = (x1 if lab in ("A", "B") else x2).owner
        else:
            u, v = vmap[p], vmap[q]
            to = vmap[CROSSOVER_STATE[lab]] if directed else None
            owner = x1.owner
        es.append(Edge(eid, u, v, w, to, owner))
    g2 = graph.replace(vs, es)
    return g2, CrossoverInstance(prefix, emap, att, vmap)


def _half_vertex_kinds():
    inc: dict[tuple, list[int]] = {p: [] for p in HALF_VERTICES}
    for lab, (p, q, w) in HALF_EDGES.items():
        inc[p].append(w)
        if lab not in HALF_EXTERNAL:
            inc[q].append(w)
    return {p: _kind_for(ws)[0] for p, ws in inc.items()}


def _roles_for(graph: ConstraintGraph, v: str, eids: list[str]) -> dict[str, str]:
    # crossover-internal vertices use the documented role table
    if "." in v:
        prefix, name = v.rsplit(".", 1)
        for p, roles in HALF_ROLES.items():
            if _pt(p) == name:
                mapped = {r: f"{prefix}.{lab}" for r, lab in roles.items()}
                if sorted(mapped.values()) == sorted(eids):
                    return mapped
    ordered = sorted(eids, key=natural_key)
    return dict(zip(HALF_EXTERNAL, ordered))


def _expand_one(graph: ConstraintGraph, v: str, roles: dict[str, str] | None = None):
    eids = list(graph.incident[v])
    if roles is None:
        roles = _roles_for(graph, v, eids)
    prefix = f"{v}.h"
    kinds = _half_vertex_kinds()
    vs = [x for x in graph.vertices.values() if x.id != v]
    vs += [Vertex(f"{prefix}.{_pt(p)}", kinds[p], 2) for p in HALF_VERTICES]
    es = [e for e in graph.edges.values() if e.id not in eids]
    directed = all(graph.edges[e].points_to is not None for e in eids)
    ext_state = {}
    for role, eid in roles.items():
        e = graph.edges[eid]
        conv = f"{prefix}.y{role}"
        # converter: one red and one blue edge, at least one must point in
        vs.append(Vertex(conv, Kind.FREE, 1))
        outer = e.other(v)
        into = directed and e.points_to == v
        es.append(Edge(eid, outer, conv, 1, (conv if into else outer) if directed else None, e.owner))
        ext_state[role] = into
    owner = graph.edges[eids[0]].owner
    internal = [lab for lab in HALF_EDGES if lab not in HALF_EXTERNAL]
    emap = {lab: f"{prefix}.{lab}" for lab in HALF_EDGES}
    orient = {}
    if directed:
        orient = _half_initial_state(ext_state)
        if orient is None:
            raise GraphError(f"no legal half-crossover state for vertex {v}")
    for lab, (p, q, w) in HALF_EDGES.items():
        if lab in HALF_EXTERNAL:
            u, x = f"{prefix}.{_pt(p)}", f"{prefix}.y{lab}"
            to = (u if ext_state[lab] else x) if directed else None
        else:
            u, x = f"{prefix}.{_pt(p)}", f"{prefix}.{_pt(q)}"
            to = f"{prefix}.{_pt(orient[lab])}" if directed else None
        es.append(Edge(emap[lab], u, x, w, to, owner))
    return graph.replace(vs, es), HalfCrossoverInstance(prefix, v, emap, roles)


def _half_initial_state(ext_in: dict[str, bool]) -> dict[str, tuple] | None:
    """First legal internal orientation, in a fixed enumeration order."""
    internal = [lab for lab in HALF_EDGES if lab not in HALF_EXTERNAL]
    for bits in itertools.product((0, 1), repeat=len(internal)):
        inflow = {p: 0 for p in HALF_VERTICES}
        for lab in HALF_EXTERNAL:
            if ext_in[lab]:
                inflow[HALF_EDGES[lab][0]] += 2
        choice = {}
        for lab, b in zip(internal, bits):
            p, q, w = HALF_EDGES[lab]
            to = q if b else p
            choice[lab] = to
            inflow[to] += w
        if all(x >= 2 for x in inflow.values()):
            return choice
    return None


def four_red_vertices(graph: ConstraintGraph) -> list[str]:
    out = []
    for v, inc in graph.incident.items():
        if len(inc) == 4 and all(graph.edges[e].weight == 1 for e in inc):
            out.append(v)
    return sorted(out)


def expand_half_crossovers(graph: ConstraintGraph):
    """Replace every vertex with exactly four red edges by a half-crossover.

    Each of the four red edges keeps its id and now ends at a converter
    vertex (FREE, min inflow 1) that joins it to the half-crossover's blue
    external edge. Returns the new graph and the list of instances.
    """
    instances = []
    for v in four_red_vertices(graph):
        if graph.vertices[v].min_inflow != 2:
            continue
        graph, inst = _expand_one(graph, v)
        instances.append(inst)
    return graph, instances


def crossover_harness(expanded: bool = False):
    """A lone crossover whose four external edges end at FREE vertices."""
    vs = [Vertex.make(n, Kind.FREE) for n in ("top", "bottom", "left", "right")]
    vs += [Vertex.make(n, Kind.FREE) for n in ("top2", "bottom2", "left2", "right2")]
    es = [
        Edge("e1", "top", "bottom", 2, "top"),
        Edge("e2", "left", "right", 2, "left"),
    ]
    g = ConstraintGraph.build(vs, es)
    g, inst = insert_crossover(g, "e1", "e2", prefix="x")
    if expanded:
        g, _ = expand_half_crossovers(g)
    return g, inst


def _replay(state: BoundedState, seq) -> BoundedState | None:
    for e in seq:
        if e not in legal_moves_ncl(state):
            return None
        state = state.reverse(e)
    return state


def _reach(c: Compiled, start: int, forbid: int = 0, stop=None, limit: int = 2_000_000,
           prefer: list[int] = ()) -> set[int]:
    """Depth-first closure of ``start``; edges in ``prefer`` are tried first, in order.

    Inflows and the enabled-move set travel with each stacked state and are
    patched locally: reversing an edge only changes its two endpoints, and
    only unreversed edges into those endpoints can change status.
    """
    head, tail, weight, minin = c.head, c.tail, c.weight, c.minin
    allowed = c.full & ~forbid
    into = [0] * len(c.vids)
    for i, h in enumerate(head):
        into[h] |= 1 << i
    rank = {i: r for r, i in enumerate(prefer)}
    seen = {start}
    if stop is not None and stop(start):
        return seen
    inf0 = c.inflows(start)
    en0 = 0
    for i in c.moves(start):
        en0 |= 1 << i
    stack = [(start, inf0, en0)]
    while stack:
        m, inf, en = stack.pop()
        free = en & allowed & ~m
        moves = []
        while free:
            low = free & -free
            moves.append(low.bit_length() - 1)
            free ^= low
        if prefer:
            moves.sort(key=lambda i: -rank.get(i, len(prefer)))
        for i in moves:
            n = m | (1 << i)
            if n in seen:
                continue
            seen.add(n)
            if stop is not None and stop(n):
                return seen
            if len(seen) > limit:
                raise RuntimeError("crossover exploration exceeded its budget")
            h, t, w = head[i], tail[i], weight[i]
            inf2 = inf.copy()
            inf2[h] -= w
            inf2[t] += w
            en2 = en & ~(1 << i)
            for v in (h, t):
                cand = into[v] & ~n
                while cand:
                    low = cand & -cand
                    j = low.bit_length() - 1
                    if inf2[v] - weight[j] >= minin[v]:
                        en2 |= low
                    else:
                        en2 &= ~low
                    cand ^= low
            stack.append((n, inf2, en2))
    return seen


def _propagate(c: Compiled, start: int, ins: tuple[int, int], blocked: tuple[int, int],
               hint: list[int] = ()) -> int | None:
    """Some reachable state with both ``ins`` edges reversed, never touching ``blocked``.

    ``hint`` orders the search: a known propagation sequence finds it fast.
    """
    forbid = (1 << blocked[0]) | (1 << blocked[1])
    goal = (1 << ins[0]) | (1 << ins[1])
    found = []

    def stop(m):
        if m & goal == goal:
            found.append(m)
            return True
        return False

    _reach(c, start, forbid, stop, prefer=hint)
    return found[0] if found else None


def verify_crossover(instance: CrossoverInstance, graph: ConstraintGraph, mode: str = "bounded") -> dict:
    """Exhaustively check the crossover's propagation properties.

    ``graph`` must be the harness produced by :func:`crossover_harness` (or
    any graph where the external edges end at FREE vertices).
    """
    lab = instance.edge_map
    gadget_vertices = set(instance.vertex_map.values())
    report: dict = {"mode": mode}
    c = Compiled(graph)
    idx = {k: c.index[v] for k, v in lab.items()}

    if mode == "unbounded":
        states = explore_unbounded(graph)

        def outward(m, k):
            e = graph.edges[lab[k]]
            to = e.tail if m >> idx[k] & 1 else e.points_to
            return to not in gadget_vertices and not to.startswith(instance.prefix + ".")

        for a, b, name in (("A", "B", "vertical"), ("C", "D", "horizontal")):
            combos = {(outward(m, a), outward(m, b)) for m in states}
            report[f"{name}_iff"] = (True, True) not in combos and (True, False) in combos and (False, True) in combos
        report["states"] = len(states)
        return report

    st = BoundedState(graph)
    report["vertical_replay"] = _replay(st, [lab[k] for k in VERTICAL_SEQUENCE if k in lab and lab[k] in graph.edges]) is not None
    report["horizontal_replay"] = _replay(st, [lab[k] for k in HORIZONTAL_SEQUENCE if k in lab and lab[k] in graph.edges]) is not None
    for first, second, seq, name in (
            (("A", "B"), ("C", "D"), VERTICAL_SEQUENCE, "vertical_blocks_horizontal"),
            (("C", "D"), ("A", "B"), HORIZONTAL_SEQUENCE, "horizontal_blocks_vertical")):
        after = _propagate(c, 0, (idx[first[0]], idx[first[1]]), (idx[second[0]], idx[second[1]]),
                           [idx[k] for k in seq])
        if after is None:
            report[name] = None
            continue
        goal = (1 << idx[second[0]]) | (1 << idx[second[1]])
        reach = _reach(c, after, 0, lambda m: m & goal == goal)
        report[name] = not any(m & goal == goal for m in reach)
    return report


def half_crossover_harness() -> ConstraintGraph:
    """The crossover's 4-red vertex (2,1) alone, with FREE outer endpoints.

    Edges keep their crossover labels and reference orientation (F and K
    point away, H and I point in). FREE ends let the surroundings do
    anything, so a blockage proved here holds inside any crossover.
    """
    vs = [Vertex("X", Kind.FREE, 2)] + [Vertex.make(f"n{lab}", Kind.FREE) for lab in "FHKI"]
    es = [
        Edge("F", "X", "nF", 1, "nF"), Edge("H", "X", "nH", 1, "X"),
        Edge("K", "X", "nK", 1, "nK"), Edge("I", "X", "nI", 1, "X"),
    ]
    g = ConstraintGraph.build(vs, es)
    g, _ = _expand_one(g, "X", roles={"a": "F", "b": "H", "c": "K", "d": "I"})
    return g


def verify_half_blockage(graph: ConstraintGraph | None = None) -> bool:
    """After F and H are reversed, K and I can never both be reversed.

    Checked over every bounded-reachable state of the harness in which F and
    H are reversed but K and I are not.
    """
    if graph is None:
        graph = half_crossover_harness()
    c = Compiled(graph)
    f, h, k, i = (c.index[x] for x in "FHKI")
    fh = (1 << f) | (1 << h)
    ki = (1 << k) | (1 << i)
    before = _reach(c, 0)
    fronts = [m for m in before if m & fh == fh and not m & ki]
    if not fronts:
        return False
    seen: set[int] = set(fronts)
    stack = list(fronts)
    while stack:
        m = stack.pop()
        if m & ki == ki:
            return False
        for j in c.moves(m):
            n = m | (1 << j)
            if n not in seen:
                seen.add(n)
                stack.append(n)
    return True
