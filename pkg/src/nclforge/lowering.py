"""Shared front end for the gadget reductions from acyclic Bounded NCL.

Every gadget vertex is viewed along signal flow: its *inputs* are the
incident edges pointing away from it (toward their producer) and its
*outputs* are the edges pointing into it.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import ReductionError
from .games import topological_vertex_order
from .generate import PORTS
from .graph import ConstraintGraph, Edge, Kind, Vertex, natural_key


@dataclass
class Gadget:
    vertex: str
    kind: Kind
    index: int
    inputs: list[str]
    outputs: list[str]


@dataclass
class Lowered:
    graph: ConstraintGraph
    gadgets: list[Gadget]
    by_vertex: dict[str, Gadget]
    # edge -> producer gadget vertex, or None when a live FREE terminal produces it
    producer: dict[str, str | None]
    # edge -> consumer gadget vertex, or None when it ends at a FREE terminal
    consumer: dict[str, str | None]
    helpers: set[str]


def seal_dead_sources(g: ConstraintGraph) -> tuple[ConstraintGraph, set[str]]:
    """Replace inputs from sealed FREE vertices by never-firing gadgets.

    A FREE vertex with positive min inflow that cannot give up any edge
    pointing at it is an input that never arrives. Such an edge is rerouted
    to the output of CHOICE -> AND(both CHOICE outputs), which no play can
    fire; a weight-1 input additionally passes through a FANOUT. Returns the
    new graph and the ids of the helper vertices and edges.
    """
    vs = dict(g.vertices)
    es = dict(g.edges)
    helpers: set[str] = set()
    n = 0
    for v in sorted(g.vertices, key=natural_key):
        vert = g.vertices[v]
        if vert.kind is not Kind.FREE or vert.min_inflow == 0:
            continue
        into = [e for e in g.incident[v] if g.edges[e].points_to == v]
        total = sum(g.edges[e].weight for e in into)
        if any(total - g.edges[e].weight >= vert.min_inflow for e in into):
            raise ReductionError(f"FREE vertex {v} is neither a plain terminal nor sealed")
        for eid in into:
            e = g.edges[eid]
            p = f"_z{n}"
            n += 1
            src = f"{p}src"
            vs[src] = Vertex.make(src, Kind.FREE)
            vs[f"{p}c"] = Vertex.make(f"{p}c", Kind.CHOICE)
            vs[f"{p}a"] = Vertex.make(f"{p}a", Kind.AND)
            new_edges = [
                Edge(f"{p}in", src, f"{p}c", 1, src),
                Edge(f"{p}l", f"{p}c", f"{p}a", 1, f"{p}c"),
                Edge(f"{p}r", f"{p}c", f"{p}a", 1, f"{p}c"),
            ]
            producer = f"{p}a"
            if e.weight == 1:
                vs[f"{p}f"] = Vertex.make(f"{p}f", Kind.FANOUT)
                snk = f"{p}snk"
                vs[snk] = Vertex.make(snk, Kind.FREE)
                new_edges += [
                    Edge(f"{p}b", f"{p}a", f"{p}f", 2, f"{p}a"),
                    Edge(f"{p}x", f"{p}f", snk, 1, f"{p}f"),
                ]
                producer = f"{p}f"
            for ne in new_edges:
                es[ne.id] = ne
            helpers.update(ne.id for ne in new_edges)
            helpers.update(x for x in vs if x.startswith(p))
            other = e.other(v)
            es[eid] = Edge(eid, producer, other, e.weight, producer, e.owner)
        if not any(v in (x.u, x.v) for x in es.values()):
            del vs[v]
    return ConstraintGraph.build(vs.values(), es.values(), g.target), helpers


def lower(g: ConstraintGraph, kinds=(Kind.AND, Kind.OR, Kind.FANOUT, Kind.CHOICE)) -> Lowered:
    """Validate an acyclic NCL graph and number its gadgets along signal flow."""
    if g.target is None:
        raise ReductionError("graph has no target edge")
    if not g.is_directed():
        raise ReductionError("graph must be directed")
    g, helpers = seal_dead_sources(g)
    for v in g.vertices.values():
        if v.kind is Kind.FREE:
            if v.min_inflow != 0:
                raise ReductionError(f"FREE vertex {v.id} must have min inflow 0")
        elif v.kind not in kinds:
            raise ReductionError(f"unsupported vertex kind {v.kind.value} at {v.id}")
    try:
        order = topological_vertex_order(g, against=True)
    except Exception as exc:  # cycle
        raise ReductionError(str(exc)) from None
    gadgets: list[Gadget] = []
    producer: dict[str, str | None] = {}
    consumer: dict[str, str | None] = {}
    for e in g.edges.values():
        producer[e.id] = e.points_to if g.vertices[e.points_to].kind is not Kind.FREE else None
        consumer[e.id] = e.tail if g.vertices[e.tail].kind is not Kind.FREE else None
    for v in order:
        vert = g.vertices[v]
        if vert.kind is Kind.FREE:
            continue
        inc = sorted(g.incident[v], key=natural_key)
        ins = [e for e in inc if g.edges[e].points_to != v]
        outs = [e for e in inc if g.edges[e].points_to == v]
        want_in, want_out = PORTS[vert.kind]
        got_in = tuple(sorted((g.edges[e].weight for e in ins), reverse=True))
        got_out = tuple(sorted((g.edges[e].weight for e in outs), reverse=True))
        if got_in != tuple(sorted(want_in, reverse=True)) or got_out != tuple(sorted(want_out, reverse=True)):
            raise ReductionError(f"vertex {v} ({vert.kind.value}) is not in its initial orientation")
        gadgets.append(Gadget(v, vert.kind, len(gadgets), ins, outs))
    return Lowered(g, gadgets, {x.vertex: x for x in gadgets}, producer, consumer, helpers)
