"""Seeded random constraint graphs for oracle-equivalence campaigns.

Acyclic NCL graphs are built constructively along signal flow: gadgets are
created in order and each input port is wired to an unused output port of an
earlier gadget or to a terminal. Every edge initially points to the vertex
that produces its signal, so reversing it passes the signal on.

Terminals are shared FREE vertices: ``src`` (min inflow 0, inputs that are
always available), ``snk`` (min inflow 0, swallows outputs) and ``dead``
(min inflow equal to everything pointing at it, inputs that never arrive).
"""
from __future__ import annotations

import random

from .graph import ConstraintGraph, Edge, Kind, Owner, Vertex

# kind -> (input weights, output weights)
PORTS = {
    Kind.AND: ((1, 1), (2,)),
    Kind.OR: ((2, 2), (2,)),
    Kind.FANOUT: ((2,), (1, 1)),
    Kind.CHOICE: ((1,), (1, 1)),
}
NCL_KINDS = (Kind.AND, Kind.OR, Kind.FANOUT, Kind.CHOICE)


def random_acyclic_ncl(rng: random.Random, max_vertices: int = 8, kinds=NCL_KINDS,
                       p_wire: float = 0.6, p_dead: float = 0.15) -> ConstraintGraph:
    """A random acyclic Bounded NCL instance with a target edge.

    ``max_vertices`` bounds the total vertex count, terminals included.
    """
    n_gadgets = rng.randint(1, max(1, max_vertices - 3))
    gadgets = [(f"g{i}", rng.choice(kinds)) for i in range(n_gadgets)]
    open_outputs: list[tuple[str, int]] = []  # (gadget, weight)
    edges: list[tuple[str, str, int]] = []  # (producer, consumer, weight)
    dead_weight = 0
    for gid, kind in gadgets:
        ins, outs = PORTS[kind]
        for w in ins:
            cands = [i for i, (_, ow) in enumerate(open_outputs) if ow == w]
            if cands and rng.random() < p_wire:
                prod, _ = open_outputs.pop(rng.choice(cands))
            elif rng.random() < p_dead:
                prod = "dead"
                dead_weight += w
            else:
                prod = "src"
            edges.append((prod, gid, w))
        for w in outs:
            open_outputs.append((gid, w))
    for prod, w in open_outputs:
        edges.append((prod, "snk", w))

    vs = [Vertex.make(gid, kind) for gid, kind in gadgets]
    used = {p for p, _, _ in edges} | {c for _, c, _ in edges}
    if "src" in used:
        vs.append(Vertex.make("src", Kind.FREE))
    if "snk" in used:
        vs.append(Vertex.make("snk", Kind.FREE))
    if "dead" in used:
        vs.append(Vertex.make("dead", Kind.FREE, dead_weight))
    es = [Edge(f"e{i}", p, c, w, p) for i, (p, c, w) in enumerate(edges)]
    produced = [e.id for e in es if e.points_to not in ("src", "snk", "dead")]
    # prefer targets late in the signal flow so the instance is not trivial
    late = [e.id for e in es if e.points_to == gadgets[-1][0]]
    target = rng.choice(late if late and rng.random() < 0.7 else produced)
    return ConstraintGraph.build(vs, es, target)


def random_andor_cubic(rng: random.Random, max_vertices: int = 6, tries: int = 200) -> ConstraintGraph:
    """Random undirected planar graph of AND/OR vertices (every degree 3).

    Ports are matched at random by weight; multi-edges are allowed, loops
    and nonplanar results are rejected and resampled.
    """
    import networkx as nx

    for _ in range(tries):
        n = rng.choice([k for k in range(2, max_vertices + 1) if k % 2 == 0])
        kinds = [rng.choice((Kind.AND, Kind.OR)) for _ in range(n)]
        red, blue = [], []
        for i, k in enumerate(kinds):
            if k is Kind.AND:
                red += [i, i]
                blue.append(i)
            else:
                blue += [i, i, i]
        if len(red) % 2 or len(blue) % 2:
            continue
        rng.shuffle(red)
        rng.shuffle(blue)
        pairs = [(red[j], red[j + 1], 1) for j in range(0, len(red), 2)]
        pairs += [(blue[j], blue[j + 1], 2) for j in range(0, len(blue), 2)]
        if any(a == b for a, b, _ in pairs):
            continue
        simple = nx.Graph()
        simple.add_nodes_from(range(n))
        simple.add_edges_from((a, b) for a, b, _ in pairs)
        if not nx.check_planarity(simple)[0]:
            continue
        vs = [Vertex.make(f"v{i}", k) for i, k in enumerate(kinds)]
        es = [Edge(f"e{j}", f"v{a}", f"v{b}", w, None) for j, (a, b, w) in enumerate(pairs)]
        return ConstraintGraph.build(vs, es)
    raise RuntimeError("could not sample a planar AND/OR graph")


def random_2cl(rng: random.Random, max_vertices: int = 6) -> ConstraintGraph:
    """Acyclic graph with random white/black ownership and a white target."""
    g = random_acyclic_ncl(rng, max_vertices)
    es = []
    for e in g.edges.values():
        owner = Owner.WHITE if e.id == g.target or rng.random() < 0.5 else Owner.BLACK
        es.append(Edge(e.id, e.u, e.v, e.weight, e.points_to, owner))
    return g.replace(edges=es)


def random_2cl_circuit(rng: random.Random, max_vertices: int = 6, p_var: float = 0.6,
                       fillers: int = 1) -> ConstraintGraph:
    """White circuit fed by VARIABLEs, in the shape the Dou Shou Qi reduction takes.

    Weight-2 inputs drawn from ``src`` become VARIABLE white edges with
    probability ``p_var``; each VARIABLE's black edge runs to the FREE sink
    ``bsnk``. Black also gets ``fillers`` free edges.
    """
    from .games import with_black_fillers

    g = random_acyclic_ncl(rng, max_vertices)
    vs = list(g.vertices.values())
    es = []
    n = 0
    for e in sorted(g.edges.values(), key=lambda e: int(e.id[1:])):
        if e.points_to == "src" and e.weight == 2 and rng.random() < p_var:
            x = f"x{n}"
            n += 1
            cons = e.v if e.u == "src" else e.u
            vs.append(Vertex.make(x, Kind.VARIABLE))
            es.append(Edge(e.id, x, cons, 2, x, Owner.WHITE))
            es.append(Edge(f"b{x}", x, "bsnk", 2, x, Owner.BLACK))
        else:
            es.append(Edge(e.id, e.u, e.v, e.weight, e.points_to, Owner.WHITE))
    if n:
        vs.append(Vertex.make("bsnk", Kind.FREE))
    used = {v for e in es for v in (e.u, e.v)}
    vs = [v for v in vs if v.id in used]
    g = ConstraintGraph.build(vs, es, g.target)
    return with_black_fillers(g, fillers) if fillers else g
