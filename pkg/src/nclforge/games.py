"""Bounded NCL, Bounded 2CL and constraint graph satisfiability.

All searches run over bitsets of reversed edges. Edge ``i`` in a compiled
graph is the ``i``-th edge id in natural sort order, so iterating bits in
increasing order is the same as preferring the lowest edge id.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

import networkx as nx

from .errors import BoundExceeded, GraphError, IllegalMoveError
from .graph import ConstraintGraph, Edge, Kind, Owner, Vertex, inflow_of, is_legal, natural_key

DEFAULT_MAX_STATES = 10_000_000


@dataclass
class SolveReport:
    verdict: str
    witness: list | dict | None = None
    nodes_explored: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {"verdict": self.verdict, "witness": self.witness, "nodes_explored": self.nodes_explored}
        d.update(self.extra)
        return d


@dataclass(frozen=True)
class BoundedState:
    graph: ConstraintGraph
    reversed: frozenset = frozenset()
    to_move: Owner | None = None

    def points_to(self, eid: str) -> str:
        e = self.graph.edges[eid]
        if e.points_to is None:
            raise GraphError(f"edge {eid} is undirected")
        return e.tail if eid in self.reversed else e.points_to

    def orientation(self) -> dict[str, str]:
        return {eid: self.points_to(eid) for eid in self.graph.edges}

    def reverse(self, eid: str) -> "BoundedState":
        if eid not in legal_moves_ncl(self):
            raise IllegalMoveError(f"edge {eid} cannot be reversed")
        nxt = self.to_move
        if nxt is not None:
            nxt = Owner.BLACK if nxt is Owner.WHITE else Owner.WHITE
        return BoundedState(self.graph, self.reversed | {eid}, nxt)


def inflow(state: BoundedState, v: str) -> int:
    return inflow_of(state.graph, state.orientation(), v)


def legal_moves_ncl(state: BoundedState) -> set[str]:
    """Unreversed edges whose reversal keeps every vertex satisfied.

    In a 2CL state only the side to move's edges are offered.
    """
    g = state.graph
    orient = state.orientation()
    out = set()
    for eid, e in g.edges.items():
        if eid in state.reversed:
            continue
        if state.to_move is not None and e.owner is not state.to_move:
            continue
        head = orient[eid]
        if inflow_of(g, orient, head) - e.weight >= g.vertices[head].min_inflow:
            out.add(eid)
    return out


class Compiled:
    """Array form of a directed graph for bitset searches."""

    def __init__(self, g: ConstraintGraph):
        if not g.is_directed():
            raise GraphError("graph has undirected edges")
        self.graph = g
        self.eids = g.edge_ids()
        self.index = {e: i for i, e in enumerate(self.eids)}
        vids = list(g.vertices)
        vix = {v: i for i, v in enumerate(vids)}
        self.vids = vids
        self.weight = [g.edges[e].weight for e in self.eids]
        self.head = [vix[g.edges[e].points_to] for e in self.eids]
        self.tail = [vix[g.edges[e].tail] for e in self.eids]
        self.minin = [g.vertices[v].min_inflow for v in vids]
        base = [0] * len(vids)
        for i in range(len(self.eids)):
            base[self.head[i]] += self.weight[i]
        self.base = base
        self.full = (1 << len(self.eids)) - 1
        self.white = 0
        self.black = 0
        for i, e in enumerate(self.eids):
            if g.edges[e].owner is Owner.WHITE:
                self.white |= 1 << i
            elif g.edges[e].owner is Owner.BLACK:
                self.black |= 1 << i

    def inflows(self, mask: int) -> list[int]:
        inf = list(self.base)
        head, tail, weight = self.head, self.tail, self.weight
        m = mask
        while m:
            low = m & -m
            i = low.bit_length() - 1
            inf[head[i]] -= weight[i]
            inf[tail[i]] += weight[i]
            m ^= low
        return inf

    def moves(self, mask: int, allowed: int | None = None) -> list[int]:
        inf = self.inflows(mask)
        head, weight, minin = self.head, self.weight, self.minin
        free = ~mask & self.full
        if allowed is not None:
            free &= allowed
        out = []
        while free:
            low = free & -free
            i = low.bit_length() - 1
            h = head[i]
            if inf[h] - weight[i] >= minin[h]:
                out.append(i)
            free ^= low
        return out

    def names(self, idxs: Iterable[int]) -> list[str]:
        return [self.eids[i] for i in idxs]


def _require_legal(g: ConstraintGraph):
    if not is_legal(g):
        raise GraphError("initial configuration is not legal")


def solve_ncl(g: ConstraintGraph, max_states: int = DEFAULT_MAX_STATES) -> SolveReport:
    """Breadth-first search over reversed sets; the witness is a shortest play."""
    if g.target is None:
        raise GraphError("graph has no target edge")
    _require_legal(g)
    c = Compiled(g)
    tbit = 1 << c.index[g.target]
    parent: dict[int, tuple[int, int] | None] = {0: None}
    queue = deque([0])
    while queue:
        mask = queue.popleft()
        for i in c.moves(mask):
            nxt = mask | (1 << i)
            if nxt in parent:
                continue
            parent[nxt] = (mask, i)
            if nxt & tbit:
                path = []
                cur = nxt
                while parent[cur] is not None:
                    prev, j = parent[cur]
                    path.append(j)
                    cur = prev
                return SolveReport("winnable", c.names(reversed(path)), len(parent))
            if len(parent) > max_states:
                raise BoundExceeded(f"more than {max_states} states")
            queue.append(nxt)
    return SolveReport("not-winnable", None, len(parent))


def reachable_reversal_sets(g: ConstraintGraph, max_states: int = DEFAULT_MAX_STATES) -> set[int]:
    """Every bitset of reversed edges reachable by Bounded NCL play."""
    c = Compiled(g)
    seen = {0}
    stack = [0]
    while stack:
        mask = stack.pop()
        for i in c.moves(mask):
            nxt = mask | (1 << i)
            if nxt not in seen:
                seen.add(nxt)
                if len(seen) > max_states:
                    raise BoundExceeded(f"more than {max_states} states")
                stack.append(nxt)
    return seen


def solve_2cl(g: ConstraintGraph, max_states: int = DEFAULT_MAX_STATES) -> SolveReport:
    """Full minimax over (reversed set, side to move); white moves first."""
    if g.target is None:
        raise GraphError("graph has no target edge")
    if g.edges[g.target].owner is not Owner.WHITE:
        raise GraphError("target edge must be owned by white")
    if any(e.owner is Owner.NEUTRAL for e in g.edges.values()):
        raise GraphError("every edge needs a white or black owner")
    _require_legal(g)
    c = Compiled(g)
    t = c.index[g.target]
    memo: dict[tuple[int, int], bool] = {}

    def white_wins(mask: int, white: int) -> bool:
        key = (mask, white)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if len(memo) > max_states:
            raise BoundExceeded(f"more than {max_states} states")
        if white:
            moves = c.moves(mask, c.white)
            res = t in moves or any(white_wins(mask | (1 << i), 0) for i in moves)
        else:
            moves = c.moves(mask, c.black)
            res = all(white_wins(mask | (1 << i), 1) for i in moves)
        memo[key] = res
        return res

    win = white_wins(0, 1)
    # principal variation: winner takes the first winning move, loser the lowest id
    line = []
    mask, white = 0, 1
    while True:
        moves = c.moves(mask, c.white if white else c.black)
        if not moves:
            break
        if white and t in moves:
            line.append(t)
            break
        if white == int(win):
            pick = next(i for i in moves if white_wins(mask | (1 << i), 1 - white) == win)
        else:
            pick = moves[0]
        line.append(pick)
        mask |= 1 << pick
        white = 1 - white
    return SolveReport("white" if win else "black", c.names(line), len(memo))


def solve_cgs(g: ConstraintGraph, max_states: int = DEFAULT_MAX_STATES) -> SolveReport:
    """Backtracking search for a legal orientation with forced-edge propagation."""
    if not g.is_undirected():
        raise GraphError("constraint graph satisfiability needs all edges undirected")
    eids = g.edge_ids()
    ends = {e: (g.edges[e].u, g.edges[e].v) for e in eids}
    w = {e: g.edges[e].weight for e in eids}
    need = {v.id: v.min_inflow for v in g.vertices.values()}
    have = {v: 0 for v in g.vertices}
    spare = {v: sum(w[e] for e in g.incident[v]) for v in g.vertices}
    orient: dict[str, str] = {}
    nodes = 0

    def assign(e, to, trail):
        orient[e] = to
        frm = ends[e][0] if ends[e][1] == to else ends[e][1]
        have[to] += w[e]
        spare[to] -= w[e]
        spare[frm] -= w[e]
        trail.append(e)
        return have[frm] + spare[frm] >= need[frm]

    def undo(trail, upto):
        while len(trail) > upto:
            e = trail.pop()
            to = orient.pop(e)
            frm = ends[e][0] if ends[e][1] == to else ends[e][1]
            have[to] -= w[e]
            spare[to] += w[e]
            spare[frm] += w[e]

    def propagate(trail) -> bool:
        changed = True
        while changed:
            changed = False
            for v in g.vertices:
                if have[v] + spare[v] < need[v]:
                    return False
                if have[v] >= need[v]:
                    continue
                for e in g.incident[v]:
                    if e in orient:
                        continue
                    if have[v] + spare[v] - w[e] < need[v]:
                        if not assign(e, v, trail):
                            return False
                        changed = True
        return True

    def search(trail) -> bool:
        nonlocal nodes
        nodes += 1
        if nodes > max_states:
            raise BoundExceeded(f"more than {max_states} nodes")
        mark = len(trail)
        if not propagate(trail):
            undo(trail, mark)
            return False
        free = [e for e in eids if e not in orient]
        if not free:
            return True
        e = free[0]
        for to in ends[e]:
            m2 = len(trail)
            if assign(e, to, trail) and search(trail):
                return True
            undo(trail, m2)
        undo(trail, mark)
        return False

    if search([]):
        return SolveReport("sat", {e: orient[e] for e in eids}, nodes)
    return SolveReport("unsat", None, nodes)


def _digraph(g: ConstraintGraph, against: bool) -> nx.MultiDiGraph:
    d = nx.MultiDiGraph()
    d.add_nodes_from(g.vertices)
    for e in g.edges.values():
        if e.points_to is None:
            raise GraphError(f"edge {e.id} is undirected")
        a, b = e.tail, e.points_to
        if against:
            a, b = b, a
        d.add_edge(a, b, key=e.id)
    return d


def topological_vertex_order(g: ConstraintGraph, against: bool = False) -> list[str]:
    """Vertices in topological order of the current orientation.

    With ``against=True`` the order follows signal flow, i.e. the direction
    in which edges get reversed.
    """
    d = _digraph(g, against)
    try:
        return list(nx.lexicographical_topological_sort(d, key=natural_key))
    except nx.NetworkXUnfeasible:
        cycle = [u for u, _v, *_ in nx.find_cycle(d)]
        raise GraphError(f"graph has a cycle through {cycle}") from None


def topological_edge_order(g: ConstraintGraph, against: bool = False) -> list[str]:
    """Edges sorted so that a tail's incoming edges precede its outgoing ones."""
    pos = {v: i for i, v in enumerate(topological_vertex_order(g, against))}

    def key(eid):
        e = g.edges[eid]
        src = e.points_to if against else e.tail
        return (pos[src], natural_key(eid))

    return sorted(g.edges, key=key)


def with_black_fillers(g: ConstraintGraph, count: int | None = None, prefix: str = "fill") -> ConstraintGraph:
    """Add ``count`` black edges between fresh FREE vertex pairs (default |E|)."""
    if count is None:
        count = len(g.edges)
    vs = list(g.vertices.values())
    es = list(g.edges.values())
    for i in range(count):
        a, b = f"{prefix}{i}a", f"{prefix}{i}b"
        vs += [Vertex.make(a, Kind.FREE), Vertex.make(b, Kind.FREE)]
        es.append(Edge(f"{prefix}{i}", a, b, 2, a, Owner.BLACK))
    return g.replace(vs, es)


def explore_unbounded(g: ConstraintGraph, start: dict[str, str] | None = None,
                      max_states: int = DEFAULT_MAX_STATES) -> set[int]:
    """Orientation bitsets reachable when edges may flip any number of times.

    Bit ``i`` set means edge ``i`` points opposite to its stored orientation.
    Only a testing aid; unbounded play is not a supported game.
    """
    c = Compiled(g)
    init = 0
    if start is not None:
        for e, to in start.items():
            if to != g.edges[e].points_to:
                init |= 1 << c.index[e]
    seen = {init}
    stack = [init]
    n = len(c.eids)
    while stack:
        mask = stack.pop()
        inf = c.inflows(mask)
        for i in range(n):
            bit = 1 << i
            h, t = (c.tail[i], c.head[i]) if mask & bit else (c.head[i], c.tail[i])
            if inf[h] - c.weight[i] >= c.minin[h]:
                nxt = mask ^ bit
                if nxt not in seen:
                    seen.add(nxt)
                    if len(seen) > max_states:
                        raise BoundExceeded(f"more than {max_states} states")
                    stack.append(nxt)
    return seen
