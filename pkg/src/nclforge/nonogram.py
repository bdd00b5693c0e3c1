"""Nonogram model, a line-propagation plus backtracking solver, and the
reduction from Constraint Graph Satisfiability on planar AND/OR graphs.

Cells hold 0 (white), 1 (black) or -1 (undecided) while solving.
"""
from __future__ import annotations

import json
from functools import lru_cache
from dataclasses import dataclass
from typing import Sequence

from .errors import BoundExceeded, NclForgeError, ReductionError
from .graph import Kind, natural_key

UNKNOWN = -1


def runs_of(cells: Sequence[int]) -> tuple[int, ...]:
    out, n = [], 0
    for c in cells:
        if c == 1:
            n += 1
        elif n:
            out.append(n)
            n = 0
    if n:
        out.append(n)
    return tuple(out)


def line_adheres(cells: Sequence[int], desc: Sequence[int]) -> bool:
    if any(c not in (0, 1) for c in cells):
        raise NclForgeError("line has an unassigned cell")
    return runs_of(cells) == tuple(desc)


@dataclass(frozen=True)
class NonogramPuzzle:
    rows: tuple[tuple[int, ...], ...]
    cols: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        for name, descs, length in (("row", self.rows, len(self.cols)), ("column", self.cols, len(self.rows))):
            for i, d in enumerate(descs):
                if any(x <= 0 for x in d):
                    raise NclForgeError(f"{name} {i}: runs must be positive")
                if sum(d) + len(d) - 1 > length:
                    raise NclForgeError(f"{name} {i}: description {d} does not fit in {length} cells")
        if sum(map(sum, self.rows)) != sum(map(sum, self.cols)):
            raise NclForgeError("row and column descriptions disagree on the number of black cells")

    @staticmethod
    def make(rows, cols) -> "NonogramPuzzle":
        norm = lambda ds: tuple(tuple(int(x) for x in d if int(x) != 0) for d in ds)
        return NonogramPuzzle(norm(rows), norm(cols))

    @property
    def m(self) -> int:
        return len(self.rows)

    @property
    def n(self) -> int:
        return len(self.cols)

    def check(self, grid) -> bool:
        return (all(line_adheres(grid[r], self.rows[r]) for r in range(self.m))
                and all(line_adheres([grid[r][c] for r in range(self.m)], self.cols[c]) for c in range(self.n)))

    # plain-text format -----------------------------------------------------------
    def to_text(self) -> str:
        fmt = lambda d: " ".join(map(str, d)) if d else "0"
        return "\n".join([f"{self.m} {self.n}"] + [fmt(d) for d in self.rows] + [fmt(d) for d in self.cols]) + "\n"

    @staticmethod
    def from_text(text: str) -> "NonogramPuzzle":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        try:
            m, n = map(int, lines[0].split())
            descs = [[int(x) for x in ln.split()] for ln in lines[1:]]
        except (ValueError, IndexError):
            raise NclForgeError("malformed Nonogram text") from None
        if len(descs) != m + n:
            raise NclForgeError(f"expected {m + n} description lines, got {len(descs)}")
        return NonogramPuzzle.make(descs[:m], descs[m:])


def grid_to_text(grid) -> str:
    return "\n".join("".join("#" if c == 1 else "." for c in row) for row in grid) + "\n"


# line solver -----------------------------------------------------------------------

def solve_line(cells: Sequence[int], desc: Sequence[int]) -> list[int] | None:
    """Most specific refinement of ``cells`` consistent with ``desc``.

    Returns None when no completion exists. Forward and backward reachability
    over (position, runs placed) determine which colors every cell can take.
    """
    n, k = len(cells), len(desc)
    # last forced-white position < i, for quick run placement checks
    white_before = [0] * (n + 1)
    for i, c in enumerate(cells):
        white_before[i + 1] = white_before[i] + (c == 0)

    def run_ok(i, d):
        end = i + d
        if end > n or white_before[end] - white_before[i]:
            return False
        return end == n or cells[end] != 1

    fwd = [[False] * (k + 1) for _ in range(n + 2)]
    fwd[0][0] = True
    for i in range(n):
        row = fwd[i]
        for j in range(k + 1):
            if not row[j]:
                continue
            if cells[i] != 1:
                fwd[i + 1][j] = True
            if j < k and run_ok(i, desc[j]):
                e = i + desc[j]
                fwd[min(e + 1, n)][j + 1] = True
    bwd = [[False] * (k + 1) for _ in range(n + 2)]
    bwd[n][k] = True
    for i in range(n - 1, -1, -1):
        for j in range(k, -1, -1):
            ok = cells[i] != 1 and bwd[i + 1][j]
            if not ok and j < k and run_ok(i, desc[j]):
                ok = bwd[min(i + desc[j] + 1, n)][j + 1]
            bwd[i][j] = ok
    if not bwd[0][0]:
        return None
    can_white = [False] * n
    black_diff = [0] * (n + 1)
    for i in range(n):
        for j in range(k + 1):
            if not fwd[i][j]:
                continue
            if cells[i] != 1 and bwd[i + 1][j]:
                can_white[i] = True
            if j < k and run_ok(i, desc[j]):
                e = i + desc[j]
                if bwd[min(e + 1, n)][j + 1]:
                    black_diff[i] += 1
                    black_diff[e] -= 1
                    if e < n:
                        can_white[e] = True
    out = list(cells)
    acc = 0
    for i in range(n):
        acc += black_diff[i]
        b, w = acc > 0, can_white[i]
        if not b and not w:
            return None
        if b and not w:
            out[i] = 1
        elif w and not b:
            out[i] = 0
    return out


def propagate(puzzle: NonogramPuzzle, grid: list[list[int]], dirty=None) -> bool:
    """Line-solve to a fixpoint in place; False on contradiction."""
    m, n = puzzle.m, puzzle.n
    todo = set(dirty) if dirty is not None else {("r", r) for r in range(m)} | {("c", c) for c in range(n)}
    while todo:
        kind, i = todo.pop()
        if kind == "r":
            cur = grid[i]
            new = solve_line(cur, puzzle.rows[i])
            if new is None:
                return False
            for c in range(n):
                if new[c] != cur[c]:
                    cur[c] = new[c]
                    todo.add(("c", c))
        else:
            cur = [grid[r][i] for r in range(m)]
            new = solve_line(cur, puzzle.cols[i])
            if new is None:
                return False
            for r in range(m):
                if new[r] != cur[r]:
                    grid[r][i] = new[r]
                    todo.add(("r", r))
    return True


def solve_nonogram(puzzle: NonogramPuzzle, max_solutions: int = 2, fixed: dict | None = None,
                   max_nodes: int = 10_000_000) -> list[list[list[int]]]:
    """Up to ``max_solutions`` solutions in a deterministic order.

    Branching picks the first undecided cell in row-major order and tries
    white before black. ``fixed`` pins cells ``{(r, c): 0 or 1}`` up front.
    """
    grid = [[UNKNOWN] * puzzle.n for _ in range(puzzle.m)]
    for (r, c), v in (fixed or {}).items():
        grid[r][c] = v
    sols: list[list[list[int]]] = []
    nodes = 0

    def rec(g, dirty):
        nonlocal nodes
        nodes += 1
        if nodes > max_nodes:
            raise BoundExceeded(f"more than {max_nodes} search nodes")
        if not propagate(puzzle, g, dirty):
            return
        for r in range(puzzle.m):
            for c in range(puzzle.n):
                if g[r][c] == UNKNOWN:
                    for v in (0, 1):
                        h = [row[:] for row in g]
                        h[r][c] = v
                        rec(h, {("r", r), ("c", c)})
                        if len(sols) >= max_solutions:
                            return
                    return
        sols.append(g)

    rec(grid, None)
    return sols


# gadget data ------------------------------------------------------------------------

def _load_data() -> dict:
    from importlib import resources
    return json.loads(resources.files("nclforge").joinpath("data/nonogram.json").read_text())


DATA = _load_data()
FRAME = 11  # isolated gadget side: ring, separation, 7 interior lines, separation, ring
INTERIOR = 7


def small_example() -> NonogramPuzzle:
    d = DATA["small_example"]
    return NonogramPuzzle.make(d["rows"], d["cols"])


def signal_pair() -> NonogramPuzzle:
    """Two subnonograms passing one signal across a group of three separation lines."""
    d = DATA["signal_pair"]
    return NonogramPuzzle.make(d["rows"], d["cols"])


def gadget_puzzle(kind: str) -> tuple[NonogramPuzzle, dict[str, tuple[int, int]]]:
    """The isolated 11x11 gadget and its boundary cells by port letter."""
    d = DATA["gadgets"][kind]
    return NonogramPuzzle.make(d["rows"], d["cols"]), {k: tuple(v) for k, v in d["ports"].items()}


def gadget_tuples(kind: str) -> dict[tuple[int, ...], int]:
    """Enumerate all solutions of an isolated gadget; count them per boundary tuple."""
    puzzle, ports = gadget_puzzle(kind)
    out: dict[tuple[int, ...], int] = {}
    for g in solve_nonogram(puzzle, max_solutions=10_000):
        key = tuple(g[r][c] for _, (r, c) in sorted(ports.items()))
        out[key] = out.get(key, 0) + 1
    return out


# composite layout -------------------------------------------------------------------
#
# Each used subnonogram is a full gadget frame: ring line, separation lines,
# G interior lines, separation lines, ring line. Frames are tiled so that the
# ring lines of neighbours sit side by side; between two interiors there is
# therefore a group of D lines: the separation lines of both frames around the
# two ring lines. A port's ring line holds exactly one black cell on its two
# port lines (the signal line and its complement), and each of those lines
# keeps the two frames' boundary runs apart, so exactly one of the two facing
# ring cells is black: an edge points at exactly one end.
#
# That only works when both frames use the same complement line. Seen from
# the outside, a port's complement lies left or right of its facing
# direction; combined with the parity of that direction this gives the
# port's class. Facing ports must have different classes, every wire piece
# has one port of each class, and a vertex gadget has port a in one class and
# b, c in the other. The embedder picks frame symmetries accordingly.

SIDES = {"T": (-1, 0), "R": (0, 1), "B": (1, 0), "L": (0, -1)}
OPPOSITE = {"T": "B", "B": "T", "L": "R", "R": "L"}
CLOCKWISE = ("T", "R", "B", "L")
SYMMETRIES = tuple((t, v, h) for t in (False, True) for v in (False, True) for h in (False, True))
WIRES = ("TURN", "STRAIGHT")


@dataclass(frozen=True)
class LayoutParams:
    D: int = 5
    G: int = 7

    def __post_init__(self):
        if self.D < 1 or self.G < 1:
            raise NclForgeError("layout parameters must be positive")

    def check_supported(self):
        if self.G != INTERIOR:
            raise NclForgeError(f"the gadgets have a {INTERIOR}x{INTERIOR} interior; G={self.G} is not available")
        if self.D < 4:
            raise NclForgeError("D must be at least 4: two ring lines plus a separation line per side")

    @property
    def lead(self) -> int:  # separation lines on the top/left of a frame
        return 1

    @property
    def trail(self) -> int:  # separation lines on the bottom/right of a frame
        return self.D - 3

    @property
    def frame(self) -> int:
        return self.G + self.D


@dataclass(frozen=True)
class _Frame:
    """An 11x11 frame in description form.

    ``ports`` holds (letter, ring cell, complement cell) triples.
    """
    rows: tuple
    cols: tuple
    ports: tuple = ()

    @staticmethod
    def gadget(kind: str) -> "_Frame":
        d = DATA["gadgets"][kind]
        norm = lambda ds: tuple(tuple(x) for x in ds)
        last = FRAME - 1
        ports = []
        for k, (r, c) in sorted(d["ports"].items()):
            comp = (r - 1, c) if c in (0, last) else (r, c - 1)
            ports.append((k, (r, c), comp))
        return _Frame(norm(d["rows"]), norm(d["cols"]), tuple(ports))

    @staticmethod
    def picture(lines: Sequence[str]) -> "_Frame":
        cells = [[int(ch == "#") for ch in ln] for ln in lines]
        rows = tuple(runs_of(r) for r in cells)
        cols = tuple(runs_of([r[c] for r in cells]) for c in range(len(cells[0])))
        return _Frame(rows, cols)

    def _map(self, rows, cols, f) -> "_Frame":
        return _Frame(rows, cols, tuple((k, f(p), f(q)) for k, p, q in self.ports))

    def transpose(self) -> "_Frame":
        return self._map(self.cols, self.rows, lambda p: (p[1], p[0]))

    def flip_h(self) -> "_Frame":
        last = FRAME - 1
        return self._map(tuple(d[::-1] for d in self.rows), self.cols[::-1], lambda p: (p[0], last - p[1]))

    def flip_v(self) -> "_Frame":
        last = FRAME - 1
        return self._map(self.rows[::-1], tuple(d[::-1] for d in self.cols), lambda p: (last - p[0], p[1]))

    def oriented(self, sym) -> "_Frame":
        transpose, flip_v, flip_h = sym
        f = self.transpose() if transpose else self
        if flip_v:
            f = f.flip_v()
        if flip_h:
            f = f.flip_h()
        return f

    def geometry(self) -> dict[str, tuple[str, int]]:
        """letter -> (side, class)."""
        last = FRAME - 1
        out = {}
        for k, (r, c), (cr, cc) in self.ports:
            side = "L" if c == 0 else "R" if c == last else "T" if r == 0 else "B"
            dr, dc = SIDES[side]
            right = (cr - r, cc - c) == (dc, -dr)
            out[k] = (side, (CLOCKWISE.index(side) % 2) ^ int(right))
        return out


@lru_cache(maxsize=None)
def _geometry(kind: str, sym) -> dict[str, tuple[str, int]]:
    return _Frame.gadget(kind).oriented(sym).geometry()


def _widen_desc(d: tuple, lead: int, trail: int) -> tuple:
    if len(d) < 2:
        raise NclForgeError("frame line without both separation cells")
    return (d[0] + lead - 1,) + d[1:-1] + (d[-1] + trail - 1,)


def _widen_index(i: int, lead: int, trail: int) -> list[int]:
    """New line indices of old frame line ``i`` once separations are widened."""
    if i == 0:
        return [0]
    if i == 1:
        return list(range(1, 1 + lead))
    if i < FRAME - 2:
        return [i + lead - 1]
    if i == FRAME - 2:
        return list(range(lead + INTERIOR + 1, lead + INTERIOR + 1 + trail))
    return [lead + INTERIOR + trail + 1]


def _widen(frame: _Frame, p: LayoutParams) -> tuple[list, list, dict]:
    """Descriptions of a frame with ``lead``/``trail`` separation lines per side.

    Separation lines are always black, so the run holding one is the first
    (or last) run of every crossing line; widening only lengthens those runs.
    """
    lead, trail, size = p.lead, p.trail, p.frame

    def lines(descs):
        out = []
        for i, d in enumerate(descs):
            w = (size,) if i in (1, FRAME - 2) else _widen_desc(d, lead, trail)
            out += [w] * len(_widen_index(i, lead, trail))
        return out

    ports = {k: (_widen_index(r, lead, trail)[0], _widen_index(c, lead, trail)[0]) for k, (r, c), _ in frame.ports}
    return lines(frame.rows), lines(frame.cols), ports


TEMPLATE = _Frame.picture(DATA["template"])


def _terminator(side: str) -> _Frame:
    """Template frame whose ring cell on ``side`` is black: it absorbs a port facing it."""
    pic = [list(r) for r in DATA["template"]]
    pic[5][0] = "#"
    f = _Frame.picture(["".join(r) for r in pic])
    return {"L": f, "T": f.transpose(), "R": f.flip_h(), "B": f.transpose().flip_v()}[side]


@lru_cache(maxsize=None)
def _wire(entry: str, exit: str, entry_class: int) -> tuple[str, tuple, int]:
    """Wire piece joining ``entry`` to ``exit`` whose entry port has ``entry_class``.

    Returns (kind, symmetry, class of the exit port).
    """
    kind = "STRAIGHT" if OPPOSITE[entry] == exit else "TURN"
    for sym in SYMMETRIES:
        geo = _geometry(kind, sym)
        by_side = {s: cls for s, cls in geo.values()}
        if set(by_side) == {entry, exit} and by_side[entry] == entry_class:
            return kind, sym, by_side[exit]
    raise AssertionError("every wire direction exists in both classes")


# embedding --------------------------------------------------------------------------

@dataclass
class Embedding:
    """Coarse placement: one frame per used cell.

    ``frames`` maps cells to (kind, symmetry, owner); terminators of unused
    ports are ("TERM", side, vertex). ``ports`` maps (edge, vertex) to
    (cell, letter).
    """
    frames: dict
    ports: dict
    height: int
    width: int


def _step(cell, side):
    dr, dc = SIDES[side]
    return cell[0] + dr, cell[1] + dc


def _port_plans(g, v: str) -> list[dict]:
    """Every assignment letter -> edge id (None for an unused port) respecting port colors."""
    from itertools import permutations
    inc = sorted(g.incident[v], key=natural_key)
    red = [e for e in inc if g.edges[e].weight == 1]
    blue = [e for e in inc if g.edges[e].weight == 2]
    if g.vertices[v].kind is Kind.AND:
        reds = sorted(set(permutations(red + [None] * (2 - len(red)))), key=str)
        return [{"a": a, "b": b, "c": blue[0] if blue else None} for a, b in reds]
    slots = blue + [None] * (3 - len(blue))
    return [dict(zip("abc", p)) for p in sorted(set(permutations(slots)), key=str)]


def _cyclic_equal(a: list, b: list) -> bool:
    if len(a) != len(b):
        return False
    if len(a) <= 2:
        return sorted(a) == sorted(b)
    if a[0] not in b:
        return False
    i = b.index(a[0])
    return b[i:] + b[:i] == a


def _candidates(g, v, rotation) -> list[tuple]:
    """(symmetry, plan, geometry) options whose clockwise edge order matches ``rotation``."""
    out = []
    kind = g.vertices[v].kind.value
    for sym in SYMMETRIES:
        geo = _geometry(kind, sym)
        for plan in _port_plans(g, v):
            order = [plan[k] for k in sorted(geo, key=lambda k: CLOCKWISE.index(geo[k][0])) if plan[k]]
            if _cyclic_equal(order, rotation):
                out.append((sym, plan, geo))
    return out


def _choose(g, verts, pos, cands, rng, bounds, budget=5000):
    """Backtracking choice of one candidate per vertex.

    Facing ports must have different classes and every port needs its own
    free neighbouring cell (or the partner vertex, facing back).
    """
    cell_of = {c: v for v, c in pos.items()}
    inside = lambda c: 0 <= c[0] < bounds[0] and 0 <= c[1] < bounds[1]
    chosen: dict = {}
    reserved: dict = {}
    nodes = 0

    def score(v, cand):
        _, plan, geo = cand
        cost = rng.random() * 3
        for k, e in plan.items():
            nb = _step(pos[v], geo[k][0])
            if e is not None:
                o = pos[g.edges[e].other(v)]
                cost += abs(nb[0] - o[0]) + abs(nb[1] - o[1])
        return cost

    def fits(v, cand):
        _, plan, geo = cand
        claims = {}
        for k, e in plan.items():
            side, cls = geo[k]
            nb = _step(pos[v], side)
            if not inside(nb):
                return None
            w = cell_of.get(nb)
            if w is not None:
                if e is None or g.edges[e].other(v) != w:
                    return None
                if w in chosen:
                    _, wplan, wgeo = chosen[w]
                    k2 = next(x for x, y in wplan.items() if y == e)
                    if wgeo[k2][0] != OPPOSITE[side] or wgeo[k2][1] == cls:
                        return None
                continue
            if nb in reserved or nb in claims:
                return None
            claims[nb] = e
            if e is not None:
                w = g.edges[e].other(v)
                if w in chosen:
                    _, wplan, wgeo = chosen[w]
                    k2 = next(x for x, y in wplan.items() if y == e)
                    if wgeo[k2][1] == cls:
                        return None
        return claims

    def rec(i):
        nonlocal nodes
        if i == len(verts):
            return True
        v = verts[i]
        for cand in sorted(cands[v], key=lambda c: score(v, c)):
            nodes += 1
            if nodes > budget:
                return False
            claims = fits(v, cand)
            if claims is None:
                continue
            chosen[v] = cand
            reserved.update(claims)
            if rec(i + 1):
                return True
            del chosen[v]
            for c in claims:
                del reserved[c]
        return False

    return dict(chosen) if rec(0) else None


def _route(start, heading, goal, goal_exit, blocked, bounds):
    """Shortest wire path from ``start`` (entered moving ``heading``) to ``goal``.

    The path must leave ``goal`` moving ``goal_exit``. Returns a list of
    (cell, entry side, exit side) or None.
    """
    from collections import deque
    h, w = bounds
    if start in blocked:
        return None
    first = (start, heading)
    prev = {first: None}
    queue = deque([first])
    while queue:
        cell, head = queue.popleft()
        entry = OPPOSITE[head]
        for exit_side in [head] + [s for s in CLOCKWISE if s not in (head, entry)]:
            if cell == goal:
                if exit_side != goal_exit:
                    continue
                path, node = [(cell, entry, exit_side)], (cell, head)
                while prev[node] is not None:
                    node, out = prev[node]
                    path.append((node[0], OPPOSITE[node[1]], out))
                path.reverse()
                cells = [p[0] for p in path]
                return path if len(set(cells)) == len(cells) else None
            nxt = (_step(cell, exit_side), exit_side)
            c = nxt[0]
            if 0 <= c[0] < h and 0 <= c[1] < w and c not in blocked and nxt not in prev:
                prev[nxt] = ((cell, head), exit_side)
                queue.append(nxt)
    return None


def _route_all(g, pos, chosen, bounds, rng) -> Embedding | None:
    frames: dict = {}
    ports: dict = {}
    side_cls: dict = {}
    reserved: dict = {}
    for v, (sym, plan, geo) in chosen.items():
        frames[pos[v]] = (g.vertices[v].kind.value, sym, v)
    for v, (sym, plan, geo) in chosen.items():
        for k, e in plan.items():
            side, cls = geo[k]
            nb = _step(pos[v], side)
            if e is None:
                frames[nb] = ("TERM", OPPOSITE[side], v)
            else:
                ports[(e, v)] = (pos[v], k)
                side_cls[(e, v)] = (side, cls)
                reserved[nb] = e
    dist = lambda e: sum(abs(a - b) for a, b in zip(pos[g.edges[e].u], pos[g.edges[e].v]))
    for e in sorted({e for e, _ in side_cls}, key=lambda e: (dist(e) + rng.random(), natural_key(e))):
        u, v = g.edges[e].u, g.edges[e].v
        (su, cu), (sv, cv) = side_cls[(e, u)], side_cls[(e, v)]
        start, goal = _step(pos[u], su), _step(pos[v], sv)
        if start == pos[v]:
            continue
        blocked = set(frames) | {c for c, x in reserved.items() if x != e}
        path = _route(start, su, goal, OPPOSITE[sv], blocked, bounds)
        if path is None:
            return None
        cls = cu
        for cell, a, b in path:
            kind, sym, cls = _wire(a, b, 1 - cls)
            frames[cell] = (kind, sym, e)
        if cls == cv:
            raise AssertionError("class mismatch on a routed edge")
    return Embedding(frames, ports, *bounds)


def _planar_sketch(g):
    """Clockwise edge rotation per vertex and planar drawing coordinates.

    Edges are subdivided first so parallel edges get distinct places in the
    rotation system.
    """
    import networkx as nx
    from networkx.algorithms.planar_drawing import combinatorial_embedding_to_pos
    h = nx.Graph()
    h.add_nodes_from(("v", v) for v in g.vertices)
    for e in g.edges.values():
        h.add_edge(("v", e.u), ("e", e.id))
        h.add_edge(("e", e.id), ("v", e.v))
    ok, emb = nx.check_planarity(h)
    if not ok:
        raise ReductionError("graph is not planar")
    rot = {v: [x[1] for x in emb.neighbors_cw_order(("v", v))] for v in g.vertices}
    xy = {}
    shift = 0
    for comp in sorted((sorted(c) for c in nx.connected_components(h)), key=lambda c: c[0]):
        if len(comp) > 2:
            sub = nx.PlanarEmbedding()
            for a in comp:
                prev = None
                for b in emb.neighbors_cw_order(a):
                    if prev is None:
                        sub.add_half_edge_first(a, b)
                    else:
                        sub.add_half_edge_cw(a, b, prev)
                    prev = b
            coords = combinatorial_embedding_to_pos(sub)
        else:
            coords = {x: (i, 0) for i, x in enumerate(comp)}
        for node, (x, y) in coords.items():
            if node[0] == "v":
                xy[node[1]] = (x + shift, y)
        shift += max(x for x, _ in coords.values()) + 1
    return rot, xy


def embed(g, seed: int = 0, attempts: int = 200) -> Embedding:
    """Orthogonal placement of an AND/OR graph with wires on a coarse grid.

    Vertices take the x and y ranks of a planar straight-line drawing, so they
    occupy points of a v x v lattice spaced a few cells apart; later attempts
    sample lattice points at random. Gadget symmetries follow the planar
    rotation system and the port classes; edges are routed by breadth-first
    search through free cells.
    """
    import random
    rng = random.Random(seed)
    verts = sorted(g.vertices, key=natural_key)
    n = len(verts)
    if n == 0:
        raise ReductionError("graph has no vertices")
    rot, xy = _planar_sketch(g)
    xs = sorted({p[0] for p in xy.values()})
    ys = sorted({p[1] for p in xy.values()})
    rank = {v: (len(ys) - 1 - ys.index(xy[v][1]), xs.index(xy[v][0])) for v in verts}
    cands = [{v: _candidates(g, v, r[::-1] if m else r) for v, r in rot.items()} for m in (0, 1)]
    lattice = [(i, j) for i in range(n) for j in range(n)]
    for spacing in (2, 3, 4):
        size = spacing * (n - 1) + 3
        for k in range(attempts):
            mirror = k % 2
            if k < 2:
                base = rank
            else:
                base = dict(zip(verts, rng.sample(lattice, n)))
            if mirror:
                base = {v: (n - 1 - r, c) for v, (r, c) in base.items()}
            pos = {v: (1 + spacing * r, 1 + spacing * c) for v, (r, c) in base.items()}
            chosen = _choose(g, verts, pos, cands[mirror], rng, (size, size))
            if chosen is None:
                continue
            emb = _route_all(g, pos, chosen, (size, size), rng)
            if emb is not None:
                return _crop(emb)
    raise ReductionError("could not route the graph on the coarse grid")


def _crop(emb: Embedding) -> Embedding:
    rs = [c[0] for c in emb.frames]
    cs = [c[1] for c in emb.frames]
    r0, c0 = min(rs), min(cs)
    move = lambda c: (c[0] - r0, c[1] - c0)
    return Embedding({move(c): f for c, f in emb.frames.items()},
                     {k: (move(c), l) for k, (c, l) in emb.ports.items()},
                     max(rs) - r0 + 1, max(cs) - c0 + 1)


# assembly and reduction ---------------------------------------------------------------

def _frame_at(emb: Embedding, cell) -> _Frame:
    f = emb.frames.get(cell)
    if f is None:
        return TEMPLATE
    if f[0] == "TERM":
        return _terminator(f[1])
    return _Frame.gadget(f[0]).oriented(f[1])


def assemble(emb: Embedding, params: LayoutParams) -> tuple[NonogramPuzzle, dict]:
    """Puzzle descriptions for an embedding, plus the pixel of every port.

    Separation lines run through every frame of their coarse row or column,
    so they form one run across the whole grid; every other line is the
    concatenation of its frames' descriptions, since ring cells never let
    runs of neighbouring frames touch.
    """
    size = params.frame
    sep = set(_widen_index(1, params.lead, params.trail) + _widen_index(FRAME - 2, params.lead, params.trail))
    wide = {cell: _widen(_frame_at(emb, cell), params)
            for cell in ((r, c) for r in range(emb.height) for c in range(emb.width))}
    m, n = emb.height * size, emb.width * size
    rows = []
    for big_r in range(emb.height):
        for i in range(size):
            if i in sep:
                rows.append((n,))
            else:
                rows.append(sum((wide[(big_r, c)][0][i] for c in range(emb.width)), ()))
    cols = []
    for big_c in range(emb.width):
        for j in range(size):
            if j in sep:
                cols.append((m,))
            else:
                cols.append(sum((wide[(r, big_c)][1][j] for r in range(emb.height)), ()))
    pixel = {}
    for (e, v), (cell, letter) in emb.ports.items():
        r, c = wide[cell][2][letter]
        pixel[(e, v)] = (cell[0] * size + r, cell[1] * size + c)
    return NonogramPuzzle(tuple(rows), tuple(cols)), pixel


def check_cgs_input(g) -> None:
    """Raise ReductionError unless ``g`` is an undirected planar AND/OR graph of degree <= 3."""
    import networkx as nx
    if not g.is_undirected():
        raise ReductionError("constraint graph satisfiability needs an undirected graph")
    for v in g.vertices.values():
        if v.kind not in (Kind.AND, Kind.OR):
            raise ReductionError(f"vertex {v.id}: only AND and OR vertices can be simulated, not {v.kind.value}")
        if v.min_inflow != 2:
            raise ReductionError(f"vertex {v.id}: AND/OR vertices need min inflow 2")
        inc = g.incident[v.id]
        if len(inc) > 3:
            raise ReductionError(f"vertex {v.id} has degree {len(inc)} > 3")
        red = sum(g.edges[e].weight == 1 for e in inc)
        if v.kind is Kind.AND and (red > 2 or len(inc) - red > 1):
            raise ReductionError(f"AND vertex {v.id} needs at most two red and one blue edge")
        if v.kind is Kind.OR and red:
            raise ReductionError(f"OR vertex {v.id} has a red edge")
    for e in g.edges.values():
        if e.u == e.v:
            raise ReductionError(f"edge {e.id} is a loop")
    simple = nx.Graph()
    simple.add_nodes_from(g.vertices)
    simple.add_edges_from((e.u, e.v) for e in g.edges.values())
    if not nx.check_planarity(simple)[0]:
        raise ReductionError("graph is not planar")


def reduce_cgs_to_nonogram(g, params: LayoutParams | None = None):
    """Nonogram that is solvable iff ``g`` has a legal orientation."""
    from .trace import ReductionTrace
    params = params or LayoutParams()
    params.check_supported()
    check_cgs_input(g)
    emb = embed(g)
    puzzle, pixel = assemble(emb, params)
    trace = ReductionTrace("nonogram", g)
    for (e, v), (r, c) in sorted(pixel.items(), key=lambda kv: (natural_key(kv[0][0]), natural_key(kv[0][1]))):
        trace.add_edge(e, f"cell({r},{c})@{v}", "boundary-cell")
    for cell, (kind, _, owner) in sorted(emb.frames.items()):
        if kind in WIRES:
            trace.add_edge(owner, f"subnonogram({cell[0]},{cell[1]})", "channel")
    for i, v in enumerate(sorted(g.vertices, key=natural_key)):
        cell = next(c for c, f in emb.frames.items() if f[0] in ("AND", "OR") and f[2] == v)
        trace.vertices[v] = {"gadget": f"subnonogram({cell[0]},{cell[1]})", "kind": g.vertices[v].kind.value,
                             "index": i}
    trace.params = {
        "D": params.D, "G": params.G, "frame": params.frame,
        "coarse_grid": [emb.height, emb.width],
        "frames": {f"{r},{c}": [f[0], list(f[1]) if f[0] != "TERM" else f[1]]
                   for (r, c), f in sorted(emb.frames.items())},
        "ports": {e: {v: list(pixel[(e, v)]) for (e2, v) in pixel if e2 == e} for e, _ in pixel},
    }
    return puzzle, trace


def orientation_from_grid(trace, grid) -> dict[str, str]:
    """Read the edge orientation off a solved grid: black port cell = edge points at that vertex."""
    out = {}
    for e, ends in trace.params["ports"].items():
        black = [v for v, (r, c) in ends.items() if grid[r][c] == 1]
        if len(black) != 1:
            raise NclForgeError(f"edge {e}: port cells do not encode an orientation")
        out[e] = black[0]
    return out
