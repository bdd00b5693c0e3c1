"""Generalized Mahjong Solitaire and the reduction from acyclic Bounded NCL.

Tiles are numbered 0..N-1; tile ``t`` belongs to tile set ``sets[t]`` and
sits at ``positions[t] = (i, j, k)``: cross section ``i``, column ``j``,
height ``k``.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, NamedTuple

from .errors import BoundExceeded, IllegalMoveError, NclForgeError
from .games import DEFAULT_MAX_STATES, SolveReport
from .graph import ConstraintGraph, Kind
from .lowering import lower
from .trace import ReductionTrace

Pos = tuple[int, int, int]


class PairMove(NamedTuple):
    a: int
    b: int

    def to_dict(self) -> dict:
        return {"remove": [self.a, self.b]}

    @staticmethod
    def from_dict(d) -> "PairMove":
        a, b = d["remove"] if isinstance(d, dict) else d
        return PairMove(int(a), int(b))


def check_configuration(positions: Iterable[Pos]) -> None:
    """Raise unless ``positions`` has gap-free rows and supported tiles."""
    occ = set(positions)
    rows: dict[tuple[int, int], list[int]] = {}
    for (i, j, k) in occ:
        if min(i, j, k) < 0:
            raise NclForgeError(f"negative coordinate in {(i, j, k)}")
        if k > 0 and (i, j, k - 1) not in occ:
            raise NclForgeError(f"tile at {(i, j, k)} has nothing underneath")
        rows.setdefault((i, k), []).append(j)
    for (i, k), js in rows.items():
        if max(js) - min(js) + 1 != len(js):
            raise NclForgeError(f"row i={i}, k={k} has a gap")


@dataclass(frozen=True)
class Arrangement:
    sets: tuple[int, ...]
    positions: tuple[Pos, ...]

    def __post_init__(self):
        if len(self.sets) != len(self.positions):
            raise NclForgeError("one position per tile")
        if len(set(self.positions)) != len(self.positions):
            raise NclForgeError("two tiles share a position")
        check_configuration(self.positions)
        count: dict[int, int] = {}
        for s in self.sets:
            count[s] = count.get(s, 0) + 1
        odd = sorted(s for s, c in count.items() if c % 2)
        if odd:
            raise NclForgeError(f"tile sets of odd size: {odd}")

    @property
    def tiles(self) -> range:
        return range(len(self.sets))

    def set_sizes(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for s in self.sets:
            out[s] = out.get(s, 0) + 1
        return out

    def to_dict(self) -> dict:
        return {"tiles": [{"i": i, "j": j, "k": k, "set": s} for s, (i, j, k) in zip(self.sets, self.positions)]}

    @staticmethod
    def from_dict(d) -> "Arrangement":
        try:
            rows = d["tiles"] if isinstance(d, dict) else d
            return Arrangement(tuple(int(r["set"]) for r in rows),
                               tuple((int(r["i"]), int(r["j"]), int(r["k"])) for r in rows))
        except (KeyError, TypeError, ValueError) as exc:
            raise NclForgeError(f"malformed Mahjong arrangement: {exc}") from None

    def render(self) -> str:
        by_i: dict[int, dict[tuple[int, int], tuple[int, int]]] = {}
        for t, (i, j, k) in enumerate(self.positions):
            by_i.setdefault(i, {})[(j, k)] = (t, self.sets[t])
        lines = []
        for i in sorted(by_i):
            cells = by_i[i]
            width = max(j for j, _ in cells) + 1
            height = max(k for _, k in cells) + 1
            lines.append(f"cross section {i}:")
            for k in reversed(range(height)):
                row = []
                for j in range(width):
                    row.append(f"{cells[(j, k)][1]:>4}" if (j, k) in cells else "    ")
                lines.append("  " + "".join(row).rstrip())
        return "\n".join(lines)


class _Geometry:
    """Neighbor tables so availability is a few bit tests."""

    def __init__(self, arr: Arrangement):
        where = {p: t for t, p in enumerate(arr.positions)}
        self.above, self.left, self.right = [], [], []
        for (i, j, k) in arr.positions:
            self.above.append(where.get((i, j, k + 1), -1))
            self.left.append(where.get((i, j - 1, k), -1))
            self.right.append(where.get((i, j + 1, k), -1))

    def available(self, t: int, mask: int) -> bool:
        a = self.above[t]
        if a >= 0 and mask >> a & 1:
            return False
        lft, rgt = self.left[t], self.right[t]
        return not (lft >= 0 and mask >> lft & 1) or not (rgt >= 0 and mask >> rgt & 1)


def is_available(arr: Arrangement, pos: Pos, removed: Iterable[int] = ()) -> bool:
    occ = set(arr.positions) - {arr.positions[t] for t in removed}
    if pos not in occ:
        raise NclForgeError(f"position {pos} is not occupied")
    i, j, k = pos
    if (i, j, k + 1) in occ:
        return False
    return (i, j - 1, k) not in occ or (i, j + 1, k) not in occ


def legal_moves(arr: Arrangement, removed: frozenset = frozenset()) -> set[PairMove]:
    geo = _Geometry(arr)
    mask = sum(1 << t for t in arr.tiles if t not in removed)
    avail = [t for t in arr.tiles if t not in removed and geo.available(t, mask)]
    return {PairMove(a, b) for a, b in combinations(avail, 2) if arr.sets[a] == arr.sets[b]}


def apply(arr: Arrangement, move: PairMove, removed: frozenset = frozenset()) -> frozenset:
    """Remove a matching available pair; returns the new removed-tile set."""
    a, b = move
    for t in (a, b):
        if not 0 <= t < len(arr.sets) or t in removed:
            raise IllegalMoveError(f"tile {t} is not on the board")
    if a == b or arr.sets[a] != arr.sets[b]:
        raise IllegalMoveError(f"tiles {a} and {b} do not match")
    for t in (a, b):
        if not is_available(arr, arr.positions[t], removed):
            raise IllegalMoveError(f"tile {t} is not available")
    return removed | {a, b}


def replay(arr: Arrangement, moves) -> frozenset:
    removed: frozenset = frozenset()
    for mv in moves:
        removed = apply(arr, mv if isinstance(mv, PairMove) else PairMove.from_dict(mv), removed)
    return removed


def remaining(arr: Arrangement, removed: frozenset) -> Arrangement:
    keep = [t for t in arr.tiles if t not in removed]
    return Arrangement(tuple(arr.sets[t] for t in keep), tuple(arr.positions[t] for t in keep))


def solve_mahjong(arr: Arrangement, max_states: int = DEFAULT_MAX_STATES) -> SolveReport:
    """Memoized depth-first search over remaining-tile bitmasks.

    Whenever the last two tiles of a set are both available they are removed
    at once: removals never make another tile unavailable and those two have
    no other partner, so this loses nothing.
    """
    geo = _Geometry(arr)
    full = (1 << len(arr.sets)) - 1
    members: dict[int, list[int]] = {}
    for t, s in enumerate(arr.sets):
        members.setdefault(s, []).append(t)
    dead: set[int] = set()
    nodes = 0

    def forced(mask: int, trail: list) -> int:
        changed = True
        while changed:
            changed = False
            for tiles in members.values():
                left = [t for t in tiles if mask >> t & 1]
                if len(left) == 2 and all(geo.available(t, mask) for t in left):
                    mask &= ~(1 << left[0] | 1 << left[1])
                    trail.append(PairMove(*left))
                    changed = True
        return mask

    def dfs(mask: int, trail: list):
        nonlocal nodes
        mask = forced(mask, trail)
        if mask == 0:
            return trail
        if mask in dead:
            return None
        nodes += 1
        if nodes > max_states:
            raise BoundExceeded(f"more than {max_states} states")
        avail: dict[int, list[int]] = {}
        m = mask
        while m:
            low = m & -m
            t = low.bit_length() - 1
            if geo.available(t, mask):
                avail.setdefault(arr.sets[t], []).append(t)
            m ^= low
        for tiles in avail.values():
            for a, b in combinations(tiles, 2):
                res = dfs(mask & ~(1 << a | 1 << b), trail + [PairMove(a, b)])
                if res is not None:
                    return res
        dead.add(mask)
        return None

    res = dfs(full, [])
    if res is None:
        return SolveReport("not-winnable", None, nodes)
    return SolveReport("winnable", [mv.to_dict() for mv in res], nodes)


# gadgets ---------------------------------------------------------------------------
#
# Columns bottom to top. Ints are tile sets local to the gadget; ("lock", p) is the
# lock tile for input p and ("key", q) the key tile for output q.

GADGETS: dict[Kind, list[list]] = {
    Kind.AND: [[("key", 0), 3, ("lock", 0)], [3, ("lock", 1)]],
    Kind.OR: [[("lock", 0)], [("key", 0)], [("lock", 1)]],
    Kind.FANOUT: [[3, ("lock", 0)], [("key", 0)], [("key", 1)], [3]],
    Kind.CHOICE: [[3], [("key", 0), 4, 3, ("lock", 0)], [3, 5, 5], [("key", 1), 4], [3]],
}


def _place(kind: Kind, i: int, label) -> list[tuple[Pos, object]]:
    out = []
    for j, col in enumerate(GADGETS[kind]):
        for k, tok in enumerate(col):
            out.append(((i, j, k), label(tok)))
    return out


def reduce_ncl_to_mahjong(g: ConstraintGraph) -> tuple[Arrangement, ReductionTrace]:
    low = lower(g)
    lg = low.graph
    trace = ReductionTrace("mahjong", g)
    next_set = [1]

    def fresh() -> int:
        s = next_set[0]
        next_set[0] += 1
        return s

    # one tile set per edge, numbered with the consumer (or producer) gadget
    edge_set: dict[str, int] = {}
    internal: dict[tuple[int, int], int] = {}
    for gad in low.gadgets:
        for eid in gad.inputs:
            edge_set[eid] = fresh()
        for lbl in sorted({t for col in GADGETS[gad.kind] for t in col if isinstance(t, int)}):
            internal[(gad.index, lbl)] = fresh()
        for eid in gad.outputs:
            if eid not in edge_set:
                edge_set[eid] = fresh()
    for eid in lg.edge_ids():
        edge_set.setdefault(eid, fresh())
    guard = fresh()

    tiles: list[tuple[Pos, int]] = []
    elem: dict[tuple[str, str], Pos] = {}
    for gad in low.gadgets:
        i = 2 * gad.index

        def label(tok, gad=gad):
            if isinstance(tok, int):
                return internal[(gad.index, tok)]
            role, p = tok
            return edge_set[(gad.inputs if role == "lock" else gad.outputs)[p]]

        for pos, s in _place(gad.kind, i, label):
            tiles.append((pos, s))
        for j, col in enumerate(GADGETS[gad.kind]):
            for k, tok in enumerate(col):
                if isinstance(tok, tuple):
                    role, p = tok
                    eid = (gad.inputs if role == "lock" else gad.outputs)[p]
                    elem[(eid, role)] = (i, j, k)
        trace.vertices[gad.vertex] = {"gadget": f"G{gad.index}", "kind": gad.kind.value,
                                      "index": gad.index, "cross_section": i}

    i = 2 * len(low.gadgets)
    # lone partner tiles for live sources and sinks
    for eid in lg.edge_ids():
        if eid == lg.target:
            continue
        prod, cons = low.producer[eid], low.consumer[eid]
        if prod is None and cons is not None:
            tiles.append(((i, 0, 0), edge_set[eid]))
            elem[(eid, "key")] = (i, 0, 0)
            i += 2
        elif cons is None and prod is not None:
            tiles.append(((i, 0, 0), edge_set[eid]))
            elem[(eid, "lock")] = (i, 0, 0)
            i += 2

    # the target key; a live source gets a lone tile
    tgt = lg.target
    if low.producer[tgt] is None:
        tiles.append(((i, 0, 0), edge_set[tgt]))
        elem[(tgt, "key")] = (i, 0, 0)
        i += 2
    tkey_set = edge_set[tgt]
    # a gadget consuming the target gets a fresh set for its lock, paired in the victory row
    late: dict[int, list[int]] = {}
    if low.consumer[tgt] is not None:
        lock_pos = elem[(tgt, "lock")]
        s = fresh()
        tiles = [(p, s if p == lock_pos else t) for p, t in tiles]
        late.setdefault(low.by_vertex[low.consumer[tgt]].index, []).append(s)
    for gad in low.gadgets:
        if gad.kind is Kind.CHOICE:
            late.setdefault(gad.index, []).extend([internal[(gad.index, 5)]] * 2)

    row = [guard]
    for idx in sorted(late):
        row.extend(late[idx])
    row.append(guard)
    vic = i
    for j, s in enumerate(row):
        tiles.append(((vic, j, 0), s))
    tiles.append(((vic, 0, 1), tkey_set))
    elem[(tgt, "lock")] = (vic, 0, 1)

    tiles.sort()
    arr = Arrangement(tuple(s for _, s in tiles), tuple(p for p, _ in tiles))
    index = {p: t for t, p in enumerate(arr.positions)}
    for eid in g.edge_ids():
        if eid not in lg.edges:
            continue
        trace.edges[eid] = []
        for role in ("lock", "key"):
            if (eid, role) in elem:
                trace.add_edge(eid, f"tile{index[elem[(eid, role)]]}", role)
    trace.params = {
        "gadget_order": [x.vertex for x in low.gadgets],
        "victory_cross_section": vic,
        "tile_sets": next_set[0] - 1,
        "helpers": sorted(low.helpers),
        "instance": arr.to_dict(),
    }
    return arr, trace


def lift_mahjong(trace: ReductionTrace, witness) -> list[str]:
    """Edge reversals emulated by removing key/lock pairs, up to the target."""
    arr = Arrangement.from_dict(trace.params["instance"])
    pairs = {}
    for eid in trace.edges:
        lock, key = trace.element_of(eid, "lock"), trace.element_of(eid, "key")
        if lock is not None and key is not None:
            pairs[frozenset((lock, key))] = eid
    removed: frozenset = frozenset()
    out: list[str] = []
    for d in witness:
        mv = d if isinstance(d, PairMove) else PairMove.from_dict(d)
        removed = apply(arr, mv, removed)
        eid = pairs.get(frozenset((f"tile{mv.a}", f"tile{mv.b}")))
        if eid is not None and eid not in out:
            out.append(eid)
            if eid == trace.source.target:
                break
    return out


def gadget_behavior(kind: Kind) -> dict[frozenset, set[frozenset]]:
    """Exhaustive search on one isolated gadget.

    For each subset of inputs whose key partner is supplied (as a lone tile),
    returns the maximal sets of key tiles that are available together in
    some reachable state. Keys have no partner so they stay on the board.
    """
    n_in = sum(1 for col in GADGETS[kind] for t in col if isinstance(t, tuple) and t[0] == "lock")
    result = {}
    for size in range(n_in + 1):
        for avail in combinations(range(n_in), size):
            def label(tok):
                if isinstance(tok, int):
                    return tok
                role, p = tok
                return 100 + p if role == "lock" else 200 + p
            tiles = _place(kind, 0, label)
            for c, p in enumerate(avail):
                tiles.append(((2 + 2 * c, 0, 0), 100 + p))
            sets = tuple(s for _, s in tiles)
            positions = tuple(p for p, _ in tiles)
            geo = _Geometry.__new__(_Geometry)
            where = {p: t for t, p in enumerate(positions)}
            geo.above = [where.get((i, j, k + 1), -1) for (i, j, k) in positions]
            geo.left = [where.get((i, j - 1, k), -1) for (i, j, k) in positions]
            geo.right = [where.get((i, j + 1, k), -1) for (i, j, k) in positions]
            keys = [t for t, s in enumerate(sets) if s >= 200]
            seen, exposed = set(), set()
            stack = [(1 << len(sets)) - 1]
            while stack:
                mask = stack.pop()
                if mask in seen:
                    continue
                seen.add(mask)
                av = [t for t in range(len(sets)) if mask >> t & 1 and geo.available(t, mask)]
                exposed.add(frozenset(sets[t] - 200 for t in keys if t in av))
                for a, b in combinations(av, 2):
                    if sets[a] == sets[b]:
                        stack.append(mask & ~(1 << a | 1 << b))
            result[frozenset(avail)] = {s for s in exposed if not any(s < o for o in exposed)}
    return result
