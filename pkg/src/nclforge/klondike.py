"""Generalized Klondike without pile stack or talon, and the reduction from
acyclic Bounded NCL.

A build stack is a list of cards bottom to top together with the number of
face-up cards on top (its card block). Suit stacks only ever hold a prefix
1..h of one suit, so they are stored as heights.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .errors import BoundExceeded, IllegalMoveError, NclForgeError
from .games import DEFAULT_MAX_STATES, SolveReport
from .graph import ConstraintGraph, Kind
from .lowering import lower
from .trace import ReductionTrace

SYMBOLS = {"D": "♦", "H": "♥", "S": "♠", "C": "♣"}
RED, BLACK = "red", "black"


class Card(NamedTuple):
    suit: str
    rank: int

    def __str__(self) -> str:
        return f"{self.suit}{self.rank}"

    def pretty(self) -> str:
        return f"{SYMBOLS.get(self.suit, self.suit)}{self.rank}"

    @staticmethod
    def parse(text: str) -> "Card":
        text = text.strip()
        for letter, sym in SYMBOLS.items():
            if text.startswith(sym):
                text = letter + text[len(sym):]
        return Card(text[0], int(text[1:]))


class BuildStack(NamedTuple):
    cards: tuple[Card, ...]  # bottom to top
    up: int  # face-up suffix length

    @property
    def block(self) -> tuple[Card, ...]:
        return self.cards[len(self.cards) - self.up:] if self.up else ()


class KlondikeMove(NamedTuple):
    kind: str  # TurnUp | MoveBlock | ToSuitStack
    src: int
    dst: int | str | None = None  # target stack for MoveBlock, suit for ToSuitStack

    def to_dict(self) -> dict:
        if self.kind == "TurnUp":
            return {"move": "TurnUp", "stack": self.src}
        if self.kind == "MoveBlock":
            return {"move": "MoveBlock", "from": self.src, "to": self.dst}
        return {"move": "ToSuitStack", "from": self.src, "suit": self.dst}

    @staticmethod
    def from_dict(d: dict) -> "KlondikeMove":
        kind = d["move"]
        if kind == "TurnUp":
            return KlondikeMove("TurnUp", int(d["stack"]))
        if kind == "MoveBlock":
            return KlondikeMove("MoveBlock", int(d["from"]), int(d["to"]))
        if kind in ("ToSuitStack", "ToSuit"):
            return KlondikeMove("ToSuitStack", int(d["from"]), str(d["suit"]))
        raise NclForgeError(f"unknown Klondike move {kind!r}")


@dataclass(frozen=True)
class KlondikeInstance:
    suits: tuple[tuple[str, str], ...]  # (suit letter, color)
    n: int
    build_stacks: tuple[BuildStack, ...]
    suit_heights: tuple[int, ...]

    def __post_init__(self):
        letters = [s for s, _ in self.suits]
        if len(set(letters)) != len(letters):
            raise NclForgeError("duplicate suit")
        if any(c not in (RED, BLACK) for _, c in self.suits):
            raise NclForgeError("suit colors must be red or black")
        if len(self.suit_heights) != len(self.suits):
            raise NclForgeError("one suit stack per suit")
        seen = set()
        for i, h in enumerate(self.suit_heights):
            if not 0 <= h <= self.n:
                raise NclForgeError(f"suit stack {letters[i]} has height {h}")
            seen.update(Card(letters[i], r) for r in range(1, h + 1))
        for st in self.build_stacks:
            if not 0 <= st.up <= len(st.cards):
                raise NclForgeError("face-up count out of range")
            for c in st.cards:
                if c in seen:
                    raise NclForgeError(f"card {c} appears twice")
                seen.add(c)
        deck = {Card(s, r) for s in letters for r in range(1, self.n + 1)}
        if seen != deck:
            missing = sorted(deck - seen)
            extra = sorted(seen - deck)
            raise NclForgeError(f"deck mismatch: missing {missing[:5]}, unexpected {extra[:5]}")

    @property
    def m(self) -> int:
        return len(self.suits)

    def color(self, card: Card) -> str:
        return dict(self.suits)[card.suit]

    def suit_stack(self, suit: str) -> list[Card]:
        i = [s for s, _ in self.suits].index(suit)
        return [Card(suit, r) for r in range(1, self.suit_heights[i] + 1)]

    def is_won(self) -> bool:
        return all(not st.cards for st in self.build_stacks)

    # JSON ------------------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "suits": [{"suit": s, "color": c} for s, c in self.suits],
            "ranks": self.n,
            "build_stacks": [{"cards": [str(c) for c in st.cards], "face_up": st.up} for st in self.build_stacks],
            "suit_stacks": {s: h for (s, _), h in zip(self.suits, self.suit_heights)},
        }

    @staticmethod
    def from_dict(d: dict) -> "KlondikeInstance":
        try:
            suits = tuple((x["suit"], x["color"]) for x in d["suits"])
            stacks = tuple(BuildStack(tuple(Card.parse(c) for c in st["cards"]), int(st.get("face_up", 0)))
                           for st in d["build_stacks"])
            ss = d.get("suit_stacks", {})
            heights = tuple(int(ss.get(s, 0)) for s, _ in suits)
            return KlondikeInstance(suits, int(d["ranks"]), stacks, heights)
        except (KeyError, ValueError, IndexError, TypeError) as exc:
            raise NclForgeError(f"malformed Klondike instance: {exc}") from None

    def render(self) -> str:
        lines = []
        for (s, _), h in zip(self.suits, self.suit_heights):
            lines.append(f"suit {SYMBOLS.get(s, s)}: {h}")
        for i, st in enumerate(self.build_stacks):
            down = len(st.cards) - st.up
            cells = [("[" + c.pretty() + "]") if j < down else c.pretty() for j, c in enumerate(st.cards)]
            lines.append(f"{i:3d}: " + " ".join(cells))
        lines.append("([x] = face-down, bottom to top)")
        return "\n".join(lines)


# rules ------------------------------------------------------------------------

def suit_stack_accepts(stack: list[Card], card: Card) -> bool:
    if not stack:
        return card.rank == 1
    top = stack[-1]
    return card.suit == top.suit and card.rank == top.rank + 1


def block_accepts(inst: KlondikeInstance, stack: BuildStack, card: Card) -> bool:
    if not stack.up:
        return False
    top = stack.cards[-1]
    return inst.color(top) != inst.color(card) and card.rank == top.rank - 1


def legal_moves(inst: KlondikeInstance) -> set[KlondikeMove]:
    out = set()
    letters = [s for s, _ in inst.suits]
    for i, st in enumerate(inst.build_stacks):
        if not st.cards:
            continue
        if st.up == 0:
            out.add(KlondikeMove("TurnUp", i))
            continue
        bottom = st.cards[len(st.cards) - st.up]
        for j, other in enumerate(inst.build_stacks):
            if j != i and block_accepts(inst, other, bottom):
                out.add(KlondikeMove("MoveBlock", i, j))
        top = st.cards[-1]
        if inst.suit_heights[letters.index(top.suit)] == top.rank - 1:
            out.add(KlondikeMove("ToSuitStack", i, top.suit))
    return out


def apply(inst: KlondikeInstance, move: KlondikeMove) -> KlondikeInstance:
    stacks = list(inst.build_stacks)
    heights = list(inst.suit_heights)
    nst = len(stacks)
    if not 0 <= move.src < nst:
        raise IllegalMoveError(f"no build stack {move.src}")
    st = stacks[move.src]
    if move.kind == "TurnUp":
        if not st.cards or st.up:
            raise IllegalMoveError(f"stack {move.src} has no face-down top card")
        stacks[move.src] = BuildStack(st.cards, 1)
    elif move.kind == "MoveBlock":
        if not isinstance(move.dst, int) or not 0 <= move.dst < nst or move.dst == move.src:
            raise IllegalMoveError(f"bad destination {move.dst}")
        if not st.up:
            raise IllegalMoveError(f"stack {move.src} has no card block")
        block = st.block
        dst = stacks[move.dst]
        if not block_accepts(inst, dst, block[0]):
            raise IllegalMoveError(f"stack {move.dst} does not accept {block[0]}")
        stacks[move.src] = BuildStack(st.cards[:-st.up], 0)
        stacks[move.dst] = BuildStack(dst.cards + block, dst.up + len(block))
    elif move.kind == "ToSuitStack":
        if not st.up:
            raise IllegalMoveError(f"stack {move.src} has no face-up card")
        top = st.cards[-1]
        if move.dst is not None and move.dst != top.suit:
            raise IllegalMoveError(f"top card {top} is not of suit {move.dst}")
        k = [s for s, _ in inst.suits].index(top.suit)
        if heights[k] != top.rank - 1:
            raise IllegalMoveError(f"suit stack does not accept {top}")
        heights[k] += 1
        stacks[move.src] = BuildStack(st.cards[:-1], st.up - 1)
    else:
        raise IllegalMoveError(f"unknown move {move.kind}")
    return KlondikeInstance(inst.suits, inst.n, tuple(stacks), tuple(heights))


def replay(inst: KlondikeInstance, moves: Iterable[KlondikeMove]) -> KlondikeInstance:
    for mv in moves:
        inst = apply(inst, mv)
    return inst


# solver -------------------------------------------------------------------------

def solve_klondike(inst: KlondikeInstance, max_states: int = DEFAULT_MAX_STATES) -> SolveReport:
    """Memoized depth-first search with provably safe automatic moves.

    Turning up a face-down top card never hurts. A card whose suit stack
    accepts it is sent there at once when every opposite-colored card one
    rank lower is already on a suit stack, because then no card can ever
    need to be built on it. Block moves are bounded: each one either turns
    up a card afterwards or empties a stack for good, so the search space is
    acyclic.
    """
    m = inst.m
    letters = [s for s, _ in inst.suits]
    col = [0 if c == RED else 1 for _, c in inst.suits]
    opp = [[j for j in range(m) if col[j] != col[i]] for i in range(m)]
    code = {Card(s, r): r * m + k for k, s in enumerate(letters) for r in range(1, inst.n + 1)}
    start = (tuple((tuple(code[c] for c in st.cards), st.up) for st in inst.build_stacks),
             tuple(inst.suit_heights))
    dead: set = set()
    nodes = 0

    def closure(stacks, found, trail):
        changed = True
        while changed:
            changed = False
            for i, (cards, up) in enumerate(stacks):
                if not cards:
                    continue
                if up == 0:
                    stacks[i] = (cards, 1)
                    trail.append(KlondikeMove("TurnUp", i))
                    changed = True
                    continue
                c = cards[-1]
                r, s = divmod(c, m)
                if found[s] == r - 1 and all(found[j] >= r - 1 for j in opp[s]):
                    found[s] = r
                    stacks[i] = (cards[:-1], up - 1)
                    trail.append(KlondikeMove("ToSuitStack", i, letters[s]))
                    changed = True

    def dfs(stacks, found, trail) -> list | None:
        nonlocal nodes
        closure(stacks, found, trail)
        if all(not cards for cards, _ in stacks):
            return trail
        key = (tuple(sorted(stacks)), tuple(found))
        if key in dead:
            return None
        nodes += 1
        if nodes > max_states:
            raise BoundExceeded(f"more than {max_states} states")
        tops = []
        for j, (cards, up) in enumerate(stacks):
            if up:
                t = cards[-1]
                tops.append((j, t // m, col[t % m]))
        for i, (cards, up) in enumerate(stacks):
            if not up:
                continue
            b = cards[len(cards) - up]
            br, bc = b // m, col[b % m]
            for j, tr, tc in tops:
                if j != i and tr == br + 1 and tc != bc:
                    ns = list(stacks)
                    ns[i] = (cards[:-up], 0)
                    dcards, dup = ns[j]
                    ns[j] = (dcards + cards[-up:], dup + up)
                    res = dfs(ns, list(found), trail + [KlondikeMove("MoveBlock", i, j)])
                    if res is not None:
                        return res
            c = cards[-1]
            r, s = divmod(c, m)
            if found[s] == r - 1:
                ns = list(stacks)
                ns[i] = (cards[:-1], up - 1)
                nf = list(found)
                nf[s] = r
                res = dfs(ns, nf, trail + [KlondikeMove("ToSuitStack", i, letters[s])])
                if res is not None:
                    return res
        dead.add(key)
        return None

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 20000))
    try:
        res = dfs(list(start[0]), list(start[1]), [])
    finally:
        sys.setrecursionlimit(limit)
    if res is None:
        return SolveReport("not-winnable", None, nodes)
    return SolveReport("winnable", [mv.to_dict() for mv in res], nodes)


def move_counts(witness: list[dict]) -> dict[str, int]:
    out = {"TurnUp": 0, "MoveBlock": 0, "ToSuitStack": 0}
    for d in witness:
        out[KlondikeMove.from_dict(d).kind] += 1
    return out


# gadget catalog ------------------------------------------------------------------
#
# Stacks are listed bottom to top in template ranks 5..8; gadget i shifts them
# by 4i - 3. ("out", k) is the slot where the key for output k goes, and
# ("in", k) marks the lock card standing for input k.

GADGETS: dict[Kind, list[list[tuple]]] = {
    Kind.OR: [
        [("out", 0), ("D", 5), ("S", 6, "in", 0)],
        [("D", 7), ("S", 5), ("H", 6, "in", 1)],
    ],
    Kind.AND: [
        [("out", 0), ("S", 5)],
        [("H", 6), ("D", 5), ("S", 7, "in", 0)],
        [("S", 6), ("H", 7, "in", 1)],
    ],
    Kind.FANOUT: [
        [("out", 0), ("S", 6)],
        [("out", 1), ("S", 5)],
        [("H", 7), ("H", 6), ("S", 7, "in", 0)],
    ],
    Kind.CHOICE: [
        [("out", 0), ("H", 6)],
        [("out", 1), ("D", 6)],
        [("S", 7), ("H", 7, "in", 0)],
    ],
}
SUITS = (("D", RED), ("H", RED), ("S", BLACK))


def key_for(lock: Card) -> Card:
    """Black locks take the next heart, red locks the next spade."""
    return Card("H" if lock.suit == "S" else "S", lock.rank + 1)


def _shift(i: int, suit: str, r: int) -> Card:
    return Card(suit, r - 3 + 4 * i)


def _locks(kind: Kind, i: int) -> dict[int, Card]:
    out = {}
    for stack in GADGETS[kind]:
        for tok in stack:
            if len(tok) == 4:
                out[tok[3]] = _shift(i, tok[0], tok[1])
    return out


def reduce_ncl_to_klondike(g: ConstraintGraph) -> tuple[KlondikeInstance, ReductionTrace]:
    low = lower(g)
    lg = low.graph
    k = len(low.gadgets)
    top = 2 + 4 * k
    n = top + 1
    target_lock = Card("S", top)
    target_key = key_for(target_lock)
    trace = ReductionTrace("klondike", g)

    lock_of: dict[str, Card] = {}
    for gad in low.gadgets:
        locks = _locks(gad.kind, gad.index)
        for port, eid in enumerate(gad.inputs):
            lock_of[eid] = locks[port]
        trace.vertices[gad.vertex] = {
            "gadget": f"G{gad.index}", "kind": gad.kind.value, "index": gad.index,
            "ranks": [2 + 4 * gad.index, 5 + 4 * gad.index],
        }

    def key_at(eid: str) -> Card | None:
        """Card placed where edge ``eid``'s signal becomes available."""
        if eid == lg.target:
            return target_key
        if low.consumer[eid] is None:
            return None
        return key_for(lock_of[eid])

    stacks: list[list[Card]] = []
    for gad in low.gadgets:
        for tmpl in GADGETS[gad.kind]:
            st = []
            for tok in tmpl:
                if tok[0] == "out":
                    c = key_at(gad.outputs[tok[1]])
                    if c is not None:
                        st.append(c)
                else:
                    st.append(_shift(gad.index, tok[0], tok[1]))
            if st:
                stacks.append(st)
    for eid in lg.edge_ids():
        if low.producer[eid] is None and (low.consumer[eid] is not None or eid == lg.target):
            stacks.append([key_at(eid)])

    used = {c for st in stacks for c in st} | {target_lock}
    deck = [Card(s, r) for r in range(1, n + 1) for s, _ in SUITS]
    big = [c for c in deck if c not in used]
    big.reverse()  # aces end up on top
    big.append(target_lock)
    stacks.append(big)

    for eid in g.edge_ids():
        if eid not in lg.edges:
            continue
        if eid == lg.target:
            trace.add_edge(eid, str(target_lock), "lock")
            trace.add_edge(eid, str(target_key), "key")
        elif eid in lock_of:
            trace.add_edge(eid, str(lock_of[eid]), "lock")
            trace.add_edge(eid, str(key_for(lock_of[eid])), "key")
        else:
            trace.edges[eid] = []
    trace.params = {
        "ranks": n,
        "target_lock": str(target_lock),
        "gadget_order": [x.vertex for x in low.gadgets],
        "helpers": sorted(low.helpers),
    }
    inst = KlondikeInstance(SUITS, n, tuple(BuildStack(tuple(st), 0) for st in stacks), (0, 0, 0))
    trace.params["instance"] = inst.to_dict()
    return inst, trace


def lift_klondike(trace: ReductionTrace, witness) -> list[str]:
    """Edge reversals emulated by a Klondike witness.

    A reversal is emitted the first time a lock card lands on its key.
    """
    inst = KlondikeInstance.from_dict(trace.params["instance"])
    pairs = {}
    for eid, recs in trace.edges.items():
        lock = trace.element_of(eid, "lock")
        key = trace.element_of(eid, "key")
        if lock is not None and key is not None:
            pairs[(lock, key)] = eid
    out: list[str] = []
    for d in witness:
        mv = d if isinstance(d, KlondikeMove) else KlondikeMove.from_dict(d)
        if mv.kind == "MoveBlock":
            if not 0 <= mv.src < len(inst.build_stacks) or not isinstance(mv.dst, int) \
                    or not 0 <= mv.dst < len(inst.build_stacks):
                raise NclForgeError(f"witness references unknown stack in {mv}")
            src, dst = inst.build_stacks[mv.src], inst.build_stacks[mv.dst]
            if src.up and dst.cards:
                eid = pairs.get((str(src.block[0]), str(dst.cards[-1])))
                if eid is not None and eid not in out:
                    out.append(eid)
                    if eid == trace.source.target:
                        return out
        inst = apply(inst, mv)
    return out


# per-gadget harness -----------------------------------------------------------------

def gadget_behavior(kind: Kind) -> dict[frozenset, set[frozenset]]:
    """Exhaustive check of one isolated gadget.

    For every subset of available input keys, returns the sets of output
    slots that can be exposed together in some reachable configuration
    (only turn-ups and block moves; suit stacks stay closed).
    """
    from itertools import combinations

    locks = _locks(kind, 0)
    n_out = sum(1 for st in GADGETS[kind] for tok in st if tok[0] == "out")
    out_cards = [Card("D" if j == 0 else "C", 20 + j) for j in range(n_out)]
    result = {}
    for size in range(len(locks) + 1):
        for avail in combinations(sorted(locks), size):
            stacks = []
            for tmpl in GADGETS[kind]:
                st = []
                for tok in tmpl:
                    st.append(out_cards[tok[1]] if tok[0] == "out" else _shift(0, tok[0], tok[1]))
                stacks.append(BuildStack(tuple(st), 0))
            for p in avail:
                stacks.append(BuildStack((key_for(locks[p]),), 1))
            seen = set()
            exposed = set()
            frontier = [tuple(stacks)]
            while frontier:
                cur = frontier.pop()
                if cur in seen:
                    continue
                seen.add(cur)
                now = frozenset(j for j, oc in enumerate(out_cards)
                                for st in cur if st.up and st.cards[-st.up] == oc)
                exposed.add(now)
                for i, st in enumerate(cur):
                    if not st.cards:
                        continue
                    if st.up == 0:
                        nxt = list(cur)
                        nxt[i] = BuildStack(st.cards, 1)
                        frontier.append(tuple(nxt))
                        continue
                    b = st.block[0]
                    for j, ot in enumerate(cur):
                        if j != i and ot.up:
                            t = ot.cards[-1]
                            if t.rank == b.rank + 1 and (t.suit == "S") != (b.suit == "S"):
                                nxt = list(cur)
                                nxt[i] = BuildStack(st.cards[:-st.up], 0)
                                nxt[j] = BuildStack(ot.cards + st.block, ot.up + st.up)
                                frontier.append(tuple(nxt))
            maximal = {s for s in exposed if not any(s < o for o in exposed)}
            result[frozenset(avail)] = maximal
    return result

