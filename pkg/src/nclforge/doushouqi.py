"""Dou Shou Qi (Jungle) on generalized boards.

Squares are one character each: ``.`` land, ``W`` water, ``T``/``t`` a
trap owned by white/black, ``D``/``d`` the white/black den. Upper case is
white throughout. Coordinates are (row, col) with row 0 at the top; on the
standard board black sits at the top and white, who moves first, below.

A trap takes the strength of any piece standing on it down to zero unless
the piece belongs to the trap's owner. This is the usual rule (traps guard
their owner's den) extended to traps placed anywhere.
"""
from __future__ import annotations

import itertools
import json
from array import array
from collections import deque
from dataclasses import dataclass, field
from importlib import resources
from types import SimpleNamespace
from typing import Iterable, Mapping

from .errors import BoundExceeded, GraphError, IllegalMoveError, NclForgeError, ReductionError
from .graph import natural_key

WHITE, BLACK = "white", "black"
SIDES = (WHITE, BLACK)
OTHER = {WHITE: BLACK, BLACK: WHITE}
NAMES = {1: "rat", 2: "cat", 3: "wolf", 4: "dog", 5: "panther", 6: "tiger", 7: "lion", 8: "elephant"}
SQUARE_CHARS = ".WTtDd"
RAT, ELEPHANT = 1, 8
LEAPERS = (6, 7)
DEFAULT_MAX_STATES = 5_000_000

WHITE_WIN, BLACK_WIN, DRAW, ONGOING = "white_win", "black_win", "draw", "ongoing"
WIN_OF = {WHITE: WHITE_WIN, BLACK: BLACK_WIN}


@dataclass(frozen=True)
class Square:
    kind: str  # land, water, trap, den
    owner: str | None = None

    @staticmethod
    def of(ch: str) -> "Square":
        if ch == ".":
            return Square("land")
        if ch == "W":
            return Square("water")
        if ch in "Tt":
            return Square("trap", WHITE if ch == "T" else BLACK)
        if ch in "Dd":
            return Square("den", WHITE if ch == "D" else BLACK)
        raise NclForgeError(f"unknown square character {ch!r}")


@dataclass(frozen=True, order=True)
class Piece:
    owner: str
    strength: int

    def __post_init__(self):
        if self.owner not in SIDES:
            raise NclForgeError(f"unknown owner {self.owner!r}")
        if not 1 <= self.strength <= 8:
            raise NclForgeError(f"strength {self.strength} outside 1..8")

    @property
    def name(self) -> str:
        return NAMES[self.strength]


Pos = tuple[int, int]
Move = tuple[Pos, Pos]


@dataclass(frozen=True)
class DouShouQiState:
    board: tuple[str, ...]
    pieces: tuple[tuple[Pos, Piece], ...]
    to_move: str = WHITE
    _at: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "_at", dict(self.pieces))

    @staticmethod
    def make(board: Iterable[str], pieces: Mapping[Pos, Piece] | Iterable, to_move: str = WHITE) -> "DouShouQiState":
        board = tuple(board)
        if not board or any(len(r) != len(board[0]) for r in board):
            raise NclForgeError("board rows must be non-empty and of equal length")
        for r in board:
            for ch in r:
                Square.of(ch)
        if to_move not in SIDES:
            raise NclForgeError(f"unknown side {to_move!r}")
        items = pieces.items() if isinstance(pieces, Mapping) else pieces
        at: dict[Pos, Piece] = {}
        for pos, pc in items:
            pos = (int(pos[0]), int(pos[1]))
            if pos in at:
                raise NclForgeError(f"two pieces on {pos}")
            at[pos] = pc
        state = DouShouQiState(board, tuple(sorted(at.items())), to_move)
        state.check()
        return state

    @property
    def m(self) -> int:
        return len(self.board)

    @property
    def n(self) -> int:
        return len(self.board[0])

    def square(self, pos: Pos) -> Square:
        return Square.of(self.board[pos[0]][pos[1]])

    def at(self, pos: Pos) -> Piece | None:
        return self._at.get(pos)

    def pieces_of(self, owner: str) -> list[tuple[Pos, Piece]]:
        return [(p, pc) for p, pc in self.pieces if pc.owner == owner]

    def check(self) -> None:
        for (r, c), pc in self.pieces:
            if not (0 <= r < self.m and 0 <= c < self.n):
                raise NclForgeError(f"piece off the board at {(r, c)}")
            sq = self.square((r, c))
            if sq.kind == "den" and sq.owner == pc.owner:
                raise NclForgeError(f"{pc.owner} piece on its own den at {(r, c)}")
            if sq.kind == "water" and pc.strength != RAT:
                raise NclForgeError(f"{pc.name} in water at {(r, c)}")

    def with_pieces(self, pieces: Mapping[Pos, Piece], to_move: str | None = None) -> "DouShouQiState":
        return DouShouQiState(self.board, tuple(sorted(pieces.items())), to_move or self.to_move)

    # serialization --------------------------------------------------------
    def to_text(self) -> str:
        out = [f"to_move {self.to_move}", *self.board, ""]
        out += [f"{pc.owner} {pc.strength} {r} {c}" for (r, c), pc in self.pieces]
        return "\n".join(out) + "\n"

    @staticmethod
    def from_text(text: str) -> "DouShouQiState":
        lines = text.splitlines()
        head = lines[0].split()
        if len(head) != 2 or head[0] != "to_move":
            raise NclForgeError("first line must be 'to_move white|black'")
        i = 1
        board = []
        while i < len(lines) and lines[i].strip():
            board.append(lines[i].strip())
            i += 1
        pieces = []
        for line in lines[i:]:
            if not line.strip():
                continue
            owner, s, r, c = line.split()
            pieces.append(((int(r), int(c)), Piece(owner, int(s))))
        return DouShouQiState.make(board, pieces, head[1])

    def to_dict(self) -> dict:
        return {
            "board": list(self.board),
            "pieces": [{"owner": pc.owner, "strength": pc.strength, "row": r, "col": c}
                       for (r, c), pc in self.pieces],
            "to_move": self.to_move,
        }

    @staticmethod
    def from_dict(doc: dict) -> "DouShouQiState":
        pieces = [((p["row"], p["col"]), Piece(p["owner"], p["strength"])) for p in doc["pieces"]]
        return DouShouQiState.make(doc["board"], pieces, doc.get("to_move", WHITE))

    def render(self) -> str:
        """Board picture with pieces drawn as digits (white) or letters (black).

        Black strengths 1..8 are ``abcefghi``; ``d`` is skipped so it stays the den.
        """
        rows = [list(r) for r in self.board]
        for (r, c), pc in self.pieces:
            rows[r][c] = str(pc.strength) if pc.owner == WHITE else "abcefghi"[pc.strength - 1]
        return "\n".join("".join(r) for r in rows) + "\n"


def _load_data() -> dict:
    with resources.files("nclforge").joinpath("data/doushouqi.json").open() as fh:
        return json.load(fh)


DATA = _load_data()


def _pieces(rows) -> list[tuple[Pos, Piece]]:
    return [((r, c), Piece(owner, s)) for owner, s, r, c in rows]


def standard_board() -> DouShouQiState:
    """The 9x7 opening position, white to move."""
    doc = DATA["standard"]
    return DouShouQiState.make(doc["rows"], _pieces(doc["pieces"]), WHITE)


# ---------------------------------------------------------------------------
# Rules. ``Rules`` precomputes the board geometry once and then works on a
# plain dict of square index -> piece code (strength, plus 8 for black).

def _code(pc: Piece) -> int:
    return pc.strength + (8 if pc.owner == BLACK else 0)


def _decode(code: int) -> Piece:
    return Piece(BLACK if code > 8 else WHITE, (code - 1) % 8 + 1)


# flags on a piece code, harness use only: a pinned piece never moves, a
# sentry only moves to capture
PINNED, SENTRY = 32, 64


class Rules:
    def __init__(self, board: tuple[str, ...], classic_elephant: bool = False):
        self.board = board
        self.m, self.n = len(board), len(board[0])
        self.classic_elephant = classic_elephant
        flat = "".join(board)
        self.flat = flat
        self.water = [ch == "W" for ch in flat]
        # owner side bit (0 white, 1 black) of traps and dens, else -1
        self.trap = [0 if ch == "T" else 1 if ch == "t" else -1 for ch in flat]
        self.den = [0 if ch == "D" else 1 if ch == "d" else -1 for ch in flat]
        self.steps: list[list[int]] = []
        self.leaps: list[list[tuple[int, tuple[int, ...]]]] = []
        for i in range(len(flat)):
            r, c = divmod(i, self.n)
            st, lp = [], []
            for dr, dc in ((-1, 0), (0, 1), (1, 0), (0, -1)):
                rr, cc = r + dr, c + dc
                if not (0 <= rr < self.m and 0 <= cc < self.n):
                    continue
                j = rr * self.n + cc
                st.append(j)
                if not self.water[i] and self.water[j]:
                    over = []
                    while 0 <= rr < self.m and 0 <= cc < self.n and self.water[rr * self.n + cc]:
                        over.append(rr * self.n + cc)
                        rr, cc = rr + dr, cc + dc
                    if 0 <= rr < self.m and 0 <= cc < self.n:
                        lp.append((rr * self.n + cc, tuple(over)))
            self.steps.append(st)
            self.leaps.append(lp)

    def effective(self, code: int, sq: int) -> int:
        side = 1 if code & 31 > 8 else 0
        if self.trap[sq] != -1 and self.trap[sq] != side:
            return 0
        return ((code & 31) - 1) % 8 + 1

    def can_capture(self, att: int, a_sq: int, dfd: int, d_sq: int) -> bool:
        att &= 31
        if (att > 8) == (dfd & 31 > 8):
            return False
        a_str = (att - 1) % 8 + 1
        d_str = ((dfd & 31) - 1) % 8 + 1
        if self.water[a_sq] or self.water[d_sq]:
            # only a rat swimming may take, and only the other rat in the water
            return self.water[a_sq] and self.water[d_sq]
        eff = self.effective(dfd, d_sq)
        if a_str == RAT and d_str == ELEPHANT:
            return True
        if self.classic_elephant and a_str == ELEPHANT and d_str == RAT and eff > 0:
            return False
        return a_str >= eff

    def moves(self, occ: dict[int, int], side: int) -> list[tuple[int, int]]:
        out = []
        for sq, code in occ.items():
            if code & PINNED or (code & 31 > 8) != bool(side):
                continue
            sentry = code & SENTRY
            s = ((code & 31) - 1) % 8 + 1
            for j in self.steps[sq]:
                if self.den[j] == side:
                    continue
                if self.water[j] and s != RAT:
                    continue
                other = occ.get(j)
                if other is None and not sentry or other is not None and self.can_capture(code, sq, other, j):
                    out.append((sq, j))
            if s in LEAPERS:
                for j, over in self.leaps[sq]:
                    if self.den[j] == side or any(x in occ for x in over):
                        continue
                    other = occ.get(j)
                    if other is None and not sentry or other is not None and self.can_capture(code, sq, other, j):
                        out.append((sq, j))
        return out

    def outcome(self, occ: dict[int, int], side: int) -> str:
        """Terminal status ignoring stalemate (which needs move generation)."""
        have = [False, False]
        for sq, code in occ.items():
            owner = 1 if code & 31 > 8 else 0
            have[owner] = True
            if self.den[sq] == 1 - owner:
                return WHITE_WIN if owner == 0 else BLACK_WIN
        if not have[1]:
            return WHITE_WIN
        if not have[0]:
            return BLACK_WIN
        return ONGOING

    # state <-> compact key ------------------------------------------------
    # key = header bytes, then (square hi, square lo, code) per piece in
    # square order, then the side to move: canonical for a position.
    def encode(self, occ: dict[int, int], side: int, header: bytes = b"") -> bytes:
        buf = bytearray(header)
        for sq in sorted(occ):
            buf += bytes((sq >> 8, sq & 255, occ[sq]))
        buf.append(side)
        return bytes(buf)

    @staticmethod
    def decode(key: bytes, header: int = 0) -> tuple[dict[int, int], int]:
        occ = {}
        for k in range(header, len(key) - 1, 3):
            occ[(key[k] << 8) | key[k + 1]] = key[k + 2]
        return occ, key[-1]

    def of_state(self, state: DouShouQiState) -> tuple[dict[int, int], int]:
        occ = {r * self.n + c: _code(pc) for (r, c), pc in state.pieces}
        return occ, 0 if state.to_move == WHITE else 1

    def to_state(self, occ: dict[int, int], side: int) -> DouShouQiState:
        pieces = tuple(sorted((divmod(sq, self.n), _decode(code & 31)) for sq, code in occ.items()))
        return DouShouQiState(self.board, pieces, SIDES[side])

    def pos(self, sq: int) -> Pos:
        return divmod(sq, self.n)


@dataclass(frozen=True)
class Arena:
    """Extra win conditions for test boards.

    A piece of side ``s`` stepping onto one of ``exits[s]`` leaves the board
    and is counted; side ``s`` wins once ``need[s]`` of its pieces have left.
    Pieces standing on ``pinned`` squares at the start never move (they can
    still be captured) and pieces on ``sentries`` only ever move to capture.
    Holding back one side's pieces this way only weakens that side, so a win
    proven for it stays a win in the unrestricted game.
    """
    exits: Mapping[str, frozenset] = field(default_factory=dict)
    need: Mapping[str, int] = field(default_factory=dict)
    pinned: frozenset = frozenset()
    sentries: frozenset = frozenset()
    # strengths that count when leaving, per side (missing: every piece counts)
    counted: Mapping[str, frozenset] = field(default_factory=dict)
    # sides that may, as a move, remove an enemy piece standing on one of
    # their own traps (see ``relaxed``)
    snipers: frozenset = frozenset()


class _Play:
    """Position expansion for the solver, with an optional arena."""

    def __init__(self, rules: Rules, arena: Arena | None):
        self.rules = rules
        self.arena = arena
        self.header = 2 if arena else 0
        if arena:
            n = rules.n
            self.exit_of = {}
            for s, cells in arena.exits.items():
                for r, c in cells:
                    self.exit_of[r * n + c] = SIDES.index(s)
            self.need = [arena.need.get(WHITE, 0), arena.need.get(BLACK, 0)]
            self.counted = [arena.counted.get(WHITE, frozenset(range(1, 9))),
                            arena.counted.get(BLACK, frozenset(range(1, 9)))]

    def start(self, state: DouShouQiState) -> bytes:
        occ, side = self.rules.of_state(state)
        if self.arena:
            n = self.rules.n
            for cells, flag in ((self.arena.pinned, PINNED), (self.arena.sentries, SENTRY)):
                for r, c in cells:
                    if r * n + c in occ:
                        occ[r * n + c] |= flag
        return self.rules.encode(occ, side, bytes(self.header))

    def expand(self, key: bytes):
        """(status, child keys); status 1/2 = mover won/lost, 3 = stalemate, 0 = play on."""
        rules, h = self.rules, self.header
        occ, side = rules.decode(key, h)
        if h:
            done = key[0], key[1]
            for s in (0, 1):
                if self.need[s] and done[s] >= self.need[s]:
                    return (1 if s == side else 2), ()
        res = rules.outcome(occ, side)
        if res != ONGOING:
            return (1 if res == WIN_OF[SIDES[side]] else 2), ()
        mv = rules.moves(occ, side)
        if h and SIDES[side] in self.arena.snipers:
            mv = mv + [(sq, sq) for sq, code in occ.items()
                       if (code & 31 > 8) != bool(side) and rules.trap[sq] == side]
        if not mv:
            return 3, ()
        out = []
        for a, b in mv:
            nocc = dict(occ)
            code = nocc.pop(a)
            head = key[:h]
            if a == b:  # a sniped piece just disappears
                pass
            elif h and self.exit_of.get(b) == side and ((code & 31) - 1) % 8 + 1 in self.counted[side]:
                cnt = bytearray(head)
                cnt[side] += 1
                head = bytes(cnt)
            else:
                nocc[b] = code
            out.append(rules.encode(nocc, 1 - side, head))
        return 0, out


def legal_moves(state: DouShouQiState, classic_elephant: bool = False) -> set[Move]:
    """All (from, to) moves of the side to move. Empty once the game is over."""
    rules = Rules(state.board, classic_elephant)
    occ, side = rules.of_state(state)
    if rules.outcome(occ, side) != ONGOING:
        return set()
    return {(rules.pos(a), rules.pos(b)) for a, b in rules.moves(occ, side)}


def apply_move(state: DouShouQiState, move: Move, classic_elephant: bool = False) -> DouShouQiState:
    if move not in legal_moves(state, classic_elephant):
        raise IllegalMoveError(f"illegal move {move} for {state.to_move}")
    at = dict(state.pieces)
    at[move[1]] = at.pop(move[0])
    return state.with_pieces(at, OTHER[state.to_move])


def terminal(state: DouShouQiState, classic_elephant: bool = False) -> str:
    rules = Rules(state.board, classic_elephant)
    occ, side = rules.of_state(state)
    res = rules.outcome(occ, side)
    if res == ONGOING and not rules.moves(occ, side):
        return DRAW
    return res


# ---------------------------------------------------------------------------
# Retrograde solver

@dataclass
class WDLReport:
    value: str  # white_win, black_win or draw
    depth: int | None  # plies to the end under optimal play (None for draws)
    states: int
    line: list[Move]

    def to_dict(self) -> dict:
        return {"value": self.value, "depth": self.depth, "states": self.states,
                "line": [[list(a), list(b)] for a, b in self.line]}


class GameGraph:
    """Every position reachable from a start, with exact values.

    ``value[i]`` is +1/-1/0 for a win/loss/draw of the side to move and
    ``depth[i]`` the number of plies to the end of the game under optimal
    play (the winner hurries, the loser stalls).
    """

    def __init__(self, state: DouShouQiState, max_states: int = DEFAULT_MAX_STATES,
                 classic_elephant: bool = False, arena: Arena | None = None):
        self.rules = Rules(state.board, classic_elephant)
        self.play = play = _Play(self.rules, arena)
        start = play.start(state)
        index = {start: 0}
        keys = [start]
        succ = array("i")
        off = array("l", [0])
        term = bytearray()  # 0 ongoing, 1 win for mover, 2 loss for mover, 3 stalemate
        i = 0
        while i < len(keys):
            status, kids = play.expand(keys[i])
            term.append(status)
            for k in kids:
                j = index.get(k)
                if j is None:
                    j = len(keys)
                    if j >= max_states:
                        raise BoundExceeded(f"more than {max_states} positions")
                    index[k] = j
                    keys.append(k)
                succ.append(j)
            off.append(len(succ))
            i += 1
        self.keys, self.index, self.succ, self.off, self.term = keys, index, succ, off, term
        self._solve()

    def __len__(self) -> int:
        return len(self.keys)

    def children(self, i: int):
        return self.succ[self.off[i]:self.off[i + 1]]

    def _solve(self) -> None:
        n = len(self.keys)
        succ, off = self.succ, self.off
        # predecessor lists in flat form
        cnt = array("l", [0]) * (n + 1)
        for j in succ:
            cnt[j + 1] += 1
        for i in range(n):
            cnt[i + 1] += cnt[i]
        pred = array("i", [0]) * len(succ)
        fill = array("l", cnt)
        for i in range(n):
            for j in succ[off[i]:off[i + 1]]:
                pred[fill[j]] = i
                fill[j] += 1
        value = array("b", [0]) * n
        depth = array("l", [-1]) * n
        left = array("l", (off[i + 1] - off[i] for i in range(n)))
        queue = deque()
        for i, t in enumerate(self.term):
            if t in (1, 2):
                value[i] = 1 if t == 1 else -1
                depth[i] = 0
                queue.append(i)
        while queue:
            j = queue.popleft()
            for k in range(cnt[j], cnt[j + 1]):
                i = pred[k]
                if depth[i] >= 0 or self.term[i]:
                    continue
                if value[j] == -1:
                    value[i], depth[i] = 1, depth[j] + 1
                    queue.append(i)
                else:
                    left[i] -= 1
                    if left[i] == 0:
                        value[i], depth[i] = -1, depth[j] + 1
                        queue.append(i)
        self.value, self.depth = value, depth

    def report(self, i: int = 0) -> WDLReport:
        side = self.keys[i][-1]
        v = self.value[i]
        if v == 0:
            res = DRAW
        else:
            mover_wins = v == 1
            res = WIN_OF[SIDES[side if mover_wins else 1 - side]]
        return WDLReport(res, self.depth[i] if v else None, len(self.keys), self.line(i))

    def line(self, i: int = 0) -> list[Move]:
        """Principal variation: fastest win against slowest loss; empty for draws."""
        out = []
        while self.value[i] and not self.term[i]:
            kids = self.children(i)
            if self.value[i] == 1:
                nxt = min((j for j in kids if self.value[j] == -1), key=lambda j: self.depth[j])
            else:
                nxt = max(kids, key=lambda j: self.depth[j])
            out.append(self._move(i, nxt))
            i = nxt
        return out

    def _move(self, i: int, j: int) -> Move:
        h = self.play.header
        a, _ = self.rules.decode(self.keys[i], h)
        b, _ = self.rules.decode(self.keys[j], h)
        gone = [sq for sq in a if sq not in b]
        if len(gone) == 1 and len(a) == len(b) + 1 and all(a[x] == b[x] for x in b):
            mover = a[gone[0]] & 31 > 8
            if mover != bool(self.keys[i][-1]):  # an enemy piece vanished: a snipe
                return self.rules.pos(gone[0]), self.rules.pos(gone[0])
        src = gone[0]
        dst = next((sq for sq in b if a.get(sq) != b[sq]), None)
        if dst is None:  # the piece left through an exit next to it
            dst = next(x for x in self.rules.steps[src] if self.play.exit_of.get(x) is not None)
        return self.rules.pos(src), self.rules.pos(dst)

    def state(self, i: int) -> DouShouQiState:
        occ, side = self.rules.decode(self.keys[i], self.play.header)
        return self.rules.to_state(occ, side)


def solve_wdl(state: DouShouQiState, max_states: int = DEFAULT_MAX_STATES,
              classic_elephant: bool = False, arena: Arena | None = None) -> WDLReport:
    """Exact game value by backward induction over every reachable position."""
    return GameGraph(state, max_states, classic_elephant, arena).report(0)


# ---------------------------------------------------------------------------
# Gadget stamps. Each stamp is a rectangle of squares with its garrison and
# named ports (border land squares where pieces come in or go out).

SUPPORT_KINDS = ("black_edge_protector", "white_edge_protector", "outflow_protector",
                 "one_way_channel", "gadget_protector")
GADGET_KINDS = ("AND", "OR", "FANOUT", "CHOICE", "VARIABLE")
# (transpose, flip rows, flip columns); the identity comes first
SYMMETRIES = tuple((t, v, h) for t in (False, True) for v in (False, True) for h in (False, True))


@dataclass(frozen=True)
class Stamp:
    name: str
    rows: tuple[str, ...]
    pieces: tuple[tuple[Pos, Piece], ...] = ()
    ports: tuple[tuple[str, Pos], ...] = ()

    @property
    def height(self) -> int:
        return len(self.rows)

    @property
    def width(self) -> int:
        return len(self.rows[0])

    def port(self, name: str) -> Pos:
        return dict(self.ports)[name]

    def facing(self, name: str) -> str:
        """Side of the stamp ("T", "R", "B", "L") a port opens to."""
        r, c = self.port(name)
        if r == 0:
            return "T"
        if r == self.height - 1:
            return "B"
        return "L" if c == 0 else "R"

    def _map(self, f, rows) -> "Stamp":
        return Stamp(self.name, tuple(rows),
                     tuple(sorted((f(p), pc) for p, pc in self.pieces)),
                     tuple((k, f(p)) for k, p in self.ports))

    def transpose(self) -> "Stamp":
        return self._map(lambda p: (p[1], p[0]), ("".join(col) for col in zip(*self.rows)))

    def flip_v(self) -> "Stamp":
        h = self.height
        return self._map(lambda p: (h - 1 - p[0], p[1]), reversed(self.rows))

    def flip_h(self) -> "Stamp":
        w = self.width
        return self._map(lambda p: (p[0], w - 1 - p[1]), (r[::-1] for r in self.rows))

    def oriented(self, sym) -> "Stamp":
        t, v, h = sym
        s = self.transpose() if t else self
        s = s.flip_v() if v else s
        return s.flip_h() if h else s

    def orient(self, **want: str) -> "Stamp":
        """First symmetric copy whose named ports face the requested sides."""
        for sym in SYMMETRIES:
            s = self.oriented(sym)
            if all(s.facing(k) == side for k, side in want.items()):
                return s
        raise NclForgeError(f"{self.name} cannot face {want}")


def stamp(kind: str) -> Stamp:
    """A gadget or support stamp in its drawn orientation."""
    if kind == "one_way_channel":
        return chain(["white_edge_protector"] * 2 + ["black_edge_protector"]
                     + ["white_edge_protector"] * 2, kind)
    if kind == "gadget_protector":
        return chain(["one_way_channel"] * 3 + ["outflow_protector"] + ["one_way_channel"] * 3, kind)
    doc = DATA["stamps"].get(kind)
    if doc is None:
        raise NclForgeError(f"unknown stamp {kind!r}")
    return Stamp(kind, tuple(doc["rows"]), tuple(sorted(_pieces(doc["pieces"]))),
                 tuple((k, tuple(v)) for k, v in doc["ports"].items()))


def chain(kinds: list[str], name: str = "chain") -> Stamp:
    """Stack stamps bottom to top, each ``in`` port touching the previous ``out``.

    The result has ``in`` at the bottom and ``out`` at the top, so white
    pieces travel upward through it.
    """
    parts = [stamp(k).orient(**{"in": "B", "out": "T"}) for k in kinds]
    # column of every part's ports relative to a common axis
    axis = max(p.port("in")[1] for p in parts)
    shift = []
    for p in parts:
        if p.port("in")[1] != p.port("out")[1]:
            raise NclForgeError(f"{p.name} does not pass straight through")
        shift.append(axis - p.port("in")[1])
    width = max(s + p.width for s, p in zip(shift, parts))
    rows: list[str] = []
    pieces = []
    for s, p in zip(reversed(shift), reversed(parts)):
        top = len(rows)
        for r in p.rows:
            rows.append("W" * s + r + "W" * (width - s - p.width))
        pieces += [((top + r, s + c), pc) for (r, c), pc in p.pieces]
    ports = (("in", (len(rows) - 1, axis)), ("out", (0, axis)))
    return Stamp(name, tuple(rows), tuple(sorted(pieces)), ports)


class Canvas:
    """A water-filled board that stamps and corridors are drawn onto."""

    def __init__(self, height: int, width: int):
        self.grid = [["W"] * width for _ in range(height)]
        self.pieces: dict[Pos, Piece] = {}

    def put(self, st: Stamp, top: int, left: int) -> dict[str, Pos]:
        for r, row in enumerate(st.rows):
            for c, ch in enumerate(row):
                self.grid[top + r][left + c] = ch
        for (r, c), pc in st.pieces:
            self.pieces[(top + r, left + c)] = pc
        return {k: (top + r, left + c) for k, (r, c) in st.ports}

    def set(self, pos: Pos, ch: str) -> None:
        self.grid[pos[0]][pos[1]] = ch

    def state(self, to_move: str = WHITE) -> DouShouQiState:
        return DouShouQiState.make(("".join(r) for r in self.grid), self.pieces, to_move)


# ---------------------------------------------------------------------------
# Support-construction harness

STEP = {"T": (-1, 0), "B": (1, 0), "L": (0, -1), "R": (0, 1)}
DOG = 4


def harness(st: Stamp, probes: Mapping[str, list[Piece]] | None = None,
            exits: Mapping[str, str] | None = None, reserves: bool = True) -> tuple[DouShouQiState, dict]:
    """Isolated test board around a stamp.

    Every port gets a one-wide corridor leading away from the stamp. If the
    port is an exit for some side, the first corridor square is that exit;
    probe pieces queue behind it, nearest first. With ``reserves`` each side
    also gets one cat in a sealed two-square pen, so neither side can run out
    of moves or be wiped out by what happens around the stamp.
    Returns the position (white to move) and the exit squares per side.
    """
    probes = dict(probes or {})
    exits = dict(exits or {})
    lengths = {k: max(1, len(probes.get(k, ())) + (k in exits)) for k, _ in st.ports}
    m = max(lengths.values()) + 1
    extra = 4 if reserves else 0
    cv = Canvas(st.height + 2 * m, st.width + 2 * m + extra)
    ports = cv.put(st, m, m)
    out: dict[str, set] = {WHITE: set(), BLACK: set()}
    for name, (r, c) in ports.items():
        dr, dc = STEP[st.facing(name)]
        queue = list(probes.get(name, ()))
        for k in range(1, lengths[name] + 1):
            cell = (r + dr * k, c + dc * k)
            cv.set(cell, ".")
            if k == 1 and name in exits:
                out[exits[name]].add(cell)
            elif queue:
                cv.pieces[cell] = queue.pop(0)
    if reserves:
        w = len(cv.grid[0])
        for row, side in ((1, WHITE), (3, BLACK)):
            cv.set((row, w - 3), ".")
            cv.set((row, w - 2), ".")
            cv.pieces[(row, w - 3)] = Piece(side, 2)
    return cv.state(WHITE), {k: frozenset(v) for k, v in out.items() if v}


@dataclass
class Check:
    claim: str
    expect: str  # "white_win", "not white_win", ...
    value: str
    states: int
    depth: int | None

    @property
    def ok(self) -> bool:
        if self.expect.startswith("not "):
            return self.value != self.expect[4:]
        return self.value == self.expect

    def to_dict(self) -> dict:
        return {"claim": self.claim, "expect": self.expect, "value": self.value,
                "states": self.states, "depth": self.depth, "ok": self.ok}


@dataclass
class SupportReport:
    kind: str
    checks: list[Check]
    notes: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "ok": self.ok, "checks": [c.to_dict() for c in self.checks],
                "notes": self.notes}


def relaxed(st: Stamp, side: str, kind: Piece) -> Stamp:
    """``st`` without the ``side`` garrison pieces equal to ``kind``.

    Used together with ``Arena.snipers = {side}``. When every removed piece
    is weaker than every enemy piece, it can only ever capture an enemy
    standing on one of its side's traps, and it never keeps an enemy off a
    square (the enemy may always take it). Sniping grants exactly that capture
    from anywhere, so the relaxed side is at least as strong as before: what
    it cannot force in the relaxed game it cannot force in the real one.
    """
    enemy = [pc for pc in st.pieces if pc[1].owner != side]
    if kind.owner != side or any(pc.strength <= kind.strength for _, pc in enemy):
        raise NclForgeError("relaxation needs the removed pieces to be the weakest on the board")
    return Stamp(st.name, st.rows, tuple(x for x in st.pieces if x[1] != kind), st.ports)


def _run(claim: str, st: Stamp, probes, exits, need: dict, expect: str, *,
         pin: Piece | None = None, guard: Piece | None = None, relax: Piece | None = None,
         counted: dict | None = None, max_states: int = DEFAULT_MAX_STATES) -> Check:
    """Solve one harness position.

    Garrison pieces equal to ``pin`` never move and those equal to ``guard``
    only capture; both only weaken their owner. Pieces equal to ``relax`` are
    traded for sniping rights, which only strengthens their owner.
    """
    snipers = frozenset()
    if relax is not None:
        st = relaxed(st, relax.owner, relax)
        snipers = frozenset({relax.owner})
    state, cells = harness(st, probes, exits)
    off = (state.m - st.height) // 2  # the harness margin, equal on all sides

    def garrison(kind):
        return frozenset((r + off, c + off) for (r, c), pc in st.pieces if pc == kind)

    arena = Arena(cells, need, garrison(pin), garrison(guard), counted or {}, snipers)
    rep = solve_wdl(state, max_states, arena=arena)
    return Check(claim, expect, rep.value, rep.states, rep.depth)


def _white(s: int = DOG) -> Piece:
    return Piece(WHITE, s)


def _black(s: int = DOG) -> Piece:
    return Piece(BLACK, s)


CAT_W = Piece(WHITE, 2)
DOGS = {WHITE: frozenset({DOG})}


def _lemmas(kind: str, max_states: int) -> list[Check]:
    bep, wep = stamp("black_edge_protector"), stamp("white_edge_protector")
    run = lambda *a, **k: _run(*a, max_states=max_states, **k)  # noqa: E731
    if kind == "black_edge_protector":
        return [
            run("a white dog below passes upward", bep, {"in": [_white()]}, {"out": WHITE},
                {WHITE: 1}, WHITE_WIN, counted=DOGS),
            run("a white dog above never passes downward", bep, {"out": [_white()]}, {"in": WHITE},
                {WHITE: 1}, "not " + WHITE_WIN, counted=DOGS),
        ]
    if kind == "white_edge_protector":
        out = [
            run("a white dog passes upward", wep, {"in": [_white()]}, {"out": WHITE},
                {WHITE: 1}, WHITE_WIN, counted=DOGS),
            run("a white dog passes downward", wep, {"out": [_white()]}, {"in": WHITE},
                {WHITE: 1}, WHITE_WIN, counted=DOGS),
        ]
        for k in (1, 2, 3):
            out.append(run(f"{k} black dog(s) on one side never pass", wep, {"in": [_black()] * k},
                           {"out": BLACK}, {BLACK: 1}, "not " + BLACK_WIN))
        return out
    if kind == "outflow_protector":
        of = stamp("outflow_protector")
        out = [run("the resident dog alone never passes", of, {}, {"out": WHITE}, {WHITE: 1},
                   "not " + WHITE_WIN, counted=DOGS, relax=CAT_W)]
        for k in (1, 2):
            arriving = {"in": [_white()] * k}
            out.append(run(f"{k} arriving dog(s): one passes", of, arriving, {"out": WHITE},
                           {WHITE: 1}, WHITE_WIN, counted=DOGS, guard=CAT_W))
            out.append(run(f"{k} arriving dog(s): never two", of, arriving, {"out": WHITE},
                           {WHITE: 2}, "not " + WHITE_WIN, counted=DOGS, relax=CAT_W))
        return out
    if kind == "one_way_channel":
        owc = stamp("one_way_channel")
        pair = chain(["white_edge_protector"] * 2, "white_edge_protector_pair")
        return [
            run("a white dog passes forward", owc, {"in": [_white()]}, {"out": WHITE},
                {WHITE: 1}, WHITE_WIN, counted=DOGS, guard=CAT_W),
            run("a white dog never passes backward", owc, {"out": [_white()]}, {"in": WHITE},
                {WHITE: 1}, "not " + WHITE_WIN, counted=DOGS, relax=CAT_W),
            run("an edge-protector pair holds against attack from both sides", pair,
                {"in": [_black()], "out": [_black(3)]}, {"out": BLACK}, {BLACK: 1},
                "not " + BLACK_WIN, counted={BLACK: frozenset({DOG})}),
        ]
    raise NclForgeError(f"no lemmas for {kind}")


_PARTS = {
    "one_way_channel": ["white_edge_protector"] * 2 + ["black_edge_protector"] + ["white_edge_protector"] * 2,
    "gadget_protector": ["one_way_channel"] * 3 + ["outflow_protector"] + ["one_way_channel"] * 3,
}


def _structure(kind: str) -> Check:
    """The chain really is its parts stacked port to port."""
    st = stamp(kind)
    parts = [stamp(p).orient(**{"in": "B", "out": "T"}) for p in _PARTS[kind]]
    r = st.height
    ok = sum(p.height for p in parts) == st.height
    pieces = sorted(pc for _, pc in st.pieces)
    ok = ok and pieces == sorted(pc for p in parts for _, pc in p.pieces)
    for p in parts:
        r -= p.height
        shift = st.port("in")[1] - p.port("in")[1]
        ok = ok and all(st.rows[r + i][shift:shift + p.width] == row for i, row in enumerate(p.rows))
    return Check(f"stacked from {' + '.join(_PARTS[kind])}", "structure",
                 "structure" if ok else "mismatch", 0, None)


def verify_support(kind: str, max_states: int = DEFAULT_MAX_STATES) -> SupportReport:
    """Prove the behaviour of a support construction on isolated test boards.

    Each check solves a harness board exactly. For the two chained kinds the
    full board is far beyond exhaustive search; their report lists the exact
    checks that fit, and the notes say how the chain-level claim follows
    from the parts.
    """
    if kind not in SUPPORT_KINDS:
        raise NclForgeError(f"unknown support construction {kind!r}")
    if kind in ("black_edge_protector", "white_edge_protector", "outflow_protector"):
        return SupportReport(kind, _cached_lemmas(kind, max_states))
    if kind == "one_way_channel":
        checks = [_structure(kind)] + _cached_lemmas("white_edge_protector", max_states)[2:]
        checks += _cached_lemmas(kind, max_states)
        notes = [
            "black pieces: an edge protector stops up to three black dogs from one side, "
            "and a pair of them holds when the channel's own wolf helps from inside; "
            "so neither probes nor the wolf get out",
            "white pieces: the whole channel is solved, forward with the cats only "
            "capturing (a restriction of white) and backward with the cats traded "
            "for sniping (a relaxation of white)",
        ]
        return SupportReport(kind, checks, notes)
    checks = [_structure(kind)]
    checks += _cached_lemmas("one_way_channel", max_states)
    checks += _cached_lemmas("outflow_protector", max_states)
    notes = [
        "a white dog crosses three forward channels, the outflow protector lets "
        "exactly one of one or two arrivals through, and three more channels follow",
        "going backward needs one extra white dog below every black edge protector "
        "passed; one dog alone never passes a single channel backward, so three "
        "chained channels cannot be undone by the at most two dogs that can gather "
        "at an input",
    ]
    return SupportReport(kind, checks, notes)


_LEMMA_CACHE: dict = {}


def _cached_lemmas(kind: str, max_states: int) -> list[Check]:
    key = (kind, max_states)
    if key not in _LEMMA_CACHE:
        _LEMMA_CACHE[key] = _lemmas(kind, max_states)
    return _LEMMA_CACHE[key]


# ---------------------------------------------------------------------------
# Planar Bounded 2CL -> Dou Shou Qi

# port names per gadget: (inputs, outputs); a VARIABLE's two ports are keyed
# by the owner of the edge they carry
_GADGET_PORTS = {
    "AND": (("in0", "in1"), ("out",)),
    "OR": (("in0", "in1"), ("out",)),
    "FANOUT": (("in",), ("out0", "out1")),
    "CHOICE": (("in",), ("out0", "out1")),
}
_LANE_GAP = 3  # two ports on one side are fanned out to lanes this far beyond them
RACE_PIECE = Piece(BLACK, 2)
TEMPO_PIECE = Piece(WHITE, 2)
DEFAULT_RACE_SLACK = 2


def protector_kinds(depth: int) -> list[str]:
    """Parts of a gadget protector with ``depth`` one-way channels on each side."""
    if depth <= 0:
        return []
    return ["one_way_channel"] * depth + ["outflow_protector"] + ["one_way_channel"] * depth


@dataclass
class _Module:
    """A rectangle of the reduced board in local coordinates.

    ``terms`` lists (edge key, side, column, row) of corridor ends that must
    reach the module's top ("T") or bottom ("B") boundary.
    """
    name: str
    cells: dict = field(default_factory=dict)
    pieces: dict = field(default_factory=dict)
    terms: list = field(default_factory=list)
    marks: dict = field(default_factory=dict)

    def put(self, st: Stamp, top: int, left: int) -> dict[str, Pos]:
        for r, row in enumerate(st.rows):
            for c, ch in enumerate(row):
                if ch != "W":
                    self.cells[(top + r, left + c)] = ch
        for (r, c), pc in st.pieces:
            self.pieces[(top + r, left + c)] = pc
        return {k: (top + r, left + c) for k, (r, c) in st.ports}

    def lane(self, port: Pos, dr: int, col: int, part: Stamp | None) -> Pos:
        """Corridor from a stamp port out to ``col``, through ``part`` if given."""
        r, c = port
        if col != c:
            for _ in range(2):
                r += dr
                self.cells[(r, c)] = "."
            step = 1 if col > c else -1
            while c != col:
                c += step
                self.cells[(r, c)] = "."
        r += dr
        self.cells[(r, c)] = "."
        if part is not None:
            near, far = ("in", "out") if (dr < 0) == (part.facing("in") == "B") else ("out", "in")
            pr, pc = part.port(near)
            ports = self.put(part, r + dr - pr, c - pc)
            self.marks.setdefault("protectors", []).append(ports[near])
            r, c = ports[far]
            r += dr
            self.cells[(r, c)] = "."
        return r, c

    def box(self):
        rows = [r for r, _ in self.cells]
        cols = [c for _, c in self.cells]
        return min(rows), max(rows), min(cols), max(cols)


def _guard(depth: int, outward: bool) -> Stamp | None:
    """Protector chain for one port; white travels away from the gadget iff ``outward``."""
    kinds = protector_kinds(depth)
    if not kinds:
        return None
    st = chain(kinds, "gadget_protector")
    # chains run bottom (in) to top (out); lane() flips by choosing the near port
    return st if outward else st.flip_v()


def _gadget_module(v, kind: str, ports: dict[str, tuple[str, bool]], sym, depth: int) -> _Module:
    """``ports`` maps port name -> (edge key, white leaves through it)."""
    st = stamp(kind).oriented((False,) + tuple(sym))
    mod = _Module(v)
    at = mod.put(st, 0, 0)
    mod.marks["ports"] = dict(at)
    mod.marks["origin"] = (0, 0)
    mod.marks["stamp"] = st
    for side, dr in (("T", -1), ("B", 1)):
        names = sorted((k for k in ports if st.facing(k) == side), key=lambda k: at[k][1])
        if len(names) == 1:
            cols = [at[names[0]][1]]
        else:
            cols = [at[names[0]][1] - _LANE_GAP, at[names[1]][1] + _LANE_GAP] if names else []
        for name, col in zip(names, cols):
            key, outward = ports[name]
            guarded = not (kind == "VARIABLE" and name == "black")
            part = _guard(depth, outward) if guarded else None
            if part is not None and dr > 0:
                part = part.flip_v()
            end = mod.lane(at[name], dr, col, part)
            mod.terms.append((key, side, end[1], end[0]))
    return mod


def _pocket(name: str, key: str, side: str, role: str) -> _Module:
    mod = _Module(name)
    mod.cells[(0, 0)] = "."
    if role == "source":
        mod.pieces[(0, 0)] = Piece(WHITE, DOG)
    mod.marks["cell"] = (0, 0)
    if role == "target":
        bep = stamp("black_edge_protector").orient(**{"in": side, "out": "B" if side == "T" else "T"})
        dr = 1 if side == "T" else -1
        pr, pc = bep.port("in")
        ports = mod.put(bep, dr - pr, -pc)
        orow, ocol = ports["out"]
        mod.cells[(orow + dr, ocol)] = "d"
        mod.marks["cell"] = (orow + dr, ocol)
        mod.marks["protectors"] = [ports["in"]]
    mod.terms.append((key, side, 0, 0))
    return mod


def _classify(g):
    """Split edges into gadget wiring, pockets and ignored fillers."""
    from .graph import Kind, Owner

    if g.target is None:
        raise ReductionError("graph has no target edge")
    if g.edges[g.target].owner is not Owner.WHITE:
        raise ReductionError("target edge must be owned by white")
    gadgets = {v.id: v for v in g.vertices.values() if v.kind is not Kind.FREE}
    for v in gadgets.values():
        if v.kind.name not in GADGET_KINDS:
            raise ReductionError(f"vertex {v.id}: no Dou Shou Qi gadget for {v.kind.name}")
    ins = {v: [] for v in gadgets}
    outs = {v: [] for v in gadgets}
    pockets = {v: [] for v in gadgets}  # (key, role, edge id)
    fillers = []
    for e in sorted(g.edges.values(), key=lambda e: natural_key(e.id)):
        prod = e.points_to
        cons = e.v if prod == e.u else e.u
        if prod not in gadgets and cons not in gadgets:
            if e.id == g.target:
                raise ReductionError("target edge joins two FREE vertices")
            fillers.append(e.id)
            continue
        if e.owner is not Owner.WHITE:
            pv = gadgets.get(prod)
            if pv is None or pv.kind is not Kind.VARIABLE or cons in gadgets:
                raise ReductionError(f"black edge {e.id} must run from a VARIABLE to a FREE vertex")
        for end, other in ((prod, cons), (cons, prod)):
            if end in gadgets:
                (outs if end == prod else ins)[end].append(e.id)
        if prod not in gadgets:
            fv = g.vertices[prod]
            live = fv.min_inflow == 0
            if not live and fv.min_inflow < sum(x.weight for x in g.edges.values() if prod in (x.u, x.v)):
                raise ReductionError(f"FREE vertex {prod} needs min inflow 0 or all its edges")
            pockets[cons].append((e.id, "source" if live else "dead", e.id))
        elif e.id == g.target:
            pockets[prod].append((e.id, "target", e.id))
            if cons in gadgets:
                pockets[cons].append((e.id + "#cut", "dead", e.id))
        elif cons not in gadgets:
            pockets[prod].append((e.id, "sink", e.id))
    for v, gv in gadgets.items():
        kind = gv.kind.name
        if kind == "VARIABLE":
            owners = sorted(g.edges[e].owner.name for e in outs[v])
            if ins[v] or owners != ["BLACK", "WHITE"]:
                raise ReductionError(f"VARIABLE {v} needs one white and one black edge pointing at it")
        else:
            want_in, want_out = _GADGET_PORTS[kind]
            if len(ins[v]) != len(want_in) or len(outs[v]) != len(want_out):
                raise ReductionError(f"{kind} vertex {v} is not in its initial orientation")
    return gadgets, ins, outs, pockets, fillers


def _port_edges(g, kind, ins, outs, swap) -> dict[str, tuple[str, bool]]:
    from .graph import Owner

    if kind == "VARIABLE":
        return {("white" if g.edges[e].owner is Owner.WHITE else "black"): (e, True) for e in outs}
    want_in, want_out = _GADGET_PORTS[kind]
    i, o = list(ins), list(outs)
    if swap:
        (i if len(i) == 2 else o).reverse()
    # the target edge is drawn to the target pocket; its consumer keeps a dead stub
    res = {n: (e + "#cut" if e == g.target else e, False) for n, e in zip(want_in, i)}
    res.update({n: (e, True) for n, e in zip(want_out, o)})
    return res


def _cluster_options(g, v, kind, ins, outs, pockets):
    """Every (sym, swap, left, right) for a vertex with the terminal order it yields."""
    st0 = stamp(kind)
    seen = set()
    for sym in ((False, False), (True, False), (False, True), (True, True)):
        st = st0.oriented((False,) + sym)
        for swap in (False, True):
            ports = _port_edges(g, kind, ins, outs, swap)
            page = {}
            order = {"T": [], "B": []}
            for name in sorted(ports, key=lambda k: st.port(k)[1]):
                side = st.facing(name)
                order[side].append(ports[name][0])
                page[ports[name][0]] = side
            page_of = {key: page[key] for key, _, _ in pockets}
            for perm in itertools.permutations(range(len(pockets))):
                for k in range(len(perm) + 1):
                    left = [pockets[j] for j in perm[:k]]
                    right = [pockets[j] for j in perm[k:]]
                    terms = [(p[0], page_of[p[0]]) for p in left]
                    terms += [(e, s) for s in "TB" for e in order[s]]
                    terms += [(p[0], page_of[p[0]]) for p in right]
                    # only the order within each page matters
                    sig = tuple(x for s in "TB" for x in terms if x[1] == s)
                    if sig in seen:
                        continue
                    seen.add(sig)
                    yield (sym, swap, left, right), terms


def _layouts(g, gadgets, ins, outs, pockets, max_nodes: int = 200_000):
    """Orders of gadgets and pockets on a line where every edge is a non-crossing arc.

    Arcs above the line join top terminals, arcs below join bottom ones.
    Depth-first search with crossing checks as soon as an arc closes; plans
    are yielded in search order until ``max_nodes`` search nodes are spent.
    """
    verts = sorted(gadgets, key=natural_key)
    options = {v: list(_cluster_options(g, v, gadgets[v].kind.name, ins[v], outs[v], pockets[v]))
               for v in verts}
    budget = [max_nodes]

    def add(state, terms):
        open_, closed, pos = state
        open_ = dict(open_)
        closed = {s: list(closed[s]) for s in "TB"}
        for key, page in terms:
            pos += 1
            if key in open_:
                a, pg = open_.pop(key)
                if pg != page:
                    return None
                if any(pg2 == page and a < x < pos for x, pg2 in open_.values()):
                    return None
                if any(c < a < d for c, d in closed[page]):
                    return None
                closed[page].append((a, pos))
            else:
                open_[key] = (pos, page)
        return open_, closed, pos

    def search(rest, state, plan):
        budget[0] -= 1
        if budget[0] < 0:
            return
        if not rest:
            if not state[0]:
                yield plan
            return
        for v in rest:
            for opt, terms in options[v]:
                nxt = add(state, terms)
                if nxt is not None:
                    yield from search([u for u in rest if u != v], nxt, plan + [(v,) + opt])

    yield from search(verts, ({}, {"T": [], "B": []}, 0), [])


def _tracks(arcs: list[tuple[int, int]]) -> list[int]:
    """Nesting depth of every arc (1 for innermost)."""
    order = sorted(range(len(arcs)), key=lambda i: arcs[i][1] - arcs[i][0])
    depth = [0] * len(arcs)
    for i in order:
        a, b = arcs[i]
        inner = [depth[j] for j in order if j != i and a < arcs[j][0] and arcs[j][1] < b]
        depth[i] = 1 + max(inner, default=0)
    return depth


def _distances(grid: list[list[str]], start: Pos) -> dict[Pos, int]:
    dist = {start: 0}
    todo = deque([start])
    while todo:
        r, c = todo.popleft()
        for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            q = (r + dr, c + dc)
            if 0 <= q[0] < len(grid) and 0 <= q[1] < len(grid[0]) and q not in dist \
                    and grid[q[0]][q[1]] != "W":
                dist[q] = dist[(r, c)] + 1
                todo.append(q)
    return dist


def _assemble(g, plan, gadgets, ins, outs, protector_depth: int) -> SimpleNamespace:
    """Draw one layout plan; the race corridor and pen rows are left empty."""
    from .graph import Owner

    mods: list[tuple[_Module, dict]] = []
    for v, sym, swap, left, right in plan:
        kind = gadgets[v].kind.name
        ports = _port_edges(g, kind, ins[v], outs[v], swap)
        gm = _gadget_module(v, kind, ports, sym, protector_depth)
        side = {key: t for key, t, _, _ in gm.terms}
        for key, role, eid in left:
            mods.append((_pocket(f"{role}:{key}", key, side[key], role), {"role": role, "edge": eid, "key": key}))
        mods.append((gm, {"role": "gadget", "vertex": v, "kind": kind, "ports": ports}))
        for key, role, eid in right:
            mods.append((_pocket(f"{role}:{key}", key, side[key], role), {"role": role, "edge": eid, "key": key}))

    # normalise: every terminal reaches its module's top or bottom row
    band = 0
    for mod, _ in mods:
        r0, r1, _, _ = mod.box()
        for key, t, c, r in mod.terms:
            for rr in (range(r0, r) if t == "T" else range(r + 1, r1 + 1)):
                mod.cells[(rr, c)] = "."
        band = max(band, r1 - r0 + 1)

    terms: dict[str, list] = {}
    placed = []
    x = 0
    for mod, info in mods:
        r0, r1, c0, c1 = mod.box()
        placed.append((mod, info, r0, c0, x))
        x += c1 - c0 + 2
    width = x - 1
    arcs = {"T": [], "B": []}
    for mod, info, r0, c0, x0 in placed:
        for key, t, c, _ in mod.terms:
            terms.setdefault(key, []).append((t, x0 + c - c0))
    keys = sorted(terms, key=natural_key)
    for key in keys:
        (t, a), (t2, b) = terms[key]
        if t != t2:
            raise ReductionError(f"arc {key} joins different sides")  # the search rules this out
        arcs[t].append((min(a, b), max(a, b), key))
    depth = {t: _tracks([(a, b) for a, b, _ in arcs[t]]) for t in "TB"}
    # track d sits 2d - 1 rows off the band, so nested tracks keep a water row apart
    top = max(2 * max(depth["T"], default=0) - 1, 0)
    bottom = top + band - 1
    low = bottom + max(2 * max(depth["B"], default=0) - 1, 0)
    race_row = low + 2

    # a module with no top terminal hangs from the bottom of the band
    grid_cells: dict[Pos, str] = {}
    pieces: dict[Pos, Piece] = {}
    where: dict[int, tuple[int, int]] = {}
    for i, (mod, info, r0, c0, x0) in enumerate(placed):
        r1 = mod.box()[1]
        has_top = any(t == "T" for _, t, _, _ in mod.terms)
        dy = top - r0 if has_top else bottom - r1
        dx = x0 - c0
        where[i] = (dy, dx)
        for (r, c), ch in mod.cells.items():
            grid_cells[(r + dy, c + dx)] = ch
        for (r, c), pc in mod.pieces.items():
            pieces[(r + dy, c + dx)] = pc
        for _, t, c, _ in mod.terms:
            span = range(r1 + dy + 1, bottom + 1) if t == "B" else range(top, r0 + dy)
            for rr in span:
                grid_cells[(rr, c + dx)] = "."
    for t in "TB":
        for (a, b, key), d in zip(arcs[t], depth[t]):
            row = top - 2 * d + 1 if t == "T" else bottom + 2 * d - 1
            step = -1 if t == "T" else 1
            edge_row = top if t == "T" else bottom
            for c in (a, b):
                for rr in range(edge_row + step, row + step, step):
                    grid_cells[(rr, c)] = "."
            for c in range(a, b + 1):
                grid_cells[(row, c)] = "."

    def glob(i, pos):
        dy, dx = where[i]
        return pos[0] + dy, pos[1] + dx

    # per-edge move cost: shortest walk of the signal dog, pieces ignored
    pen_row = race_row + 2
    height = pen_row + 1
    grid = [["W"] * width for _ in range(height)]
    for (r, c), ch in grid_cells.items():
        grid[r][c] = ch
    start: dict[str, Pos] = {}
    arrive: dict[str, Pos] = {}
    extra: dict[str, int] = {}
    var_cells: dict[str, dict] = {}
    vertex_box: dict[str, Pos] = {}
    protectors: dict[str, list] = {}
    for i, (mod, info, *_rest) in enumerate(placed):
        if info["role"] == "gadget":
            v = info["vertex"]
            at = {k: glob(i, p) for k, p in mod.marks["ports"].items()}
            vertex_box[v] = glob(i, (0, 0))
            st = mod.marks["stamp"]
            for p in mod.marks.get("protectors", []):
                protectors.setdefault(v, []).append(glob(i, p))
            if info["kind"] == "VARIABLE":
                dogs = {pc.owner: glob(i, pos) for pos, pc in st.pieces}
                var_cells[v] = {"white_dog": dogs[WHITE], "black_dog": dogs[BLACK],
                                "white_port": at["white"], "black_port": at["black"]}
            in_ports = [at[n] for n, (_, out) in info["ports"].items() if not out]
            for name, (key, out) in info["ports"].items():
                if out and info["kind"] == "VARIABLE":
                    start[key] = var_cells[v]["white_dog"]
                elif out:
                    start[key] = at[name]
                    d = _distances(grid, at[name])
                    extra[key] = max((d.get(p, 0) for p in in_ports), default=0)
                elif not key.endswith("#cut"):
                    arrive[key] = at[name]
        else:
            cell = glob(i, mod.marks["cell"])
            if info["role"] == "source":
                start[info["key"]] = cell
            elif info["role"] in ("sink", "target"):
                arrive[info["key"]] = cell
            if info["role"] == "target":
                protectors.setdefault("target", []).extend(glob(i, p) for p in mod.marks["protectors"])
    cost: dict[str, int] = {}
    for key in keys:
        if key.endswith("#cut") or g.edges[key].owner is not Owner.WHITE:
            continue
        if key not in start or key not in arrive:
            continue  # dead input: no dog ever comes
        d = _distances(grid, start[key]).get(arrive[key])
        if d is None:
            raise ReductionError(f"edge {key}: corridor is disconnected")
        cost[key] = d + extra.get(key, 0)
    return SimpleNamespace(grid=grid, pieces=pieces, cost=cost, plan=plan, start=start,
                           arrive=arrive, var_cells=var_cells, vertex_box=vertex_box,
                           protectors=protectors, race_row=race_row, pen_row=pen_row, width=width)


def reduce_2cl_to_doushouqi(g, protector_depth: int = 3, race_slack: int = DEFAULT_RACE_SLACK,
                            max_layout_nodes: int = 200_000, race: int | None = None,
                            layout_tries: int = 16):
    """Build a Dou Shou Qi position in which white wins iff white wins ``g``.

    Every gadget vertex becomes its stamp with a gadget protector on each
    port that white dogs travel through (``protector_depth`` one-way
    channels before and after the outflow protector; 0 leaves the ports
    bare). Gadgets and FREE ends sit on one row; edges are corridors routed
    as nested arcs above and below it. The target edge ends in a black edge
    protector guarding the black den. White gets a cat in a sealed pen so
    it is never forced to move a gadget piece. Black's race piece walks a straight
    corridor to the white den, longer than all of white's edge crossings
    together plus ``race_slack``. An explicit ``race`` overrides that length
    but must still exceed the cost of white's certified winning line.

    Returns ``(state, trace)``.
    """
    import networkx as nx

    from .games import solve_2cl, topological_vertex_order
    from .graph import Owner
    from .trace import ReductionTrace

    simple = nx.Graph()
    simple.add_nodes_from(g.vertices)
    simple.add_edges_from((e.u, e.v) for e in g.edges.values())
    if not nx.check_planarity(simple)[0]:
        raise ReductionError("graph is not planar")
    gadgets, ins, outs, pockets, fillers = _classify(g)
    plans = list(itertools.islice(_layouts(g, gadgets, ins, outs, pockets, max_layout_nodes), layout_tries))
    if not plans:
        raise ReductionError("no two-page layout with the gadget port sides was found")
    # the layout whose white edges are cheapest to walk keeps the race short
    best = min((_assemble(g, plan, gadgets, ins, outs, protector_depth) for plan in plans),
               key=lambda b: sum(b.cost.values()))
    grid, pieces, cost, plan = best.grid, best.pieces, best.cost, best.plan
    start, arrive, var_cells = best.start, best.arrive, best.var_cells
    vertex_box, protectors = best.vertex_box, best.protectors
    race_row, pen_row, width = best.race_row, best.pen_row, best.width
    try:
        report = solve_2cl(g)
        line = [e for e in report.witness if g.edges[e].owner is Owner.WHITE] if report.verdict == "white" else []
    except BoundExceeded:
        report, line = None, []
    witness_cost = sum(cost.get(e, 0) for e in line)
    if race is None:
        race = sum(cost.values()) + race_slack
    if race <= witness_cost:
        raise ReductionError("race calibration failed")
    width = max(width, race + 1)
    for row in grid:
        row.extend("W" * (width - len(row)))
    for c in range(race):
        grid[race_row][c] = "."
    grid[race_row][race] = "D"
    race_start = (race_row, 0)
    pieces[race_start] = RACE_PIECE
    # white may always wait: a cat shuffles in a sealed pen
    grid[pen_row][0] = grid[pen_row][1] = "."
    pieces[(pen_row, 0)] = TEMPO_PIECE
    state = DouShouQiState.make(("".join(r) for r in grid), pieces, WHITE)

    try:
        order = topological_vertex_order(g, against=True)
    except GraphError:
        order = sorted(g.vertices, key=natural_key)
    index = {v: i for i, v in enumerate(order)}
    tr = ReductionTrace("doushouqi", g)
    for v in sorted(g.vertices, key=natural_key):
        kind = g.vertices[v].kind.name
        if v in vertex_box:
            r, c = vertex_box[v]
            tr.vertices[v] = {"gadget": f"{kind}@({r},{c})", "kind": kind, "index": index[v]}
        else:
            tr.vertices[v] = {"gadget": "pocket", "kind": kind, "index": index[v]}
    cell = "cell({},{})".format
    for e in sorted(g.edges, key=natural_key):
        if e in fillers:
            continue
        if e in arrive:
            tr.add_edge(e, cell(*arrive[e]), "boundary-cell")
        if e in start:
            tr.add_edge(e, cell(*start[e]), "garrison" if g.edges[e].owner is Owner.WHITE else "channel")
        for v, cells in var_cells.items():
            if e in outs[v] and g.edges[e].owner is not Owner.WHITE:
                tr.add_edge(e, cell(*cells["black_dog"]), "garrison")
        if e not in tr.edges:
            tr.add_edge(e, f"stub({e})", "channel")
    tr.params = {
        "protector_depth": protector_depth,
        "board": [state.m, state.n],
        "race_distance": race,
        "race_start": list(race_start),
        "white_den": [race_row, race],
        "race_piece": [RACE_PIECE.owner, RACE_PIECE.strength],
        "tempo_pen": [[pen_row, 0], [pen_row, 1]],
        "edge_cost": cost,
        "witness": line,
        "witness_cost": witness_cost,
        "winner_2cl": None if report is None else report.verdict,
        "fillers": fillers,
        "arrive": {k: list(p) for k, p in arrive.items()},
        "variables": {v: {k: list(p) for k, p in c.items()} for v, c in var_cells.items()},
        "protectors": {v: [list(p) for p in ps] for v, ps in protectors.items()},
        "layout": [[v, list(sym), swap, [k for k, _, _ in left], [k for k, _, _ in right]]
                   for v, sym, swap, left, right in plan],
    }
    return state, tr


def smallest_2cl():
    """One VARIABLE whose white edge is the target, plus one black filler."""
    from .graph import ConstraintGraph, Edge, Kind, Owner, Vertex

    vs = [Vertex.make("x", Kind.VARIABLE), Vertex.make("wt", Kind.FREE), Vertex.make("bt", Kind.FREE),
          Vertex.make("f0a", Kind.FREE), Vertex.make("f0b", Kind.FREE)]
    es = [Edge("w", "x", "wt", 2, "x", Owner.WHITE), Edge("b", "x", "bt", 2, "x", Owner.BLACK),
          Edge("f0", "f0a", "f0b", 2, "f0a", Owner.BLACK)]
    return ConstraintGraph.build(vs, es, "w")


def garrison_strengths(state: DouShouQiState) -> set[int]:
    return {pc.strength for _, pc in state.pieces}


def race_calibrated(trace) -> bool:
    """Black's race is longer than white's certified line, in board moves."""
    p = trace.params
    cost = sum(p["edge_cost"].get(e, 0) for e in p["witness"])
    return p["race_distance"] > cost


def lift_doushouqi(trace, witness) -> list[str]:
    """Edge reversals emulated by a game line from the reduced position.

    White plays the even-numbered moves. A white move onto the arrival cell
    of an edge reverses it; inside a VARIABLE, the dog that captures the
    other one reverses its own colour's edge.
    """
    p = trace.params
    arrive = {tuple(c): e for e, c in p["arrive"].items()}
    events: dict[tuple, str] = {}
    for v, c in p["variables"].items():
        mine = [e for e in trace.source.edges if v in (trace.source.edges[e].u, trace.source.edges[e].v)]
        owner = {trace.source.edges[e].owner.name: e for e in mine}
        events[(WHITE, tuple(c["white_dog"]), tuple(c["black_dog"]))] = owner["WHITE"]
        events[(BLACK, tuple(c["black_dog"]), tuple(c["white_dog"]))] = owner["BLACK"]
    out: list[str] = []
    for i, mv in enumerate(witness):
        src, dst = tuple(mv[0]), tuple(mv[1])
        side = WHITE if i % 2 == 0 else BLACK
        e = events.get((side, src, dst))
        if e is None and side == WHITE:
            e = arrive.get(dst)
        if e is not None and e not in out:
            out.append(e)
    return out
