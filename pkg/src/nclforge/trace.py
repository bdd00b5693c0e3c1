"""Provenance records linking graph elements to game elements."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import IllegalMoveError, NclForgeError
from .games import BoundedState
from .graph import ConstraintGraph, graph_from_dict, graph_to_dict

ROLES = {"lock", "key", "boundary-cell", "garrison", "channel"}


@dataclass
class ReductionTrace:
    game: str
    source: ConstraintGraph
    edges: dict[str, list[dict]] = field(default_factory=dict)
    vertices: dict[str, dict] = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    def add_edge(self, eid: str, element: str, role: str) -> None:
        if role not in ROLES:
            raise ValueError(f"unknown role {role}")
        self.edges.setdefault(eid, []).append({"element": element, "role": role})

    def element_of(self, eid: str, role: str) -> str | None:
        for rec in self.edges.get(eid, []):
            if rec["role"] == role:
                return rec["element"]
        return None

    def to_dict(self) -> dict:
        return {
            "game": self.game,
            "source": graph_to_dict(self.source),
            "edges": self.edges,
            "vertices": self.vertices,
            "params": self.params,
        }

    @staticmethod
    def from_dict(doc: dict) -> "ReductionTrace":
        return ReductionTrace(doc["game"], graph_from_dict(doc["source"]), doc.get("edges", {}),
                              doc.get("vertices", {}), doc.get("params", {}))

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, ensure_ascii=False)
            fh.write("\n")

    @staticmethod
    def load(path) -> "ReductionTrace":
        with open(path) as fh:
            return ReductionTrace.from_dict(json.load(fh))


def lift_witness(trace: ReductionTrace, witness) -> list[str]:
    """Translate a game witness into the edge reversals it emulates."""
    if not witness:
        return []
    if trace.game == "klondike":
        from .klondike import lift_klondike
        return lift_klondike(trace, witness)
    if trace.game == "mahjong":
        from .mahjong import lift_mahjong
        return lift_mahjong(trace, witness)
    if trace.game == "doushouqi":
        from .doushouqi import lift_doushouqi
        return lift_doushouqi(trace, witness)
    raise NclForgeError(f"witness lifting is not available for {trace.game}")


def check_lifted(trace: ReductionTrace, moves: list[str]) -> bool:
    """True iff ``moves`` is a legal Bounded NCL play ending with the target."""
    state = BoundedState(trace.source)
    try:
        for e in moves:
            state = state.reverse(e)
    except IllegalMoveError:
        return False
    return bool(moves) and moves[-1] == trace.source.target
