"""Constraint graph data model and JSON interchange."""
from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

from .errors import GraphError


class Kind(str, Enum):
    AND = "AND"
    OR = "OR"
    FANOUT = "FANOUT"
    CHOICE = "CHOICE"
    VARIABLE = "VARIABLE"
    FREE = "FREE"


class Owner(str, Enum):
    WHITE = "white"
    BLACK = "black"
    NEUTRAL = "neutral"


# incident weight multisets, sorted descending
KIND_WEIGHTS = {
    Kind.AND: (2, 1, 1),
    Kind.FANOUT: (2, 1, 1),
    Kind.OR: (2, 2, 2),
    Kind.CHOICE: (1, 1, 1),
    Kind.VARIABLE: (2, 2),
}


def natural_key(s: str):
    """Sort key that orders 'e2' before 'e10'."""
    return tuple((0, int(t), "") if t.isdigit() else (1, 0, t) for t in re.findall(r"\d+|\D+", s))


@dataclass(frozen=True)
class Vertex:
    id: str
    kind: Kind
    min_inflow: int

    @staticmethod
    def make(id: str, kind, min_inflow: int | None = None) -> "Vertex":
        kind = Kind(kind)
        if min_inflow is None:
            min_inflow = 0 if kind is Kind.FREE else 2
        return Vertex(id, kind, min_inflow)


@dataclass(frozen=True)
class Edge:
    id: str
    u: str
    v: str
    weight: int
    points_to: str | None  # None means undirected
    owner: Owner = Owner.NEUTRAL

    def other(self, x: str) -> str:
        return self.v if x == self.u else self.u

    @property
    def tail(self) -> str:
        """Endpoint the edge currently points away from."""
        return self.other(self.points_to)


@dataclass(frozen=True, eq=False)
class ConstraintGraph:
    vertices: Mapping[str, Vertex]
    edges: Mapping[str, Edge]
    target: str | None = None
    incident: Mapping[str, tuple[str, ...]] = field(init=False, repr=False)

    def __post_init__(self):
        inc: dict[str, list[str]] = {v: [] for v in self.vertices}
        for e in self.edges.values():
            for x in (e.u, e.v):
                if x not in self.vertices:
                    raise GraphError(f"edge {e.id} references unknown vertex {x}")
            if e.u == e.v:
                raise GraphError(f"edge {e.id} is a self-loop")
            if e.weight not in (1, 2):
                raise GraphError(f"edge {e.id} has weight {e.weight}")
            if e.points_to is not None and e.points_to not in (e.u, e.v):
                raise GraphError(f"edge {e.id} points to non-endpoint {e.points_to}")
            inc[e.u].append(e.id)
            inc[e.v].append(e.id)
        for v in self.vertices.values():
            if v.min_inflow < 0:
                raise GraphError(f"vertex {v.id} has negative min_inflow")
            want = KIND_WEIGHTS.get(v.kind)
            if want is not None:
                got = tuple(sorted((self.edges[e].weight for e in inc[v.id]), reverse=True))
                if got != want:
                    raise GraphError(f"vertex {v.id} of kind {v.kind.value} has incident weights {got}, expected {want}")
                if v.min_inflow != 2:
                    raise GraphError(f"vertex {v.id} of kind {v.kind.value} must have min_inflow 2")
        if self.target is not None and self.target not in self.edges:
            raise GraphError(f"target {self.target} is not an edge")
        object.__setattr__(self, "incident", {k: tuple(v) for k, v in inc.items()})

    # construction helpers -------------------------------------------------
    @classmethod
    def build(cls, vertices: Iterable[Vertex], edges: Iterable[Edge], target: str | None = None):
        vs: dict[str, Vertex] = {}
        for v in vertices:
            if v.id in vs:
                raise GraphError(f"duplicate vertex id {v.id}")
            vs[v.id] = v
        es: dict[str, Edge] = {}
        for e in edges:
            if e.id in es:
                raise GraphError(f"duplicate edge id {e.id}")
            es[e.id] = e
        return cls(vs, es, target)

    def replace(self, vertices=None, edges=None, target="__keep__") -> "ConstraintGraph":
        return ConstraintGraph.build(
            self.vertices.values() if vertices is None else vertices,
            self.edges.values() if edges is None else edges,
            self.target if target == "__keep__" else target,
        )

    # queries ----------------------------------------------------------------
    def edge_ids(self) -> list[str]:
        return sorted(self.edges, key=natural_key)

    def is_directed(self) -> bool:
        return all(e.points_to is not None for e in self.edges.values())

    def is_undirected(self) -> bool:
        return all(e.points_to is None for e in self.edges.values())

    def weights_at(self, v: str) -> Counter:
        return Counter(self.edges[e].weight for e in self.incident[v])

    def owners(self) -> set[Owner]:
        return {e.owner for e in self.edges.values()}


def inflow_of(graph: ConstraintGraph, orientation: Mapping[str, str], v: str) -> int:
    if v not in graph.vertices:
        raise GraphError(f"unknown vertex {v}")
    return sum(graph.edges[e].weight for e in graph.incident[v] if orientation[e] == v)


def is_legal(graph: ConstraintGraph, orientation: Mapping[str, str | None] | None = None) -> bool:
    """True iff every vertex meets its minimum inflow under ``orientation``.

    ``orientation`` maps edge id to the vertex the edge points to; it defaults
    to the graph's own orientation.
    """
    if orientation is None:
        orientation = {e.id: e.points_to for e in graph.edges.values()}
    for eid in graph.edges:
        if orientation.get(eid) is None:
            raise GraphError(f"edge {eid} is undirected")
    return all(inflow_of(graph, orientation, v.id) >= v.min_inflow for v in graph.vertices.values())


# JSON -----------------------------------------------------------------------

_VERTEX_FIELDS = {"id", "kind", "min_inflow"}
_EDGE_FIELDS = {"id", "u", "v", "weight", "points_to", "undirected", "owner"}
_TOP_FIELDS = {"vertices", "edges", "target"}


def _check_fields(obj, allowed, what):
    if not isinstance(obj, dict):
        raise GraphError(f"{what} must be an object")
    extra = set(obj) - allowed
    if extra:
        raise GraphError(f"unknown field(s) in {what}: {sorted(extra)}")


def graph_from_dict(doc: dict) -> ConstraintGraph:
    _check_fields(doc, _TOP_FIELDS, "graph")
    try:
        vertices = []
        for raw in doc.get("vertices", []):
            _check_fields(raw, _VERTEX_FIELDS, "vertex")
            vertices.append(Vertex.make(str(raw["id"]), raw["kind"], raw.get("min_inflow")))
        edges = []
        for raw in doc.get("edges", []):
            _check_fields(raw, _EDGE_FIELDS, "edge")
            undirected = bool(raw.get("undirected", False))
            if undirected and raw.get("points_to") is not None:
                raise GraphError(f"edge {raw['id']} is both undirected and directed")
            if not undirected and raw.get("points_to") is None:
                raise GraphError(f"edge {raw['id']} needs points_to or undirected")
            w = raw["weight"]
            if not isinstance(w, int) or isinstance(w, bool):
                raise GraphError(f"edge {raw['id']} weight must be an integer")
            edges.append(Edge(str(raw["id"]), str(raw["u"]), str(raw["v"]), w,
                              None if undirected else str(raw["points_to"]),
                              Owner(raw.get("owner", "neutral"))))
    except KeyError as exc:
        raise GraphError(f"missing field {exc}") from None
    except ValueError as exc:
        raise GraphError(str(exc)) from None
    target = doc.get("target")
    return ConstraintGraph.build(vertices, edges, None if target is None else str(target))


def graph_to_dict(g: ConstraintGraph) -> dict:
    vs = []
    for v in g.vertices.values():
        d = {"id": v.id, "kind": v.kind.value}
        default = 0 if v.kind is Kind.FREE else 2
        if v.min_inflow != default:
            d["min_inflow"] = v.min_inflow
        vs.append(d)
    es = []
    for e in g.edges.values():
        d = {"id": e.id, "u": e.u, "v": e.v, "weight": e.weight}
        if e.points_to is None:
            d["undirected"] = True
        else:
            d["points_to"] = e.points_to
        if e.owner is not Owner.NEUTRAL:
            d["owner"] = e.owner.value
        es.append(d)
    doc = {"vertices": vs, "edges": es}
    if g.target is not None:
        doc["target"] = g.target
    return doc


def load_graph(path) -> ConstraintGraph:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise GraphError(f"{path}: invalid JSON ({exc})") from None
    return graph_from_dict(doc)


def dump_graph(g: ConstraintGraph, path) -> None:
    with open(path, "w") as fh:
        json.dump(graph_to_dict(g), fh, indent=2)
        fh.write("\n")
