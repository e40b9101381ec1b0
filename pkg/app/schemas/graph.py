"""Schemas for digraphs, paths, cycle bases and partial orders"""

from functools import cached_property
from typing import Any, Iterable, Optional

import networkx as nx
from pydantic import BaseModel, ConfigDict, Field, model_validator

Edge = tuple[str, str]


def vertices_in_order(groups: Iterable[Iterable[str]]) -> tuple[str, ...]:
    """Vertices in order of first appearance"""
    seen: dict[str, None] = {}
    for group in groups:
        for vertex in group:
            seen.setdefault(vertex, None)
    return tuple(seen)


def derive_vertices(data: Any, key: str, width: int = 2) -> Any:
    """Fill a missing "vertices" entry from the endpoints listed under ``key``"""
    if isinstance(data, dict) and not data.get("vertices"):
        rows = data.get(key) or ()
        data = {**data, "vertices": vertices_in_order(tuple(row)[:width] for row in rows)}
    return data


def check_endpoints(vertices: tuple[str, ...], pairs: Iterable[Edge], *, allow_loops: bool) -> None:
    known = set(vertices)
    seen: set[Edge] = set()
    for x, y in pairs:
        if x not in known or y not in known:
            raise ValueError(f"edge ({x}, {y}) has an endpoint outside the vertex list")
        if x == y and not allow_loops:
            raise ValueError(f"self-loop at {x}")
        if (x, y) in seen:
            raise ValueError(f"duplicate entry ({x}, {y})")
        seen.add((x, y))


class Digraph(BaseModel):
    """Finite digraph; vertex order drives every tie-break"""

    model_config = ConfigDict(frozen=True)

    vertices: tuple[str, ...] = Field(..., description="Vertex identifiers in input order")
    edges: tuple[Edge, ...] = Field(default=(), description="Directed edges (x, y), x != y")

    @model_validator(mode="before")
    @classmethod
    def _fill_vertices(cls, data: Any) -> Any:
        return derive_vertices(data, "edges")

    @model_validator(mode="after")
    def _check_well_formed(self) -> "Digraph":
        if len(set(self.vertices)) != len(self.vertices):
            raise ValueError("duplicate vertex identifiers")
        check_endpoints(self.vertices, self.edges, allow_loops=False)
        return self

    @cached_property
    def index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def edge_set(self) -> frozenset[Edge]:
        return frozenset(self.edges)

    def has_edge(self, x: str, y: str) -> bool:
        return (x, y) in self.edge_set

    def successors(self, x: str) -> list[str]:
        return [b for a, b in self.edges if a == x]

    def to_networkx(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(self.vertices)
        graph.add_edges_from(self.edges)
        return graph

    def undirected_edges(self) -> list[Edge]:
        """One entry per undirected edge, in the orientation of its first occurrence"""
        seen: set[frozenset[str]] = set()
        result = []
        for x, y in self.edges:
            key = frozenset((x, y))
            if key not in seen:
                seen.add(key)
                result.append((x, y))
        return result

    def shadow(self) -> nx.Graph:
        """Undirected shadow with nodes and edges in input order"""
        graph = nx.Graph()
        graph.add_nodes_from(self.vertices)
        graph.add_edges_from(self.undirected_edges())
        return graph


class DirectedPath(BaseModel):
    model_config = ConfigDict(frozen=True)

    vertices: tuple[str, ...] = Field(..., min_length=2, description="Vertex sequence x_0..x_n, n >= 1")

    @property
    def start(self) -> str:
        return self.vertices[0]

    @property
    def end(self) -> str:
        return self.vertices[-1]

    def steps(self) -> list[Edge]:
        return list(zip(self.vertices, self.vertices[1:]))

    def is_self_avoiding(self) -> bool:
        return len(set(self.vertices)) == len(self.vertices)


class DirectedCycle(BaseModel):
    """Closed vertex sequence (x_0, ..., x_k = x_0)"""

    model_config = ConfigDict(frozen=True)

    vertices: tuple[str, ...] = Field(..., min_length=3)

    @model_validator(mode="after")
    def _check_closed(self) -> "DirectedCycle":
        if self.vertices[0] != self.vertices[-1]:
            raise ValueError("a cycle must end where it starts")
        if len(set(self.vertices[:-1])) != len(self.vertices) - 1:
            raise ValueError("a cycle may visit each vertex once")
        return self

    def steps(self) -> list[Edge]:
        return list(zip(self.vertices, self.vertices[1:]))


class CycleBasis(BaseModel):
    model_config = ConfigDict(frozen=True)

    spanning_tree: tuple[Edge, ...] = Field(..., description="Undirected tree edges in their stored orientation")
    cycles: tuple[DirectedCycle, ...] = Field(default=(), description="One oriented cycle per non-tree edge")


class PartialOrderRelation(BaseModel):
    """Order relation given by its pairs; reflexive pairs are implied"""

    model_config = ConfigDict(frozen=True)

    vertices: tuple[str, ...] = Field(default=(), description="Elements; defaults to the pair endpoints")
    pairs: tuple[Edge, ...] = Field(default=(), description="Pairs (x, y) meaning x <= y")

    @model_validator(mode="before")
    @classmethod
    def _fill_vertices(cls, data: Any) -> Any:
        return derive_vertices(data, "pairs")

    @model_validator(mode="after")
    def _check_endpoints(self) -> "PartialOrderRelation":
        known = set(self.vertices)
        for x, y in self.pairs:
            if x not in known or y not in known:
                raise ValueError(f"pair ({x}, {y}) has an element outside the vertex list")
        return self

    @cached_property
    def strict_pairs(self) -> frozenset[Edge]:
        return frozenset((x, y) for x, y in self.pairs if x != y)

    def leq(self, x: str, y: str) -> bool:
        return x == y or (x, y) in self.strict_pairs

    @classmethod
    def from_digraph(cls, digraph: Digraph, closure: Optional[Digraph] = None) -> "PartialOrderRelation":
        """Order induced by reachability; ``closure`` may be passed when already known"""
        if closure is None:
            reach = nx.transitive_closure(digraph.to_networkx(), reflexive=None)
            index = digraph.index
            pairs = sorted(reach.edges(), key=lambda e: (index[e[0]], index[e[1]]))
        else:
            pairs = list(closure.edges)
        return cls(vertices=digraph.vertices, pairs=tuple(pairs))
