"""Schemas for flows, discrete vector fields and path measures"""

from fractions import Fraction
from functools import cached_property
from typing import Any, Iterable, Mapping

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.rationals import Rational, total
from app.schemas.graph import Digraph, DirectedPath, Edge, check_endpoints, derive_vertices

EdgeValue = tuple[str, str, Rational]


class Flow(BaseModel):
    """Nonnegative value per directed edge; the listed edges form the digraph"""

    model_config = ConfigDict(frozen=True)

    vertices: tuple[str, ...] = Field(..., description="Vertex identifiers in input order")
    edges: tuple[EdgeValue, ...] = Field(default=(), description="Edge values (x, y, Q(x, y))")

    @model_validator(mode="before")
    @classmethod
    def _fill_vertices(cls, data: Any) -> Any:
        return derive_vertices(data, "edges")

    @model_validator(mode="after")
    def _check_values(self) -> "Flow":
        if len(set(self.vertices)) != len(self.vertices):
            raise ValueError("duplicate vertex identifiers")
        check_endpoints(self.vertices, ((x, y) for x, y, _ in self.edges), allow_loops=False)
        for x, y, value in self.edges:
            if value < 0:
                raise ValueError(f"negative flow {value} on ({x}, {y})")
        return self

    @classmethod
    def on(cls, digraph: Digraph, values: Mapping[Edge, Fraction]) -> "Flow":
        """Flow on every edge of ``digraph``; edges missing from ``values`` carry 0"""
        unknown = [e for e in values if not digraph.has_edge(*e) and values[e] != 0]
        if unknown:
            raise ValueError(f"values given off the digraph: {unknown}")
        return cls(
            vertices=digraph.vertices,
            edges=tuple((x, y, values.get((x, y), Fraction(0))) for x, y in digraph.edges),
        )

    @classmethod
    def zero(cls, digraph: Digraph) -> "Flow":
        return cls.on(digraph, {})

    @cached_property
    def values(self) -> dict[Edge, Fraction]:
        return {(x, y): v for x, y, v in self.edges}

    @cached_property
    def digraph(self) -> Digraph:
        return Digraph(vertices=self.vertices, edges=tuple((x, y) for x, y, _ in self.edges))

    def value(self, x: str, y: str) -> Fraction:
        return self.values.get((x, y), Fraction(0))

    def support(self) -> list[Edge]:
        return [(x, y) for x, y, v in self.edges if v > 0]

    def support_digraph(self) -> Digraph:
        return Digraph(vertices=self.vertices, edges=tuple(self.support()))

    def total_mass(self) -> Fraction:
        return total(v for _, _, v in self.edges)

    def is_zero(self) -> bool:
        return all(v == 0 for _, _, v in self.edges)


class DiscreteVectorField(BaseModel):
    """Antisymmetric edge function stored once per undirected edge"""

    model_config = ConfigDict(frozen=True)

    vertices: tuple[str, ...] = Field(...)
    edges: tuple[EdgeValue, ...] = Field(default=(), description="Stored orientation (x, y) with phi(x, y)")

    @model_validator(mode="before")
    @classmethod
    def _fill_vertices(cls, data: Any) -> Any:
        return derive_vertices(data, "edges")

    @model_validator(mode="after")
    def _check_undirected(self) -> "DiscreteVectorField":
        pairs = [(x, y) for x, y, _ in self.edges]
        check_endpoints(self.vertices, pairs, allow_loops=False)
        if len({frozenset(p) for p in pairs}) != len(pairs):
            raise ValueError("an undirected edge is stored twice")
        return self

    @classmethod
    def from_values(cls, vertices: Iterable[str], values: Iterable[tuple[str, str, Fraction]]) -> "DiscreteVectorField":
        return cls(vertices=tuple(vertices), edges=tuple(values))

    @cached_property
    def stored(self) -> dict[Edge, Fraction]:
        return {(x, y): v for x, y, v in self.edges}

    def has_edge(self, x: str, y: str) -> bool:
        return (x, y) in self.stored or (y, x) in self.stored

    def value(self, x: str, y: str) -> Fraction:
        if (x, y) in self.stored:
            return self.stored[(x, y)]
        if (y, x) in self.stored:
            return -self.stored[(y, x)]
        raise KeyError((x, y))

    def oriented(self) -> list[tuple[str, str, Fraction]]:
        """Both orientations of every edge"""
        result = []
        for x, y, v in self.edges:
            result.append((x, y, v))
            result.append((y, x, -v))
        return result


class PathEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    vertices: tuple[str, ...] = Field(..., min_length=2)
    weight: Rational = Field(..., description="Positive weight q_n")

    @model_validator(mode="after")
    def _check_entry(self) -> "PathEntry":
        if self.weight <= 0:
            raise ValueError("path weights must be positive")
        if not self.path.is_self_avoiding():
            raise ValueError(f"path {list(self.vertices)} is not self-avoiding")
        return self

    @property
    def path(self) -> DirectedPath:
        return DirectedPath(vertices=self.vertices)

    @property
    def start(self) -> str:
        return self.vertices[0]

    @property
    def end(self) -> str:
        return self.vertices[-1]


class PathMeasure(BaseModel):
    """Finite weighted family of self-avoiding paths"""

    model_config = ConfigDict(frozen=True)

    paths: tuple[PathEntry, ...] = Field(default=())

    @classmethod
    def of(cls, entries: Iterable[tuple[Iterable[str], Fraction]]) -> "PathMeasure":
        return cls(paths=tuple(PathEntry(vertices=tuple(p), weight=w) for p, w in entries))

    def total_weight(self) -> Fraction:
        return total(e.weight for e in self.paths)

    def as_dict(self) -> dict[tuple[str, ...], Fraction]:
        """Weights merged by path"""
        merged: dict[tuple[str, ...], Fraction] = {}
        for entry in self.paths:
            merged[entry.vertices] = merged.get(entry.vertices, Fraction(0)) + entry.weight
        return merged


class DriftRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    step: int
    inserted: PathEntry
    drift: Rational = Field(..., description="L1 change of the path measure caused by the insertion")


class StabilizationReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    paths: PathMeasure
    drifts: tuple[DriftRecord, ...] = ()
    max_drift_ratio: Rational = Field(default=0, description="Largest drift / inserted weight over all steps")
    violations: tuple[DriftRecord, ...] = Field(default=(), description="Steps whose drift exceeded the bound")
