"""Schemas for transport instances and results"""

from fractions import Fraction
from functools import cached_property
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator

from app.core.rationals import Rational
from app.schemas.coupling import Coupling
from app.schemas.flow import EdgeValue, Flow
from app.schemas.graph import Digraph, Edge, check_endpoints, derive_vertices


class WeightedDigraph(BaseModel):
    """Digraph with a nonnegative weight on every edge; absent edges cost +inf"""

    model_config = ConfigDict(frozen=True)

    vertices: tuple[str, ...] = Field(...)
    edges: tuple[EdgeValue, ...] = Field(default=(), description="Weighted edges (x, y, w(x, y))")

    @model_validator(mode="before")
    @classmethod
    def _fill_vertices(cls, data: Any) -> Any:
        return derive_vertices(data, "edges")

    @model_validator(mode="after")
    def _check_weights(self) -> "WeightedDigraph":
        if len(set(self.vertices)) != len(self.vertices):
            raise ValueError("duplicate vertex identifiers")
        check_endpoints(self.vertices, ((x, y) for x, y, _ in self.edges), allow_loops=False)
        for x, y, w in self.edges:
            if w < 0:
                raise ValueError(f"negative weight {w} on ({x}, {y})")
        return self

    @cached_property
    def weights(self) -> dict[Edge, Fraction]:
        return {(x, y): w for x, y, w in self.edges}

    @cached_property
    def digraph(self) -> Digraph:
        return Digraph(vertices=self.vertices, edges=tuple((x, y) for x, y, _ in self.edges))

    def weight(self, x: str, y: str) -> Optional[Fraction]:
        return self.weights.get((x, y))


class TransportResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    optimal_value: Rational
    optimal_flow: Flow
    optimal_coupling: Coupling


class RingOptimum(BaseModel):
    """Optimal cycle coefficients for a ring; ``None`` endpoints are unbounded"""

    model_config = ConfigDict(frozen=True)

    cycle: tuple[str, ...] = Field(..., description="Ring orientation as a closed vertex sequence")
    alpha_low: Optional[Rational] = None
    alpha_high: Optional[Rational] = None
    alpha: Rational = Field(..., description="Canonical optimal coefficient (midpoint when bounded)")
    result: TransportResult

    def contains(self, alpha: Fraction) -> bool:
        if self.alpha_low is not None and alpha < self.alpha_low:
            return False
        if self.alpha_high is not None and alpha > self.alpha_high:
            return False
        return True


class CycleDerivatives(BaseModel):
    """One-sided derivatives along a cycle field; ``None`` stands for an infinite value"""

    model_config = ConfigDict(frozen=True)

    cycle: tuple[str, ...]
    left: Optional[Rational] = Field(None, description="Left derivative, None meaning -inf")
    right: Optional[Rational] = Field(None, description="Right derivative, None meaning +inf")

    @property
    def optimal(self) -> bool:
        left_ok = self.left is None or self.left <= 0
        right_ok = self.right is None or self.right >= 0
        return left_ok and right_ok


class LatticeProbeReport(BaseModel):
    """Costs of random feasible Hasse flows on {0,1}^N against the optimum"""

    model_config = ConfigDict(frozen=True)

    dimension: int
    optimal_value: Rational
    probe_costs: tuple[Rational, ...]
    seed: int

    @computed_field
    @property
    def all_optimal(self) -> bool:
        return all(cost == self.optimal_value for cost in self.probe_costs)
