"""Schemas for couplings and ledger provenance"""

from fractions import Fraction
from functools import cached_property
from typing import Any, Mapping

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.rationals import Rational, total
from app.schemas.graph import Edge, check_endpoints, derive_vertices

PairValue = tuple[str, str, Rational]


class Coupling(BaseModel):
    """Joint measure on ordered vertex pairs; diagonal pairs allowed"""

    model_config = ConfigDict(frozen=True)

    vertices: tuple[str, ...] = Field(..., description="Vertex identifiers in input order")
    pairs: tuple[PairValue, ...] = Field(default=(), description="Masses (x, y, rho(x, y))")

    @model_validator(mode="before")
    @classmethod
    def _fill_vertices(cls, data: Any) -> Any:
        return derive_vertices(data, "pairs")

    @model_validator(mode="after")
    def _check_masses(self) -> "Coupling":
        check_endpoints(self.vertices, ((x, y) for x, y, _ in self.pairs), allow_loops=True)
        for x, y, mass in self.pairs:
            if mass < 0:
                raise ValueError(f"negative mass {mass} on ({x}, {y})")
        return self

    @classmethod
    def from_masses(cls, vertices: tuple[str, ...], masses: Mapping[Edge, Fraction]) -> "Coupling":
        """Positive entries only, ordered by (row, column) vertex position"""
        index = {v: i for i, v in enumerate(vertices)}
        ordered = sorted(
            ((x, y, m) for (x, y), m in masses.items() if m > 0),
            key=lambda t: (index[t[0]], index[t[1]]),
        )
        return cls(vertices=vertices, pairs=tuple(ordered))

    @cached_property
    def masses(self) -> dict[Edge, Fraction]:
        return {(x, y): m for x, y, m in self.pairs}

    def mass(self, x: str, y: str) -> Fraction:
        return self.masses.get((x, y), Fraction(0))

    def total_mass(self) -> Fraction:
        return total(m for _, _, m in self.pairs)

    def off_diagonal_mass(self) -> Fraction:
        return total(m for x, y, m in self.pairs if x != y)

    def positive_off_diagonal(self) -> list[tuple[str, str, Fraction]]:
        return [(x, y, m) for x, y, m in self.pairs if x != y and m > 0]


class Parcel(BaseModel):
    """Mass of one type that travelled along ``vertices`` (a single vertex when it never moved)"""

    model_config = ConfigDict(frozen=True)

    vertices: tuple[str, ...] = Field(..., min_length=1)
    weight: Rational

    @property
    def source(self) -> str:
        return self.vertices[0]

    @property
    def target(self) -> str:
        return self.vertices[-1]


class LedgerCoupling(BaseModel):
    model_config = ConfigDict(frozen=True)

    coupling: Coupling
    parcels: tuple[Parcel, ...] = Field(default=(), description="Provenance of every transferred parcel")


class CostMatrix(BaseModel):
    """Costs c(x, y); absent pairs are infinite"""

    model_config = ConfigDict(frozen=True)

    vertices: tuple[str, ...] = Field(...)
    costs: tuple[PairValue, ...] = Field(default=())

    @model_validator(mode="before")
    @classmethod
    def _fill_vertices(cls, data: Any) -> Any:
        return derive_vertices(data, "costs")

    @model_validator(mode="after")
    def _check_costs(self) -> "CostMatrix":
        check_endpoints(self.vertices, ((x, y) for x, y, _ in self.costs), allow_loops=True)
        for x, y, c in self.costs:
            if c < 0:
                raise ValueError(f"negative cost {c} on ({x}, {y})")
        return self

    @cached_property
    def table(self) -> dict[Edge, Fraction]:
        return {(x, y): c for x, y, c in self.costs}

    def cost(self, x: str, y: str) -> Fraction | None:
        return self.table.get((x, y))
