"""Schemas for measures on a finite vertex set

JSON form is the flat mapping ``{"a": "0.5", "b": "1/3"}``; keys keep their input order.
"""

from fractions import Fraction
from typing import Any, Iterable, Mapping

from pydantic import BaseModel, ConfigDict, Field, model_serializer, model_validator

from app.core.rationals import Rational, total


class SignedMeasure(BaseModel):
    model_config = ConfigDict(frozen=True)

    weights: dict[str, Rational] = Field(default_factory=dict, description="Weight per vertex")

    @model_validator(mode="before")
    @classmethod
    def _from_flat(cls, data: Any) -> Any:
        if isinstance(data, Mapping) and not (set(data) == {"weights"} and isinstance(data["weights"], Mapping)):
            return {"weights": dict(data)}
        return data

    @model_serializer(mode="wrap")
    def _to_flat(self, handler):
        return handler(self)["weights"]

    @classmethod
    def of(cls, weights: Mapping[str, Any]):
        return cls(weights=dict(weights))

    @property
    def vertices(self) -> tuple[str, ...]:
        return tuple(self.weights)

    def get(self, vertex: str) -> Fraction:
        return self.weights.get(vertex, Fraction(0))

    def __getitem__(self, vertex: str) -> Fraction:
        return self.get(vertex)

    def total(self) -> Fraction:
        return total(self.weights.values())

    def mass_of(self, vertices: Iterable[str]) -> Fraction:
        return total(self.get(v) for v in vertices)

    def support(self) -> tuple[str, ...]:
        return tuple(v for v, w in self.weights.items() if w != 0)

    def extended_to(self, vertices: Iterable[str]):
        """Same measure listed on ``vertices`` (zero where absent), in that order"""
        return type(self)(weights={v: self.get(v) for v in vertices})

    def is_zero(self) -> bool:
        return all(w == 0 for w in self.weights.values())


class Measure(SignedMeasure):
    """Nonnegative measure; probability measures additionally sum to 1"""

    @model_validator(mode="after")
    def _check_nonnegative(self) -> "Measure":
        for vertex, weight in self.weights.items():
            if weight < 0:
                raise ValueError(f"negative weight {weight} at {vertex}")
        return self

    def is_probability(self) -> bool:
        return self.total() == 1

    @classmethod
    def dirac(cls, vertex: str) -> "Measure":
        return cls(weights={vertex: Fraction(1)})
