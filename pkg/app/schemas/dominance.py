"""Schemas for dominance verdicts, certificates and lattices"""

from fractions import Fraction
from functools import cached_property
from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.rationals import Rational
from app.schemas.flow import EdgeValue, Flow
from app.schemas.graph import Digraph
from app.schemas.measure import Measure


class FlowCertificate(BaseModel):
    """Feasible flow on the Hasse edges with divergence mu1 - mu2"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["flow"] = "flow"
    flow: tuple[EdgeValue, ...] = Field(..., description="Value on every Hasse edge")
    alpha: Optional[Rational] = Field(None, description="Cycle coefficient for single-cycle certificates")

    @classmethod
    def from_flow(cls, flow: Flow, alpha: Optional[Fraction] = None) -> "FlowCertificate":
        return cls(flow=flow.edges, alpha=alpha)

    def as_flow(self, hasse: Digraph) -> Flow:
        return Flow.on(hasse, {(x, y): v for x, y, v in self.flow})


class UpSetCertificate(BaseModel):
    """Up-set U with mu1(U) > mu2(U)"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["up-set"] = "up-set"
    up_set: tuple[str, ...] = Field(...)
    excess: Rational = Field(..., description="mu1(U) - mu2(U), strictly positive")


Certificate = Annotated[Union[FlowCertificate, UpSetCertificate], Field(discriminator="kind")]


class DominanceVerdict(BaseModel):
    model_config = ConfigDict(frozen=True)

    dominates: bool
    certificate: Certificate

    @model_validator(mode="after")
    def _check_matching(self) -> "DominanceVerdict":
        expected = "flow" if self.dominates else "up-set"
        if self.certificate.kind != expected:
            raise ValueError(f"a {'positive' if self.dominates else 'negative'} verdict needs a {expected} certificate")
        return self


JoinMeetRow = tuple[str, str, str]


class Lattice(BaseModel):
    """Finite lattice given by join and meet tables"""

    model_config = ConfigDict(frozen=True)

    elements: tuple[str, ...] = Field(..., min_length=1)
    join: tuple[JoinMeetRow, ...] = Field(..., description="Rows (a, b, a v b)")
    meet: tuple[JoinMeetRow, ...] = Field(..., description="Rows (a, b, a ^ b)")

    @cached_property
    def join_table(self) -> dict[tuple[str, str], str]:
        return _symmetric_table(self.join)

    @cached_property
    def meet_table(self) -> dict[tuple[str, str], str]:
        return _symmetric_table(self.meet)

    def join_of(self, a: str, b: str) -> str:
        return a if a == b else self.join_table[(a, b)]

    def meet_of(self, a: str, b: str) -> str:
        return a if a == b else self.meet_table[(a, b)]

    def leq(self, a: str, b: str) -> bool:
        return self.meet_of(a, b) == a


def _symmetric_table(rows) -> dict[tuple[str, str], str]:
    table: dict[tuple[str, str], str] = {}
    for a, b, c in rows:
        table.setdefault((a, b), c)
        table.setdefault((b, a), c)
    return table


class HolleyVerdict(BaseModel):
    model_config = ConfigDict(frozen=True)

    holds: bool
    witness: Optional[tuple[str, str]] = Field(None, description="Pair (eta, xi) where the inequality fails")


class HolleySearchResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    status: Literal["in-arrow-h", "unknown"]
    m: Optional[Measure] = Field(None, description="Tilting measure found by the search")
    m1: Optional[Measure] = None
    m2: Optional[Measure] = None
    candidates_tried: int = 0
    note: str = ""


class IntegrationByParts(BaseModel):
    model_config = ConfigDict(frozen=True)

    lhs: Rational = Field(..., description="mu2(f) - mu1(f)")
    rhs: Rational = Field(..., description="sum over edges of Q(x, y)(f(y) - f(x))")

    @property
    def holds(self) -> bool:
        return self.lhs == self.rhs

