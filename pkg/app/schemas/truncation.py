"""Schemas for truncations of countable instances"""

from fractions import Fraction
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.rationals import Rational
from app.schemas.flow import Flow
from app.schemas.measure import SignedMeasure

GhostMode = Literal["single", "split"]

GHOST = "@ghost"
GHOST_SOURCE = "@ghost-"
GHOST_SINK = "@ghost+"


class TruncatedInstance(BaseModel):
    model_config = ConfigDict(frozen=True)

    level: int
    inner_vertices: tuple[str, ...] = Field(..., description="V_n in invading order")
    ghost_mode: GhostMode
    truncated_flow: Flow = Field(..., description="Flow on V_n plus ghost sites")
    boundary_defect: SignedMeasure = Field(..., description="div of the inner flow minus (mu1 - mu2) on V_n")
    ghost_in: Rational = Field(..., description="Total flux leaving the ghost towards V_n")
    ghost_out: Rational = Field(..., description="Total flux from V_n into the ghost")
    tail_weight: Optional[Rational] = Field(None, description="Caller-supplied tail of the decomposition weights")


class FluxLevel(BaseModel):
    model_config = ConfigDict(frozen=True)

    level: int
    outgoing: Rational
    incoming: Rational
    mass_difference: Rational = Field(..., description="mu1(V_n) - mu2(V_n)")


class FluxReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    levels: tuple[FluxLevel, ...]
    nonincreasing: bool = Field(..., description="Observed trend of the outgoing flux")
    reaches_zero: bool


class TailWitness(BaseModel):
    model_config = ConfigDict(frozen=True)

    level: int
    edge: tuple[str, str]
    value: Rational


class SupTailReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    status: Literal["not-finitely-decomposable-evidence", "no-witness-found"]
    witnesses: tuple[TailWitness, ...] = ()
    levels_checked: int
    note: str = ""


class TreeEdgeFlow(BaseModel):
    model_config = ConfigDict(frozen=True)

    edge: tuple[str, str]
    depth: int
    value: Rational = Field(..., description="Partial sum over the lower component within the depth window")
    tail_bound: Optional[Rational] = Field(None, description="Bound on the omitted part; None when unknown")
    exact: bool


class ChainWindowFlow(BaseModel):
    """Candidate flow Q(x, x+1) = F1(x) - F2(x) on an integer window; may be negative"""

    model_config = ConfigDict(frozen=True)

    window: tuple[int, int]
    values: tuple[tuple[str, str, Rational], ...]
    dominates: bool


class DecomposabilityAssessment(BaseModel):
    model_config = ConfigDict(frozen=True)

    verdict: Literal["evidence-decomposable", "evidence-not-decomposable", "undetermined"]
    flux: FluxReport
    sup_tail: SupTailReport


class GeneratorMeasureParams(BaseModel):
    """Either a finite support or a geometric tail with ratio in (0, 1)"""

    model_config = ConfigDict(frozen=True)

    support: Optional[dict[str, Rational]] = Field(None, description="Finitely supported weights")
    ratio: Optional[Rational] = Field(None, description="Geometric decay ratio")
    center: int = Field(0, description="Center of a two-sided geometric measure on the integers")

    @model_validator(mode="after")
    def _check_one_kind(self) -> "GeneratorMeasureParams":
        if (self.support is None) == (self.ratio is None):
            raise ValueError("give exactly one of 'support' or 'ratio'")
        if self.ratio is not None and not 0 < self.ratio < 1:
            raise ValueError("the geometric ratio must lie strictly between 0 and 1")
        if self.support is not None and any(w < 0 for w in self.support.values()):
            raise ValueError("support weights must be nonnegative")
        return self


class ZChainParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    mu1: GeneratorMeasureParams
    mu2: GeneratorMeasureParams
    flow: Literal["cdf", "constant"] = Field("cdf", description="CDF-difference flow, optionally shifted by a drift")
    drift: Rational = Field(default=Fraction(1), description="Constant added to every edge in 'constant' mode")


class BinaryTreeParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    mu1: GeneratorMeasureParams
    mu2: GeneratorMeasureParams
