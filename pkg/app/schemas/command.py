"""Request and report schemas shared by the command line and the HTTP API"""

from fractions import Fraction
from typing import Any, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.core.rationals import Rational
from app.schemas.coupling import Coupling
from app.schemas.dominance import DominanceVerdict, Lattice
from app.schemas.flow import Flow, PathMeasure
from app.schemas.graph import Digraph, DirectedCycle, PartialOrderRelation
from app.schemas.measure import Measure
from app.schemas.transport import WeightedDigraph
from app.schemas.truncation import GhostMode


class _OrderedRequest(BaseModel):
    """Requests naming a poset either by its order pairs or by its Hasse digraph"""

    model_config = ConfigDict(frozen=True)

    order: Optional[PartialOrderRelation] = Field(None, description="Order pairs (x, y) meaning x <= y")
    hasse: Optional[Digraph] = Field(None, description="Hasse digraph; the order is its reachability")


class DominanceRequest(_OrderedRequest):
    mu1: Measure
    mu2: Measure
    method: Literal["flow", "oracle", "chain", "tree", "ring"] = Field("flow", description="Decision procedure")

    @model_validator(mode="after")
    def _check_poset(self) -> "DominanceRequest":
        if (self.order is None) == (self.hasse is None):
            raise ValueError("give exactly one of 'order' or 'hasse'")
        return self


class CoupleRequest(BaseModel):
    model_config = ConfigDict(frozen=True)

    flow: Flow
    mu1: Measure
    method: Literal["ledger", "decomposition"] = "ledger"


class DecomposeRequest(BaseModel):
    model_config = ConfigDict(frozen=True)

    flow: Flow
    stabilize: bool = Field(False, description="Rebalance the decomposition into a stable path collection")


class WassersteinRequest(BaseModel):
    model_config = ConfigDict(frozen=True)

    graph: WeightedDigraph
    mu1: Measure
    mu2: Measure
    method: Literal["beckmann", "kantorovich"] = Field("beckmann", description="Flow or coupling formulation")


class RingRequest(BaseModel):
    model_config = ConfigDict(frozen=True)

    graph: WeightedDigraph
    mu1: Measure
    mu2: Measure
    orientation: Optional[DirectedCycle] = None


class HolleyRequest(BaseModel):
    model_config = ConfigDict(frozen=True)

    lattice: Optional[Lattice] = Field(None, description="Join and meet tables")
    dimension: Optional[int] = Field(None, ge=1, description="Use the Boolean lattice {0,1}^N instead")
    mu1: Measure
    mu2: Measure
    search: bool = Field(False, description="Search for a tilting measure instead of testing the condition")
    budget: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def _check_lattice(self) -> "HolleyRequest":
        if (self.lattice is None) == (self.dimension is None):
            raise ValueError("give exactly one of 'lattice' or 'dimension'")
        return self


TruncationReport = Literal["truncation", "coupling", "flux", "sup-tail", "assessment", "tree-edge", "chain-window"]


class TruncateRequest(BaseModel):
    model_config = ConfigDict(frozen=True)

    instance: Literal["z-chain", "binary-tree"]
    params: dict[str, Any] = Field(..., description="Measure and flow parameters of the instance")
    level: int = Field(..., ge=0, description="Truncation level n, or n_max for the evidence reports")
    mode: GhostMode = "single"
    report: TruncationReport = "truncation"
    prefix: Optional[PathMeasure] = Field(None, description="Decomposition prefix rerouted through the ghost")
    tail_weight: Optional[Rational] = Field(None, description="Weight of the decomposition beyond the prefix")
    tolerance: Rational = Field(Fraction(1, 2), description="Threshold epsilon for the sup-tail evidence")
    edge: Optional[tuple[str, str]] = Field(None, description="Tree edge for the 'tree-edge' report")

    @model_validator(mode="after")
    def _check_report(self) -> "TruncateRequest":
        if self.report == "tree-edge" and self.edge is None:
            raise ValueError("the 'tree-edge' report needs an 'edge'")
        if self.tolerance <= 0:
            raise ValueError("the tolerance must be positive")
        return self


class VerifyRequest(_OrderedRequest):
    kind: Literal["coupling", "flow", "decomposition", "verdict"]
    coupling: Optional[Coupling] = None
    flow: Optional[Flow] = None
    decomposition: Optional[PathMeasure] = None
    verdict: Optional[DominanceVerdict] = None
    mu1: Optional[Measure] = None
    mu2: Optional[Measure] = None
    seed: Optional[int] = Field(None, description="Seed for the randomized checks")

    @model_validator(mode="after")
    def _check_artifacts(self) -> "VerifyRequest":
        required = {
            "coupling": ("coupling", "mu1"),
            "flow": ("flow", "mu1", "mu2"),
            "decomposition": ("decomposition", "flow"),
            "verdict": ("verdict", "mu1", "mu2"),
        }[self.kind]
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"verifying a {self.kind} needs {', '.join(missing)}")
        if self.kind == "coupling" and self.mu2 is None and self.flow is None:
            raise ValueError("verifying a coupling needs 'mu2' or the 'flow' it came from")
        if self.kind == "verdict" and self.order is None and self.hasse is None:
            raise ValueError("verifying a verdict needs 'order' or 'hasse'")
        return self


class LatticeRequest(BaseModel):
    model_config = ConfigDict(frozen=True)

    dimension: int = Field(..., ge=1)
    mu1: Measure
    mu2: Measure
    probe_count: Optional[int] = Field(None, ge=1)
    seed: Optional[int] = None


class VerifyCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    passed: bool
    detail: str = ""


class VerifyReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    ok: bool
    checks: tuple[VerifyCheck, ...] = ()

    @classmethod
    def of(cls, checks: list[VerifyCheck]) -> "VerifyReport":
        return cls(ok=all(c.passed for c in checks), checks=tuple(checks))
