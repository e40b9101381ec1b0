"""Command service: one entry point per command, shared by the CLI and the HTTP API"""

import logging
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Mapping, Optional, Union

import networkx as nx
from pydantic import BaseModel

from app.core.config import settings
from app.core.rationals import total
from app.schemas.command import (
    CoupleRequest,
    DecomposeRequest,
    DominanceRequest,
    HolleyRequest,
    LatticeRequest,
    RingRequest,
    TruncateRequest,
    VerifyCheck,
    VerifyReport,
    VerifyRequest,
    WassersteinRequest,
)
from app.schemas.coupling import Coupling
from app.schemas.dominance import DominanceVerdict, HolleySearchResult, HolleyVerdict, Lattice
from app.schemas.flow import PathMeasure, StabilizationReport
from app.schemas.graph import Digraph, PartialOrderRelation
from app.schemas.measure import Measure, SignedMeasure
from app.schemas.transport import LatticeProbeReport, RingOptimum, TransportResult
from app.schemas.truncation import ChainWindowFlow, ZChainParams
from app.services.dominance_service import DominanceService
from app.services.exceptions import NegativeTarget, NotAPath, ValidationError, WrongShape
from app.services.lazy_instances import build_instance
from app.services.transport_service import TransportService
from app.services.truncation_service import TruncationService

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CommandResult:
    """Payload of a command; ``negative`` marks a valid 'false' or 'infeasible' answer"""

    payload: BaseModel
    negative: bool = False


class CommandService:
    """Service for running the library operations behind each command"""

    def __init__(
        self,
        transport_service: Optional[TransportService] = None,
        truncation_service: Optional[TruncationService] = None,
    ):
        self.transport = transport_service or TransportService()
        self.dominance: DominanceService = self.transport.dominance
        self.couplings = self.dominance.couplings
        self.flows = self.couplings.flows
        self.graphs = self.couplings.graphs
        self.measures = self.couplings.measures
        self.truncation = truncation_service or TruncationService(coupling_service=self.couplings)

    def _poset(self, order: Optional[PartialOrderRelation], hasse: Optional[Digraph]) -> tuple[PartialOrderRelation, Digraph]:
        if hasse is not None:
            return self.graphs.order_of(hasse), hasse
        return order, self.graphs.hasse_digraph(order)

    def _chain_order(self, hasse: Digraph) -> list[str]:
        order = list(nx.lexicographical_topological_sort(hasse.to_networkx(), key=hasse.index.get))
        if set(hasse.edges) != set(zip(order, order[1:])):
            raise WrongShape("The Hasse digraph is not a chain", details={"edges": [list(e) for e in hasse.edges]})
        return order

    # Commands

    def dominance_verdict(self, request: DominanceRequest) -> DominanceVerdict:
        rel, hasse = self._poset(request.order, request.hasse)
        mu1, mu2 = request.mu1, request.mu2
        if request.method == "oracle":
            verdict = self.dominance.dominates_oracle(mu1, mu2, rel)
        elif request.method == "chain":
            verdict = self.dominance.chain_condition(mu1, mu2, self._chain_order(hasse))
        elif request.method == "tree":
            verdict = self.dominance.tree_condition(mu1, mu2, hasse)
        elif request.method == "ring":
            verdict = self.dominance.single_cycle_condition(mu1, mu2, hasse)
        else:
            verdict = self.dominance.dominates_via_flow(mu1, mu2, hasse)
        logger.info("Dominance decided", extra={"method": request.method, "dominates": verdict.dominates})
        return verdict

    def couple(self, request: CoupleRequest) -> Coupling:
        if request.method == "decomposition":
            return self.couplings.coupling_from_flow_decomposition(request.flow, request.mu1)
        return self.couplings.coupling_from_flow_ledger(request.flow, request.mu1)

    def decompose(self, request: DecomposeRequest) -> Union[PathMeasure, StabilizationReport]:
        decomposition = self.flows.path_decompose(request.flow)
        if request.stabilize:
            return self.flows.stabilize_with_report(decomposition)
        return decomposition

    def wasserstein(self, request: WassersteinRequest) -> TransportResult:
        if request.method == "kantorovich":
            costs = self.transport.geodesic_costs(request.graph)
            return self.transport.kantorovich_min(costs, request.mu1, request.mu2)
        return self.transport.beckmann_min(request.graph, request.mu1, request.mu2)

    def ring(self, request: RingRequest) -> RingOptimum:
        return self.transport.ring_optimal(request.graph, request.mu1, request.mu2, request.orientation)

    def holley(self, request: HolleyRequest) -> Union[HolleyVerdict, HolleySearchResult]:
        lattice: Lattice = request.lattice or self.dominance.boolean_lattice(request.dimension)
        if request.search:
            return self.dominance.generalized_holley_search(request.mu1, request.mu2, lattice, request.budget)
        self.dominance.validate_lattice(lattice)
        return self.dominance.holley_condition(request.mu1, request.mu2, lattice)

    def lattice_probe(self, request: LatticeRequest) -> LatticeProbeReport:
        return self.transport.lattice_probe(
            request.dimension, request.mu1, request.mu2, request.probe_count, request.seed
        )

    def truncate(self, request: TruncateRequest) -> BaseModel:
        if request.report == "chain-window":
            return self._chain_window(request)

        li = build_instance(request.instance, request.params)
        n = request.level
        if request.report == "coupling":
            return self.truncation.truncated_coupling(li, n)
        if request.report == "flux":
            return self.truncation.zero_flux_estimate(li, n)
        if request.report == "sup-tail":
            return self.truncation.sup_tail_witness(li, n, request.tolerance)
        if request.report == "assessment":
            return self.truncation.decomposability_assessment(li, n, request.tolerance)
        if request.report == "tree-edge":
            return self.truncation.infinite_tree_flow(li, request.edge, n)
        return self.truncation.ghost_truncate(li, n, request.mode, request.prefix, request.tail_weight)

    def _chain_window(self, request: TruncateRequest):
        if request.instance != "z-chain":
            raise ValidationError("The chain window is only defined for the integer chain")
        params = ZChainParams.model_validate(request.params)
        if params.mu1.support is None or params.mu2.support is None:
            raise ValidationError("The chain window needs finitely supported measures")
        return self.truncation.z_chain_flow(
            Measure(weights=params.mu1.support), Measure(weights=params.mu2.support)
        )

    def execute(self, name: str, data: Mapping[str, Any]) -> CommandResult:
        """Validate ``data`` against the command's request schema and run it"""
        if name not in COMMANDS:
            raise ValidationError(f"Unknown command '{name}'", details={"known": sorted(COMMANDS)})
        schema, handler = COMMANDS[name]
        payload = getattr(self, handler)(schema.model_validate(data))
        return CommandResult(payload=payload, negative=_is_negative(payload))

    # Verification

    def verify(self, request: VerifyRequest) -> VerifyReport:
        checks: dict[str, Callable[[VerifyRequest], list[VerifyCheck]]] = {
            "coupling": self._verify_coupling,
            "flow": self._verify_flow,
            "decomposition": self._verify_decomposition,
            "verdict": self._verify_verdict,
        }
        report = VerifyReport.of(checks[request.kind](request))
        logger.info("Artifact verified", extra={"kind": request.kind, "ok": report.ok, "checks": len(report.checks)})
        return report

    def _verify_coupling(self, request: VerifyRequest) -> list[VerifyCheck]:
        c = request.coupling
        rows, cols = self.couplings.marginals(c)
        result = [_same_measure("first-marginal", rows, request.mu1, c.vertices)]

        if request.mu2 is not None:
            result.append(_same_measure("second-marginal", cols, request.mu2, c.vertices))
        else:
            try:
                target = self.couplings.target_measure(request.flow, request.mu1)
            except NegativeTarget as e:
                result.append(VerifyCheck(name="second-marginal", passed=False, detail=e.message))
            else:
                result.append(_same_measure("second-marginal", cols, target, c.vertices))

        if request.order is not None or request.hasse is not None:
            rel, _ = self._poset(request.order, request.hasse)
            compatible = self.couplings.is_compatible(c, rel)
            result.append(VerifyCheck(
                name="compatible",
                passed=compatible,
                detail="" if compatible else "mass on a pair outside the order",
            ))
        return result

    def _verify_flow(self, request: VerifyRequest) -> list[VerifyCheck]:
        q = request.flow
        div = self.flows.divergence(q)
        expected = self.measures.difference(
            request.mu1.extended_to(q.vertices), request.mu2.extended_to(q.vertices)
        )
        result = [
            _same_measure("divergence", div, expected, q.vertices),
            VerifyCheck(name="divergence-sums-to-zero", passed=div.total() == 0, detail=str(div.total())),
        ]
        if request.order is not None or request.hasse is not None:
            _, hasse = self._poset(request.order, request.hasse)
            outside = [(x, y) for x, y in q.support() if not hasse.has_edge(x, y)]
            result.append(VerifyCheck(
                name="on-hasse-edges",
                passed=not outside,
                detail="; ".join(f"{x}->{y}" for x, y in outside),
            ))
        return result

    def _verify_decomposition(self, request: VerifyRequest) -> list[VerifyCheck]:
        q, pm = request.flow, request.decomposition
        try:
            rebuilt = self.flows.flow_from_decomposition(pm, q.digraph)
            mismatched = [f"{x}->{y}" for x, y, v in q.edges if rebuilt.value(x, y) != v]
            result = [VerifyCheck(name="reproduces-flow", passed=not mismatched, detail="; ".join(mismatched))]
        except NotAPath as e:
            result = [VerifyCheck(name="reproduces-flow", passed=False, detail=e.message)]

        div = self.flows.divergence(q)
        misplaced = [
            "->".join(e.vertices) for e in pm.paths if div.get(e.start) <= 0 or div.get(e.end) >= 0
        ]
        result.append(VerifyCheck(name="endpoints", passed=not misplaced, detail="; ".join(misplaced)))

        half = total(abs(d) for d in div.weights.values()) / 2
        weight = pm.total_weight()
        result.append(VerifyCheck(name="total-weight", passed=weight == half, detail=f"{weight} vs {half}"))

        length_mass = total(e.weight * (len(e.vertices) - 1) for e in pm.paths)
        result.append(VerifyCheck(
            name="edge-mass",
            passed=length_mass == q.total_mass(),
            detail=f"{length_mass} vs {q.total_mass()}",
        ))
        return result

    def _verify_verdict(self, request: VerifyRequest) -> list[VerifyCheck]:
        rel, hasse = self._poset(request.order, request.hasse)
        verdict, mu1, mu2 = request.verdict, request.mu1, request.mu2
        result = [VerifyCheck(
            name="certificate",
            passed=self.dominance.verify_certificate(verdict, mu1, mu2, hasse),
        )]

        if len(rel.vertices) <= self.dominance.oracle_max_vertices:
            agrees = self.dominance.dominates_oracle(mu1, mu2, rel).dominates == verdict.dominates
            result.append(VerifyCheck(name="oracle-agrees", passed=agrees))

        if verdict.dominates:
            flow = verdict.certificate.as_flow(hasse)
            seed = settings.DEFAULT_SEED if request.seed is None else request.seed
            rng = random.Random(seed)
            graph = hasse.to_networkx()
            mu1, mu2 = mu1.extended_to(hasse.vertices), mu2.extended_to(hasse.vertices)
            for i in range(3):
                f = _random_increasing(graph, hasse.vertices, rng)
                identity = self.dominance.integrate_by_parts(flow, f, mu1, mu2)
                result.append(VerifyCheck(
                    name=f"integration-by-parts-{i + 1}",
                    passed=identity.holds and identity.lhs >= 0,
                    detail=f"lhs={identity.lhs} rhs={identity.rhs}",
                ))
        return result


def _same_measure(name: str, actual: SignedMeasure, expected: SignedMeasure, vertices) -> VerifyCheck:
    wrong = [f"{v}: {actual.get(v)} != {expected.get(v)}" for v in vertices if actual.get(v) != expected.get(v)]
    wrong += [f"{v}: missing" for v in expected.support() if v not in set(vertices)]
    return VerifyCheck(name=name, passed=not wrong, detail="; ".join(wrong))


def _random_increasing(graph: nx.DiGraph, vertices, rng: random.Random) -> dict[str, Fraction]:
    """Positive combination of indicators of principal up-sets"""
    f = {v: Fraction(0) for v in vertices}
    for _ in range(max(1, len(vertices) // 2)):
        root = vertices[rng.randrange(len(vertices))]
        weight = Fraction(rng.randint(1, 5))
        for v in nx.descendants(graph, root) | {root}:
            f[v] += weight
    return f


def _is_negative(payload: BaseModel) -> bool:
    if isinstance(payload, DominanceVerdict):
        return not payload.dominates
    if isinstance(payload, HolleyVerdict):
        return not payload.holds
    if isinstance(payload, ChainWindowFlow):
        return not payload.dominates
    if isinstance(payload, LatticeProbeReport):
        return not payload.all_optimal
    if isinstance(payload, VerifyReport):
        return not payload.ok
    return False


COMMANDS: dict[str, tuple[type[BaseModel], str]] = {
    "dominance": (DominanceRequest, "dominance_verdict"),
    "couple": (CoupleRequest, "couple"),
    "decompose": (DecomposeRequest, "decompose"),
    "wasserstein": (WassersteinRequest, "wasserstein"),
    "holley": (HolleyRequest, "holley"),
    "ring": (RingRequest, "ring"),
    "truncate": (TruncateRequest, "truncate"),
    "verify": (VerifyRequest, "verify"),
    "lattice": (LatticeRequest, "lattice_probe"),
}
