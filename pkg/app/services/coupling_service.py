"""Coupling service: marginals, compatibility and the flow/coupling builders"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence, Union

import networkx as nx

from app.core.config import settings
from app.core.rationals import total
from app.schemas.coupling import Coupling, CostMatrix, LedgerCoupling, Parcel
from app.schemas.flow import Flow
from app.schemas.graph import Digraph, DirectedPath, Edge, PartialOrderRelation
from app.schemas.measure import Measure
from app.services.exceptions import (
    CyclicSupport,
    InsufficientMass,
    InvariantViolation,
    MissingPath,
    NegativeTarget,
    ValidationError,
    WeightMismatch,
)
from app.services.flow_service import FlowService
from app.services.graph_service import GraphService
from app.services.measure_service import MeasureService

logger = logging.getLogger(__name__)

ZERO = Fraction(0)

# A single path, or a family of (path, weight) whose weights add up to the pair's mass
PathFamily = Sequence[tuple[DirectedPath, Fraction]]
PathChoice = Mapping[Edge, Union[DirectedPath, PathFamily]]


@dataclass
class _Holding:
    """Mass of one type sitting at a site, with the route it took"""

    type: str
    amount: Fraction
    path: tuple[str, ...]


@dataclass
class _Ledger:
    sites: dict[str, list[_Holding]] = field(default_factory=dict)

    def type_totals(self) -> dict[str, Fraction]:
        totals: dict[str, Fraction] = {}
        for holdings in self.sites.values():
            for h in holdings:
                totals[h.type] = totals.get(h.type, ZERO) + h.amount
        return totals


class CouplingService:
    """Service for couplings and their relation to flows"""

    def __init__(
        self,
        flow_service: Optional[FlowService] = None,
        measure_service: Optional[MeasureService] = None,
        strict_checks: Optional[bool] = None,
    ):
        self.flows = flow_service or FlowService()
        self.graphs: GraphService = self.flows.graphs
        self.measures = measure_service or MeasureService()
        self.strict_checks = settings.LEDGER_STRICT_CHECKS if strict_checks is None else strict_checks

    def marginals(self, c: Coupling) -> tuple[Measure, Measure]:
        rows = {v: ZERO for v in c.vertices}
        cols = {v: ZERO for v in c.vertices}
        for x, y, m in c.pairs:
            rows[x] += m
            cols[y] += m
        return Measure(weights=rows), Measure(weights=cols)

    def is_compatible(self, c: Coupling, rel: PartialOrderRelation) -> bool:
        self.graphs.validate_partial_order(rel)
        strict = rel.strict_pairs
        return all(x == y or (x, y) in strict for x, y, m in c.pairs if m > 0)

    def flow_from_coupling(self, c: Coupling, digraph: Digraph, path_choice: PathChoice) -> Flow:
        values: dict[Edge, Fraction] = {}
        for x, y, mass in c.positive_off_diagonal():
            choice = path_choice.get((x, y))
            if choice is None:
                raise MissingPath(f"No path supplied for the pair ({x}, {y})", details={"pair": [x, y]})
            family = [(choice, mass)] if isinstance(choice, DirectedPath) else list(choice)

            if total(w for _, w in family) != mass:
                raise WeightMismatch(
                    f"Path weights for ({x}, {y}) do not add up to its mass",
                    details={"pair": [x, y], "mass": str(mass), "weights": [str(w) for _, w in family]},
                )
            for path, weight in family:
                if path.start != x or path.end != y:
                    raise MissingPath(
                        f"Supplied path does not run from {x} to {y}",
                        details={"pair": [x, y], "path": list(path.vertices)},
                    )
                self.flows._require_steps(path.vertices, digraph)
                for step in path.steps():
                    values[step] = values.get(step, ZERO) + weight
        return Flow.on(digraph, values)

    def shortest_path_choice(self, c: Coupling, digraph: Digraph) -> dict[Edge, DirectedPath]:
        graph = digraph.to_networkx()
        choice: dict[Edge, DirectedPath] = {}
        for x, y, _ in c.positive_off_diagonal():
            try:
                route = nx.shortest_path(graph, x, y)
            except (nx.NetworkXNoPath, nx.NodeNotFound):
                raise MissingPath(f"{y} is not reachable from {x}", details={"pair": [x, y]})
            choice[(x, y)] = DirectedPath(vertices=tuple(route))
        return choice

    # Economic couplings

    def one_step_flow(self, c: Coupling) -> Flow:
        """Flow putting rho(x, y) on the direct edge (x, y) for every off-diagonal pair"""
        off = c.positive_off_diagonal()
        digraph = Digraph(vertices=c.vertices, edges=tuple((x, y) for x, y, _ in off))
        return Flow.on(digraph, {(x, y): m for x, y, m in off})

    def is_economic(self, c: Coupling) -> bool:
        return self.graphs.is_acyclic(self.one_step_flow(c).support_digraph())

    def reduce_to_economic(self, c: Coupling) -> Coupling:
        mu1, _ = self.marginals(c)
        reduced = self.flows.remove_cycles(self.one_step_flow(c))
        masses: dict[Edge, Fraction] = {(x, y): v for x, y, v in reduced.edges}
        for v in c.vertices:
            masses[(v, v)] = mu1.get(v) - total(q for x, _, q in reduced.edges if x == v)
        return Coupling.from_masses(c.vertices, masses)

    # Flow to coupling

    def target_measure(self, q: Flow, mu1: Measure) -> Measure:
        """mu2 = mu1 - div q; raises NegativeTarget when it has a negative entry"""
        mu1 = self.measures.align(mu1, q.vertices, "first marginal")
        div = self.flows.divergence(q)
        target = {v: mu1.get(v) - div.get(v) for v in q.vertices}
        negative = {v: str(m) for v, m in target.items() if m < 0}
        if negative:
            raise NegativeTarget("mu1 - div Q is negative at some vertices", details={"vertices": negative})
        return Measure(weights=target)

    def coupling_from_flow_ledger(self, q: Flow, mu1: Measure) -> Coupling:
        return self.coupling_from_flow_ledger_with_parcels(q, mu1).coupling

    def coupling_from_flow_ledger_with_parcels(self, q: Flow, mu1: Measure) -> LedgerCoupling:
        support = q.support_digraph()
        cycle = self.graphs.find_cycle(support)
        if cycle is not None:
            raise CyclicSupport("The flow support contains a directed cycle", details={"cycle": cycle})
        self.target_measure(q, mu1)
        mu1 = self.measures.align(mu1, q.vertices, "first marginal")

        index = {v: i for i, v in enumerate(q.vertices)}
        ledger = _Ledger(sites={v: [] for v in q.vertices})
        for v in q.vertices:
            if mu1.get(v) > 0:
                ledger.sites[v].append(_Holding(type=v, amount=mu1.get(v), path=(v,)))
        initial = {v: mu1.get(v) for v in q.vertices if mu1.get(v) > 0}

        order = list(nx.lexicographical_topological_sort(support.to_networkx(), key=index.get))
        for x in order:
            demands = sorted(((y, q.value(x, y)) for y in support.successors(x)), key=lambda d: index[d[0]])
            if not demands:
                continue
            holdings = sorted(ledger.sites[x], key=lambda h: index[h.type])
            for y, demand in demands:
                for holding in holdings:
                    if demand == 0:
                        break
                    if holding.amount == 0:
                        continue
                    moved = min(holding.amount, demand)
                    holding.amount -= moved
                    demand -= moved
                    ledger.sites[y].append(_Holding(type=holding.type, amount=moved, path=holding.path + (y,)))
                if demand > 0:
                    raise InsufficientMass(
                        f"Site {x} cannot fund its outgoing flow towards {y}",
                        details={"site": x, "target": y, "missing": str(demand)},
                    )
            ledger.sites[x] = [h for h in holdings if h.amount > 0]

            if self.strict_checks:
                totals = ledger.type_totals()
                if totals != initial:
                    raise InvariantViolation(
                        "Typed mass is not conserved by the ledger",
                        error_code="TYPE_MASS_NOT_CONSERVED",
                        details={"site": x},
                    )

        masses: dict[Edge, Fraction] = {}
        parcels: list[Parcel] = []
        for site in q.vertices:
            for holding in ledger.sites[site]:
                masses[(holding.type, site)] = masses.get((holding.type, site), ZERO) + holding.amount
                parcels.append(Parcel(vertices=holding.path, weight=holding.amount))

        logger.debug("Ledger coupling built", extra={"vertices": len(q.vertices), "parcels": len(parcels)})
        return LedgerCoupling(coupling=Coupling.from_masses(q.vertices, masses), parcels=tuple(parcels))

    def parcel_path_choice(self, ledger: LedgerCoupling) -> dict[Edge, PathFamily]:
        """Recorded parcel routes grouped by (type, destination)"""
        choice: dict[Edge, list[tuple[DirectedPath, Fraction]]] = {}
        for parcel in ledger.parcels:
            if len(parcel.vertices) < 2:
                continue
            choice.setdefault((parcel.source, parcel.target), []).append(
                (DirectedPath(vertices=parcel.vertices), parcel.weight)
            )
        return choice

    def coupling_from_flow_decomposition(self, q: Flow, mu1: Measure) -> Coupling:
        mu2 = self.target_measure(q, mu1)
        mu1 = self.measures.align(mu1, q.vertices, "first marginal")
        decomposition = self.flows.path_decompose(q)

        masses: dict[Edge, Fraction] = {(v, v): min(mu1.get(v), mu2.get(v)) for v in q.vertices}
        for entry in decomposition.paths:
            pair = (entry.start, entry.end)
            masses[pair] = masses.get(pair, ZERO) + entry.weight
        coupling = Coupling.from_masses(q.vertices, masses)

        moved = coupling.off_diagonal_mass()
        expected = self.measures.half_total_variation(mu1, mu2)
        if moved != expected:
            raise InvariantViolation(
                "Off-diagonal mass differs from half the total variation",
                error_code="TOTAL_VARIATION_MISMATCH",
                details={"off_diagonal": str(moved), "half_total_variation": str(expected)},
            )
        logger.debug("Decomposition coupling built", extra={"paths": len(decomposition.paths), "moved": str(moved)})
        return coupling

    def expected_cost(self, c: Coupling, costs: CostMatrix) -> Fraction:
        result = ZERO
        for x, y, m in c.pairs:
            if m == 0:
                continue
            cost = costs.cost(x, y)
            if cost is None:
                raise ValidationError(
                    f"The coupling charges ({x}, {y}), whose cost is infinite",
                    details={"pair": [x, y]},
                )
            result += m * cost
        return result
