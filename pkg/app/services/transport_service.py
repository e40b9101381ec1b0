"""Transport service: geodesic costs, Beckmann and Kantorovich problems, closed forms"""

import logging
import random
from fractions import Fraction
from typing import Optional, Sequence

import networkx as nx

from app.core.config import settings
from app.schemas.coupling import Coupling, CostMatrix
from app.schemas.flow import Flow
from app.schemas.graph import CycleBasis, Digraph, DirectedCycle, Edge
from app.schemas.measure import Measure
from app.schemas.transport import (
    CycleDerivatives,
    LatticeProbeReport,
    RingOptimum,
    TransportResult,
    WeightedDigraph,
)
from app.services import flow_networks
from app.services.coupling_service import CouplingService
from app.services.dominance_service import DominanceService
from app.services.exceptions import (
    Infeasible,
    InvariantViolation,
    NotDominated,
    NotMinimalForm,
    TooLarge,
    Unreachable,
    ValidationError,
)

logger = logging.getLogger(__name__)

ZERO = Fraction(0)


class TransportService:
    """Service for discrete optimal transport on weighted digraphs"""

    def __init__(
        self,
        dominance_service: Optional[DominanceService] = None,
        lattice_max_dimension: Optional[int] = None,
        probe_count: Optional[int] = None,
    ):
        self.dominance = dominance_service or DominanceService()
        self.couplings: CouplingService = self.dominance.couplings
        self.flows = self.couplings.flows
        self.graphs = self.couplings.graphs
        self.measures = self.couplings.measures
        self.lattice_max_dimension = lattice_max_dimension or settings.LATTICE_MAX_DIMENSION
        self.probe_count = settings.LATTICE_PROBE_COUNT if probe_count is None else probe_count

    def _probabilities(self, mu1: Measure, mu2: Measure, vertices: Sequence[str]) -> tuple[Measure, Measure]:
        return self.dominance._probabilities(mu1, mu2, vertices)

    def _weighted_networkx(self, wg: WeightedDigraph) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(wg.vertices)
        graph.add_weighted_edges_from(wg.edges)
        return graph

    # Geodesic costs

    def geodesic_cost(self, wg: WeightedDigraph, x: str, y: str) -> Fraction:
        if x == y:
            return ZERO
        try:
            return Fraction(nx.dijkstra_path_length(self._weighted_networkx(wg), x, y))
        except (nx.NetworkXNoPath, nx.NodeNotFound):
            raise Unreachable(f"No directed path from {x} to {y}", details={"pair": [x, y]})

    def geodesic_costs(self, wg: WeightedDigraph) -> CostMatrix:
        """All-pairs costs; unreachable pairs are left out"""
        graph = self._weighted_networkx(wg)
        rows = []
        for x in wg.vertices:
            lengths = nx.single_source_dijkstra_path_length(graph, x)
            rows.extend((x, y, Fraction(lengths[y])) for y in wg.vertices if y in lengths)
        return CostMatrix(vertices=wg.vertices, costs=tuple(rows))

    # Beckmann and Kantorovich

    def beckmann_min(self, wg: WeightedDigraph, mu1: Measure, mu2: Measure) -> TransportResult:
        mu1, mu2 = self._probabilities(mu1, mu2, wg.vertices)

        delta = {v: mu1.get(v) - mu2.get(v) for v in wg.vertices}
        network = flow_networks.st_network(
            wg.vertices,
            supplies=delta,
            demands={v: -d for v, d in delta.items()},
            edges=wg.edges,
        )
        supply = flow_networks.supply_of(network)

        sent, _, flow_dict = flow_networks.min_cost_max_flow(network)
        if sent < supply:
            raise Infeasible(
                "Some demand cannot be reached from the supplies",
                details={"supply": str(supply), "routed": str(sent)},
            )

        flow = self.flows.remove_cycles(Flow.on(wg.digraph, flow_networks.edge_flows(flow_dict, wg.digraph.edges)))
        value = self.flows.pairing(flow, wg)
        coupling = self.couplings.coupling_from_flow_decomposition(flow, mu1)

        expected = self.couplings.expected_cost(coupling, self.geodesic_costs(wg))
        if expected != value:
            raise InvariantViolation(
                "Extracted coupling does not attain the flow cost",
                error_code="COUPLING_COST_MISMATCH",
                details={"flow_cost": str(value), "coupling_cost": str(expected)},
            )
        logger.info("Beckmann problem solved", extra={"vertices": len(wg.vertices), "value": str(value)})
        return TransportResult(optimal_value=value, optimal_flow=flow, optimal_coupling=coupling)

    def _northwest_corner(self, vertices: Sequence[str], mu1: Measure, mu2: Measure) -> Coupling:
        rows = [mu1.get(v) for v in vertices]
        cols = [mu2.get(v) for v in vertices]
        masses: dict[Edge, Fraction] = {}
        i = j = 0
        while i < len(vertices) and j < len(vertices):
            amount = min(rows[i], cols[j])
            if amount > 0:
                masses[(vertices[i], vertices[j])] = amount
            rows[i] -= amount
            cols[j] -= amount
            if rows[i] == 0:
                i += 1
            else:
                j += 1
        return Coupling.from_masses(tuple(vertices), masses)

    def kantorovich_min(self, costs: CostMatrix, mu1: Measure, mu2: Measure) -> TransportResult:
        vertices = costs.vertices
        mu1, mu2 = self._probabilities(mu1, mu2, vertices)

        complete = len(costs.table) == len(vertices) ** 2
        if complete and all(c == 0 for c in costs.table.values()):
            coupling = self._northwest_corner(vertices, mu1, mu2)
            return TransportResult(
                optimal_value=ZERO,
                optimal_flow=self.couplings.one_step_flow(coupling),
                optimal_coupling=coupling,
            )

        network = flow_networks.st_network(
            [("row", v) for v in vertices] + [("column", v) for v in vertices],
            supplies={("row", v): mu1.get(v) for v in vertices},
            demands={("column", v): mu2.get(v) for v in vertices},
            edges=((("row", x), ("column", y), c) for x, y, c in costs.costs),
        )

        sent, value, flow_dict = flow_networks.min_cost_max_flow(network)
        if sent < 1:
            raise Infeasible(
                "No coupling has finite cost",
                details={"routed": str(sent)},
            )
        masses = {(x, y): Fraction(flow_dict[("row", x)].get(("column", y), 0)) for x, y, _ in costs.costs}
        coupling = Coupling.from_masses(vertices, masses)
        logger.info("Kantorovich problem solved", extra={"vertices": len(vertices), "value": str(value)})
        return TransportResult(
            optimal_value=value,
            optimal_flow=self.couplings.one_step_flow(coupling),
            optimal_coupling=coupling,
        )

    # Closed forms on chains and rings

    def chain_wasserstein(
        self,
        wg: WeightedDigraph,
        chain_order: Sequence[str],
        mu1: Measure,
        mu2: Measure,
    ) -> Fraction:
        mu1, mu2 = self._probabilities(mu1, mu2, chain_order)
        f1 = self.measures.distribution_function(mu1, chain_order)
        f2 = self.measures.distribution_function(mu2, chain_order)

        value = ZERO
        for x, y in zip(chain_order, chain_order[1:]):
            gap = f1[x] - f2[x]
            if gap == 0:
                continue
            step = (x, y) if gap > 0 else (y, x)
            weight = wg.weight(*step)
            if weight is None:
                raise Infeasible(
                    f"Mass must cross ({step[0]}, {step[1]}), which is not an edge",
                    details={"edge": list(step), "mass": str(abs(gap))},
                )
            value += abs(gap) * weight
        return value

    def _ring_setup(self, wg: WeightedDigraph, mu1: Measure, mu2: Measure, orientation: Optional[DirectedCycle]):
        cycle = self.graphs.ring_cycle(wg.digraph, orientation)
        mu1, mu2 = self._probabilities(mu1, mu2, wg.vertices)
        phi_star = self.flows.cycle_potentials(self.measures.difference(mu1, mu2), cycle)
        return cycle, mu1, phi_star

    def _ring_flow(self, wg: WeightedDigraph, cycle: DirectedCycle, phi_star: list[Fraction], alpha: Fraction) -> Flow:
        values: dict[Edge, Fraction] = {}
        for (a, b), p in zip(cycle.steps(), phi_star):
            p += alpha
            if p == 0:
                continue
            edge, amount = ((a, b), p) if p > 0 else ((b, a), -p)
            if wg.weight(*edge) is None:
                raise Infeasible(
                    f"The field at this coefficient needs ({edge[0]}, {edge[1]}), which is not an edge",
                    details={"edge": list(edge), "alpha": str(alpha)},
                )
            values[edge] = amount
        return Flow.on(wg.digraph, values)

    def ring_flow(
        self,
        wg: WeightedDigraph,
        mu1: Measure,
        mu2: Measure,
        alpha: Fraction,
        orientation: Optional[DirectedCycle] = None,
    ) -> Flow:
        """Minimal flow of phi* + alpha phi^C"""
        cycle, _, phi_star = self._ring_setup(wg, mu1, mu2, orientation)
        return self._ring_flow(wg, cycle, phi_star, Fraction(alpha))

    def ring_cost(
        self,
        wg: WeightedDigraph,
        mu1: Measure,
        mu2: Measure,
        alpha: Fraction,
        orientation: Optional[DirectedCycle] = None,
    ) -> Optional[Fraction]:
        """Cost of the minimal flow of phi* + alpha phi^C; None when it is infinite"""
        try:
            return self.flows.pairing(self.ring_flow(wg, mu1, mu2, alpha, orientation), wg)
        except Infeasible:
            return None

    def ring_derivatives(
        self,
        wg: WeightedDigraph,
        mu1: Measure,
        mu2: Measure,
        alpha: Fraction,
        orientation: Optional[DirectedCycle] = None,
    ) -> CycleDerivatives:
        cycle, _, phi_star = self._ring_setup(wg, mu1, mu2, orientation)
        flow = self._ring_flow(wg, cycle, phi_star, Fraction(alpha))
        return self.cycle_derivatives(wg, flow, cycle)

    def ring_optimal(
        self,
        wg: WeightedDigraph,
        mu1: Measure,
        mu2: Measure,
        orientation: Optional[DirectedCycle] = None,
    ) -> RingOptimum:
        cycle, mu1, phi_star = self._ring_setup(wg, mu1, mu2, orientation)

        low: Optional[Fraction] = None
        high: Optional[Fraction] = None
        for (a, b), p in zip(cycle.steps(), phi_star):
            if wg.weight(a, b) is None:
                high = -p if high is None else min(high, -p)
            if wg.weight(b, a) is None:
                low = -p if low is None else max(low, -p)
        if low is not None and high is not None and low > high:
            raise Infeasible(
                "No coefficient keeps the flow on existing edges",
                details={"alpha_low": str(low), "alpha_high": str(high)},
            )

        breakpoints = sorted({-p for p in phi_star})
        candidates = sorted(
            {b for b in breakpoints if (low is None or b >= low) and (high is None or b <= high)}
            | {bound for bound in (low, high) if bound is not None}
        )

        def cost(alpha: Fraction) -> Fraction:
            return self.flows.pairing(self._ring_flow(wg, cycle, phi_star, alpha), wg)

        costs = {alpha: cost(alpha) for alpha in candidates}
        best = min(costs.values())
        optimal = [alpha for alpha in candidates if costs[alpha] == best]
        alpha_low, alpha_high = optimal[0], optimal[-1]

        # flat beyond the outermost breakpoint
        if high is None and alpha_high >= breakpoints[-1]:
            slope = self.cycle_derivatives(wg, self._ring_flow(wg, cycle, phi_star, alpha_high), cycle).right
            if slope == 0:
                alpha_high = None
        if low is None and alpha_low <= breakpoints[0]:
            slope = self.cycle_derivatives(wg, self._ring_flow(wg, cycle, phi_star, alpha_low), cycle).left
            if slope == 0:
                alpha_low = None

        if alpha_low is not None and alpha_high is not None:
            alpha = (alpha_low + alpha_high) / 2
        elif alpha_low is not None:
            alpha = alpha_low
        elif alpha_high is not None:
            alpha = alpha_high
        else:
            alpha = ZERO

        flow = self._ring_flow(wg, cycle, phi_star, alpha)
        value = self.flows.pairing(flow, wg)
        coupling = self.couplings.coupling_from_flow_decomposition(self.flows.remove_cycles(flow), mu1)
        logger.info(
            "Ring optimum found",
            extra={"vertices": len(wg.vertices), "alpha": str(alpha), "value": str(value)},
        )
        return RingOptimum(
            cycle=cycle.vertices,
            alpha_low=alpha_low,
            alpha_high=alpha_high,
            alpha=alpha,
            result=TransportResult(optimal_value=value, optimal_flow=flow, optimal_coupling=coupling),
        )

    # Optimality along cycles

    def cycle_derivatives(self, wg: WeightedDigraph, flow: Flow, cycle: DirectedCycle) -> CycleDerivatives:
        """One-sided derivatives of t -> <Q^(phi + t phi^C), w> at t = 0"""
        self.flows.pairing(flow, wg)  # rejects flow on unweighted edges
        left: Optional[Fraction] = ZERO
        right: Optional[Fraction] = ZERO
        for a, b in cycle.steps():
            p = flow.value(a, b) - flow.value(b, a)
            forward, backward = wg.weight(a, b), wg.weight(b, a)

            if right is not None:
                if p >= 0:
                    right = None if forward is None else right + forward
                else:
                    right -= backward
            if left is not None:
                if p > 0:
                    left += forward
                else:
                    left = None if backward is None else left - backward
        return CycleDerivatives(cycle=cycle.vertices, left=left, right=right)

    def subdifferential_optimality_check(self, wg: WeightedDigraph, flow: Flow, basis: CycleBasis) -> bool:
        for x, y, value in flow.edges:
            if value > 0 and flow.value(y, x) > 0:
                raise NotMinimalForm(
                    "The flow runs both ways along an edge",
                    details={"edge": [x, y]},
                )
        for cycle in basis.cycles:
            derivatives = self.cycle_derivatives(wg, flow, cycle)
            if not derivatives.optimal:
                logger.debug("Cycle direction improves the cost", extra={"cycle": list(cycle.vertices)})
                return False
        return True

    # Boolean lattices

    def hypercube(self, n: int) -> WeightedDigraph:
        """Bidirected Hamming graph on {0,1}^n with unit weights"""
        elements = self.dominance.boolean_lattice(n).elements
        edges = []
        for a in elements:
            for b in elements:
                if sum(p != q for p, q in zip(a, b)) == 1:
                    edges.append((a, b, Fraction(1)))
        return WeightedDigraph(vertices=elements, edges=tuple(edges))

    def _random_hasse_flow(self, hasse: Digraph, start: Flow, basis: CycleBasis, rng: random.Random) -> Flow:
        values = dict(start.values)
        for _ in range(2 * len(basis.cycles)):
            cycle = basis.cycles[rng.randrange(len(basis.cycles))]
            low: Optional[Fraction] = None
            high: Optional[Fraction] = None
            for a, b in cycle.steps():
                if hasse.has_edge(a, b):
                    low = -values[(a, b)] if low is None else max(low, -values[(a, b)])
                else:
                    high = values[(b, a)] if high is None else min(high, values[(b, a)])
            t = low + (high - low) * Fraction(rng.randint(0, 8), 8)
            for a, b in cycle.steps():
                if hasse.has_edge(a, b):
                    values[(a, b)] += t
                else:
                    values[(b, a)] -= t
        return Flow.on(hasse, values)

    def lattice_probe(
        self,
        n: int,
        mu1: Measure,
        mu2: Measure,
        probe_count: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> LatticeProbeReport:
        if n > self.lattice_max_dimension:
            raise TooLarge(
                "Lattice probes are limited to small dimensions",
                details={"dimension": n, "limit": self.lattice_max_dimension},
            )
        if probe_count is None:
            probe_count = self.probe_count
        if probe_count < 0:
            raise ValidationError("The probe count cannot be negative", details={"probe_count": probe_count})
        seed = settings.DEFAULT_SEED if seed is None else seed

        lattice = self.dominance.boolean_lattice(n)
        hasse = self.dominance.lattice_hasse(lattice)
        verdict = self.dominance.dominates_via_flow(mu1, mu2, hasse)
        if not verdict.dominates:
            raise NotDominated(
                "The first measure is not dominated by the second",
                details={"up_set": list(verdict.certificate.up_set), "excess": str(verdict.certificate.excess)},
            )

        optimum = self.beckmann_min(self.hypercube(n), mu1, mu2).optimal_value
        start = verdict.certificate.as_flow(hasse)
        basis = self.graphs.fundamental_cycle_basis(hasse)
        rng = random.Random(seed)

        costs = []
        for _ in range(probe_count):
            flow = self._random_hasse_flow(hasse, start, basis, rng) if basis.cycles else start
            costs.append(flow.total_mass())
        logger.info(
            "Lattice probes evaluated",
            extra={"dimension": n, "probes": probe_count, "distinct_costs": len(set(costs))},
        )
        return LatticeProbeReport(dimension=n, optimal_value=optimum, probe_costs=tuple(costs), seed=seed)

    def lattice_all_flows_optimal(
        self,
        n: int,
        mu1: Measure,
        mu2: Measure,
        probe_count: Optional[int] = None,
        seed: Optional[int] = None,
    ) -> bool:
        return self.lattice_probe(n, mu1, mu2, probe_count, seed).all_optimal

