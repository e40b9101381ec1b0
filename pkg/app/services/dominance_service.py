"""
Dominance service.

Decides stochastic dominance mu1 <= mu2 on a finite poset three ways: by
enumerating up-sets, by max-flow feasibility on the Hasse digraph, and by the
closed-form conditions for chains, trees, single cycles and the elementary
lattice. Holley's lattice condition and the tilted-measure search built on it
live here as well.
"""

import logging
from fractions import Fraction
from itertools import count, product
from typing import Iterator, Mapping, Optional, Sequence

import networkx as nx

from app.core.config import settings
from app.core.rationals import total
from app.schemas.coupling import Coupling
from app.schemas.dominance import (
    DominanceVerdict,
    FlowCertificate,
    HolleySearchResult,
    HolleyVerdict,
    IntegrationByParts,
    Lattice,
    UpSetCertificate,
)
from app.schemas.flow import Flow
from app.schemas.graph import Digraph, DirectedCycle, PartialOrderRelation
from app.schemas.measure import Measure
from app.services import flow_networks
from app.services.coupling_service import CouplingService
from app.services.exceptions import (
    CyclicInput,
    InvariantViolation,
    NotALattice,
    NotATree,
    NotDominated,
    NotStrictlyPositive,
    TooLarge,
    VertexMismatch,
    WrongShape,
)
from app.services.flow_service import FlowService
from app.services.graph_service import GraphService
from app.services.measure_service import MeasureService

logger = logging.getLogger(__name__)

ZERO = Fraction(0)
DIAMOND = ("A", "B", "C", "D")


class DominanceService:
    """Service for deciding and certifying stochastic dominance"""

    def __init__(
        self,
        coupling_service: Optional[CouplingService] = None,
        oracle_max_vertices: Optional[int] = None,
        holley_budget: Optional[int] = None,
    ):
        self.couplings = coupling_service or CouplingService()
        self.flows: FlowService = self.couplings.flows
        self.graphs: GraphService = self.couplings.graphs
        self.measures: MeasureService = self.couplings.measures
        self.oracle_max_vertices = oracle_max_vertices or settings.ORACLE_MAX_VERTICES
        self.holley_budget = holley_budget or settings.HOLLEY_SEARCH_BUDGET

    def _probabilities(self, mu1: Measure, mu2: Measure, vertices: Sequence[str]) -> tuple[Measure, Measure]:
        mu1 = self.measures.align(mu1, vertices, "first measure")
        mu2 = self.measures.align(mu2, vertices, "second measure")
        self.measures.require_probability(mu1, "first measure")
        self.measures.require_probability(mu2, "second measure")
        return mu1, mu2

    def _negative(self, up_set: Sequence[str], mu1: Measure, mu2: Measure) -> DominanceVerdict:
        excess = mu1.mass_of(up_set) - mu2.mass_of(up_set)
        return DominanceVerdict(dominates=False, certificate=UpSetCertificate(up_set=tuple(up_set), excess=excess))

    # Brute force

    def up_sets(self, rel: PartialOrderRelation) -> Iterator[tuple[str, ...]]:
        """Every up-set, as the complement of a down-set grown along a linear extension"""
        strict = rel.strict_pairs
        below = {v: {u for u in rel.vertices if (u, v) in strict} for v in rel.vertices}
        position = {v: i for i, v in enumerate(rel.vertices)}
        order = sorted(rel.vertices, key=lambda v: (len(below[v]), position[v]))

        def grow(i: int, down: set[str]) -> Iterator[tuple[str, ...]]:
            if i == len(order):
                yield tuple(v for v in rel.vertices if v not in down)
                return
            v = order[i]
            yield from grow(i + 1, down)
            if below[v] <= down:
                down.add(v)
                yield from grow(i + 1, down)
                down.discard(v)

        yield from grow(0, set())

    def dominates_oracle(self, mu1: Measure, mu2: Measure, rel: PartialOrderRelation) -> DominanceVerdict:
        if len(rel.vertices) > self.oracle_max_vertices:
            raise TooLarge(
                "Up-set enumeration is limited to small posets",
                details={"vertices": len(rel.vertices), "limit": self.oracle_max_vertices},
            )
        self.graphs.validate_partial_order(rel)
        mu1, mu2 = self._probabilities(mu1, mu2, rel.vertices)

        checked = 0
        for up_set in self.up_sets(rel):
            checked += 1
            if mu1.mass_of(up_set) > mu2.mass_of(up_set):
                logger.debug("Oracle found a violating up-set", extra={"up_sets_checked": checked})
                return self._negative(up_set, mu1, mu2)

        logger.debug("Oracle found no violating up-set", extra={"up_sets_checked": checked})
        hasse = self.graphs.hasse_digraph(rel)
        try:
            flow_dict = flow_networks.transshipment(
                hasse.vertices,
                demand={v: mu2.get(v) - mu1.get(v) for v in hasse.vertices},
                edges=((x, y, Fraction(1)) for x, y in hasse.edges),
            )
        except nx.NetworkXUnfeasible:
            raise InvariantViolation(
                "Up-set enumeration found no violation but no Hasse flow exists",
                error_code="ORACLE_DISAGREEMENT",
            )
        flow = Flow.on(hasse, flow_networks.edge_flows(flow_dict, hasse.edges))
        return DominanceVerdict(dominates=True, certificate=FlowCertificate.from_flow(flow))

    # Flow feasibility

    def dominates_via_flow(self, mu1: Measure, mu2: Measure, hasse: Digraph) -> DominanceVerdict:
        cycle = self.graphs.find_cycle(hasse)
        if cycle is not None:
            raise CyclicInput("The Hasse digraph has a directed cycle", details={"cycle": cycle})
        mu1, mu2 = self._probabilities(mu1, mu2, hasse.vertices)

        delta = {v: mu1.get(v) - mu2.get(v) for v in hasse.vertices}
        network = flow_networks.st_network(
            hasse.vertices,
            supplies=delta,
            demands={v: -d for v, d in delta.items()},
            edges=((x, y, ZERO) for x, y in hasse.edges),
        )
        supply = flow_networks.supply_of(network)

        value, flow_dict = flow_networks.max_flow(network)
        if value == supply:
            flow = Flow.on(hasse, flow_networks.edge_flows(flow_dict, hasse.edges))
            logger.info("Dominance holds", extra={"vertices": len(hasse.vertices), "moved": str(supply)})
            return DominanceVerdict(dominates=True, certificate=FlowCertificate.from_flow(flow))

        up_set = self._upward_closure(hasse, flow_networks.source_side(network))
        logger.info("Dominance fails", extra={"vertices": len(hasse.vertices), "up_set_size": len(up_set)})
        return self._negative(up_set, mu1, mu2)

    def _upward_closure(self, hasse: Digraph, seed: set) -> tuple[str, ...]:
        graph = hasse.to_networkx()
        closed = set(v for v in seed if v in hasse.index)
        for v in list(closed):
            closed |= nx.descendants(graph, v)
        return tuple(v for v in hasse.vertices if v in closed)

    def build_compatible_coupling(self, mu1: Measure, mu2: Measure, hasse: Digraph) -> Coupling:
        verdict = self.dominates_via_flow(mu1, mu2, hasse)
        if not verdict.dominates:
            raise NotDominated(
                "The first measure is not dominated by the second",
                details={"up_set": list(verdict.certificate.up_set), "excess": str(verdict.certificate.excess)},
            )
        flow = verdict.certificate.as_flow(hasse)
        return self.couplings.coupling_from_flow_decomposition(flow, mu1.extended_to(hasse.vertices))

    # Closed forms

    def chain_condition(self, mu1: Measure, mu2: Measure, chain_order: Sequence[str]) -> DominanceVerdict:
        mu1, mu2 = self._probabilities(mu1, mu2, chain_order)
        f1 = self.measures.distribution_function(mu1, chain_order)
        f2 = self.measures.distribution_function(mu2, chain_order)

        steps = list(zip(chain_order, chain_order[1:]))
        for i, (x, _) in enumerate(steps):
            if f1[x] < f2[x]:
                return self._negative(tuple(chain_order[i + 1:]), mu1, mu2)

        chain = Digraph(vertices=tuple(chain_order), edges=tuple(steps))
        flow = Flow.on(chain, {(x, y): f1[x] - f2[x] for x, y in steps})
        return DominanceVerdict(dominates=True, certificate=FlowCertificate.from_flow(flow))

    def tree_condition(self, mu1: Measure, mu2: Measure, tree_hasse: Digraph) -> DominanceVerdict:
        if not self.graphs.is_tree_shadow(tree_hasse):
            raise NotATree("The undirected shadow is not a tree", details={"vertices": len(tree_hasse.vertices)})
        mu1, mu2 = self._probabilities(mu1, mu2, tree_hasse.vertices)

        shadow = tree_hasse.shadow()
        values: dict[tuple[str, str], Fraction] = {}
        for x, y in tree_hasse.edges:
            shadow.remove_edge(x, y)
            lower = nx.node_connected_component(shadow, x)
            shadow.add_edge(x, y)
            value = total(mu1.get(z) - mu2.get(z) for z in lower)
            if value < 0:
                upper = tuple(v for v in tree_hasse.vertices if v not in lower)
                return self._negative(upper, mu1, mu2)
            values[(x, y)] = value

        flow = Flow.on(tree_hasse, values)
        return DominanceVerdict(dominates=True, certificate=FlowCertificate.from_flow(flow))

    def single_cycle_condition(
        self,
        mu1: Measure,
        mu2: Measure,
        ring_hasse: Digraph,
        orientation: Optional[DirectedCycle] = None,
    ) -> DominanceVerdict:
        directed = self.graphs.find_cycle(ring_hasse)
        if directed is not None:
            raise CyclicInput("The ring Hasse digraph has a directed cycle", details={"cycle": directed})
        cycle = self.graphs.ring_cycle(ring_hasse, orientation)
        mu1, mu2 = self._probabilities(mu1, mu2, ring_hasse.vertices)
        phi_star = self.flows.cycle_potentials(self.measures.difference(mu1, mu2), cycle)

        steps = cycle.steps()
        lower = [-phi_star[i] for i, (a, b) in enumerate(steps) if ring_hasse.has_edge(a, b)]
        upper = [-phi_star[i] for i, (a, b) in enumerate(steps) if ring_hasse.has_edge(b, a)]
        alpha_min = max(lower) if lower else None
        alpha_max = min(upper) if upper else None

        if alpha_min is not None and alpha_max is not None and alpha_min > alpha_max:
            verdict = self.dominates_via_flow(mu1, mu2, ring_hasse)
            if verdict.dominates:
                raise InvariantViolation(
                    "Single-cycle condition and flow feasibility disagree",
                    error_code="ORACLE_DISAGREEMENT",
                )
            return verdict

        alpha = alpha_min if alpha_min is not None else alpha_max if alpha_max is not None else ZERO
        values = {}
        for i, (a, b) in enumerate(steps):
            if ring_hasse.has_edge(a, b):
                values[(a, b)] = phi_star[i] + alpha
            else:
                values[(b, a)] = -(phi_star[i] + alpha)
        flow = Flow.on(ring_hasse, values)
        return DominanceVerdict(dominates=True, certificate=FlowCertificate.from_flow(flow, alpha=alpha))

    def diamond_hasse(self) -> Digraph:
        a, b, c, d = DIAMOND
        return Digraph(vertices=DIAMOND, edges=((a, b), (a, c), (b, d), (c, d)))

    def elementary_lattice_condition(self, mu1: Measure, mu2: Measure) -> bool:
        stray = [v for v in (*mu1.vertices, *mu2.vertices) if v not in DIAMOND]
        if stray:
            raise WrongShape(
                "The elementary lattice has exactly the vertices A, B, C, D",
                details={"unexpected": sorted(set(stray))},
            )
        delta = {v: mu1.get(v) - mu2.get(v) for v in DIAMOND}
        return abs(delta["C"]) + abs(delta["B"]) <= delta["A"] - delta["D"]

    # Holley

    def boolean_lattice(self, n: int) -> Lattice:
        """{0,1}^n with bitstring names, ordered by integer value"""
        if n < 1:
            raise WrongShape("The Boolean lattice needs at least one coordinate", details={"dimension": n})
        elements = tuple("".join(bits) for bits in product("01", repeat=n))
        join, meet = [], []
        for i, a in enumerate(elements):
            for b in elements[i + 1:]:
                join.append((a, b, "".join(max(p, q) for p, q in zip(a, b))))
                meet.append((a, b, "".join(min(p, q) for p, q in zip(a, b))))
        return Lattice(elements=elements, join=tuple(join), meet=tuple(meet))

    def lattice_order(self, lattice: Lattice) -> PartialOrderRelation:
        self.validate_lattice(lattice)
        pairs = tuple((a, b) for a in lattice.elements for b in lattice.elements if lattice.leq(a, b))
        return PartialOrderRelation(vertices=lattice.elements, pairs=pairs)

    def lattice_hasse(self, lattice: Lattice) -> Digraph:
        return self.graphs.hasse_digraph(self.lattice_order(lattice))

    def validate_lattice(self, lattice: Lattice) -> None:
        elements = set(lattice.elements)
        for name, rows in (("join", lattice.join), ("meet", lattice.meet)):
            seen: dict[tuple[str, str], str] = {}
            for a, b, c in rows:
                if not {a, b, c} <= elements:
                    raise NotALattice(f"The {name} table names an unknown element", details={"row": [a, b, c]})
                for key in ((a, b), (b, a)):
                    if seen.get(key, c) != c:
                        raise NotALattice(
                            f"The {name} table is not commutative",
                            details={"pair": [a, b], "values": [seen[key], c]},
                        )
                    seen[key] = c
            missing = [(a, b) for a in lattice.elements for b in lattice.elements if a != b and (a, b) not in seen]
            if missing:
                raise NotALattice(f"The {name} table is incomplete", details={"pair": list(missing[0])})

        for a in lattice.elements:
            for b in lattice.elements:
                if lattice.join_of(a, lattice.meet_of(a, b)) != a or lattice.meet_of(a, lattice.join_of(a, b)) != a:
                    raise NotALattice("Absorption fails", details={"pair": [a, b]})

    def holley_condition(self, m1: Measure, m2: Measure, lattice: Lattice) -> HolleyVerdict:
        self.validate_lattice(lattice)
        m1 = self.measures.align(m1, lattice.elements, "first measure")
        m2 = self.measures.align(m2, lattice.elements, "second measure")
        for name, m in (("first", m1), ("second", m2)):
            zeros = [v for v in lattice.elements if m.get(v) <= 0]
            if zeros:
                raise NotStrictlyPositive(
                    f"The {name} measure must be strictly positive on the lattice",
                    details={"vertices": zeros},
                )

        for eta in lattice.elements:
            for xi in lattice.elements:
                lhs = m2.get(lattice.join_of(eta, xi)) * m1.get(lattice.meet_of(eta, xi))
                if lhs < m2.get(eta) * m1.get(xi):
                    return HolleyVerdict(holds=False, witness=(eta, xi))
        return HolleyVerdict(holds=True)

    def _holley_candidates(self) -> Iterator[tuple[Fraction, Fraction, int]]:
        """(c, epsilon, lambda): the pointwise minimum, a uniform tilt, then a logarithmic grid"""
        yield Fraction(1), ZERO, 1
        yield Fraction(1), Fraction(1), 0
        seen = {(Fraction(1), ZERO, 1), (Fraction(1), Fraction(1), 0)}
        for k in count(0):
            for c in (Fraction(2) ** k, Fraction(1, 2 ** k)):
                for j in range(k + 1):
                    eps = Fraction(1, 2 ** j)
                    for lam in (1, 0):
                        key = (c, eps, lam)
                        if key not in seen:
                            seen.add(key)
                            yield key

    def generalized_holley_search(
        self,
        mu1: Measure,
        mu2: Measure,
        lattice: Lattice,
        budget: Optional[int] = None,
    ) -> HolleySearchResult:
        budget = budget or self.holley_budget
        hasse = self.lattice_hasse(lattice)
        verdict = self.dominates_via_flow(mu1, mu2, hasse)
        if not verdict.dominates:
            return HolleySearchResult(
                status="unknown",
                note="not dominated, so no tilt can satisfy Holley's condition",
            )

        mu1, mu2 = self._probabilities(mu1, mu2, lattice.elements)
        delta = self.measures.difference(mu1, mu2)
        up, down = self.measures.positive_negative_parts(delta)
        base = self.measures.minimum(mu1, mu2)

        tried = 0
        for c, eps, lam in self._holley_candidates():
            if tried >= budget:
                break
            tried += 1
            m = Measure(weights={v: c * (lam * base.get(v) + eps) for v in lattice.elements})
            m1 = Measure(weights={v: up.get(v) + m.get(v) for v in lattice.elements})
            m2 = Measure(weights={v: down.get(v) + m.get(v) for v in lattice.elements})
            if any(m.get(v) <= 0 or m1.get(v) <= 0 or m2.get(v) <= 0 for v in lattice.elements):
                continue
            if self.holley_condition(m1, m2, lattice).holds:
                logger.info("Holley tilt found", extra={"candidates_tried": tried})
                return HolleySearchResult(status="in-arrow-h", m=m, m1=m1, m2=m2, candidates_tried=tried)

        logger.info("Holley search exhausted its budget", extra={"budget": budget})
        return HolleySearchResult(
            status="unknown",
            candidates_tried=tried,
            note=f"no tilt found among {tried} candidates",
        )

    # Certificates

    def integrate_by_parts(
        self,
        q: Flow,
        f: Mapping[str, Fraction],
        mu1: Measure,
        mu2: Measure,
    ) -> IntegrationByParts:
        missing = [v for v in q.vertices if v not in f]
        if missing:
            raise VertexMismatch("The test function is not defined everywhere", details={"vertices": missing})
        lhs = self.measures.expectation(mu2, f) - self.measures.expectation(mu1, f)
        rhs = total(value * (Fraction(f[y]) - Fraction(f[x])) for x, y, value in q.edges)
        return IntegrationByParts(lhs=lhs, rhs=rhs)

    def verify_certificate(self, verdict: DominanceVerdict, mu1: Measure, mu2: Measure, hasse: Digraph) -> bool:
        mu1 = self.measures.align(mu1, hasse.vertices, "first measure")
        mu2 = self.measures.align(mu2, hasse.vertices, "second measure")
        certificate = verdict.certificate

        if isinstance(certificate, FlowCertificate):
            try:
                flow = certificate.as_flow(hasse)
            except ValueError:
                return False
            div = self.flows.divergence(flow)
            return all(div.get(v) == mu1.get(v) - mu2.get(v) for v in hasse.vertices)

        up_set = set(certificate.up_set)
        if not up_set <= set(hasse.vertices):
            return False
        if set(self._upward_closure(hasse, up_set)) != up_set:
            return False
        excess = mu1.mass_of(up_set) - mu2.mass_of(up_set)
        return excess > 0 and excess == certificate.excess

