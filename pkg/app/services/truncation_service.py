"""Truncation service: ghost-site truncations and finite decomposability checks"""

import logging
from fractions import Fraction
from typing import Optional

import networkx as nx

from app.core.config import settings
from app.core.rationals import total
from app.schemas.coupling import Coupling
from app.schemas.flow import Flow, PathMeasure
from app.schemas.graph import Edge
from app.schemas.measure import Measure, SignedMeasure
from app.schemas.truncation import (
    GHOST,
    GHOST_SINK,
    GHOST_SOURCE,
    ChainWindowFlow,
    DecomposabilityAssessment,
    FluxLevel,
    FluxReport,
    GhostMode,
    SupTailReport,
    TailWitness,
    TreeEdgeFlow,
    TruncatedInstance,
)
from app.services.coupling_service import CouplingService
from app.services.exceptions import (
    FluxImbalance,
    InvariantViolation,
    NotATree,
    TooLarge,
    UnsummableBoundary,
    ValidationError,
)
from app.services.lazy_instances import LazyInstance

logger = logging.getLogger(__name__)

ZERO = Fraction(0)


class TruncationService:
    """Service for finite truncations of countable instances"""

    def __init__(
        self,
        coupling_service: Optional[CouplingService] = None,
        max_level: Optional[int] = None,
        max_boundary_degree: Optional[int] = None,
    ):
        self.couplings = coupling_service or CouplingService()
        self.flows = self.couplings.flows
        self.measures = self.couplings.measures
        self.max_level = max_level or settings.TRUNCATION_MAX_LEVEL
        self.max_boundary_degree = max_boundary_degree or settings.MAX_BOUNDARY_DEGREE

    def _check_level(self, n: int) -> None:
        if n < 0 or n > self.max_level:
            raise TooLarge(
                "Truncation level out of range",
                details={"level": n, "limit": self.max_level},
            )

    def _structural_edges(self, li: LazyInstance, v: str) -> tuple[Edge, ...]:
        edges = li.neighbours(v)
        if len(edges) > self.max_boundary_degree:
            raise UnsummableBoundary(
                f"Vertex {v} has too many incident edges to sum over",
                details={"vertex": v, "degree": len(edges), "limit": self.max_boundary_degree},
            )
        return edges

    def _boundary(self, li: LazyInstance, inner: tuple[str, ...]):
        """Inner oriented edges and per-vertex (outgoing, incoming) boundary flux"""
        known = set(inner)
        inner_edges: list[tuple[str, str, Fraction]] = []
        outgoing: dict[str, Fraction] = {v: ZERO for v in inner}
        incoming: dict[str, Fraction] = {v: ZERO for v in inner}
        for x in inner:
            for a, b in self._structural_edges(li, x):
                other = b if a == x else a
                if other in known:
                    if a == x:
                        inner_edges.append(li.oriented(a, b))
                    continue
                tail, head, value = li.oriented(a, b)
                if tail == x:
                    outgoing[x] += value
                else:
                    incoming[x] += value
        return inner_edges, outgoing, incoming

    def _require_balance(self, li: LazyInstance, n: int, inner, out_flux: Fraction, in_flux: Fraction) -> Fraction:
        difference = total(li.mu1(v) - li.mu2(v) for v in inner)
        if out_flux - in_flux != difference:
            raise FluxImbalance(
                "Net boundary flux differs from the mass difference on the truncation",
                details={
                    "level": n,
                    "outgoing": str(out_flux),
                    "incoming": str(in_flux),
                    "mass_difference": str(difference),
                },
            )
        return difference

    # Ghost truncation

    def ghost_truncate(
        self,
        li: LazyInstance,
        n: int,
        mode: GhostMode = "single",
        prefix: Optional[PathMeasure] = None,
        tail_weight: Optional[Fraction] = None,
    ) -> TruncatedInstance:
        self._check_level(n)
        inner = li.prefix(n)
        inner_edges, outgoing, incoming = self._boundary(li, inner)
        self._require_balance(li, n, inner, total(outgoing.values()), total(incoming.values()))

        if mode == "split":
            edges = inner_edges + [(x, GHOST_SINK, v) for x, v in outgoing.items() if v > 0]
            edges += [(GHOST_SOURCE, x, v) for x, v in incoming.items() if v > 0]
            flow = Flow(vertices=inner + (GHOST_SOURCE, GHOST_SINK), edges=tuple(edges))
            ghost_in = total(v for x, y, v in flow.edges if x == GHOST_SOURCE)
            ghost_out = total(v for x, y, v in flow.edges if y == GHOST_SINK)
            defect = {x: flow.value(GHOST_SOURCE, x) - flow.value(x, GHOST_SINK) for x in inner}
        else:
            if prefix is not None and tail_weight is None:
                raise ValidationError("A decomposition prefix needs the weight of the omitted tail")
            edges = inner_edges + [(x, GHOST, v) for x, v in outgoing.items() if v > 0]
            edges += [(GHOST, x, v) for x, v in incoming.items() if v > 0]
            flow = Flow(vertices=inner + (GHOST,), edges=tuple(edges))
            if prefix is not None:
                flow = self._reroute_prefix(flow, prefix, set(inner))
            flow = self.flows.remove_cycles(flow)
            ghost_in = total(v for x, y, v in flow.edges if x == GHOST)
            ghost_out = total(v for x, y, v in flow.edges if y == GHOST)
            defect = {x: flow.value(GHOST, x) - flow.value(x, GHOST) for x in inner}

        if tail_weight is None and li.tail_mass is not None:
            tail_weight = li.tail_mass(n)
        if tail_weight is not None:
            self._check_flux_bounds(n, ghost_in, ghost_out, defect, tail_weight, prefix is not None)

        logger.debug(
            "Instance truncated",
            extra={"instance": li.name, "level": n, "mode": mode, "ghost_in": str(ghost_in), "ghost_out": str(ghost_out)},
        )
        return TruncatedInstance(
            level=n,
            inner_vertices=inner,
            ghost_mode=mode,
            truncated_flow=flow,
            boundary_defect=SignedMeasure(weights=defect),
            ghost_in=ghost_in,
            ghost_out=ghost_out,
            tail_weight=tail_weight,
        )

    def _reroute_prefix(self, flow: Flow, prefix: PathMeasure, inner: set[str]) -> Flow:
        """Replace each prefix path by its image with the loops through the ghost erased"""
        values = dict(flow.values)
        erased: dict[Edge, Fraction] = {}
        for entry in prefix.paths:
            image: list[str] = []
            for v in entry.vertices:
                v = v if v in inner else GHOST
                if not image or image[-1] != v or v != GHOST:
                    image.append(v)
            for step in zip(image, image[1:]):
                values[step] = values.get(step, ZERO) - entry.weight
            if GHOST in image:
                first, last = image.index(GHOST), len(image) - 1 - image[::-1].index(GHOST)
                image = image[: first + 1] + image[last + 1:]
            for step in zip(image, image[1:]):
                erased[step] = erased.get(step, ZERO) + entry.weight

        negative = [list(e) for e, v in values.items() if v < 0]
        if negative:
            raise ValidationError(
                "The prefix is not part of a decomposition of the flow",
                details={"edges": negative},
            )
        for step, weight in erased.items():
            values[step] = values.get(step, ZERO) + weight
        edges = [(x, y, v) for (x, y), v in values.items() if (x, y) in flow.values or v > 0]
        return Flow(vertices=flow.vertices, edges=tuple(edges))

    def _check_flux_bounds(
        self,
        n: int,
        ghost_in: Fraction,
        ghost_out: Fraction,
        defect: dict,
        tail: Fraction,
        with_prefix: bool,
    ) -> None:
        """The defect spread is bounded by twice the tail; ghost fluxes by the tail once a prefix is rerouted"""
        spread = total(abs(d) for d in defect.values())
        exceeded = spread > 2 * tail
        if with_prefix:
            exceeded = exceeded or ghost_in > tail or ghost_out > tail
        if exceeded:
            raise InvariantViolation(
                "Ghost fluxes or the boundary defect exceed the tail weight",
                error_code="FLUX_BOUND_EXCEEDED",
                details={
                    "level": n,
                    "ghost_in": str(ghost_in),
                    "ghost_out": str(ghost_out),
                    "defect_total": str(spread),
                    "tail": str(tail),
                },
            )

    def truncated_coupling(self, li: LazyInstance, n: int) -> Coupling:
        """Coupling of the tilted measures mu1 + [delta]_+ and mu2 + [-delta]_+ on V_n"""
        truncated = self.ghost_truncate(li, n, "single")
        inner = truncated.inner_vertices
        known = set(inner)
        inner_flow = Flow(
            vertices=inner,
            edges=tuple((x, y, v) for x, y, v in truncated.truncated_flow.edges if x in known and y in known),
        )
        defect = truncated.boundary_defect
        tilted = Measure(weights={v: li.mu1(v) + max(defect.get(v), ZERO) for v in inner})
        return self.couplings.coupling_from_flow_decomposition(inner_flow, tilted)

    # Decomposability evidence

    def zero_flux_estimate(self, li: LazyInstance, n_max: int) -> FluxReport:
        self._check_level(n_max)
        levels = []
        for n in range(1, n_max + 1):
            inner = li.prefix(n)
            _, outgoing, incoming = self._boundary(li, inner)
            out_flux, in_flux = total(outgoing.values()), total(incoming.values())
            difference = self._require_balance(li, n, inner, out_flux, in_flux)
            levels.append(FluxLevel(level=n, outgoing=out_flux, incoming=in_flux, mass_difference=difference))

        outgoing_series = [level.outgoing for level in levels]
        nonincreasing = all(a >= b for a, b in zip(outgoing_series, outgoing_series[1:]))
        reaches_zero = bool(levels) and levels[-1].outgoing == 0 and levels[-1].incoming == 0
        return FluxReport(levels=tuple(levels), nonincreasing=nonincreasing, reaches_zero=reaches_zero)

    def sup_tail_witness(self, li: LazyInstance, n_max: int, epsilon: Fraction) -> SupTailReport:
        self._check_level(n_max + 1)
        window = li.prefix(n_max + 1)
        witnesses = []
        for n in range(1, n_max + 1):
            inner = set(li.prefix(n))
            witness = None
            for v in window:
                if v in inner:
                    continue
                for a, b in self._structural_edges(li, v):
                    tail, head, value = li.oriented(a, b)
                    if value >= epsilon:
                        witness = TailWitness(level=n, edge=(tail, head), value=value)
                        break
                if witness is not None:
                    break
            if witness is None:
                return SupTailReport(
                    status="no-witness-found",
                    witnesses=tuple(witnesses),
                    levels_checked=n,
                    note=f"no edge outside V_{n} carries at least {epsilon}",
                )
            witnesses.append(witness)

        return SupTailReport(
            status="not-finitely-decomposable-evidence",
            witnesses=tuple(witnesses),
            levels_checked=n_max,
            note=f"evidence at levels 1..{n_max}; conclusive only in the limit",
        )

    def decomposability_assessment(self, li: LazyInstance, n_max: int, epsilon: Fraction) -> DecomposabilityAssessment:
        flux = self.zero_flux_estimate(li, n_max)
        sup_tail = self.sup_tail_witness(li, n_max, epsilon)

        last = flux.levels[-1] if flux.levels else None
        decaying = last is not None and flux.nonincreasing and last.outgoing + last.incoming < epsilon
        if flux.reaches_zero or decaying:
            verdict = "evidence-decomposable"
        elif sup_tail.status == "not-finitely-decomposable-evidence":
            verdict = "evidence-not-decomposable"
        else:
            verdict = "undetermined"
        logger.info("Decomposability assessed", extra={"instance": li.name, "levels": n_max, "verdict": verdict})
        return DecomposabilityAssessment(verdict=verdict, flux=flux, sup_tail=sup_tail)

    # Closed forms

    def z_chain_flow(self, mu1: Measure, mu2: Measure) -> ChainWindowFlow:
        try:
            support = [int(v) for v in (*mu1.support(), *mu2.support())]
        except ValueError:
            raise ValidationError("Chain measures must be indexed by integers")
        if not support:
            raise ValidationError("At least one measure must charge a vertex")

        low, high = min(support), max(support)
        f1 = f2 = ZERO
        values = []
        for x in range(low, high):
            f1 += mu1.get(str(x))
            f2 += mu2.get(str(x))
            values.append((str(x), str(x + 1), f1 - f2))
        return ChainWindowFlow(window=(low, high), values=tuple(values), dominates=all(v >= 0 for _, _, v in values))

    def infinite_tree_flow(self, li: LazyInstance, edge: Edge, depth: int) -> TreeEdgeFlow:
        if not li.is_tree:
            raise NotATree("The instance is not a tree", details={"instance": li.name})
        self._check_level(depth)

        window = li.prefix(depth)
        x, y = edge
        if x not in window or y not in window or edge not in li.neighbours(x):
            raise ValidationError("The edge is not a tree edge inside the window", details={"edge": [x, y]})

        shadow = nx.Graph()
        shadow.add_nodes_from(window)
        shadow.add_edges_from((a, b) for v in window for a, b in li.neighbours(v) if a in shadow and b in shadow)
        shadow.remove_edge(x, y)
        lower = nx.node_connected_component(shadow, x)

        value = total(li.mu1(z) - li.mu2(z) for z in lower)
        tail_bound = li.tail_mass(depth) if li.tail_mass is not None else None
        return TreeEdgeFlow(
            edge=edge,
            depth=depth,
            value=value,
            tail_bound=tail_bound,
            exact=tail_bound == 0,
        )
