"""Flow service: divergence, vector fields, cycle removal and path decompositions"""

import logging
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

import networkx as nx

from app.core.config import settings
from app.core.rationals import total
from app.schemas.flow import (
    DiscreteVectorField,
    DriftRecord,
    Flow,
    PathEntry,
    PathMeasure,
    StabilizationReport,
)
from app.schemas.graph import Digraph, DirectedCycle, DirectedPath, Edge, vertices_in_order
from app.schemas.measure import SignedMeasure
from app.schemas.transport import WeightedDigraph
from app.services.exceptions import (
    CyclicSupport,
    InvariantViolation,
    NotAPath,
    UnrepresentableField,
    ValidationError,
    VertexMismatch,
)
from app.services.graph_service import GraphService

logger = logging.getLogger(__name__)

ZERO = Fraction(0)


class FlowService:
    """Service for flows and discrete vector fields on finite digraphs"""

    def __init__(self, graph_service: Optional[GraphService] = None, drift_bound_factor: Optional[int] = None):
        self.graphs = graph_service or GraphService()
        self.drift_bound_factor = drift_bound_factor or settings.DRIFT_BOUND_FACTOR

    # Divergence and indicator flows

    def divergence(self, q: Flow) -> SignedMeasure:
        div = {v: ZERO for v in q.vertices}
        for x, y, value in q.edges:
            div[x] += value
            div[y] -= value
        return SignedMeasure(weights=div)

    def flow_from_path(self, p: DirectedPath, digraph: Optional[Digraph] = None) -> Flow:
        if digraph is None:
            digraph = Digraph(vertices=vertices_in_order([p.vertices]), edges=tuple(dict.fromkeys(p.steps())))
        self._require_steps(p.vertices, digraph)
        return Flow.on(digraph, {step: Fraction(1) for step in p.steps()})

    def _require_steps(self, vertices: Sequence[str], digraph: Digraph) -> None:
        for x, y in zip(vertices, vertices[1:]):
            if not digraph.has_edge(x, y):
                raise NotAPath(
                    f"({x}, {y}) is not an edge of the digraph",
                    details={"path": list(vertices), "step": [x, y]},
                )

    # Flows and vector fields

    def project_to_field(self, q: Flow) -> DiscreteVectorField:
        return DiscreteVectorField.from_values(
            q.vertices,
            ((x, y, q.value(x, y) - q.value(y, x)) for x, y in q.digraph.undirected_edges()),
        )

    def minimal_flow_from_field(self, phi: DiscreteVectorField, digraph: Digraph) -> Flow:
        known = set(digraph.vertices)
        values: dict[Edge, Fraction] = {}
        for x, y, v in phi.edges:
            if x not in known or y not in known:
                raise VertexMismatch("The field lives on vertices outside the digraph", details={"edge": [x, y]})
            if v == 0:
                continue
            target, amount = ((x, y), v) if v > 0 else ((y, x), -v)
            if not digraph.has_edge(*target):
                raise UnrepresentableField(
                    f"Positive part of the field on {target} has no edge to carry it",
                    details={"edge": list(target), "value": str(amount)},
                )
            values[target] = amount
        return Flow.on(digraph, values)

    def field_divergence(self, phi: DiscreteVectorField) -> SignedMeasure:
        div = {v: ZERO for v in phi.vertices}
        for x, y, v in phi.edges:
            div[x] += v
            div[y] -= v
        return SignedMeasure(weights=div)

    def gradient_field(self, f: Mapping[str, Fraction], graph: Digraph) -> DiscreteVectorField:
        return DiscreteVectorField.from_values(
            graph.vertices,
            ((x, y, Fraction(f[y]) - Fraction(f[x])) for x, y in graph.undirected_edges()),
        )

    def cycle_field(self, cycle: DirectedCycle, graph: Digraph) -> DiscreteVectorField:
        steps = set(cycle.steps())
        shadow = graph.shadow()
        for x, y in steps:
            if not shadow.has_edge(x, y):
                raise NotAPath(f"Cycle step ({x}, {y}) is not an edge", details={"step": [x, y]})

        def coefficient(x: str, y: str) -> Fraction:
            if (x, y) in steps:
                return Fraction(1)
            if (y, x) in steps:
                return Fraction(-1)
            return ZERO

        return DiscreteVectorField.from_values(
            graph.vertices, ((x, y, coefficient(x, y)) for x, y in graph.undirected_edges())
        )

    def tree_particular_field(self, g: SignedMeasure, graph: Digraph) -> DiscreteVectorField:
        """Field with divergence ``g`` carried by the BFS spanning tree"""
        if g.total() != 0:
            raise ValidationError("A divergence must have zero total mass", details={"total": str(g.total())})
        self.graphs.fundamental_cycle_basis(graph)  # raises Disconnected

        shadow = graph.shadow()
        tree_edges = list(nx.bfs_edges(shadow, graph.vertices[0])) if graph.vertices else []
        subtree = {v: g.get(v) for v in graph.vertices}
        for parent, child in reversed(tree_edges):
            subtree[parent] += subtree[child]

        # phi(child, parent) is the mass below child
        towards_parent = {(child, parent): subtree[child] for parent, child in tree_edges}
        values = []
        for x, y in graph.undirected_edges():
            if (x, y) in towards_parent:
                values.append((x, y, towards_parent[(x, y)]))
            elif (y, x) in towards_parent:
                values.append((x, y, -towards_parent[(y, x)]))
            else:
                values.append((x, y, ZERO))
        return DiscreteVectorField.from_values(graph.vertices, values)

    def cycle_potentials(self, delta: SignedMeasure, cycle: DirectedCycle) -> list[Fraction]:
        """Partial sums delta(v_0) + ... + delta(v_i), the field phi*(v_i, v_{i+1}) along the cycle"""
        running = ZERO
        partial = []
        for v in cycle.vertices[:-1]:
            running += delta.get(v)
            partial.append(running)
        return partial

    def combine_fields(
        self,
        phi_star: DiscreteVectorField,
        cycle_fields: Sequence[DiscreteVectorField],
        alphas: Sequence[Fraction],
    ) -> DiscreteVectorField:
        if len(cycle_fields) != len(alphas):
            raise ValidationError("One coefficient per cycle field is required")
        values = []
        for x, y, v in phi_star.edges:
            values.append((x, y, v + total(a * f.value(x, y) for f, a in zip(cycle_fields, alphas))))
        return DiscreteVectorField.from_values(phi_star.vertices, values)

    def pairing(self, q: Flow, wg: WeightedDigraph) -> Fraction:
        """<Q, w>; a positive value on an unweighted edge has infinite cost"""
        result = ZERO
        for x, y, value in q.edges:
            if value == 0:
                continue
            weight = wg.weight(x, y)
            if weight is None:
                raise ValidationError(f"Flow uses ({x}, {y}), which has no weight", details={"edge": [x, y]})
            result += value * weight
        return result

    # Cycle removal and decompositions

    def remove_cycles(self, q: Flow) -> Flow:
        values = dict(q.values)
        deletions = 0
        while True:
            support = Digraph(vertices=q.vertices, edges=tuple(e for e, v in values.items() if v > 0))
            cycle = self.graphs.find_cycle(support)
            if cycle is None:
                break
            steps = list(zip(cycle, cycle[1:]))
            m = min(values[s] for s in steps)
            for s in steps:
                values[s] -= m
            deletions += 1
        if deletions:
            logger.debug("Cycles removed", extra={"deletions": deletions})
        return Flow(vertices=q.vertices, edges=tuple((x, y, values[(x, y)]) for x, y, _ in q.edges))

    def _require_acyclic_support(self, support: Digraph) -> None:
        cycle = self.graphs.find_cycle(support)
        if cycle is not None:
            raise CyclicSupport("The flow support contains a directed cycle", details={"cycle": cycle})

    def path_decompose(self, q: Flow) -> PathMeasure:
        self._require_acyclic_support(q.support_digraph())

        index = {v: i for i, v in enumerate(q.vertices)}
        residual = {e: v for e, v in q.values.items() if v > 0}
        successors: dict[str, list[str]] = {v: [] for v in q.vertices}
        for x, y in residual:
            successors[x].append(y)
        for targets in successors.values():
            targets.sort(key=index.get)
        remaining = dict(self.divergence(q).weights)

        entries: list[tuple[tuple[str, ...], Fraction]] = []
        while True:
            start = next((v for v in q.vertices if remaining[v] > 0), None)
            if start is None:
                break
            path = [start]
            current = start
            while True:
                nxt = next((y for y in successors[current] if residual.get((current, y), ZERO) > 0), None)
                if nxt is None:
                    raise InvariantViolation(
                        "Peeling walk got stuck before reaching a demand vertex",
                        details={"path": path},
                    )
                path.append(nxt)
                current = nxt
                if remaining[current] < 0:
                    break
            steps = list(zip(path, path[1:]))
            weight = min([remaining[start], -remaining[current]] + [residual[s] for s in steps])
            for s in steps:
                residual[s] -= weight
            remaining[start] -= weight
            remaining[current] += weight
            entries.append((tuple(path), weight))

        leftover = [e for e, v in residual.items() if v != 0]
        if leftover:
            raise InvariantViolation("Decomposition left residual flow", details={"edges": [list(e) for e in leftover]})
        logger.debug("Flow decomposed", extra={"paths": len(entries), "edges": len(q.edges)})
        return PathMeasure.of(entries)

    def flow_from_decomposition(self, pm: PathMeasure, digraph: Digraph) -> Flow:
        values: dict[Edge, Fraction] = {}
        for entry in pm.paths:
            self._require_steps(entry.vertices, digraph)
            for step in zip(entry.vertices, entry.vertices[1:]):
                values[step] = values.get(step, ZERO) + entry.weight
        return Flow.on(digraph, values)

    def decomposition_digraph(self, pm: PathMeasure) -> Digraph:
        steps = dict.fromkeys(s for e in pm.paths for s in zip(e.vertices, e.vertices[1:]))
        return Digraph(vertices=vertices_in_order(e.vertices for e in pm.paths), edges=tuple(steps))

    def stabilize_decomposition(self, pm: PathMeasure) -> PathMeasure:
        return self.stabilize_with_report(pm).paths

    def stabilize_with_report(self, pm: PathMeasure) -> StabilizationReport:
        self._require_acyclic_support(self.decomposition_digraph(pm))

        state: list[list] = []
        drifts: list[DriftRecord] = []
        violations: list[DriftRecord] = []
        max_ratio = ZERO
        for step, entry in enumerate(pm.paths, start=1):
            before = _merged(state)
            state.append([entry.vertices, entry.weight])
            self._rebalance(state, entry.start)
            self._rebalance(state, entry.end)
            after = _merged(state)

            drift = total(abs(after.get(p, ZERO) - before.get(p, ZERO)) for p in set(before) | set(after))
            record = DriftRecord(step=step, inserted=entry, drift=drift)
            drifts.append(record)
            max_ratio = max(max_ratio, drift / entry.weight)
            if drift > self.drift_bound_factor * entry.weight:
                violations.append(record)
                logger.warning(
                    "Stabilization drift above bound",
                    extra={"step": step, "drift": str(drift), "weight": str(entry.weight), "path": list(entry.vertices)},
                )

        paths = PathMeasure.of((p, w) for p, w in state)
        return StabilizationReport(
            paths=paths,
            drifts=tuple(drifts),
            max_drift_ratio=max_ratio,
            violations=tuple(violations),
        )

    def _rebalance(self, state: list[list], x: str) -> None:
        """Concatenate paths ending at ``x`` with paths starting at ``x``"""
        enders = sorted((i for i, (p, w) in enumerate(state) if p[-1] == x), key=lambda i: (state[i][1], i))
        starters = sorted((i for i, (p, w) in enumerate(state) if p[0] == x), key=lambda i: (state[i][1], i))
        if not enders or not starters:
            return

        joined = []
        e = s = 0
        while e < len(enders) and s < len(starters):
            ender, starter = state[enders[e]], state[starters[s]]
            amount = min(ender[1], starter[1])
            joined.append([ender[0] + starter[0][1:], amount])
            ender[1] -= amount
            starter[1] -= amount
            if ender[1] == 0:
                e += 1
            if starter[1] == 0:
                s += 1
        state[:] = [item for item in state if item[1] > 0] + joined


def _merged(state: Iterable[list]) -> dict[tuple[str, ...], Fraction]:
    merged: dict[tuple[str, ...], Fraction] = {}
    for path, weight in state:
        if weight > 0:
            merged[path] = merged.get(path, ZERO) + weight
    return merged
