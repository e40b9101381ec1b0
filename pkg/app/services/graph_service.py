"""Graph service: acyclicity, closures, Hasse diagrams and cycle bases"""

import logging
from typing import Optional

import networkx as nx

from app.schemas.graph import CycleBasis, Digraph, DirectedCycle, PartialOrderRelation
from app.services.exceptions import CyclicInput, Disconnected, NotAPartialOrder, NotASingleCycle

logger = logging.getLogger(__name__)


class GraphService:
    """Service for structural operations on finite digraphs"""

    def is_acyclic(self, g: Digraph) -> bool:
        return nx.is_directed_acyclic_graph(g.to_networkx())

    def find_cycle(self, g: Digraph) -> Optional[list[str]]:
        """First directed cycle met by a DFS started at the smallest-index vertex"""
        try:
            edges = nx.find_cycle(g.to_networkx(), source=list(g.vertices))
        except nx.NetworkXNoCycle:
            return None
        return [x for x, _ in edges] + [edges[0][0]]

    def transitive_closure(self, g: Digraph) -> Digraph:
        reach = nx.transitive_closure(g.to_networkx(), reflexive=None)
        index = g.index
        edges = sorted(reach.edges(), key=lambda e: (index[e[0]], index[e[1]]))
        return Digraph(vertices=g.vertices, edges=tuple(edges))

    def transitive_reduction(self, g: Digraph) -> Digraph:
        cycle = self.find_cycle(g)
        if cycle is not None:
            raise CyclicInput("Transitive reduction needs an acyclic digraph", details={"cycle": cycle})

        closure = self.transitive_closure(g).edge_set
        above: dict[str, set[str]] = {v: set() for v in g.vertices}
        for x, y in closure:
            above[x].add(y)

        # covering pairs of a DAG are always edges of the DAG itself
        kept = tuple(
            (x, y) for x, y in g.edges
            if not any((z, y) in closure for z in above[x] if z != y)
        )
        logger.debug("Transitive reduction", extra={"edges_in": len(g.edges), "edges_out": len(kept)})
        return Digraph(vertices=g.vertices, edges=kept)

    def validate_partial_order(self, rel: PartialOrderRelation) -> None:
        """Raise NotAPartialOrder naming the failed axiom and a witness pair"""
        strict = rel.strict_pairs
        for x, y in rel.pairs:
            if x != y and (y, x) in strict:
                raise NotAPartialOrder(
                    f"Antisymmetry fails: {x} <= {y} and {y} <= {x}",
                    details={"axiom": "antisymmetry", "witness": [x, y]},
                )
        for x, y in rel.pairs:
            if x == y:
                continue
            for a, z in rel.pairs:
                if a == y and z != y and z != x and (x, z) not in strict:
                    raise NotAPartialOrder(
                        f"Transitivity fails: {x} <= {y} <= {z} but not {x} <= {z}",
                        details={"axiom": "transitivity", "witness": [x, z], "via": y},
                    )

    def hasse_digraph(self, rel: PartialOrderRelation) -> Digraph:
        self.validate_partial_order(rel)
        strict = rel.strict_pairs
        above: dict[str, set[str]] = {v: set() for v in rel.vertices}
        for x, y in strict:
            above[x].add(y)

        index = {v: i for i, v in enumerate(rel.vertices)}
        covers = sorted(
            ((x, z) for x, z in strict if not any((y, z) in strict for y in above[x] if y != z)),
            key=lambda e: (index[e[0]], index[e[1]]),
        )
        return Digraph(vertices=rel.vertices, edges=tuple(covers))

    def order_of(self, g: Digraph) -> PartialOrderRelation:
        """Partial order induced by reachability in an acyclic digraph"""
        cycle = self.find_cycle(g)
        if cycle is not None:
            raise CyclicInput("A cyclic digraph does not induce a partial order", details={"cycle": cycle})
        return PartialOrderRelation.from_digraph(g, self.transitive_closure(g))

    def fundamental_cycle_basis(self, g: Digraph) -> CycleBasis:
        if not g.vertices:
            return CycleBasis(spanning_tree=(), cycles=())

        shadow = g.shadow()
        if not nx.is_connected(shadow):
            components = [sorted(c, key=g.index.get) for c in nx.connected_components(shadow)]
            raise Disconnected(
                "The undirected shadow is disconnected",
                details={"components": sorted(components, key=lambda c: g.index[c[0]])},
            )

        stored = {frozenset(e): e for e in g.undirected_edges()}
        tree_edges = list(nx.bfs_edges(shadow, g.vertices[0]))
        tree = nx.Graph()
        tree.add_nodes_from(g.vertices)
        tree.add_edges_from(tree_edges)
        tree_keys = {frozenset(e) for e in tree_edges}

        cycles = []
        for x, y in g.undirected_edges():
            if frozenset((x, y)) in tree_keys:
                continue
            back = nx.shortest_path(tree, y, x)
            cycles.append(DirectedCycle(vertices=(x, *back)))

        logger.debug("Cycle basis built", extra={"vertices": len(g.vertices), "cycles": len(cycles)})
        return CycleBasis(
            spanning_tree=tuple(stored[frozenset(e)] for e in tree_edges),
            cycles=tuple(cycles),
        )

    def is_tree_shadow(self, g: Digraph) -> bool:
        if not g.vertices:
            return False
        return len(g.undirected_edges()) == len(g.edges) and nx.is_tree(g.shadow())

    def ring_cycle(self, g: Digraph, orientation: Optional[DirectedCycle] = None) -> DirectedCycle:
        """Orientation of a digraph whose shadow is one cycle through every vertex"""
        shadow = g.shadow()
        n = len(g.vertices)
        single = (
            n >= 3
            and len(g.undirected_edges()) == n
            and all(d == 2 for _, d in shadow.degree())
            and nx.is_connected(shadow)
        )
        if not single:
            raise NotASingleCycle(
                "The undirected shadow is not a single cycle",
                details={"vertices": n, "edges": len(g.edges)},
            )
        if orientation is None:
            return self.fundamental_cycle_basis(g).cycles[0]

        if len(orientation.vertices) != n + 1 or set(orientation.vertices) != set(g.vertices):
            raise NotASingleCycle(
                "The orientation must traverse every vertex once",
                details={"orientation": list(orientation.vertices)},
            )
        for x, y in orientation.steps():
            if not shadow.has_edge(x, y):
                raise NotASingleCycle(
                    f"Orientation step ({x}, {y}) is not an edge of the ring",
                    details={"step": [x, y]},
                )
        return orientation
