"""Seeded instance builders for the test suite"""

import random
from fractions import Fraction
from typing import Sequence

from app.schemas.flow import Flow
from app.schemas.graph import Digraph
from app.schemas.measure import Measure
from app.schemas.transport import WeightedDigraph


def measure(**weights) -> Measure:
    """Measure from keyword weights, e.g. measure(a="1/2", b="1/2")"""
    return Measure(weights={v: Fraction(w) for v, w in weights.items()})


def names(n: int) -> tuple[str, ...]:
    return tuple(f"v{i}" for i in range(n))


def random_dag(rng: random.Random, n: int, density: float = 0.4) -> Digraph:
    """Edges only go from lower to higher index, so the result is acyclic"""
    vertices = names(n)
    edges = tuple(
        (vertices[i], vertices[j])
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < density
    )
    return Digraph(vertices=vertices, edges=edges)


def random_digraph(rng: random.Random, n: int, density: float = 0.3) -> Digraph:
    """Any ordered pair may become an edge, so cycles and opposite edges appear"""
    vertices = names(n)
    edges = tuple(
        (vertices[i], vertices[j])
        for i in range(n)
        for j in range(n)
        if i != j and rng.random() < density
    )
    return Digraph(vertices=vertices, edges=edges)


def random_connected_dag(rng: random.Random, n: int, density: float = 0.4) -> Digraph:
    """Spine v0 -> v1 -> ... plus random forward chords; its order is a chain"""
    vertices = names(n)
    edges = {(vertices[i], vertices[i + 1]) for i in range(n - 1)}
    for i in range(n):
        for j in range(i + 2, n):
            if rng.random() < density:
                edges.add((vertices[i], vertices[j]))
    return Digraph(vertices=vertices, edges=tuple(sorted(edges, key=lambda e: (int(e[0][1:]), int(e[1][1:])))))


def random_flow(rng: random.Random, digraph: Digraph, high: int = 4) -> Flow:
    return Flow.on(digraph, {e: Fraction(rng.randint(0, high)) for e in digraph.edges})


def random_probability(rng: random.Random, vertices: Sequence[str], denominator: int = 12) -> Measure:
    """Probability measure with weights in multiples of 1/denominator"""
    cuts = sorted(rng.randint(0, denominator) for _ in range(len(vertices) - 1))
    bounds = [0, *cuts, denominator]
    return Measure(weights={v: Fraction(bounds[i + 1] - bounds[i], denominator) for i, v in enumerate(vertices)})


def push_upwards(rng: random.Random, mu: Measure, hasse: Digraph, moves: int = 10) -> Measure:
    """A measure dominating ``mu``: mass only ever moves along Hasse edges"""
    weights = {v: mu.get(v) for v in hasse.vertices}
    for _ in range(moves):
        x, y = hasse.edges[rng.randrange(len(hasse.edges))]
        amount = weights[x] * Fraction(rng.randint(0, 4), 4)
        weights[x] -= amount
        weights[y] += amount
    return Measure(weights=weights)


def random_weighted_ring_graph(rng: random.Random, n: int, extra: int = 3) -> WeightedDigraph:
    """Bidirected cycle on n vertices plus ``extra`` random chords; strongly connected"""
    vertices = names(n)
    edges: dict[tuple[str, str], Fraction] = {}
    for i in range(n):
        a, b = vertices[i], vertices[(i + 1) % n]
        edges[(a, b)] = Fraction(rng.randint(1, 5))
        edges[(b, a)] = Fraction(rng.randint(1, 5))
    for _ in range(extra):
        a, b = rng.sample(vertices, 2)
        edges.setdefault((a, b), Fraction(rng.randint(1, 5)))
    return WeightedDigraph(vertices=vertices, edges=tuple((x, y, w) for (x, y), w in edges.items()))


def random_tree(rng: random.Random, n: int) -> Digraph:
    """Random recursive tree with each edge oriented at random"""
    vertices = names(n)
    edges = []
    for i in range(1, n):
        parent = vertices[rng.randrange(i)]
        edges.append((parent, vertices[i]) if rng.random() < 0.5 else (vertices[i], parent))
    return Digraph(vertices=vertices, edges=tuple(edges))


def random_ring_hasse(rng: random.Random, n: int) -> Digraph:
    """Oriented n-cycle that is its own transitive reduction"""
    while True:
        forward = [rng.random() < 0.5 for _ in range(n)]
        # a directed cycle, or one edge against all the others, is not a Hasse diagram
        if 2 <= sum(forward) <= n - 2:
            break
    vertices = names(n)
    edges = []
    for i, d in enumerate(forward):
        a, b = vertices[i], vertices[(i + 1) % n]
        edges.append((a, b) if d else (b, a))
    return Digraph(vertices=vertices, edges=tuple(edges))


def random_weighted_chain(rng: random.Random, n: int) -> WeightedDigraph:
    """Chain v0 - v1 - ... with independent weights in both directions"""
    vertices = names(n)
    edges = []
    for a, b in zip(vertices, vertices[1:]):
        edges.append((a, b, Fraction(rng.randint(1, 5))))
        edges.append((b, a, Fraction(rng.randint(1, 5))))
    return WeightedDigraph(vertices=vertices, edges=tuple(edges))


def product_measure(elements: Sequence[str], ps: Sequence[Fraction]) -> Measure:
    """Product of Bernoulli(p_i) over bitstring elements"""
    weights = {}
    for bits in elements:
        w = Fraction(1)
        for bit, p in zip(bits, ps):
            w *= p if bit == "1" else 1 - p
        weights[bits] = w
    return Measure(weights=weights)
