"""
Source/sink networks for networkx flow routines.

Capacities and costs stay ``Fraction``; networkx's max-flow and network
simplex only add, subtract and compare them, so results come back exact.
Edges without a capacity are unbounded.
"""

import logging
from fractions import Fraction
from typing import Hashable, Iterable, Mapping

import networkx as nx

logger = logging.getLogger(__name__)

SOURCE = ("source",)
SINK = ("sink",)


def st_network(
    nodes: Iterable[Hashable],
    supplies: Mapping[Hashable, Fraction],
    demands: Mapping[Hashable, Fraction],
    edges: Iterable[tuple[Hashable, Hashable, Fraction]],
) -> nx.DiGraph:
    """``SOURCE -> v`` capped at supplies, ``v -> SINK`` capped at demands, inner edges with costs"""
    graph = nx.DiGraph()
    graph.add_node(SOURCE)
    graph.add_node(SINK)
    graph.add_nodes_from(nodes)
    for v, amount in supplies.items():
        if amount > 0:
            graph.add_edge(SOURCE, v, capacity=amount, weight=Fraction(0))
    for v, amount in demands.items():
        if amount > 0:
            graph.add_edge(v, SINK, capacity=amount, weight=Fraction(0))
    for x, y, cost in edges:
        graph.add_edge(x, y, weight=Fraction(cost))
    return graph


def edge_flows(flow_dict: Mapping, edges: Iterable[tuple[Hashable, Hashable]]) -> dict:
    return {(x, y): Fraction(flow_dict.get(x, {}).get(y, 0)) for x, y in edges}


def max_flow(graph: nx.DiGraph) -> tuple[Fraction, dict]:
    value, flow_dict = nx.maximum_flow(graph, SOURCE, SINK, capacity="capacity")
    logger.debug("Max flow solved", extra={"value": str(value), "nodes": graph.number_of_nodes()})
    return Fraction(value), flow_dict


def source_side(graph: nx.DiGraph) -> set:
    """Source side of a minimum cut, without ``SOURCE`` itself"""
    _, (reachable, _) = nx.minimum_cut(graph, SOURCE, SINK, capacity="capacity")
    return set(reachable) - {SOURCE}


def min_cost_max_flow(graph: nx.DiGraph) -> tuple[Fraction, Fraction, dict]:
    """Maximum flow of least cost; returns (amount sent, cost, flow dict)"""
    flow_dict = nx.max_flow_min_cost(graph, SOURCE, SINK, capacity="capacity", weight="weight")
    sent = sum((Fraction(v) for v in flow_dict[SOURCE].values()), Fraction(0))
    cost = Fraction(nx.cost_of_flow(graph, flow_dict, weight="weight"))
    logger.debug("Min-cost flow solved", extra={"sent": str(sent), "cost": str(cost)})
    return sent, cost, flow_dict


def supply_of(graph: nx.DiGraph) -> Fraction:
    return sum((d["capacity"] for _, _, d in graph.out_edges(SOURCE, data=True)), Fraction(0))


def transshipment(
    nodes: Iterable[Hashable],
    demand: Mapping[Hashable, Fraction],
    edges: Iterable[tuple[Hashable, Hashable, Fraction]],
) -> dict:
    """Network simplex on node demands, no source or sink; raises ``nx.NetworkXUnfeasible``"""
    graph = nx.DiGraph()
    for v in nodes:
        graph.add_node(v, demand=demand.get(v, Fraction(0)))
    for x, y, cost in edges:
        graph.add_edge(x, y, weight=Fraction(cost))
    _, flow_dict = nx.network_simplex(graph, demand="demand", weight="weight")
    return flow_dict
