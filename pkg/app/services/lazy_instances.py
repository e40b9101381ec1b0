"""
Countable instances described by deterministic generators.

A ``LazyInstance`` never materializes its vertex set: it enumerates vertices
along an invading sequence V_0, V_1, ... and answers local questions (edges,
flow values, masses) on demand. Two instances are built in: the integer chain
and the rooted binary tree.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Mapping, Optional

from app.core.rationals import total
from app.schemas.truncation import BinaryTreeParams, GeneratorMeasureParams, ZChainParams
from app.services.exceptions import ValidationError

logger = logging.getLogger(__name__)

ZERO = Fraction(0)


@dataclass(frozen=True)
class LazyInstance:
    name: str
    vertex: Callable[[int], str]
    prefix_size: Callable[[int], int]
    successors: Callable[[str], tuple[str, ...]]
    predecessors: Callable[[str], tuple[str, ...]]
    flow: Callable[[str, str], Fraction]
    mu1: Callable[[str], Fraction]
    mu2: Callable[[str], Fraction]
    tail_mass: Optional[Callable[[int], Fraction]] = None
    is_tree: bool = False

    def prefix(self, n: int) -> tuple[str, ...]:
        return tuple(self.vertex(i) for i in range(self.prefix_size(n)))

    def neighbours(self, v: str) -> tuple[tuple[str, str], ...]:
        """Structural edges at ``v`` in their stored orientation"""
        return tuple((v, y) for y in self.successors(v)) + tuple((x, v) for x in self.predecessors(v))

    def oriented(self, x: str, y: str) -> tuple[str, str, Fraction]:
        """Structural edge (x, y) with its signed value turned into a nonnegative flow"""
        value = self.flow(x, y)
        return (x, y, value) if value >= 0 else (y, x, -value)


# Integer chain


def _integers(params: Mapping[str, Fraction], name: str) -> dict[int, Fraction]:
    try:
        return {int(k): Fraction(v) for k, v in params.items()}
    except ValueError:
        raise ValidationError(f"The {name} support must be indexed by integers", details={"keys": list(params)})


def _chain_cdf(params: GeneratorMeasureParams, name: str) -> tuple[Callable[[int], Fraction], Callable[[int], Fraction]]:
    """(mass, distribution function) of a measure on the integers"""
    if params.support is not None:
        support = _integers(params.support, name)
        points = sorted(support)

        def mass(x: int) -> Fraction:
            return support.get(x, ZERO)

        def cdf(x: int) -> Fraction:
            return total(support[z] for z in points if z <= x)

        return mass, cdf

    r, c = params.ratio, params.center

    def mass(x: int) -> Fraction:
        return (1 - r) / (1 + r) * r ** abs(x - c)

    def cdf(x: int) -> Fraction:
        u = x - c
        if u <= -1:
            return r ** (-u) / (1 + r)
        return 1 - r ** (u + 1) / (1 + r)

    return mass, cdf


def z_chain_instance(params: ZChainParams) -> LazyInstance:
    mass1, cdf1 = _chain_cdf(params.mu1, "first")
    mass2, cdf2 = _chain_cdf(params.mu2, "second")
    drift = params.drift if params.flow == "constant" else ZERO

    def vertex(i: int) -> str:
        return str(-((i + 1) // 2) if i % 2 else i // 2)

    def flow(x: str, y: str) -> Fraction:
        a = int(x)
        if int(y) != a + 1:
            raise ValidationError(f"({x}, {y}) is not a chain edge", details={"edge": [x, y]})
        return cdf1(a) - cdf2(a) + drift

    def outside(cdf: Callable[[int], Fraction], total_mass: Fraction, n: int) -> Fraction:
        return cdf(-n - 1) + total_mass - cdf(n)

    totals = {1: _total(params.mu1), 2: _total(params.mu2)}

    def tail_mass(n: int) -> Fraction:
        return outside(cdf1, totals[1], n) + outside(cdf2, totals[2], n)

    return LazyInstance(
        name="z-chain",
        vertex=vertex,
        prefix_size=lambda n: 2 * n + 1,
        successors=lambda v: (str(int(v) + 1),),
        predecessors=lambda v: (str(int(v) - 1),),
        flow=flow,
        mu1=lambda v: mass1(int(v)),
        mu2=lambda v: mass2(int(v)),
        tail_mass=tail_mass if drift == 0 else None,
    )


def _total(params: GeneratorMeasureParams) -> Fraction:
    if params.support is not None:
        return total(params.support.values())
    return Fraction(1)


# Binary tree


def _depth(v: int) -> int:
    return v.bit_length() - 1


def _in_subtree(v: int, root: int) -> bool:
    shift = _depth(v) - _depth(root)
    return shift >= 0 and v >> shift == root


def _tree_measure(
    params: GeneratorMeasureParams,
    name: str,
) -> tuple[Callable[[int], Fraction], Callable[[int], Fraction], Callable[[int], Fraction]]:
    """(mass, subtree mass, mass beyond depth n) of a measure on heap-indexed vertices"""
    if params.support is not None:
        support = _integers(params.support, name)
        if any(v < 1 for v in support):
            raise ValidationError(f"The {name} support must use heap indices >= 1", details={"keys": list(support)})

        def mass(v: int) -> Fraction:
            return support.get(v, ZERO)

        def subtree(v: int) -> Fraction:
            return total(w for u, w in support.items() if _in_subtree(u, v))

        def beyond(n: int) -> Fraction:
            return total(w for u, w in support.items() if _depth(u) > n)

        return mass, subtree, beyond

    r = params.ratio

    def mass(v: int) -> Fraction:
        d = _depth(v)
        return (1 - r) * r ** d / 2 ** d

    def subtree(v: int) -> Fraction:
        return (r / 2) ** _depth(v)

    def beyond(n: int) -> Fraction:
        return r ** (n + 1)

    return mass, subtree, beyond


def binary_tree_instance(params: BinaryTreeParams) -> LazyInstance:
    mass1, subtree1, beyond1 = _tree_measure(params.mu1, "first")
    mass2, subtree2, beyond2 = _tree_measure(params.mu2, "second")

    def flow(x: str, y: str) -> Fraction:
        parent, child = int(x), int(y)
        if child // 2 != parent or parent < 1:
            raise ValidationError(f"({x}, {y}) is not a tree edge", details={"edge": [x, y]})
        return subtree2(child) - subtree1(child)

    return LazyInstance(
        name="binary-tree",
        vertex=lambda i: str(i + 1),
        prefix_size=lambda n: 2 ** (n + 1) - 1,
        successors=lambda v: (str(2 * int(v)), str(2 * int(v) + 1)),
        predecessors=lambda v: (str(int(v) // 2),) if int(v) > 1 else (),
        flow=flow,
        mu1=lambda v: mass1(int(v)),
        mu2=lambda v: mass2(int(v)),
        tail_mass=lambda n: beyond1(n) + beyond2(n),
        is_tree=True,
    )


INSTANCES: dict[str, tuple[type, Callable[[Any], LazyInstance]]] = {
    "z-chain": (ZChainParams, z_chain_instance),
    "binary-tree": (BinaryTreeParams, binary_tree_instance),
}


def build_instance(name: str, params: Mapping[str, Any]) -> LazyInstance:
    if name not in INSTANCES:
        raise ValidationError(f"Unknown instance '{name}'", details={"known": sorted(INSTANCES)})
    schema, builder = INSTANCES[name]
    instance = builder(schema.model_validate(params))
    logger.debug("Lazy instance built", extra={"instance": name})
    return instance
