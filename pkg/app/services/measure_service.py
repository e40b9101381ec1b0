"""Measure service for differences, parts and distribution functions"""

import logging
from fractions import Fraction
from typing import Sequence

from app.core.rationals import total
from app.schemas.measure import Measure, SignedMeasure
from app.services.exceptions import ValidationError, VertexMismatch

logger = logging.getLogger(__name__)


class MeasureService:
    """Service for exact arithmetic on measures over a finite vertex set"""

    @staticmethod
    def _union(m1: SignedMeasure, m2: SignedMeasure) -> list[str]:
        """Vertices of ``m1`` then the new ones of ``m2``; absent vertices weigh 0"""
        return list(m1.weights) + [v for v in m2.weights if v not in m1.weights]

    def align(self, measure: SignedMeasure, vertices: Sequence[str], name: str = "measure"):
        """List ``measure`` on ``vertices``; it may not charge anything outside them"""
        known = set(vertices)
        stray = [v for v in measure.support() if v not in known]
        if stray:
            raise VertexMismatch(
                f"The {name} charges vertices outside the instance",
                details={"vertices": stray},
            )
        return measure.extended_to(vertices)

    def require_probability(self, measure: Measure, name: str = "measure") -> None:
        if not measure.is_probability():
            raise ValidationError(
                f"The {name} must be a probability measure",
                details={"total": str(measure.total())},
            )

    def difference(self, m1: SignedMeasure, m2: SignedMeasure) -> SignedMeasure:
        return SignedMeasure(weights={v: m1.get(v) - m2.get(v) for v in self._union(m1, m2)})

    def positive_negative_parts(self, d: SignedMeasure) -> tuple[Measure, Measure]:
        positive = {v: (w if w > 0 else Fraction(0)) for v, w in d.weights.items()}
        negative = {v: (-w if w < 0 else Fraction(0)) for v, w in d.weights.items()}
        return Measure(weights=positive), Measure(weights=negative)

    def half_total_variation(self, m1: SignedMeasure, m2: SignedMeasure) -> Fraction:
        return total(abs(m1.get(v) - m2.get(v)) for v in self._union(m1, m2)) / 2

    def distribution_function(self, m: Measure, chain_order: Sequence[str]) -> dict[str, Fraction]:
        listed = set(chain_order)
        missing = [v for v in m.support() if v not in listed]
        if missing:
            raise VertexMismatch("The chain does not list every support vertex", details={"vertices": missing})
        running = Fraction(0)
        cdf: dict[str, Fraction] = {}
        for vertex in chain_order:
            running += m.get(vertex)
            cdf[vertex] = running
        return cdf

    def v_minus_v_plus(self, m1: SignedMeasure, m2: SignedMeasure) -> tuple[tuple[str, ...], tuple[str, ...]]:
        vertices = self._union(m1, m2)
        v_minus = tuple(v for v in vertices if m1.get(v) > m2.get(v))
        v_plus = tuple(v for v in vertices if m1.get(v) < m2.get(v))
        return v_minus, v_plus

    def minimum(self, m1: Measure, m2: Measure) -> Measure:
        return Measure(weights={v: min(m1.get(v), m2.get(v)) for v in self._union(m1, m2)})

    def add(self, m1: SignedMeasure, m2: SignedMeasure) -> SignedMeasure:
        vertices = self._union(m1, m2)
        return SignedMeasure(weights={v: m1.get(v) + m2.get(v) for v in vertices})

    def expectation(self, m: SignedMeasure, f: dict[str, Fraction]) -> Fraction:
        return total(w * f[v] for v, w in m.weights.items() if w != 0)

