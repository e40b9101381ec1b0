"""Tests for flow service"""

import random
from fractions import Fraction

import pytest

from app.schemas.flow import DiscreteVectorField, Flow, PathMeasure
from app.schemas.graph import Digraph, DirectedCycle, DirectedPath
from app.schemas.measure import SignedMeasure
from app.schemas.transport import WeightedDigraph
from app.services.exceptions import CyclicSupport, NotAPath, UnrepresentableField, ValidationError
from tests.factories import random_dag, random_flow


def flow(*edges) -> Flow:
    return Flow.model_validate({"edges": [list(e) for e in edges]})


class TestDivergenceAndFields:
    """Test cases for divergence and discrete vector fields"""

    @pytest.fixture
    def service(self, flow_service):
        return flow_service

    @pytest.fixture
    def triangle(self):
        return Digraph(vertices=("a", "b", "c"), edges=(("a", "b"), ("b", "c"), ("a", "c")))

    def test_divergence_single_edge(self, service):
        div = service.divergence(flow(("a", "b", "1")))

        assert div.weights == {"a": 1, "b": -1}

    def test_divergence_sums_to_zero(self, service):
        rng = random.Random(7)
        q = random_flow(rng, random_dag(rng, 6))

        assert service.divergence(q).total() == 0

    def test_flow_from_path(self, service):
        q = service.flow_from_path(DirectedPath(vertices=("a", "b", "c")))

        assert q.edges == (("a", "b", 1), ("b", "c", 1))

    def test_flow_from_path_off_digraph(self, service, chain_abc):
        with pytest.raises(NotAPath) as exc_info:
            service.flow_from_path(DirectedPath(vertices=("a", "c")), chain_abc)

        assert exc_info.value.details["step"] == ["a", "c"]

    def test_project_to_field_nets_opposite_edges(self, service):
        phi = service.project_to_field(flow(("a", "b", "3"), ("b", "a", "1")))

        assert phi.edges == (("a", "b", Fraction(2)),)
        assert phi.value("b", "a") == -2

    def test_minimal_flow_from_field(self, service):
        # Setup
        digraph = Digraph(vertices=("a", "b"), edges=(("a", "b"), ("b", "a")))
        phi = DiscreteVectorField.from_values(("a", "b"), [("a", "b", Fraction(-2))])

        # Execute
        q = service.minimal_flow_from_field(phi, digraph)

        # Assert
        assert q.value("b", "a") == 2
        assert q.value("a", "b") == 0
        assert service.divergence(q).weights == service.field_divergence(phi).weights

    def test_minimal_flow_needs_carrier_edge(self, service):
        digraph = Digraph(vertices=("a", "b"), edges=(("a", "b"),))
        phi = DiscreteVectorField.from_values(("a", "b"), [("a", "b", Fraction(-2))])

        with pytest.raises(UnrepresentableField) as exc_info:
            service.minimal_flow_from_field(phi, digraph)

        assert exc_info.value.details == {"edge": ["b", "a"], "value": "2"}

    def test_gradient_field(self, service, chain_abc):
        phi = service.gradient_field({"a": Fraction(1), "b": Fraction(4), "c": Fraction(0)}, chain_abc)

        assert phi.edges == (("a", "b", Fraction(3)), ("b", "c", Fraction(-4)))

    def test_cycle_field(self, service, triangle):
        phi = service.cycle_field(DirectedCycle(vertices=("a", "b", "c", "a")), triangle)

        assert phi.stored == {("a", "b"): 1, ("b", "c"): 1, ("a", "c"): -1}
        assert service.field_divergence(phi).is_zero()

    def test_tree_particular_field(self, service, chain_abc):
        # Setup
        g = SignedMeasure.of({"a": Fraction(1), "b": Fraction(0), "c": Fraction(-1)})

        # Execute
        phi = service.tree_particular_field(g, chain_abc)

        # Assert
        assert phi.stored == {("a", "b"): 1, ("b", "c"): 1}
        assert service.field_divergence(phi).weights == g.weights

    def test_tree_particular_field_needs_zero_total(self, service, chain_abc):
        with pytest.raises(ValidationError):
            service.tree_particular_field(SignedMeasure.of({"a": Fraction(1)}), chain_abc)

    def test_cycle_potentials(self, service):
        delta = SignedMeasure.of({"a": Fraction(1, 2), "b": Fraction(-1, 2), "c": Fraction(0)})

        potentials = service.cycle_potentials(delta, DirectedCycle(vertices=("a", "b", "c", "a")))

        assert potentials == [Fraction(1, 2), 0, 0]

    def test_combine_fields(self, service, triangle):
        # Setup
        phi_star = DiscreteVectorField.from_values(
            triangle.vertices, [("a", "b", Fraction(1)), ("b", "c", Fraction(0)), ("a", "c", Fraction(0))]
        )
        cycle = service.cycle_field(DirectedCycle(vertices=("a", "b", "c", "a")), triangle)

        # Execute
        combined = service.combine_fields(phi_star, [cycle], [Fraction(-1, 2)])

        # Assert
        assert combined.stored == {("a", "b"): Fraction(1, 2), ("b", "c"): Fraction(-1, 2), ("a", "c"): Fraction(1, 2)}

    def test_combine_fields_needs_one_coefficient_per_cycle(self, service, triangle):
        phi = service.gradient_field({"a": 0, "b": 0, "c": 0}, triangle)

        with pytest.raises(ValidationError):
            service.combine_fields(phi, [phi], [])

    def test_pairing(self, service):
        wg = WeightedDigraph.model_validate({"edges": [["a", "b", "3"], ["b", "c", "1/2"]]})

        assert service.pairing(flow(("a", "b", "2"), ("b", "c", "2")), wg) == 7

    def test_pairing_unweighted_edge(self, service):
        wg = WeightedDigraph.model_validate({"vertices": ["a", "b"], "edges": []})

        with pytest.raises(ValidationError):
            service.pairing(flow(("a", "b", "1")), wg)


class TestDecompositions:
    """Test cases for cycle removal, path decompositions and stabilization"""

    @pytest.fixture
    def service(self, flow_service):
        return flow_service

    def test_remove_cycles_keeps_edges(self, service):
        q = service.remove_cycles(flow(("a", "b", "2"), ("b", "a", "1")))

        assert q.edges == (("a", "b", 1), ("b", "a", 0))

    def test_remove_cycles_preserves_divergence(self, service):
        # Setup
        q = flow(("a", "b", "2"), ("b", "c", "2"), ("c", "a", "1"), ("c", "d", "1"))

        # Execute
        reduced = service.remove_cycles(q)

        # Assert
        assert service.graphs.is_acyclic(reduced.support_digraph())
        assert service.divergence(reduced).weights == service.divergence(q).weights
        assert reduced.total_mass() == 3

    def test_path_decompose_chain(self, service):
        pm = service.path_decompose(flow(("a", "b", "1"), ("b", "c", "1")))

        assert pm.as_dict() == {("a", "b", "c"): 1}

    def test_path_decompose_diamond(self, service):
        q = flow(("a", "b", "1/2"), ("a", "c", "1/2"), ("b", "d", "1/2"), ("c", "d", "1/2"))

        pm = service.path_decompose(q)

        assert [(e.vertices, e.weight) for e in pm.paths] == [
            (("a", "b", "d"), Fraction(1, 2)),
            (("a", "c", "d"), Fraction(1, 2)),
        ]

    def test_path_decompose_stops_at_first_demand(self, service):
        q = flow(("a", "b", "1"), ("b", "c", "1/2"))

        pm = service.path_decompose(q)

        assert [(e.vertices, e.weight) for e in pm.paths] == [
            (("a", "b"), Fraction(1, 2)),
            (("a", "b", "c"), Fraction(1, 2)),
        ]

    def test_path_decompose_rejects_cycles(self, service):
        with pytest.raises(CyclicSupport) as exc_info:
            service.path_decompose(flow(("a", "b", "1"), ("b", "a", "1")))

        assert exc_info.value.details["cycle"][0] == exc_info.value.details["cycle"][-1]

    def test_path_decompose_zero_flow(self, service, chain_abc):
        assert service.path_decompose(Flow.zero(chain_abc)).paths == ()

    @pytest.mark.parametrize("seed", range(10))
    def test_decomposition_reproduces_random_flow(self, service, seed):
        # Setup
        rng = random.Random(seed)
        q = random_flow(rng, random_dag(rng, 7))

        # Execute
        pm = service.path_decompose(q)
        rebuilt = service.flow_from_decomposition(pm, q.digraph)

        # Assert
        assert rebuilt.values == q.values
        half = sum((abs(d) for d in service.divergence(q).weights.values()), Fraction(0)) / 2
        assert pm.total_weight() == half

    def test_flow_from_decomposition_off_digraph(self, service, chain_abc):
        pm = PathMeasure.of([(("a", "c"), Fraction(1))])

        with pytest.raises(NotAPath):
            service.flow_from_decomposition(pm, chain_abc)

    def test_decomposition_digraph(self, service):
        pm = PathMeasure.of([(("a", "b", "c"), Fraction(1)), (("d", "b"), Fraction(1))])

        g = service.decomposition_digraph(pm)

        assert g.vertices == ("a", "b", "c", "d")
        assert g.edges == (("a", "b"), ("b", "c"), ("d", "b"))

    def test_stabilize_concatenates(self, service):
        # Setup
        pm = PathMeasure.of([(("a", "b"), Fraction(1)), (("b", "c"), Fraction(1))])

        # Execute
        report = service.stabilize_with_report(pm)

        # Assert
        assert report.paths.as_dict() == {("a", "b", "c"): 1}
        assert [d.drift for d in report.drifts] == [1, 2]
        assert report.max_drift_ratio == 2
        assert report.violations == ()

    def test_stabilize_splits_by_weight(self, service):
        pm = PathMeasure.of([(("a", "b"), Fraction(1)), (("b", "c"), Fraction(1, 3))])

        stable = service.stabilize_decomposition(pm)

        assert stable.as_dict() == {("a", "b"): Fraction(2, 3), ("a", "b", "c"): Fraction(1, 3)}

    def test_stabilize_rejects_cyclic_collection(self, service):
        pm = PathMeasure.of([(("a", "b"), Fraction(1)), (("b", "a"), Fraction(1))])

        with pytest.raises(CyclicSupport):
            service.stabilize_decomposition(pm)
