"""Tests for coupling service"""

import random
from fractions import Fraction

import pytest

from app.schemas.coupling import Coupling, CostMatrix
from app.schemas.flow import Flow
from app.schemas.graph import DirectedPath, PartialOrderRelation
from app.schemas.measure import Measure
from app.services.exceptions import CyclicSupport, MissingPath, NegativeTarget, ValidationError, WeightMismatch
from tests.factories import measure, random_dag, random_flow


def flow(*edges) -> Flow:
    return Flow.model_validate({"edges": [list(e) for e in edges]})


class TestCouplingBasics:
    """Test cases for marginals, compatibility and path choices"""

    @pytest.fixture
    def service(self, coupling_service):
        return coupling_service

    @pytest.fixture
    def coupling(self):
        return Coupling.model_validate(
            {"vertices": ["a", "b", "c"], "pairs": [["a", "c", "1/2"], ["b", "b", "1/2"]]}
        )

    def test_marginals(self, service, coupling):
        rows, cols = service.marginals(coupling)

        assert rows.weights == {"a": Fraction(1, 2), "b": Fraction(1, 2), "c": 0}
        assert cols.weights == {"a": 0, "b": Fraction(1, 2), "c": Fraction(1, 2)}

    def test_is_compatible(self, service, coupling, graph_service, chain_abc):
        rel = graph_service.order_of(chain_abc)
        reversed_rel = PartialOrderRelation(
            vertices=("a", "b", "c"), pairs=(("c", "b"), ("c", "a"), ("b", "a"))
        )

        assert service.is_compatible(coupling, rel)
        assert not service.is_compatible(coupling, reversed_rel)

    def test_flow_from_coupling_with_path(self, service, coupling, chain_abc):
        # Execute
        q = service.flow_from_coupling(coupling, chain_abc, {("a", "c"): DirectedPath(vertices=("a", "b", "c"))})

        # Assert
        assert q.values == {("a", "b"): Fraction(1, 2), ("b", "c"): Fraction(1, 2)}

    def test_flow_from_coupling_missing_path(self, service, coupling, chain_abc):
        with pytest.raises(MissingPath) as exc_info:
            service.flow_from_coupling(coupling, chain_abc, {})

        assert exc_info.value.details == {"pair": ["a", "c"]}

    def test_flow_from_coupling_wrong_endpoints(self, service, coupling, chain_abc):
        with pytest.raises(MissingPath):
            service.flow_from_coupling(coupling, chain_abc, {("a", "c"): DirectedPath(vertices=("a", "b"))})

    def test_flow_from_coupling_weight_mismatch(self, service, coupling, chain_abc):
        family = [(DirectedPath(vertices=("a", "b", "c")), Fraction(1, 4))]

        with pytest.raises(WeightMismatch):
            service.flow_from_coupling(coupling, chain_abc, {("a", "c"): family})

    def test_shortest_path_choice(self, service, coupling, chain_abc):
        choice = service.shortest_path_choice(coupling, chain_abc)

        assert choice == {("a", "c"): DirectedPath(vertices=("a", "b", "c"))}

    def test_shortest_path_choice_unreachable(self, service, chain_abc):
        backwards = Coupling.model_validate({"vertices": ["a", "b", "c"], "pairs": [["c", "a", "1"]]})

        with pytest.raises(MissingPath):
            service.shortest_path_choice(backwards, chain_abc)

    def test_expected_cost(self, service, coupling):
        costs = CostMatrix.model_validate(
            {"vertices": ["a", "b", "c"], "costs": [["a", "c", "2"], ["b", "b", "0"]]}
        )

        assert service.expected_cost(coupling, costs) == 1

    def test_expected_cost_infinite_pair(self, service, coupling):
        costs = CostMatrix.model_validate({"vertices": ["a", "b", "c"], "costs": [["a", "c", "2"]]})

        with pytest.raises(ValidationError) as exc_info:
            service.expected_cost(coupling, costs)

        assert exc_info.value.details == {"pair": ["b", "b"]}


class TestEconomicCouplings:
    """Test cases for one-step flows and economic reduction"""

    @pytest.fixture
    def service(self, coupling_service):
        return coupling_service

    @pytest.fixture
    def wasteful(self):
        return Coupling.model_validate(
            {"vertices": ["a", "b"], "pairs": [["a", "b", "1/2"], ["b", "a", "1/4"], ["b", "b", "1/4"]]}
        )

    def test_one_step_flow(self, service, wasteful):
        q = service.one_step_flow(wasteful)

        assert q.values == {("a", "b"): Fraction(1, 2), ("b", "a"): Fraction(1, 4)}

    def test_is_economic(self, service, wasteful):
        assert not service.is_economic(wasteful)

    def test_reduce_to_economic_keeps_marginals(self, service, wasteful):
        # Execute
        reduced = service.reduce_to_economic(wasteful)

        # Assert
        assert reduced.pairs == (
            ("a", "a", Fraction(1, 4)),
            ("a", "b", Fraction(1, 4)),
            ("b", "b", Fraction(1, 2)),
        )
        assert service.is_economic(reduced)
        before, after = service.marginals(wasteful), service.marginals(reduced)
        assert before[0].weights == after[0].weights
        assert before[1].weights == after[1].weights


class TestFlowToCoupling:
    """Test cases for the ledger and decomposition builders"""

    @pytest.fixture
    def service(self, coupling_service):
        return coupling_service

    @pytest.fixture
    def chain_flow(self):
        return flow(("a", "b", "1/2"), ("b", "c", "1/2"))

    @pytest.fixture
    def mu1(self):
        return measure(a="1/2", b="1/2", c=0)

    def test_target_measure(self, service, chain_flow, mu1):
        mu2 = service.target_measure(chain_flow, mu1)

        assert mu2.weights == {"a": 0, "b": Fraction(1, 2), "c": Fraction(1, 2)}

    def test_target_measure_negative(self, service, chain_flow):
        with pytest.raises(NegativeTarget) as exc_info:
            service.target_measure(chain_flow, measure(c=1))

        assert exc_info.value.details == {"vertices": {"a": "-1/2"}}

    def test_ledger_moves_lowest_type_first(self, service, chain_flow, mu1):
        # Execute
        c = service.coupling_from_flow_ledger(chain_flow, mu1)

        # Assert
        assert c.pairs == (("a", "c", Fraction(1, 2)), ("b", "b", Fraction(1, 2)))

    def test_ledger_parcels_reproduce_flow(self, service, chain_flow, mu1):
        # Execute
        ledger = service.coupling_from_flow_ledger_with_parcels(chain_flow, mu1)
        choice = service.parcel_path_choice(ledger)
        rebuilt = service.flow_from_coupling(ledger.coupling, chain_flow.digraph, choice)

        # Assert
        assert [(p.vertices, p.weight) for p in ledger.parcels] == [
            (("b",), Fraction(1, 2)),
            (("a", "b", "c"), Fraction(1, 2)),
        ]
        assert rebuilt.values == chain_flow.values

    def test_ledger_full_transfer(self, service):
        q = flow(("a", "b", "1"), ("b", "c", "1/2"))

        c = service.coupling_from_flow_ledger(q, measure(a=1, b=0, c=0))

        assert c.pairs == (("a", "b", Fraction(1, 2)), ("a", "c", Fraction(1, 2)))

    def test_ledger_rejects_cyclic_support(self, service):
        with pytest.raises(CyclicSupport):
            service.coupling_from_flow_ledger(flow(("a", "b", "1"), ("b", "a", "1")), measure(a=1, b=1))

    def test_decomposition_coupling(self, service, chain_flow, mu1):
        c = service.coupling_from_flow_decomposition(chain_flow, mu1)

        assert c.pairs == (("a", "c", Fraction(1, 2)), ("b", "b", Fraction(1, 2)))

    def test_decomposition_rejects_negative_target(self, service, chain_flow):
        with pytest.raises(NegativeTarget):
            service.coupling_from_flow_decomposition(chain_flow, measure(c=1))

    @pytest.mark.parametrize("seed", range(8))
    def test_builders_have_the_right_marginals(self, service, seed):
        # Setup
        rng = random.Random(seed)
        q = random_flow(rng, random_dag(rng, 6))
        div = service.flows.divergence(q)
        mu1 = Measure(weights={v: max(div.get(v), Fraction(0)) + rng.randint(0, 2) for v in q.vertices})
        mu2 = service.target_measure(q, mu1)

        for builder in (service.coupling_from_flow_ledger, service.coupling_from_flow_decomposition):
            # Execute
            c = builder(q, mu1)

            # Assert
            rows, cols = service.marginals(c)
            assert rows.weights == mu1.weights
            assert cols.weights == mu2.weights
            assert service.is_compatible(c, service.graphs.order_of(q.support_digraph()))
