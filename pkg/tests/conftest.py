import os

# Quiet logs and fixed probes for the whole run
os.environ.setdefault("LOG_LEVEL", "WARNING")
os.environ.setdefault("DEFAULT_SEED", "0")

import pytest
from fastapi.testclient import TestClient

from app.api.deps import get_command_service
from app.schemas.graph import Digraph, PartialOrderRelation
from app.services.command_service import CommandService
from app.services.coupling_service import CouplingService
from app.services.dominance_service import DominanceService
from app.services.flow_service import FlowService
from app.services.graph_service import GraphService
from app.services.measure_service import MeasureService
from app.services.transport_service import TransportService
from app.services.truncation_service import TruncationService
from main import app


@pytest.fixture
def graph_service():
    return GraphService()


@pytest.fixture
def measure_service():
    return MeasureService()


@pytest.fixture
def flow_service(graph_service):
    return FlowService(graph_service)


@pytest.fixture
def coupling_service(flow_service, measure_service):
    return CouplingService(flow_service, measure_service)


@pytest.fixture
def dominance_service(coupling_service):
    return DominanceService(coupling_service)


@pytest.fixture
def transport_service(dominance_service):
    return TransportService(dominance_service)


@pytest.fixture
def truncation_service(coupling_service):
    return TruncationService(coupling_service)


@pytest.fixture
def command_service(transport_service, truncation_service):
    return CommandService(transport_service, truncation_service)


@pytest.fixture
def client(command_service):
    """Test client wired to a fresh CommandService"""
    app.dependency_overrides[get_command_service] = lambda: command_service
    with TestClient(app) as test_client:
        yield test_client
    app.dependency_overrides.clear()


@pytest.fixture
def chain_abc():
    """Chain a < b < c as a Hasse digraph"""
    return Digraph(vertices=("a", "b", "c"), edges=(("a", "b"), ("b", "c")))


@pytest.fixture
def diamond():
    """Diamond poset A < B, C < D"""
    return PartialOrderRelation(
        vertices=("A", "B", "C", "D"),
        pairs=(("A", "B"), ("A", "C"), ("A", "D"), ("B", "D"), ("C", "D")),
    )
