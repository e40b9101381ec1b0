from fastapi import status

from app.core.error_handlers import ErrorHandler
from app.services.exceptions import (
    CyclicInput,
    Infeasible,
    InvariantViolation,
    MalformedInput,
    ServiceException,
)

SHORTCUT = {"edges": [["a", "b", "1"], ["b", "c", "2"], ["a", "c", "5"]]}


def test_input_error_is_bad_request(client):
    """Measures that are not probabilities are rejected by the service"""
    response = client.post(
        "/v1/dominance",
        json={"hasse": {"edges": [["a", "b"]]}, "mu1": {"a": "1/2"}, "mu2": {"b": 1}},
    )

    assert response.status_code == status.HTTP_400_BAD_REQUEST
    assert response.json() == {
        "error": {"message": "The first measure must be a probability measure", "code": "VALIDATION_ERROR", "details": {"total": "1/2"}}
    }


def test_cyclic_input_is_unprocessable(client):
    response = client.post(
        "/v1/dominance",
        json={"hasse": {"edges": [["a", "b"], ["b", "a"]]}, "mu1": {"a": 1}, "mu2": {"b": 1}},
    )

    assert response.status_code == status.HTTP_422_UNPROCESSABLE_ENTITY
    assert response.json()["error"]["code"] == "CYCLIC_INPUT"


def test_infeasible_is_conflict(client):
    response = client.post(
        "/v1/transport/wasserstein",
        json={"graph": SHORTCUT, "mu1": {"c": 1}, "mu2": {"a": 1}},
    )

    assert response.status_code == status.HTTP_409_CONFLICT
    assert response.json()["error"] == {
        "message": "Some demand cannot be reached from the supplies",
        "code": "INFEASIBLE",
        "details": {"supply": "1", "routed": "0"},
    }


def test_request_validation(client):
    """Schema violations share the error envelope"""
    response = client.post("/v1/dominance", json={"hasse": {"edges": [["a", "b"]]}, "mu1": {"a": 1}})

    assert response.status_code == status.HTTP_422_UNPROCESSABLE_ENTITY
    error = response.json()["error"]
    assert error["code"] == "VALIDATION_ERROR"
    assert "body.mu2" in error["details"]


def test_negative_weight_is_rejected(client):
    response = client.post(
        "/v1/couplings",
        json={"flow": {"edges": [["a", "b", "-1"]]}, "mu1": {"a": 1}},
    )

    assert response.status_code == status.HTTP_422_UNPROCESSABLE_ENTITY
    assert response.json()["error"]["code"] == "VALIDATION_ERROR"


def test_status_for_each_family():
    assert ErrorHandler.status_for(MalformedInput("bad")) == status.HTTP_400_BAD_REQUEST
    assert ErrorHandler.status_for(CyclicInput("cycle")) == status.HTTP_422_UNPROCESSABLE_ENTITY
    assert ErrorHandler.status_for(Infeasible("none")) == status.HTTP_409_CONFLICT
    assert ErrorHandler.status_for(InvariantViolation("bug")) == status.HTTP_500_INTERNAL_SERVER_ERROR
    assert ErrorHandler.status_for(ServiceException("other")) == status.HTTP_500_INTERNAL_SERVER_ERROR


def test_error_codes_default_to_family():
    error = Infeasible("none")
    custom = InvariantViolation("bug", error_code="COUPLING_COST_MISMATCH", details={"flow_cost": "1"})

    assert error.error_code == "INFEASIBLE"
    assert error.details == {}
    assert custom.error_code == "COUPLING_COST_MISMATCH"
    assert custom.details == {"flow_cost": "1"}
