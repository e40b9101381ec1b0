from fastapi.testclient import TestClient

from app.core.config import settings
from main import app


def test_root_endpoint():
    # Test the root endpoint
    with TestClient(app) as client:
        response = client.get("/")
        assert response.status_code == 200
        assert response.json() == {"message": f"Welcome to {settings.PROJECT_NAME} API"}


def test_health_endpoint():
    with TestClient(app) as client:
        response = client.get("/v1/health")
        assert response.status_code == 200
        assert response.json() == {"status": "ok", "service": settings.PROJECT_NAME, "version": settings.VERSION}


def test_docs_endpoint():
    # Test that the OpenAPI docs are accessible
    with TestClient(app) as client:
        response = client.get("/docs")
        assert response.status_code == 200
        assert "text/html" in response.headers["content-type"]


def test_openapi_schema():
    # Test that the OpenAPI schema is accessible
    with TestClient(app) as client:
        response = client.get("/openapi.json")
        assert response.status_code == 200
        schema = response.json()

        # Check basic structure of the schema
        assert "openapi" in schema
        assert "info" in schema
        assert "paths" in schema

        # Check that our API endpoints are in the schema
        for path in (
            "/v1/dominance",
            "/v1/holley",
            "/v1/couplings",
            "/v1/decompositions",
            "/v1/transport/wasserstein",
            "/v1/transport/ring",
            "/v1/lattice-probe",
            "/v1/truncations",
            "/v1/verify",
        ):
            assert path in schema["paths"]
