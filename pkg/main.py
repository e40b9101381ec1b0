import time

import uvicorn
from fastapi import APIRouter, FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from pydantic import ValidationError

from app.api import couplings, decompositions, dominance, health, holley, transport, truncations, verify
from app.core.config import settings
from app.core.error_handlers import (
    general_exception_handler,
    http_exception_handler,
    service_exception_handler,
    validation_exception_handler,
)
from app.core.logging import setup_logging
from app.services.exceptions import ServiceException

# Setup logging
logger = setup_logging()


app = FastAPI(
    title=f"{settings.PROJECT_NAME} API",
    description="""
    Exact-arithmetic operations on flows and couplings over finite digraphs:

    * Stochastic dominance on finite posets with flow or up-set certificates
    * Couplings built from acyclic flows (ledger and path-decomposition algorithms)
    * Path decompositions and their stabilization
    * Optimal transport in its flow (Beckmann) and coupling (Kantorovich) forms
    * Holley's condition on finite lattices
    * Truncations of countable instances through ghost sites

    Rationals are exchanged as strings such as `"3/10"`.
    """,
    version=settings.VERSION,
    docs_url="/docs",
    redoc_url="/redoc",
    openapi_url="/openapi.json",
    openapi_tags=[
        {"name": "Dominance", "description": "Dominance verdicts and Holley's condition"},
        {"name": "Couplings", "description": "Flow to coupling algorithms"},
        {"name": "Decompositions", "description": "Path decompositions of acyclic flows"},
        {"name": "Transport", "description": "Optimal transport and lattice probes"},
        {"name": "Truncations", "description": "Countable instances seen through finite truncations"},
        {"name": "Verification", "description": "Invariant reports for artifacts"},
        {"name": "Health", "description": "API health check endpoints"},
    ],
)

logger.info(f"🌍 Environment: {settings.ENV}")

# Add error handlers
app.add_exception_handler(ServiceException, service_exception_handler)
app.add_exception_handler(RequestValidationError, validation_exception_handler)
app.add_exception_handler(ValidationError, validation_exception_handler)
app.add_exception_handler(HTTPException, http_exception_handler)
app.add_exception_handler(Exception, general_exception_handler)


# Logging middleware
@app.middleware("http")
async def log_requests(request: Request, call_next):
    start_time = time.time()
    response = await call_next(request)
    process_time = time.time() - start_time

    # Log request details
    logger.info(
        f"{request.method} {request.url.path} {response.status_code} "
        f"Completed in {process_time:.4f}s"
    )

    return response


# API versioning
v1_router = APIRouter(prefix=settings.API_V1_STR)

# Include routers in v1
v1_router.include_router(dominance.router, prefix="/dominance", tags=["Dominance"])
v1_router.include_router(holley.router, prefix="/holley", tags=["Dominance"])
v1_router.include_router(couplings.router, prefix="/couplings", tags=["Couplings"])
v1_router.include_router(decompositions.router, prefix="/decompositions", tags=["Decompositions"])
v1_router.include_router(transport.router, tags=["Transport"])
v1_router.include_router(truncations.router, prefix="/truncations", tags=["Truncations"])
v1_router.include_router(verify.router, prefix="/verify", tags=["Verification"])
v1_router.include_router(health.router, tags=["Health"])

# Include versioned router in the main app
app.include_router(v1_router)


@app.get("/")
async def root():
    return {"message": f"Welcome to {settings.PROJECT_NAME} API"}


if __name__ == "__main__":
    uvicorn.run("main:app", host="0.0.0.0", port=8000, reload=True)
