from fastapi import APIRouter, Depends

from app.api.deps import get_command_service
from app.schemas.command import LatticeRequest, RingRequest, WassersteinRequest
from app.schemas.transport import LatticeProbeReport, RingOptimum, TransportResult
from app.services.command_service import CommandService

router = APIRouter()


@router.post("/transport/wasserstein", response_model=TransportResult)
def wasserstein(
    request: WassersteinRequest,
    service: CommandService = Depends(get_command_service),
) -> TransportResult:
    """
    Optimal transport cost under geodesic costs.

    - beckmann: min-cost flow with divergence mu1 - mu2
    - kantorovich: optimal coupling against the geodesic cost matrix
    """
    return service.wasserstein(request)


@router.post("/transport/ring", response_model=RingOptimum)
def ring(
    request: RingRequest,
    service: CommandService = Depends(get_command_service),
) -> RingOptimum:
    return service.ring(request)


@router.post("/lattice-probe", response_model=LatticeProbeReport)
def lattice_probe(
    request: LatticeRequest,
    service: CommandService = Depends(get_command_service),
) -> LatticeProbeReport:
    """Costs of seeded random Hasse flows on {0,1}^N against the Hamming-cost optimum"""
    return service.lattice_probe(request)
