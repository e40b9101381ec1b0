from fastapi import APIRouter, Depends

from app.api.deps import get_command_service
from app.schemas.command import CoupleRequest
from app.schemas.coupling import Coupling
from app.services.command_service import CommandService

router = APIRouter()


@router.post("", response_model=Coupling)
def build_coupling(
    request: CoupleRequest,
    service: CommandService = Depends(get_command_service),
) -> Coupling:
    """Coupling of mu1 and mu1 - div Q built from an acyclic flow"""
    return service.couple(request)
