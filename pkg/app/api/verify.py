from fastapi import APIRouter, Depends

from app.api.deps import get_command_service
from app.schemas.command import VerifyReport, VerifyRequest
from app.services.command_service import CommandService

router = APIRouter()


@router.post("", response_model=VerifyReport)
def verify(
    request: VerifyRequest,
    service: CommandService = Depends(get_command_service),
) -> VerifyReport:
    return service.verify(request)
