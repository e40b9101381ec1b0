from typing import Union

from fastapi import APIRouter, Depends

from app.api.deps import get_command_service
from app.schemas.command import DecomposeRequest
from app.schemas.flow import PathMeasure, StabilizationReport
from app.services.command_service import CommandService

router = APIRouter()


@router.post("", response_model=Union[StabilizationReport, PathMeasure])
def decompose_flow(
    request: DecomposeRequest,
    service: CommandService = Depends(get_command_service),
) -> Union[StabilizationReport, PathMeasure]:
    """Path decomposition of an acyclic flow, optionally stabilized"""
    return service.decompose(request)
