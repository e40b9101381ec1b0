from typing import Union

from fastapi import APIRouter, Depends

from app.api.deps import get_command_service
from app.schemas.command import TruncateRequest
from app.schemas.coupling import Coupling
from app.schemas.truncation import (
    ChainWindowFlow,
    DecomposabilityAssessment,
    FluxReport,
    SupTailReport,
    TreeEdgeFlow,
    TruncatedInstance,
)
from app.services.command_service import CommandService

router = APIRouter()

TruncationResponse = Union[
    TruncatedInstance,
    Coupling,
    FluxReport,
    SupTailReport,
    DecomposabilityAssessment,
    TreeEdgeFlow,
    ChainWindowFlow,
]


@router.post("", response_model=TruncationResponse)
def truncate(
    request: TruncateRequest,
    service: CommandService = Depends(get_command_service),
) -> TruncationResponse:
    """
    Reports on a built-in countable instance ("z-chain" or "binary-tree").

    The 'report' field picks the ghost truncation itself, the truncated
    coupling, the flux sequence, the sup-tail evidence, the combined
    assessment, one infinite-tree edge value or the integer-chain window flow.
    """
    return service.truncate(request)
