from typing import Union

from fastapi import APIRouter, Depends

from app.api.deps import get_command_service
from app.schemas.command import HolleyRequest
from app.schemas.dominance import HolleySearchResult, HolleyVerdict
from app.services.command_service import CommandService

router = APIRouter()


@router.post("", response_model=Union[HolleySearchResult, HolleyVerdict])
def holley(
    request: HolleyRequest,
    service: CommandService = Depends(get_command_service),
) -> Union[HolleySearchResult, HolleyVerdict]:
    """Holley's lattice condition, or a search for a tilting measure when 'search' is set"""
    return service.holley(request)
