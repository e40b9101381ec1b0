from fastapi import APIRouter, Depends

from app.api.deps import get_command_service
from app.schemas.command import DominanceRequest
from app.schemas.dominance import DominanceVerdict
from app.services.command_service import CommandService

router = APIRouter()


@router.post("", response_model=DominanceVerdict)
def decide_dominance(
    request: DominanceRequest,
    service: CommandService = Depends(get_command_service),
) -> DominanceVerdict:
    """
    Decide whether mu1 is stochastically dominated by mu2.

    The verdict carries a flow certificate on the Hasse edges when it holds and
    an up-set with mu1(U) > mu2(U) when it does not.
    """
    return service.dominance_verdict(request)
