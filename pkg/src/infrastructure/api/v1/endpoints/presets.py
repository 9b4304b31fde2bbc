from fastapi import APIRouter

from src.application.services.presets import list_presets, preset
from src.domain.entities.algorithm_config import AlgorithmConfig
from src.infrastructure.api.v1.errors import to_http_exception

router = APIRouter(
    prefix="/api/v1/presets",
    tags=["Presets"]
)


@router.get("/", response_model=list[str])
async def list_presets_endpoint():
    """Names of every shipped algorithm preset."""
    return list_presets()


@router.get("/{name}", response_model=AlgorithmConfig)
async def get_preset_endpoint(name: str):
    """The full dimension-by-dimension configuration of one preset."""
    try:
        return preset(name)
    except Exception as e:
        raise to_http_exception(e)
