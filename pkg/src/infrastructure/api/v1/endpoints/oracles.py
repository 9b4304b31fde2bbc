from typing import Annotated

from fastapi import APIRouter, Depends
from pydantic import BaseModel, Field

from src.application.use_cases.solve_oracle_use_case import SolveOracleUseCase
from src.domain.entities.results import OracleResult
from src.infrastructure.api.dependencies import get_solve_oracle_use_case_dependency
from src.infrastructure.api.v1.errors import to_http_exception


class OracleRequest(BaseModel):
    env: str
    tol: float = Field(default=1e-9, gt=0.0)


router = APIRouter(
    prefix="/api/v1/oracles",
    tags=["Oracles"]
)


@router.post("/", response_model=OracleResult)
async def solve_oracle_endpoint(
    oracle_data: OracleRequest,
    use_case: Annotated[SolveOracleUseCase, Depends(get_solve_oracle_use_case_dependency)],
):
    """Exact V*, Q* and the set of optimal actions per state, by value iteration."""
    try:
        return await use_case.execute(oracle_data.env, tol=oracle_data.tol)
    except Exception as e:
        raise to_http_exception(e)
