from typing import Annotated, Optional

from fastapi import APIRouter, Depends
from pydantic import BaseModel, Field

from src.application.use_cases.compare_presets_use_case import ComparePresetsUseCase
from src.application.use_cases.verify_preset_use_case import VerifyPresetUseCase
from src.domain.entities.results import ComparisonReport, VerificationReport
from src.infrastructure.api.dependencies import (
    get_compare_presets_use_case_dependency,
    get_verify_preset_use_case_dependency,
)
from src.infrastructure.api.v1.errors import to_http_exception


class VerificationRequest(BaseModel):
    env: str
    preset: str
    tol: Optional[float] = Field(default=None, gt=0.0)
    seeds: int = Field(default=1, ge=1)
    roots: Optional[int] = Field(default=None, ge=1)


class ComparisonRequest(BaseModel):
    env: str
    presets: list[str] = Field(min_length=1)
    seeds: int = Field(default=1, ge=1)
    roots: Optional[int] = Field(default=None, ge=1)


router = APIRouter(
    prefix="/api/v1",
    tags=["Verifications"]
)


@router.post("/verifications", response_model=VerificationReport)
async def verify_preset_endpoint(
    verification_data: VerificationRequest,
    use_case: Annotated[VerifyPresetUseCase, Depends(get_verify_preset_use_case_dependency)],
):
    """
    Run the preset under `seeds` seeds and check each run against the oracle.
    A failed verification is still a 200 response with `passed = false`.
    """
    try:
        return await use_case.execute(
            verification_data.env,
            verification_data.preset,
            tol=verification_data.tol,
            seeds=verification_data.seeds,
            roots=verification_data.roots,
        )
    except Exception as e:
        raise to_http_exception(e)


@router.post("/comparisons", response_model=ComparisonReport)
async def compare_presets_endpoint(
    comparison_data: ComparisonRequest,
    use_case: Annotated[ComparePresetsUseCase, Depends(get_compare_presets_use_case_dependency)],
):
    try:
        return await use_case.execute(
            comparison_data.env,
            comparison_data.presets,
            seeds=comparison_data.seeds,
            roots=comparison_data.roots,
        )
    except Exception as e:
        raise to_http_exception(e)
