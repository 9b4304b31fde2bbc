from typing import Annotated, Optional

from fastapi import APIRouter, Depends, status
from pydantic import BaseModel, Field

from src.application.services.presets import preset
from src.application.use_cases.run_algorithm_use_case import RunAlgorithmUseCase
from src.domain.entities.results import MetricsRow
from src.domain.entities.solution import GlobalSnapshot
from src.infrastructure.api.dependencies import get_run_algorithm_use_case_dependency
from src.infrastructure.api.v1.errors import to_http_exception
from src.infrastructure.config.algorithm_config_file import apply_overrides
from src.infrastructure.metrics.metrics_writer import rows_from_result


class RunRequest(BaseModel):
    env: str
    preset: str
    overrides: Optional[dict[str, str]] = None
    roots: Optional[int] = Field(default=None, ge=1)
    seed: int = 0

    model_config = {
        "json_schema_extra": {
            "example": {
                "env": "builtin:chain3",
                "preset": "q_learning",
                "overrides": {"select.eps": "0.2"},
                "roots": 500,
                "seed": 7,
            }
        }
    }


class RunSummary(BaseModel):
    preset: str
    seed: int
    query_count: int
    converged: bool
    roots_processed: int
    recommended_action: Optional[int] = None
    global_snapshot: GlobalSnapshot
    metrics: list[MetricsRow]


router = APIRouter(
    prefix="/api/v1/runs",
    tags=["Runs"]
)


@router.post("/", response_model=RunSummary, status_code=status.HTTP_201_CREATED)
async def create_run_endpoint(
    run_data: RunRequest,
    use_case: Annotated[RunAlgorithmUseCase, Depends(get_run_algorithm_use_case_dependency)],
):
    """
    Run a preset, optionally with key=value overrides, on an MDP file or a built-in
    environment and return the final global solution with per-root metrics.
    """
    try:
        config = preset(run_data.preset)
        if run_data.overrides:
            config = apply_overrides(config, run_data.overrides)
        result = await use_case.execute(run_data.env, config, roots=run_data.roots, seed=run_data.seed)
    except Exception as e:
        raise to_http_exception(e)
    return RunSummary(
        preset=result.preset,
        seed=result.seed,
        query_count=result.query_count,
        converged=result.converged,
        roots_processed=len(result.records),
        recommended_action=result.recommended_action,
        global_snapshot=result.global_snapshot,
        metrics=rows_from_result(result),
    )
