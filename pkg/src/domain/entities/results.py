from enum import Enum
from typing import Optional

from pydantic import BaseModel, Field

from src.domain.entities.algorithm_config import AlgorithmConfig
from src.domain.entities.solution import GlobalSnapshot


class RootRecord(BaseModel):
    iteration: int
    root: int
    trials: int
    residual: float
    v_root: float
    # discounted return of the real episode that finished while processing this root
    episode_return: Optional[float] = None
    queries: int
    wall_ms: float = 0.0


class RunResult(BaseModel):
    preset: str
    records: list[RootRecord] = Field(default_factory=list)
    global_snapshot: GlobalSnapshot
    local_values: dict[int, float] = Field(default_factory=dict)
    query_count: int
    wall_time_ms: float
    seed: int
    config: AlgorithmConfig
    converged: bool = False
    sweep_values: list[list[float]] = Field(default_factory=list)
    episode_returns: list[float] = Field(default_factory=list)
    recommended_action: Optional[int] = None
    first_root: Optional[int] = None


class OracleResult(BaseModel):
    v_star: list[float]
    q_star: list[list[float]]
    optimal_policy: list[list[int]]
    iterations: int
    residual: float
    history: Optional[list[list[float]]] = None


class MetricsRow(BaseModel):
    iter: int
    root: int
    v_root: float
    residual: float
    episode_return: Optional[float] = None
    queries: int
    wall_ms: float = 0.0


class CheckKind(str, Enum):
    VALUE_SUP = "value_sup"
    ROOT_VALUE = "root_value"
    GREEDY_POLICY = "greedy_policy"
    ROOT_ACTION = "root_action"
    POLICY_VALUE = "policy_value"


class VerifyCriterion(BaseModel):
    check: CheckKind
    tol: float = 1e-6
    roots: Optional[int] = None
    min_pass_fraction: float = Field(default=1.0, ge=0.0, le=1.0)


class SeedVerdict(BaseModel):
    seed: int
    passed: bool
    error: float
    detail: str = ""


class VerificationReport(BaseModel):
    env: str
    preset: str
    check: CheckKind
    tol: float
    seeds: int
    passes: int
    required: int
    passed: bool
    verdicts: list[SeedVerdict] = Field(default_factory=list)


class ComparisonRow(BaseModel):
    preset: str
    seed: int
    mean_return: Optional[float] = None
    queries: int
    v_root: float


class ComparisonReport(BaseModel):
    env: str
    presets: list[str]
    rows: list[ComparisonRow] = Field(default_factory=list)
    median_queries: dict[str, float] = Field(default_factory=dict)
    median_return: dict[str, Optional[float]] = Field(default_factory=dict)
