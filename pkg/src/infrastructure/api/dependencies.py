from fastapi import Depends

from src.application.use_cases.compare_presets_use_case import ComparePresetsUseCase
from src.application.use_cases.run_algorithm_use_case import RunAlgorithmUseCase
from src.application.use_cases.solve_oracle_use_case import SolveOracleUseCase
from src.application.use_cases.verify_preset_use_case import VerifyPresetUseCase
from src.domain.repositories.mdp_repository import MdpRepository
from src.infrastructure.config.settings import FrapSettings, get_settings
from src.infrastructure.config.verify_manifest import load_manifest
from src.infrastructure.persistence.file_mdp_repository import FileMdpRepository


# 1. Settings Provider
async def get_settings_dependency() -> FrapSettings:
    return get_settings()


# 2. Repository Provider
async def get_mdp_repository_dependency() -> MdpRepository:
    # Relative MDP paths resolve against the server's working directory.
    return FileMdpRepository()


# 3. Use Case Providers
async def get_run_algorithm_use_case_dependency(
    mdp_repo: MdpRepository = Depends(get_mdp_repository_dependency),
) -> RunAlgorithmUseCase:
    return RunAlgorithmUseCase(mdp_repository=mdp_repo)


async def get_solve_oracle_use_case_dependency(
    mdp_repo: MdpRepository = Depends(get_mdp_repository_dependency),
    settings: FrapSettings = Depends(get_settings_dependency),
) -> SolveOracleUseCase:
    return SolveOracleUseCase(mdp_repository=mdp_repo, max_iterations=settings.FRAP_ORACLE_MAX_ITERATIONS)


async def get_verify_preset_use_case_dependency(
    mdp_repo: MdpRepository = Depends(get_mdp_repository_dependency),
    settings: FrapSettings = Depends(get_settings_dependency),
) -> VerifyPresetUseCase:
    manifest = load_manifest(settings.FRAP_VERIFY_MANIFEST)
    return VerifyPresetUseCase(mdp_repository=mdp_repo, manifest=manifest, workers=settings.FRAP_WORKERS)


async def get_compare_presets_use_case_dependency(
    mdp_repo: MdpRepository = Depends(get_mdp_repository_dependency),
    settings: FrapSettings = Depends(get_settings_dependency),
) -> ComparePresetsUseCase:
    return ComparePresetsUseCase(mdp_repository=mdp_repo, workers=settings.FRAP_WORKERS)
