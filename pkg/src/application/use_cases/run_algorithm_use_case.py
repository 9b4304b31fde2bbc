import asyncio
import logging
from typing import Optional

from src.application.services.frap_engine import run
from src.domain.entities.algorithm_config import AlgorithmConfig
from src.domain.entities.mdp import AccessMode, TabularMdp
from src.domain.entities.results import RunResult
from src.domain.repositories.mdp_repository import MdpRepository
from src.domain.services.access import AccessHandle

logger = logging.getLogger(__name__)


def run_blocking(
    config: AlgorithmConfig,
    mdp: TabularMdp,
    roots: Optional[int],
    seed: int,
    access: Optional[AccessMode] = None,
    record_timing: bool = False,
) -> RunResult:
    """One complete run on a fresh handle; the handle gets the run seed, the engine a derived stream."""
    handle = AccessHandle(mdp, access or config.access_required, seed=seed)
    return run(config, handle, root_budget=roots, seed=seed, record_timing=record_timing)


class RunAlgorithmUseCase:
    def __init__(self, mdp_repository: MdpRepository):
        self.mdp_repository = mdp_repository

    async def execute(
        self,
        env: str,
        config: AlgorithmConfig,
        roots: Optional[int] = None,
        seed: int = 0,
        access: Optional[AccessMode] = None,
        record_timing: bool = False,
    ) -> RunResult:
        """
        Loads the environment and runs the configuration on it:
        1. Resolves `env` through the repository.
        2. Runs the engine in a worker thread so the event loop stays free.
        """
        mdp = await self.mdp_repository.get(env)
        result = await asyncio.to_thread(run_blocking, config, mdp, roots, seed, access, record_timing)
        logger.info("Run of %s on %s finished with %d queries", config.name, env, result.query_count)
        return result
