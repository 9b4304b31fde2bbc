import asyncio

from src.application.services.oracles import DEFAULT_MAX_ITERATIONS, oracle_value_iteration
from src.domain.entities.results import OracleResult
from src.domain.repositories.mdp_repository import MdpRepository


class SolveOracleUseCase:
    def __init__(self, mdp_repository: MdpRepository, max_iterations: int = DEFAULT_MAX_ITERATIONS):
        self.mdp_repository = mdp_repository
        self.max_iterations = max_iterations

    async def execute(self, env: str, tol: float = 1e-9, record_history: bool = False) -> OracleResult:
        mdp = await self.mdp_repository.get(env)
        return await asyncio.to_thread(oracle_value_iteration, mdp, tol, self.max_iterations, record_history)
