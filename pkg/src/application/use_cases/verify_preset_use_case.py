import asyncio
import logging
import math
from typing import Mapping, Optional

from src.application.services.frap_engine import validate_config
from src.application.services.oracles import oracle_value_iteration
from src.application.services.presets import preset
from src.application.services.verification import check_run
from src.application.use_cases.run_algorithm_use_case import run_blocking
from src.domain.entities.mdp import TabularMdp
from src.domain.entities.results import OracleResult, SeedVerdict, VerificationReport, VerifyCriterion
from src.domain.errors import ConfigError, FrapError
from src.domain.repositories.mdp_repository import MdpRepository
from src.domain.services.access import AccessHandle

logger = logging.getLogger(__name__)

ORACLE_TOL = 1e-10


class VerifyPresetUseCase:
    """
    Runs a preset under several seeds and checks every run against the oracle with
    the preset's criterion from the verification manifest.
    """

    def __init__(self, mdp_repository: MdpRepository, manifest: Mapping[str, VerifyCriterion], workers: int = 4):
        self.mdp_repository = mdp_repository
        self.manifest = manifest
        self.workers = max(1, workers)

    async def execute(
        self,
        env: str,
        preset_name: str,
        tol: Optional[float] = None,
        seeds: int = 1,
        roots: Optional[int] = None,
        base_seed: int = 0,
    ) -> VerificationReport:
        config = preset(preset_name)
        criterion = self.manifest.get(preset_name)
        if criterion is None:
            raise ConfigError(f"no verification criterion for preset '{preset_name}'")
        tol = criterion.tol if tol is None else tol
        roots = roots if roots is not None else criterion.roots

        mdp = await self.mdp_repository.get(env)
        validate_config(config, AccessHandle(mdp, config.access_required))
        oracle = await asyncio.to_thread(oracle_value_iteration, mdp, ORACLE_TOL)

        semaphore = asyncio.Semaphore(self.workers)

        async def one(seed: int) -> SeedVerdict:
            async with semaphore:
                return await asyncio.to_thread(self._verify_seed, config, criterion, mdp, oracle, roots, seed, tol)

        verdicts = await asyncio.gather(*(one(base_seed + i) for i in range(seeds)))
        passes = sum(v.passed for v in verdicts)
        required = math.ceil(criterion.min_pass_fraction * seeds)
        report = VerificationReport(
            env=env,
            preset=preset_name,
            check=criterion.check,
            tol=tol,
            seeds=seeds,
            passes=passes,
            required=required,
            passed=passes >= required,
            verdicts=list(verdicts),
        )
        logger.info(
            "Verification of %s on %s: %d/%d seeds passed (%d required)", preset_name, env, passes, seeds, required
        )
        return report

    @staticmethod
    def _verify_seed(config, criterion, mdp: TabularMdp, oracle: OracleResult, roots, seed: int, tol: float) -> SeedVerdict:
        try:
            result = run_blocking(config, mdp, roots, seed)
        except FrapError as e:
            return SeedVerdict(seed=seed, passed=False, error=math.inf, detail=f"{type(e).__name__}: {e}")
        return check_run(criterion, mdp, oracle, result, tol)
