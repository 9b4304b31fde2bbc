import asyncio
import logging
import statistics
from typing import Optional, Sequence

from src.application.services.frap_engine import validate_config
from src.application.services.presets import preset
from src.application.use_cases.run_algorithm_use_case import run_blocking
from src.domain.entities.results import ComparisonReport, ComparisonRow
from src.domain.repositories.mdp_repository import MdpRepository
from src.domain.services.access import AccessHandle

logger = logging.getLogger(__name__)


class ComparePresetsUseCase:
    def __init__(self, mdp_repository: MdpRepository, workers: int = 4):
        self.mdp_repository = mdp_repository
        self.workers = max(1, workers)

    async def execute(
        self,
        env: str,
        preset_names: Sequence[str],
        seeds: int = 1,
        roots: Optional[int] = None,
        base_seed: int = 0,
    ) -> ComparisonReport:
        """
        Runs every preset under the same seeds (paired comparison) and reports mean
        episode return and real query count per run, plus medians per preset.
        """
        mdp = await self.mdp_repository.get(env)
        configs = {name: preset(name) for name in preset_names}
        for config in configs.values():
            validate_config(config, AccessHandle(mdp, config.access_required))

        semaphore = asyncio.Semaphore(self.workers)

        async def one(name: str, seed: int) -> ComparisonRow:
            async with semaphore:
                result = await asyncio.to_thread(run_blocking, configs[name], mdp, roots, seed)
            returns = result.episode_returns
            return ComparisonRow(
                preset=name,
                seed=seed,
                mean_return=statistics.fmean(returns) if returns else None,
                queries=result.query_count,
                v_root=result.records[-1].v_root if result.records else 0.0,
            )

        rows = await asyncio.gather(
            *(one(name, base_seed + i) for name in preset_names for i in range(seeds))
        )
        median_queries = {}
        median_return = {}
        for name in preset_names:
            mine = [row for row in rows if row.preset == name]
            median_queries[name] = statistics.median(row.queries for row in mine)
            returns = [row.mean_return for row in mine if row.mean_return is not None]
            median_return[name] = statistics.median(returns) if returns else None
        logger.info("Compared %s on %s over %d seeds", ", ".join(preset_names), env, seeds)
        return ComparisonReport(
            env=env,
            presets=list(preset_names),
            rows=list(rows),
            median_queries=median_queries,
            median_return=median_return,
        )
