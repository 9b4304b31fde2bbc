from unittest.mock import AsyncMock

import pytest

from src.application.services.presets import preset
from src.application.use_cases.run_algorithm_use_case import RunAlgorithmUseCase, run_blocking
from src.domain.entities.mdp import AccessMode
from src.domain.errors import ConfigError, MdpNotFound
from src.domain.repositories.mdp_repository import MdpRepository
from src.domain.services.environments import make_chain


@pytest.fixture
def mock_mdp_repository():
    repository = AsyncMock(spec=MdpRepository)
    repository.get.return_value = make_chain(3, 0.9)
    return repository


@pytest.fixture
def run_algorithm_use_case(mock_mdp_repository):
    return RunAlgorithmUseCase(mdp_repository=mock_mdp_repository)


@pytest.mark.asyncio
async def test_run_value_iteration(run_algorithm_use_case: RunAlgorithmUseCase, mock_mdp_repository: AsyncMock):
    result = await run_algorithm_use_case.execute("builtin:chain3", preset("value_iteration"))

    mock_mdp_repository.get.assert_called_once_with("builtin:chain3")
    assert result.preset == "value_iteration"
    assert result.converged
    assert result.global_snapshot.v == [0.9, 1.0, 0.0]


@pytest.mark.asyncio
async def test_run_matches_blocking_call(run_algorithm_use_case: RunAlgorithmUseCase):
    config = preset("q_learning")
    result = await run_algorithm_use_case.execute("builtin:chain3", config, roots=100, seed=4)
    expected = run_blocking(config, make_chain(3, 0.9), 100, 4)
    assert result.records == expected.records
    assert result.query_count == expected.query_count


@pytest.mark.asyncio
async def test_weaker_access_is_rejected(run_algorithm_use_case: RunAlgorithmUseCase):
    with pytest.raises(ConfigError):
        await run_algorithm_use_case.execute(
            "builtin:chain3", preset("value_iteration"), access=AccessMode.RESETTABLE_GENERATIVE
        )


@pytest.mark.asyncio
async def test_missing_environment_propagates(run_algorithm_use_case: RunAlgorithmUseCase, mock_mdp_repository: AsyncMock):
    mock_mdp_repository.get.side_effect = MdpNotFound("MDP file 'nowhere.mdp' does not exist")

    with pytest.raises(MdpNotFound):
        await run_algorithm_use_case.execute("nowhere.mdp", preset("value_iteration"))


@pytest.mark.asyncio
async def test_timing_is_recorded_on_request(run_algorithm_use_case: RunAlgorithmUseCase):
    result = await run_algorithm_use_case.execute("builtin:chain3", preset("value_iteration"), record_timing=True)
    assert all(record.wall_ms >= 0.0 for record in result.records)
    untimed = await run_algorithm_use_case.execute("builtin:chain3", preset("value_iteration"))
    assert all(record.wall_ms == 0.0 for record in untimed.records)
