from unittest.mock import AsyncMock

import pytest

from src.application.use_cases.solve_oracle_use_case import SolveOracleUseCase
from src.domain.errors import NonConvergent
from src.domain.repositories.mdp_repository import MdpRepository
from src.domain.services.environments import make_chain


@pytest.fixture
def mock_mdp_repository():
    repository = AsyncMock(spec=MdpRepository)
    repository.get.return_value = make_chain(3, 0.9)
    return repository


@pytest.mark.asyncio
async def test_solve_chain3(mock_mdp_repository: AsyncMock):
    result = await SolveOracleUseCase(mock_mdp_repository).execute("builtin:chain3")

    mock_mdp_repository.get.assert_called_once_with("builtin:chain3")
    assert result.v_star == pytest.approx([0.9, 1.0, 0.0])
    assert result.optimal_policy == [[0], [0], []]
    assert result.history is None


@pytest.mark.asyncio
async def test_history_on_request(mock_mdp_repository: AsyncMock):
    result = await SolveOracleUseCase(mock_mdp_repository).execute("builtin:chain3", record_history=True)
    assert len(result.history) == result.iterations


@pytest.mark.asyncio
async def test_iteration_cap_is_applied(mock_mdp_repository: AsyncMock):
    with pytest.raises(NonConvergent):
        await SolveOracleUseCase(mock_mdp_repository, max_iterations=1).execute("builtin:chain3")
