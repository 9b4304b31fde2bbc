import pytest

from src.domain.errors import MdpNotFound, MdpParseError
from src.domain.services.environments import make_chain
from src.infrastructure.persistence.file_mdp_repository import FileMdpRepository


@pytest.fixture
def repository(tmp_path):
    return FileMdpRepository(base_dir=str(tmp_path))


@pytest.mark.asyncio
async def test_builtin_environment(repository: FileMdpRepository):
    mdp = await repository.get("builtin:chain3")
    assert mdp == make_chain(3, 0.9)


@pytest.mark.asyncio
async def test_unknown_builtin(repository: FileMdpRepository):
    with pytest.raises(MdpNotFound, match="known: chain10"):
        await repository.get("builtin:maze")


@pytest.mark.asyncio
async def test_missing_file(repository: FileMdpRepository):
    with pytest.raises(MdpNotFound):
        await repository.get("absent.mdp")


@pytest.mark.asyncio
async def test_save_then_get(repository: FileMdpRepository, tmp_path):
    mdp = make_chain(4, 0.8)
    path = await repository.save("chain4.mdp", mdp)

    assert path == str(tmp_path / "chain4.mdp")
    assert await repository.get("chain4.mdp") == mdp


@pytest.mark.asyncio
async def test_parse_errors_propagate(repository: FileMdpRepository, tmp_path):
    (tmp_path / "broken.mdp").write_text("not an mdp\n", encoding="utf-8")
    with pytest.raises(MdpParseError):
        await repository.get("broken.mdp")


@pytest.mark.asyncio
async def test_builtins_are_read_only(repository: FileMdpRepository):
    with pytest.raises(ValueError):
        await repository.save("builtin:chain3", make_chain(3, 0.9))


@pytest.mark.asyncio
async def test_list_builtin(repository: FileMdpRepository):
    names = await repository.list_builtin()
    assert "gridworld5" in names
    assert names == sorted(names)
