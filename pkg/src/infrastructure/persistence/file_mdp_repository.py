import asyncio
import logging
from pathlib import Path

from src.domain.entities.mdp import TabularMdp
from src.domain.errors import MdpNotFound
from src.domain.repositories.mdp_repository import MdpRepository
from src.domain.services.environments import BUILTIN_ENVIRONMENTS, builtin_environment
from src.infrastructure.persistence.mdp_text_codec import emit_mdp, load_mdp

logger = logging.getLogger(__name__)

BUILTIN_PREFIX = "builtin:"


class FileMdpRepository(MdpRepository):
    """
    Reads MDP text files from disk, relative to `base_dir`, and serves the built-in
    environments under `builtin:<name>`. File IO runs in a worker thread.
    """

    def __init__(self, base_dir: str = "."):
        self._base_dir = Path(base_dir)

    def _path(self, ref: str) -> Path:
        path = Path(ref)
        return path if path.is_absolute() else self._base_dir / path

    async def get(self, ref: str) -> TabularMdp:
        if ref.startswith(BUILTIN_PREFIX):
            name = ref[len(BUILTIN_PREFIX):]
            mdp = builtin_environment(name)
            if mdp is None:
                raise MdpNotFound(f"no built-in environment '{name}' (known: {', '.join(sorted(BUILTIN_ENVIRONMENTS))})")
            return mdp
        path = self._path(ref)
        if not path.is_file():
            raise MdpNotFound(f"MDP file '{ref}' does not exist")
        text = await asyncio.to_thread(path.read_text, encoding="utf-8")
        mdp = load_mdp(text)
        logger.debug("Loaded %s: %d states, %d actions", ref, mdp.n_states, mdp.n_actions)
        return mdp

    async def save(self, ref: str, mdp: TabularMdp) -> str:
        if ref.startswith(BUILTIN_PREFIX):
            raise ValueError("built-in environments are read-only")
        path = self._path(ref)
        await asyncio.to_thread(path.write_text, emit_mdp(mdp), encoding="utf-8")
        return str(path)

    async def list_builtin(self) -> list[str]:
        return sorted(BUILTIN_ENVIRONMENTS)
