from abc import ABC, abstractmethod

from src.domain.entities.mdp import TabularMdp


class MdpRepository(ABC):
    """
    Interface for loading and storing tabular MDPs by reference.
    A reference is a file path or `builtin:<name>`.
    """

    @abstractmethod
    async def get(self, ref: str) -> TabularMdp:
        """
        Returns the MDP behind `ref`.
        Raises MdpNotFound when nothing exists under that reference.
        """
        pass

    @abstractmethod
    async def save(self, ref: str, mdp: TabularMdp) -> str:
        """
        Writes the MDP under `ref` and returns the reference it can be read back from.
        """
        pass

    @abstractmethod
    async def list_builtin(self) -> list[str]:
        """
        Returns the names of the built-in environments.
        """
        pass
