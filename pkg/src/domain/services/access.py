import logging
from typing import Optional, Protocol, Sequence

import numpy as np

from src.domain.entities.mdp import AccessMode, Sample, StepResult, Transition
from src.domain.errors import EpisodeEnded, TerminalQuery, WrongAccessMode
from src.domain.math_utils import sample_index

logger = logging.getLogger(__name__)


class TransitionSource(Protocol):
    """Anything that can answer P(.|s, a): the ground-truth MDP or a learned model."""

    n_states: int
    n_actions: int
    gamma: float
    initial_dist: Sequence[tuple[int, float]]

    def outcomes(self, s: int, a: int) -> Sequence[Transition]:
        ...

    def is_terminal(self, s: int) -> bool:
        ...


class AccessHandle:
    """
    Capability-restricted view of a transition source.

    Settable handles answer queries at any state; the resettable handle only at its
    current state, moving forward with each query. Every answered query bumps
    `query_count` by one. Not safe for concurrent use.
    """

    def __init__(self, source: TransitionSource, mode: AccessMode, seed: int = 0):
        if mode is AccessMode.RESETTABLE_DESCRIPTIVE:
            raise WrongAccessMode("resettable descriptive access is not supported")
        self.source = source
        self.mode = AccessMode(mode)
        self.rng_seed = seed
        self.rng = np.random.default_rng(seed)
        self.query_count = 0
        self.current_state: Optional[int] = None

    @property
    def n_states(self) -> int:
        return self.source.n_states

    @property
    def n_actions(self) -> int:
        return self.source.n_actions

    @property
    def gamma(self) -> float:
        return self.source.gamma

    def is_terminal(self, s: int) -> bool:
        return self.source.is_terminal(s)

    def query_descriptive(self, s: int, a: int) -> tuple[Transition, ...]:
        if self.mode is not AccessMode.SETTABLE_DESCRIPTIVE:
            raise WrongAccessMode(f"descriptive query on a {self.mode.value} handle")
        if self.source.is_terminal(s):
            raise TerminalQuery(f"state {s} is terminal")
        outcomes = tuple(self.source.outcomes(s, a))
        self.query_count += 1
        return outcomes

    def query_generative(self, s: int, a: int) -> Sample:
        if self.mode is AccessMode.RESETTABLE_GENERATIVE:
            if s != self.current_state:
                raise WrongAccessMode(
                    f"resettable handle is at state {self.current_state}, cannot query state {s}"
                )
            result = self.step(a)
            return Sample(result.next_state, result.reward)
        if self.source.is_terminal(s):
            raise TerminalQuery(f"state {s} is terminal")
        sample = self._draw(s, a)
        self.query_count += 1
        return sample

    def step(self, a: int) -> StepResult:
        if self.mode is not AccessMode.RESETTABLE_GENERATIVE:
            raise WrongAccessMode(f"step on a {self.mode.value} handle")
        if self.current_state is None or self.source.is_terminal(self.current_state):
            raise EpisodeEnded("episode has ended, reset the handle first")
        sample = self._draw(self.current_state, a)
        self.query_count += 1
        self.current_state = sample.next_state
        return StepResult(sample.next_state, sample.reward, self.source.is_terminal(sample.next_state))

    def reset(self) -> int:
        if self.mode is not AccessMode.RESETTABLE_GENERATIVE:
            raise WrongAccessMode(f"reset on a {self.mode.value} handle")
        self.current_state = self._draw_initial()
        return self.current_state

    def sample_initial_state(self) -> int:
        """p0 draw for settable handles, which may jump anywhere."""
        if not self.mode.is_settable:
            raise WrongAccessMode("only settable handles can jump to an initial state")
        return self._draw_initial()

    def _draw(self, s: int, a: int) -> Sample:
        outcomes = self.source.outcomes(s, a)
        i = sample_index([t.probability for t in outcomes], self.rng)
        chosen = outcomes[i]
        return Sample(chosen.next_state, chosen.reward)

    def _draw_initial(self) -> int:
        dist = self.source.initial_dist
        i = sample_index([p for _, p in dist], self.rng)
        return dist[i][0]
