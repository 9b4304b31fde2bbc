import logging
from collections import defaultdict
from typing import Optional, Sequence

from src.domain.entities.mdp import AccessMode, Transition
from src.domain.errors import UnvisitedPair
from src.domain.services.access import AccessHandle

logger = logging.getLogger(__name__)


class LearnedTabularModel:
    """
    Maximum-likelihood tabular dynamics learned from real transitions, with a reverse
    map for predecessor lookups. No smoothing: pairs never observed are unknown.

    With a positive `known_threshold`, planning sees a pair observed fewer times than
    that as a self-loop paying `optimistic_reward`, which keeps its value at the
    optimistic bound until enough real data arrives. `estimate` always returns the
    maximum-likelihood model.
    """

    def __init__(
        self,
        n_states: int,
        n_actions: int,
        gamma: float,
        initial_dist: Sequence[tuple[int, float]] = ((0, 1.0),),
        known_threshold: int = 0,
        optimistic_reward: float = 0.0,
    ):
        self.n_states = n_states
        self.n_actions = n_actions
        self.gamma = gamma
        self.initial_dist = tuple(initial_dist)
        self.known_threshold = known_threshold
        self.optimistic_reward = optimistic_reward
        # (s, a) -> {s': count}; insertion order is first-observation order
        self.counts: dict[tuple[int, int], dict[int, int]] = defaultdict(dict)
        self.reward_sums: dict[tuple[int, int, int], float] = defaultdict(float)
        self.totals: dict[tuple[int, int], int] = defaultdict(int)
        self.reverse: dict[int, set[tuple[int, int]]] = defaultdict(set)
        self.terminals_seen: set[int] = set()
        self._visited_actions: dict[int, set[int]] = defaultdict(set)

    def observe(self, s: int, a: int, next_state: int, reward: float, terminal: bool) -> None:
        children = self.counts[(s, a)]
        children[next_state] = children.get(next_state, 0) + 1
        self.reward_sums[(s, a, next_state)] += reward
        self.totals[(s, a)] += 1
        self.reverse[next_state].add((s, a))
        self._visited_actions[s].add(a)
        if terminal:
            self.terminals_seen.add(next_state)

    def estimate(self, s: int, a: int) -> tuple[Transition, ...]:
        total = self.totals.get((s, a), 0)
        if total == 0:
            raise UnvisitedPair(s, a)
        children = self.counts[(s, a)]
        return tuple(
            Transition(nxt, count / total, self.reward_sums[(s, a, nxt)] / count)
            for nxt, count in children.items()
        )

    def predecessors(self, next_state: int) -> set[tuple[int, int]]:
        return set(self.reverse.get(next_state, ()))

    def predecessor_probabilities(self, next_state: int) -> list[tuple[int, int, float]]:
        """(s, a, p̂(next_state | s, a)) for every observed predecessor, sorted by (s, a)."""
        result = []
        for s, a in sorted(self.reverse.get(next_state, ())):
            result.append((s, a, self.counts[(s, a)][next_state] / self.totals[(s, a)]))
        return result

    def visited_states(self) -> list[int]:
        return sorted(s for s, actions in self._visited_actions.items() if actions)

    def visited_actions(self, s: int) -> list[int]:
        return sorted(self._visited_actions.get(s, ()))

    def is_known(self, s: int, a: int) -> bool:
        return self.totals.get((s, a), 0) >= self.known_threshold

    # TransitionSource protocol

    def outcomes(self, s: int, a: int) -> tuple[Transition, ...]:
        estimate = self.estimate(s, a)
        if not self.is_known(s, a):
            return (Transition(s, 1.0, self.optimistic_reward),)
        return estimate

    def is_terminal(self, s: int) -> bool:
        return s in self.terminals_seen

    def as_handle(self, seed: Optional[int] = None) -> AccessHandle:
        return AccessHandle(self, AccessMode.SETTABLE_DESCRIPTIVE, seed=seed if seed is not None else 0)
