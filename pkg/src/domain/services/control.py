import heapq
import logging
from typing import Callable, Iterable, Optional

import numpy as np

from src.domain.entities.algorithm_config import (
    BudgetKind,
    DepthKind,
    DepthRule,
    RootKind,
    RootStrategySpec,
    TrialBudget,
    VisitedSampling,
)
from src.domain.entities.solution import GlobalSolution, LocalSolution, NodeKey
from src.domain.errors import ConfigError
from src.domain.math_utils import sample_index
from src.domain.services.access import AccessHandle

logger = logging.getLogger(__name__)

# (s, a, reward, next_state, terminal) of an executed environment step
StepCallback = Callable[[int, int, float, int, bool], None]


class RootStrategy:
    """Runtime state behind a root selection rule: sweep cursor, priority queue or visited set."""

    def __init__(self, spec: RootStrategySpec, n_states: int):
        self.spec = spec
        self.n_states = n_states
        self.cursor = 0
        self.priorities: dict[int, float] = {}
        self._heap: list[tuple[float, int]] = []
        # state -> tick of the latest visit
        self.visited: dict[int, int] = {}
        self.tick = 0

    @property
    def kind(self) -> RootKind:
        return self.spec.kind

    def queue_size(self) -> int:
        return len(self.priorities)

    def pop_max(self) -> Optional[int]:
        while self._heap:
            neg_priority, s = heapq.heappop(self._heap)
            if self.priorities.get(s) == -neg_priority:
                del self.priorities[s]
                return s
        return None

    def offer(self, s: int, priority: float) -> bool:
        """Raises the queued priority of `s` to `priority` if that is larger and above threshold."""
        if priority <= self.spec.priority_threshold:
            return False
        existing = self.priorities.get(s)
        if existing is not None and existing >= priority:
            return False
        self.priorities[s] = priority
        heapq.heappush(self._heap, (-priority, s))
        return True


def first_root(strategy: RootStrategy, handle: AccessHandle) -> int:
    if strategy.kind is RootKind.ORDERED:
        strategy.cursor = 0
        return 0
    if strategy.kind is RootKind.FORWARD_SAMPLING and not handle.mode.is_settable:
        return handle.reset()
    return handle.sample_initial_state()


def next_root(
    strategy: RootStrategy,
    local: LocalSolution,
    global_: GlobalSolution,
    handle: AccessHandle,
    rng: Optional[np.random.Generator] = None,
    action: Optional[int] = None,
    on_step: Optional[StepCallback] = None,
) -> Optional[int]:
    """
    Picks the root of the next outer iteration; None means the strategy has run dry.

    Forward sampling on a settable handle executes `action` from the current root;
    on a resettable handle the trial already moved the environment forward.
    """
    kind = strategy.kind
    if kind is RootKind.ORDERED:
        strategy.cursor = (strategy.cursor + 1) % strategy.n_states
        return strategy.cursor

    if kind is RootKind.FORWARD_SAMPLING:
        if not handle.mode.is_settable:
            if handle.current_state is None or handle.is_terminal(handle.current_state):
                return handle.reset()
            return handle.current_state
        if action is None:
            raise ConfigError("forward sampling on a settable handle needs an action to execute")
        nxt, reward = handle.query_generative(local.root, action)
        terminal = handle.is_terminal(nxt)
        if on_step is not None:
            on_step(local.root, action, reward, nxt, terminal)
        if terminal:
            return handle.sample_initial_state()
        return nxt

    if kind is RootKind.BACKWARD_SAMPLING:
        return strategy.pop_max()

    if not strategy.visited:
        return None
    if rng is None:
        raise ConfigError("visited-set root sampling needs a random generator")
    states = sorted(strategy.visited)
    if strategy.spec.sampling is VisitedSampling.UNIFORM:
        return states[int(rng.integers(len(states)))]
    # recency: weight proportional to the rank of the latest visit
    by_age = sorted(states, key=lambda s: strategy.visited[s])
    weights = np.arange(1, len(by_age) + 1, dtype=float)
    return by_age[sample_index(weights / weights.sum(), rng)]


def mark_visited(strategy: RootStrategy, s: int) -> None:
    strategy.tick += 1
    strategy.visited[s] = strategy.tick


def push_priority(
    strategy: RootStrategy,
    s: int,
    delta: float,
    reverse: Iterable[tuple[int, int, float]],
) -> None:
    """For each predecessor (s_prev, a, p) of `s`: priority(s_prev) <- max(existing, p * delta)."""
    if strategy.kind is not RootKind.BACKWARD_SAMPLING:
        raise ConfigError("priorities only apply to backward-sampling root selection")
    for s_prev, _, p in reverse:
        if strategy.offer(s_prev, p * delta):
            logger.debug("Queued state %d with priority %.3g (from %d)", s_prev, p * delta, s)


def trials_remaining(budget: TrialBudget, trials_done: int, residual: float) -> bool:
    if budget.kind is BudgetKind.FIXED_TRIALS:
        return trials_done < budget.n
    if budget.kind is BudgetKind.EXHAUSTIVE:
        return trials_done < (budget.cap if budget.cap is not None else 1)
    if trials_done == 0:
        return True
    if budget.max_trials is not None and trials_done >= budget.max_trials:
        return False
    return residual > budget.tol


def depth_limit(rule: DepthRule, trial_index: int = 1) -> Optional[int]:
    """Numeric depth limit of the fixed-style rules, or None for the adaptive/infinite ones."""
    if rule.kind is DepthKind.FIXED:
        return rule.n
    if rule.kind is DepthKind.INCREASING:
        return min(trial_index, rule.n)
    return None


def depth_reached(
    rule: DepthRule,
    local: LocalSolution,
    current: NodeKey,
    depth_so_far: int,
    trial_index: int = 1,
    expanded_on_path: bool = False,
    repeated: bool = False,
) -> bool:
    """
    `expanded_on_path` tells whether the trial already expanded a node above `current`;
    `repeated` whether `current` was seen earlier in this trial.
    """
    if rule.cap is not None and depth_so_far >= rule.cap:
        return True
    limit = depth_limit(rule, trial_index)
    if limit is not None:
        return depth_so_far >= limit
    if rule.kind is DepthKind.INFINITE:
        return False
    if rule.kind is DepthKind.ADAPTIVE_FRONTIER:
        return repeated or (expanded_on_path and current not in local.explored)
    return depth_so_far > 0 and (repeated or current in local.explored)
