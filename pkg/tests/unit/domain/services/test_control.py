import numpy as np
import pytest

from src.domain.entities.algorithm_config import (
    BudgetKind,
    DepthKind,
    DepthRule,
    RootKind,
    RootStrategySpec,
    TrialBudget,
)
from src.domain.entities.mdp import AccessMode
from src.domain.entities.solution import GlobalSolution, LocalSolution
from src.domain.errors import ConfigError
from src.domain.services.access import AccessHandle
from src.domain.services.control import (
    RootStrategy,
    depth_limit,
    depth_reached,
    first_root,
    mark_visited,
    next_root,
    push_priority,
    trials_remaining,
)
from src.domain.services.environments import make_chain


@pytest.fixture
def chain3():
    return make_chain(3, 0.9)


def test_ordered_roots_wrap(chain3):
    strategy = RootStrategy(RootStrategySpec(kind=RootKind.ORDERED), 3)
    handle = AccessHandle(chain3, AccessMode.SETTABLE_DESCRIPTIVE)
    local = LocalSolution(root=0, root_key=0)
    global_ = GlobalSolution(3, 2)
    roots = [first_root(strategy, handle)]
    for _ in range(4):
        roots.append(next_root(strategy, local, global_, handle))
    assert roots == [0, 1, 2, 0, 1]


def test_forward_sampling_executes_action_and_reports_step(chain3):
    strategy = RootStrategy(RootStrategySpec(kind=RootKind.FORWARD_SAMPLING), 3)
    handle = AccessHandle(chain3, AccessMode.SETTABLE_GENERATIVE)
    steps = []
    local = LocalSolution(root=1, root_key=1)
    nxt = next_root(strategy, local, GlobalSolution(3, 2), handle, action=0, on_step=lambda *step: steps.append(step))
    assert steps == [(1, 0, 1.0, 2, True)]
    # the episode ended, so the next root is a fresh initial state
    assert nxt == 0


def test_forward_sampling_on_settable_needs_action(chain3):
    strategy = RootStrategy(RootStrategySpec(kind=RootKind.FORWARD_SAMPLING), 3)
    handle = AccessHandle(chain3, AccessMode.SETTABLE_GENERATIVE)
    with pytest.raises(ConfigError):
        next_root(strategy, LocalSolution(root=0, root_key=0), GlobalSolution(3, 2), handle)


def test_forward_sampling_on_resettable_follows_the_environment(chain3):
    strategy = RootStrategy(RootStrategySpec(kind=RootKind.FORWARD_SAMPLING), 3)
    handle = AccessHandle(chain3, AccessMode.RESETTABLE_GENERATIVE)
    assert first_root(strategy, handle) == 0
    handle.step(0)
    assert next_root(strategy, LocalSolution(root=0, root_key=0), GlobalSolution(3, 2), handle) == 1
    handle.step(0)
    assert next_root(strategy, LocalSolution(root=1, root_key=1), GlobalSolution(3, 2), handle) == 0


def test_priority_queue_keeps_the_maximum():
    strategy = RootStrategy(RootStrategySpec(kind=RootKind.BACKWARD_SAMPLING, priority_threshold=0.1), 5)
    assert strategy.offer(1, 0.5)
    assert not strategy.offer(1, 0.3)
    assert strategy.offer(1, 0.9)
    assert not strategy.offer(2, 0.05)
    strategy.offer(3, 0.7)
    assert strategy.queue_size() == 2
    assert strategy.pop_max() == 1
    assert strategy.pop_max() == 3
    assert strategy.pop_max() is None


def test_push_priority_scales_by_predecessor_probability():
    strategy = RootStrategy(RootStrategySpec(kind=RootKind.BACKWARD_SAMPLING, priority_threshold=0.0), 4)
    push_priority(strategy, 3, 2.0, [(0, 0, 0.25), (1, 1, 1.0)])
    assert strategy.priorities == {0: 0.5, 1: 2.0}
    assert strategy.pop_max() == 1


def test_push_priority_needs_backward_sampling():
    strategy = RootStrategy(RootStrategySpec(kind=RootKind.ORDERED), 4)
    with pytest.raises(ConfigError):
        push_priority(strategy, 0, 1.0, [])


def test_visited_sampling(chain3):
    strategy = RootStrategy(RootStrategySpec(kind=RootKind.VISITED_SET), 3)
    handle = AccessHandle(chain3, AccessMode.SETTABLE_DESCRIPTIVE)
    local = LocalSolution(root=0, root_key=0)
    rng = np.random.default_rng(0)
    assert next_root(strategy, local, GlobalSolution(3, 2), handle, rng) is None
    mark_visited(strategy, 1)
    assert next_root(strategy, local, GlobalSolution(3, 2), handle, rng) == 1


def test_trials_remaining():
    assert trials_remaining(TrialBudget(kind=BudgetKind.FIXED_TRIALS, n=2), 1, 0.0)
    assert not trials_remaining(TrialBudget(kind=BudgetKind.FIXED_TRIALS, n=2), 2, 0.0)
    assert not trials_remaining(TrialBudget(kind=BudgetKind.EXHAUSTIVE, cap=3), 3, 1.0)
    until = TrialBudget(kind=BudgetKind.UNTIL_CONVERGENCE, tol=1e-3, max_trials=10)
    assert trials_remaining(until, 0, 0.0)
    assert trials_remaining(until, 1, 1.0)
    assert not trials_remaining(until, 1, 1e-4)
    assert not trials_remaining(until, 10, 1.0)


def test_depth_limits():
    assert depth_limit(DepthRule(kind=DepthKind.FIXED, n=3)) == 3
    assert [depth_limit(DepthRule(kind=DepthKind.INCREASING, n=3), k) for k in (1, 2, 5)] == [1, 2, 3]
    assert depth_limit(DepthRule(kind=DepthKind.INFINITE)) is None


def test_depth_reached():
    local = LocalSolution(root=0, root_key=0, explored={0})
    assert depth_reached(DepthRule(kind=DepthKind.INFINITE, cap=5), local, 1, 5)
    assert not depth_reached(DepthRule(kind=DepthKind.INFINITE, cap=5), local, 1, 4)
    frontier = DepthRule(kind=DepthKind.ADAPTIVE_FRONTIER, cap=100)
    assert not depth_reached(frontier, local, 0, 3, expanded_on_path=True)
    assert depth_reached(frontier, local, 1, 3, expanded_on_path=True)
    assert not depth_reached(frontier, local, 1, 3, expanded_on_path=False)
    duplicate = DepthRule(kind=DepthKind.ADAPTIVE_DUPLICATE, cap=100)
    assert depth_reached(duplicate, local, 0, 2)
    assert not depth_reached(duplicate, local, 0, 0)
    assert depth_reached(duplicate, local, 1, 2, repeated=True)
