from dataclasses import dataclass, field
from enum import Enum
from typing import Hashable, Optional

import numpy as np
from pydantic import BaseModel

from src.domain.math_utils import stable_softmax

# Graph mode keys nodes by state; tree mode by the (s0, a0, s1, a1, ...) path.
NodeKey = Hashable


@dataclass
class NodeRecord:
    state: int
    v_agg: float = 0.0
    q_agg: dict[int, float] = field(default_factory=dict)
    n_s: int = 0
    n_sa: dict[int, int] = field(default_factory=dict)
    solved: bool = False
    # prior for state-action aggregates that have not received an estimate yet
    init_value: float = 0.0


@dataclass
class TraceStep:
    state: int
    action: int
    reward: float
    next_state: int
    terminal: bool = False


@dataclass
class TraceRecord:
    steps: list[TraceStep] = field(default_factory=list)
    bootstrap_value: float = 0.0
    return_estimates: dict[int, float] = field(default_factory=dict)

    @property
    def depth(self) -> int:
        return len(self.steps)


class EstimateKind(str, Enum):
    STATE = "state"
    STATE_ACTION = "state_action"


@dataclass(frozen=True)
class BackupEstimate:
    kind: EstimateKind
    s: int
    value: float
    source_depth: int = 1
    a: Optional[int] = None

    def __post_init__(self):
        if self.kind is EstimateKind.STATE_ACTION and self.a is None:
            raise ValueError("state-action estimate needs an action")


@dataclass
class LocalSolution:
    """Per-root aggregation store with frontier/explored bookkeeping."""

    root: int
    root_key: NodeKey
    tree_mode: bool = False
    nodes: dict[NodeKey, NodeRecord] = field(default_factory=dict)
    frontier: set = field(default_factory=set)
    explored: set = field(default_factory=set)
    trace_buffer: list[TraceRecord] = field(default_factory=list)
    # real episode kept for trace replay; `episode_offset` is the current root's index in it
    episode: list[TraceStep] = field(default_factory=list)
    episode_offset: int = 0

    def key_for(self, parent_key: NodeKey, action: int, next_state: int) -> NodeKey:
        if self.tree_mode:
            return parent_key + (action, next_state)
        return next_state

    def root_node(self) -> Optional[NodeRecord]:
        return self.nodes.get(self.root_key)


class GlobalSnapshot(BaseModel):
    v: Optional[list[float]] = None
    q: Optional[list[list[float]]] = None
    policy: Optional[list[list[float]]] = None
    counts_s: list[int]
    counts_sa: list[list[int]]
    solved: list[int]


@dataclass
class GlobalSolution:
    n_states: int
    n_actions: int
    v: Optional[np.ndarray] = None
    q: Optional[np.ndarray] = None
    policy_logits: Optional[np.ndarray] = None
    counts_s: Optional[np.ndarray] = None
    counts_sa: Optional[np.ndarray] = None
    solved: set[int] = field(default_factory=set)

    def __post_init__(self):
        if self.counts_s is None:
            self.counts_s = np.zeros(self.n_states, dtype=np.int64)
        if self.counts_sa is None:
            self.counts_sa = np.zeros((self.n_states, self.n_actions), dtype=np.int64)

    def policy_probs(self, s: int) -> np.ndarray:
        if self.policy_logits is None:
            return np.full(self.n_actions, 1.0 / self.n_actions)
        return stable_softmax(self.policy_logits[s])

    def state_value(self, s: int) -> float:
        """V^g(s) if maintained, else max_a Q^g(s, a)."""
        if self.v is not None:
            return float(self.v[s])
        if self.q is not None:
            return float(np.max(self.q[s]))
        raise ValueError("global solution keeps neither a V nor a Q table")

    def snapshot(self) -> GlobalSnapshot:
        policy = None
        if self.policy_logits is not None:
            policy = [self.policy_probs(s).tolist() for s in range(self.n_states)]
        return GlobalSnapshot(
            v=self.v.tolist() if self.v is not None else None,
            q=self.q.tolist() if self.q is not None else None,
            policy=policy,
            counts_s=self.counts_s.tolist(),
            counts_sa=self.counts_sa.tolist(),
            solved=sorted(self.solved),
        )
