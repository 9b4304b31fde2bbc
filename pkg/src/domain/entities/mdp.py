import logging
import math
from enum import Enum
from typing import Iterable, Mapping, NamedTuple, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

logger = logging.getLogger(__name__)

PROBABILITY_TOLERANCE = 1e-9


class AccessMode(str, Enum):
    SETTABLE_DESCRIPTIVE = "settable_descriptive"
    SETTABLE_GENERATIVE = "settable_generative"
    RESETTABLE_GENERATIVE = "resettable_generative"
    # Descriptive answers without the ability to set the state. No known simulator works
    # this way, so handles refuse it.
    RESETTABLE_DESCRIPTIVE = "resettable_descriptive"

    @property
    def is_descriptive(self) -> bool:
        return self in (AccessMode.SETTABLE_DESCRIPTIVE, AccessMode.RESETTABLE_DESCRIPTIVE)

    @property
    def is_settable(self) -> bool:
        return self in (AccessMode.SETTABLE_DESCRIPTIVE, AccessMode.SETTABLE_GENERATIVE)

    @property
    def rank(self) -> int:
        """Position in the natural ordering of access: more rank grants more capability."""
        return {
            AccessMode.RESETTABLE_GENERATIVE: 0,
            AccessMode.RESETTABLE_DESCRIPTIVE: 0,
            AccessMode.SETTABLE_GENERATIVE: 1,
            AccessMode.SETTABLE_DESCRIPTIVE: 2,
        }[self]


class Transition(NamedTuple):
    next_state: int
    probability: float
    reward: float


class Sample(NamedTuple):
    next_state: int
    reward: float


class StepResult(NamedTuple):
    next_state: int
    reward: float
    terminal: bool


class TabularMdp(BaseModel):
    """
    Ground-truth finite MDP. Rewards live on transitions R(s, a, s').

    `transitions[s][a]` lists the outcomes of taking `a` in `s`; terminal states have an
    empty list for every action and are absorbing with value 0.
    """

    model_config = ConfigDict(frozen=True)

    n_states: int = Field(gt=0)
    n_actions: int = Field(gt=0)
    gamma: float = Field(ge=0.0, le=1.0)
    transitions: tuple[tuple[tuple[Transition, ...], ...], ...]
    terminals: frozenset[int] = frozenset()
    initial_dist: tuple[tuple[int, float], ...]

    @model_validator(mode="after")
    def _check_invariants(self) -> "TabularMdp":
        if len(self.transitions) != self.n_states:
            raise ValueError(
                f"index range: transition table covers {len(self.transitions)} states, expected {self.n_states}"
            )
        for t in self.terminals:
            if not 0 <= t < self.n_states:
                raise ValueError(f"index range: terminal state {t} out of range")
        for s, rows in enumerate(self.transitions):
            if len(rows) != self.n_actions:
                raise ValueError(f"index range: state {s} lists {len(rows)} actions, expected {self.n_actions}")
            for a, outcomes in enumerate(rows):
                if s in self.terminals:
                    if outcomes:
                        raise ValueError(f"terminal outgoing: terminal state {s} has transitions for action {a}")
                    continue
                if not outcomes:
                    raise ValueError(f"probability mass: no transitions for non-terminal (s={s}, a={a})")
                for nxt, p, r in outcomes:
                    if not 0 <= nxt < self.n_states:
                        raise ValueError(f"index range: next state {nxt} out of range at (s={s}, a={a})")
                    if not p > 0.0:
                        raise ValueError(f"probability mass: non-positive probability {p} at (s={s}, a={a})")
                    if not math.isfinite(r):
                        raise ValueError(f"finite reward: reward {r} at (s={s}, a={a})")
                total = math.fsum(p for _, p, _ in outcomes)
                if abs(total - 1.0) > PROBABILITY_TOLERANCE:
                    raise ValueError(f"probability mass: P(.|s={s}, a={a}) sums to {total!r}")
        for s, p in self.initial_dist:
            if not 0 <= s < self.n_states:
                raise ValueError(f"index range: initial state {s} out of range")
            if not p > 0.0:
                raise ValueError(f"probability mass: non-positive initial probability {p} for state {s}")
        total = math.fsum(p for _, p in self.initial_dist)
        if abs(total - 1.0) > PROBABILITY_TOLERANCE:
            raise ValueError(f"probability mass: initial distribution sums to {total!r}")
        return self

    @classmethod
    def from_table(
        cls,
        n_states: int,
        n_actions: int,
        gamma: float,
        table: Mapping[tuple[int, int], Iterable[tuple[int, float, float]]],
        terminals: Iterable[int] = (),
        initial: Optional[Iterable[tuple[int, float]]] = None,
    ) -> "TabularMdp":
        """
        Builds an MDP from a sparse (s, a) -> [(s', p, r), ...] table.
        Repeated entries for the same s' are merged: probabilities add up and the reward
        becomes the probability-weighted mean.
        """
        terminal_set = frozenset(terminals)
        rows: list[list[tuple[Transition, ...]]] = [[() for _ in range(n_actions)] for _ in range(n_states)]
        for (s, a), outcomes in table.items():
            if not (0 <= s < n_states and 0 <= a < n_actions):
                raise ValueError(f"index range: pair (s={s}, a={a}) out of range")
            rows[s][a] = merge_outcomes(s, a, outcomes)
        initial_dist = tuple(initial) if initial is not None else ((0, 1.0),)
        return cls(
            n_states=n_states,
            n_actions=n_actions,
            gamma=gamma,
            transitions=tuple(tuple(r) for r in rows),
            terminals=terminal_set,
            initial_dist=initial_dist,
        )

    def is_terminal(self, s: int) -> bool:
        return s in self.terminals

    def outcomes(self, s: int, a: int) -> tuple[Transition, ...]:
        return self.transitions[s][a]

    @property
    def r_max(self) -> float:
        rewards = [t.reward for rows in self.transitions for outcomes in rows for t in outcomes]
        return max(rewards) if rewards else 0.0

    @property
    def is_ssp(self) -> bool:
        rewards = [t.reward for rows in self.transitions for outcomes in rows for t in outcomes]
        return bool(rewards) and all(r < 0.0 for r in rewards)

    def optimistic_bound(self) -> float:
        """r_max / (1 - gamma), clipped at 0 for reward structures with no positive reward."""
        r_max = max(self.r_max, 0.0)
        if r_max == 0.0:
            return 0.0
        if self.gamma >= 1.0:
            raise ValueError("no finite optimistic bound for gamma = 1 with positive rewards")
        return r_max / (1.0 - self.gamma)


def merge_outcomes(s: int, a: int, outcomes: Iterable[tuple[int, float, float]]) -> tuple[Transition, ...]:
    """Single entries pass through unchanged; repeated next states are merged."""
    grouped: dict[int, list[tuple[float, float]]] = {}
    for nxt, p, r in outcomes:
        grouped.setdefault(nxt, []).append((float(p), float(r)))
    if any(len(entries) > 1 for entries in grouped.values()):
        logger.warning("Merged repeated next states for (s=%d, a=%d)", s, a)
    merged = []
    for nxt, entries in grouped.items():
        if len(entries) == 1:
            merged.append(Transition(nxt, *entries[0]))
            continue
        p = math.fsum(q for q, _ in entries)
        reward = math.fsum(q * r for q, r in entries) / p if p > 0 else 0.0
        merged.append(Transition(nxt, p, reward))
    return tuple(merged)
