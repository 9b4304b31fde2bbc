import math
from typing import Callable, NamedTuple, Optional, Sequence, Union

import numpy as np

from src.domain.entities.algorithm_config import NextStateKind, Phase, SelectionRule, SelectKind, TieBreak
from src.domain.entities.mdp import Sample, Transition
from src.domain.entities.solution import GlobalSolution, LocalSolution, NodeKey
from src.domain.errors import WrongAccessMode
from src.domain.math_utils import argmax_lowest, argmax_set, sample_index, stable_softmax

UNVISITED = math.inf

# (s, a) -> value estimate when neither the local node nor a global table has one
ValueFallback = Callable[[int, int], Optional[float]]


class AllChildren(NamedTuple):
    """Ordered next-state selection: the engine recurses into every child."""

    children: tuple[Transition, ...]


def ucb_score(q: float, n_parent: int, n_child: int, c: float) -> float:
    if n_child == 0:
        return UNVISITED
    return q + c * math.sqrt(math.log(n_parent) / n_child)


def boltzmann_probs(q: Sequence[float], temperature: float) -> np.ndarray:
    return stable_softmax(np.asarray(q, dtype=float) / temperature)


def novelty_bonus(s: int, a: int, counts: np.ndarray, beta: float) -> float:
    return beta / math.sqrt(1.0 + counts[s, a])


def epsilon_at(rule: SelectionRule, step: int) -> float:
    """Constant epsilon, or a linear decay to eps_final over decay_steps."""
    if rule.eps_final is None or rule.decay_steps <= 0:
        return rule.eps
    frac = min(step / rule.decay_steps, 1.0)
    return rule.eps + (rule.eps_final - rule.eps) * frac


def action_values(
    s: int,
    local: LocalSolution,
    global_: GlobalSolution,
    key: Optional[NodeKey] = None,
    fallback: Optional[ValueFallback] = None,
) -> list[Optional[float]]:
    """Q^l where the node has an estimate, else Q^g, else the fallback; None if nothing is known."""
    node = local.nodes.get(s if key is None else key)
    values: list[Optional[float]] = []
    for a in range(global_.n_actions):
        if node is not None and a in node.q_agg:
            values.append(node.q_agg[a])
        elif global_.q is not None:
            values.append(float(global_.q[s, a]))
        elif fallback is not None:
            values.append(fallback(s, a))
        else:
            values.append(None)
    return values


def _best(scores: Sequence[float], allowed: Sequence[int], ties: TieBreak, rng: np.random.Generator) -> int:
    if ties is TieBreak.RANDOM:
        best = argmax_set(scores)
        if len(best) > 1:
            return allowed[best[int(rng.integers(len(best)))]]
        return allowed[best[0]]
    return allowed[argmax_lowest(scores)]


def _greedy(
    values: list[Optional[float]], allowed: Sequence[int], ties: TieBreak, rng: np.random.Generator
) -> int:
    scores = [UNVISITED if values[a] is None else values[a] for a in allowed]
    return _best(scores, allowed, ties, rng)


def _uniform(allowed: Sequence[int], rng: np.random.Generator) -> int:
    return allowed[int(rng.integers(len(allowed)))]


def _restricted(probs: np.ndarray, allowed: Sequence[int]) -> np.ndarray:
    sub = np.asarray([probs[a] for a in allowed], dtype=float)
    total = sub.sum()
    if total <= 0.0:
        return np.full(len(allowed), 1.0 / len(allowed))
    return sub / total


def select_action(
    rule: SelectionRule,
    phase: Phase,
    s: int,
    local: LocalSolution,
    global_: GlobalSolution,
    rng: np.random.Generator,
    key: Optional[NodeKey] = None,
    fallback: Optional[ValueFallback] = None,
    allowed: Optional[Sequence[int]] = None,
    step: int = 0,
) -> int:
    """
    Chooses an action at `s` with the kind bound to `phase`. Greedy and UCB pick
    actions without any estimate first. Ties go to the lowest index, or to a uniform
    draw among the tied actions when `rule.ties` is random.
    """
    allowed = list(range(global_.n_actions)) if allowed is None else list(allowed)
    kind = rule.kind_for(phase)
    node = local.nodes.get(s if key is None else key)

    if kind is SelectKind.ORDERED:
        if node is None:
            return allowed[0]
        counts = [node.n_sa.get(a, 0) for a in allowed]
        return allowed[int(np.argmin(counts))]

    if kind is SelectKind.RANDOM:
        return _uniform(allowed, rng)

    if kind is SelectKind.STOCHASTIC_POLICY:
        return allowed[sample_index(_restricted(global_.policy_probs(s), allowed), rng)]

    values = action_values(s, local, global_, key, fallback)

    if kind is SelectKind.GREEDY:
        return _greedy(values, allowed, rule.ties, rng)

    if kind is SelectKind.EPSILON_GREEDY:
        if rng.random() < epsilon_at(rule, step):
            return _uniform(allowed, rng)
        return _greedy(values, allowed, rule.ties, rng)

    if kind is SelectKind.BOLTZMANN:
        q = [0.0 if values[a] is None else values[a] for a in allowed]
        return allowed[sample_index(boltzmann_probs(q, rule.temperature), rng)]

    if kind is SelectKind.UCB:
        n_parent = node.n_s if node is not None else 0
        scores = []
        for a in allowed:
            n_child = node.n_sa.get(a, 0) if node is not None else 0
            q = values[a] if values[a] is not None else 0.0
            scores.append(ucb_score(q, n_parent, n_child, rule.ucb_c))
        return _best(scores, allowed, rule.ties, rng)

    # count-based novelty on the global visit counts
    scores = [
        UNVISITED if values[a] is None else values[a] + novelty_bonus(s, a, global_.counts_sa, rule.novelty_beta)
        for a in allowed
    ]
    return _best(scores, allowed, rule.ties, rng)


def action_probabilities(
    rule: SelectionRule,
    phase: Phase,
    s: int,
    local: LocalSolution,
    global_: GlobalSolution,
    key: Optional[NodeKey] = None,
    fallback: Optional[ValueFallback] = None,
    step: int = 0,
) -> dict[int, float]:
    """
    The distribution `select_action` draws from. Deterministic rules put their mass on
    the argmax set, split evenly among ties.
    """
    n = global_.n_actions
    kind = rule.kind_for(phase)
    if kind is SelectKind.RANDOM:
        return {a: 1.0 / n for a in range(n)}
    if kind is SelectKind.STOCHASTIC_POLICY:
        return dict(enumerate(global_.policy_probs(s).tolist()))
    values = [UNVISITED if v is None else v for v in action_values(s, local, global_, key, fallback)]
    if kind is SelectKind.BOLTZMANN:
        finite = [0.0 if math.isinf(v) else v for v in values]
        return dict(enumerate(boltzmann_probs(finite, rule.temperature).tolist()))
    best = max(values)
    ties = [a for a in range(n) if values[a] == best]
    greedy = {a: (1.0 / len(ties) if a in ties else 0.0) for a in range(n)}
    if kind is SelectKind.EPSILON_GREEDY:
        eps = epsilon_at(rule, step)
        return {a: (1.0 - eps) * greedy[a] + eps / n for a in range(n)}
    return greedy


def select_next_state(
    rule: NextStateKind,
    observed: Union[Sequence[Transition], Sample],
    rng: np.random.Generator,
) -> Union[Sample, AllChildren]:
    if isinstance(observed, Sample):
        if rule is NextStateKind.ORDERED:
            raise WrongAccessMode("ordered next-state selection needs the full distribution")
        return observed
    children = tuple(observed)
    if rule is NextStateKind.ORDERED:
        return AllChildren(children)
    chosen = children[sample_index([t.probability for t in children], rng)]
    return Sample(chosen.next_state, chosen.reward)
