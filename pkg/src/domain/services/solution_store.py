import logging
from typing import Optional, Sequence

import numpy as np

from src.domain.entities.algorithm_config import (
    AlgorithmConfig,
    Coverage,
    InitKind,
    LocalUpdateKind,
    LocalUpdateRule,
    RecommendMode,
    ReuseMode,
    SolutionType,
)
from src.domain.entities.solution import (
    BackupEstimate,
    EstimateKind,
    GlobalSolution,
    LocalSolution,
    NodeKey,
    NodeRecord,
)
from src.domain.errors import NoVisitedChildren, NotOnFrontier, UnsupportedInit
from src.domain.math_utils import argmax_lowest
from src.domain.services.update import local_update

logger = logging.getLogger(__name__)


def init_global(
    config: AlgorithmConfig,
    n_states: int,
    n_actions: int,
    optimistic_bound: float = 0.0,
    terminals: Sequence[int] = (),
) -> GlobalSolution:
    """
    Allocates only the tables the configuration maintains and fills them per its
    initialisation scheme. `optimistic_bound` is used when the scheme leaves c_hi open.
    Optimistic tables keep the rows of `terminals` at zero.
    """
    spec = config.solution
    global_ = GlobalSolution(n_states=n_states, n_actions=n_actions)
    if spec.coverage is Coverage.LOCAL:
        return global_

    init = spec.init
    rng = np.random.default_rng(init.seed) if init.kind is InitKind.RANDOM else None

    def table(shape) -> np.ndarray:
        if init.kind is InitKind.UNIFORM:
            return np.full(shape, float(init.value))
        if init.kind is InitKind.RANDOM:
            return rng.normal(0.0, init.scale, size=shape)
        if init.kind is InitKind.OPTIMISTIC:
            c_hi = init.c_hi if init.c_hi is not None else optimistic_bound
            filled = np.full(shape, float(c_hi))
            filled[list(terminals)] = 0.0
            return filled
        if spec.heuristic is None or not spec.heuristic.is_resolved:
            raise UnsupportedInit("heuristic initialisation requested without a heuristic table")
        values = np.array([spec.heuristic.value(s) for s in range(n_states)], dtype=float)
        if len(shape) == 1:
            return values
        return np.repeat(values[:, None], shape[1], axis=1)

    if spec.type in (SolutionType.V, SolutionType.ACTOR_CRITIC):
        global_.v = table((n_states,))
    if spec.type is SolutionType.Q:
        global_.q = table((n_states, n_actions))
    if spec.type in (SolutionType.POLICY, SolutionType.ACTOR_CRITIC):
        # logits start uniform unless random init asks otherwise
        if init.kind is InitKind.RANDOM:
            global_.policy_logits = rng.normal(0.0, init.scale, size=(n_states, n_actions))
        else:
            global_.policy_logits = np.zeros((n_states, n_actions))
    return global_


def create_node(local: LocalSolution, key: NodeKey, state: int, value: float = 0.0) -> NodeRecord:
    """Adds a node on the frontier; existing nodes are returned untouched."""
    node = local.nodes.get(key)
    if node is None:
        node = NodeRecord(state=state, v_agg=value, init_value=value)
        local.nodes[key] = node
        local.frontier.add(key)
    return node


def init_local(
    root: int,
    carryover: Optional[LocalSolution],
    config: AlgorithmConfig,
    root_value: float = 0.0,
) -> LocalSolution:
    tree_mode = config.solution.tree_mode
    root_key: NodeKey = (root,) if tree_mode else root
    reuse = config.reuse_local

    if carryover is None or reuse is ReuseMode.NONE:
        local = LocalSolution(root=root, root_key=root_key, tree_mode=tree_mode)
    elif reuse is ReuseMode.TRACE:
        local = LocalSolution(
            root=root,
            root_key=root_key,
            tree_mode=tree_mode,
            trace_buffer=carryover.trace_buffer,
            episode=carryover.episode,
            episode_offset=carryover.episode_offset,
        )
    else:
        carryover.root = root
        carryover.root_key = root_key
        local = carryover

    create_node(local, root_key, root, root_value)
    return local


def expand_node(local: LocalSolution, key: NodeKey) -> None:
    if key not in local.frontier:
        raise NotOnFrontier(f"node {key!r} is not on the frontier")
    local.frontier.discard(key)
    local.explored.add(key)


def record_estimate(
    local: LocalSolution,
    est: BackupEstimate,
    rule: LocalUpdateRule,
    key: Optional[NodeKey] = None,
    final: bool = False,
) -> float:
    """
    Folds one back-up estimate into the node aggregate and bumps its count.
    Returns |new - old| of the aggregate.

    Eligibility aggregates are the weighted sum of per-depth targets, so each estimate
    contributes `local_update(0, target) - 0` and the first one replaces the prior.
    """
    node = local.nodes[est.s if key is None else key]
    if est.kind is EstimateKind.STATE:
        node.n_s += 1
        old = node.v_agg
        node.v_agg = _aggregate(rule, old, est.value, node.n_s, est.source_depth, final)
        return abs(node.v_agg - old)

    n = node.n_sa.get(est.a, 0) + 1
    node.n_sa[est.a] = n
    old = node.q_agg.get(est.a, node.init_value)
    new = _aggregate(rule, old, est.value, n, est.source_depth, final)
    node.q_agg[est.a] = new
    return abs(new - old)


def record_lookahead(node: NodeRecord, a: int, value: float, rule: LocalUpdateRule) -> None:
    """Stores a one-step look-ahead Q estimate without counting it as a visit."""
    old = node.q_agg.get(a, node.init_value)
    node.q_agg[a] = local_update(rule, old, value, max(node.n_sa.get(a, 0), 1), 1)


def _aggregate(rule: LocalUpdateRule, old: float, target: float, n: int, depth: int, final: bool) -> float:
    if rule.kind is LocalUpdateKind.ELIGIBILITY:
        contribution = local_update(rule, 0.0, target, n, depth, final) - 0.0
        return contribution if n == 1 else old + contribution
    return local_update(rule, old, target, n, depth, final)


def recommend_action(local: LocalSolution, key: NodeKey, mode: RecommendMode) -> int:
    node = local.nodes.get(key)
    if node is None:
        raise NoVisitedChildren(f"node {key!r} does not exist")
    if mode is RecommendMode.MAX_COUNT:
        candidates = sorted(a for a, n in node.n_sa.items() if n > 0)
        values = [node.n_sa[a] for a in candidates]
    else:
        candidates = sorted(node.q_agg)
        values = [node.q_agg[a] for a in candidates]
    if not candidates:
        raise NoVisitedChildren(f"node {key!r} has no visited child actions")
    return candidates[argmax_lowest(values)]
