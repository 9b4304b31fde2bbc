import logging
from typing import Callable, Mapping, NamedTuple, Optional, Sequence, Union

from src.domain.entities.algorithm_config import (
    BackupExtra,
    BackupOp,
    BootstrapFn,
    BootstrapKind,
    DynamicsKind,
    PolicyBackupKind,
    TableKind,
)
from src.domain.entities.mdp import AccessMode
from src.domain.entities.solution import (
    BackupEstimate,
    EstimateKind,
    GlobalSolution,
    LocalSolution,
    NodeRecord,
    TraceRecord,
)
from src.domain.errors import DistributionRequired, MissingChild, WrongAccessMode
from src.domain.math_utils import argmax_lowest, argmax_set

logger = logging.getLogger(__name__)

PROBABILITY_TOLERANCE = 1e-9


class SampledChild(NamedTuple):
    reward: float
    value: float


class ExpandedChild(NamedTuple):
    next_state: int
    probability: float
    reward: float
    value: float


Observed = Union[SampledChild, Sequence[ExpandedChild]]


def bootstrap(
    fn: BootstrapFn,
    s: int,
    a: Optional[int],
    global_: GlobalSolution,
    terminal: bool = False,
    local_value: Optional[float] = None,
) -> float:
    """
    Quick value estimate for the unexpanded remainder of a trial. Terminal states are
    worth exactly 0. A heuristic prefers the local node's value when one exists.
    """
    if terminal:
        return 0.0
    if fn.kind is BootstrapKind.ZERO:
        return 0.0
    if fn.kind is BootstrapKind.HEURISTIC:
        if local_value is not None and a is None:
            return local_value
        return fn.heuristic.value(s, a)
    if fn.which is TableKind.Q or global_.v is None:
        if a is None:
            return float(global_.q[s].max())
        return float(global_.q[s, a])
    if a is not None and global_.q is not None:
        return float(global_.q[s, a])
    return float(global_.v[s])


def greedy_policy_probs(q_children: Mapping[int, float]) -> dict[int, float]:
    """Point mass on the argmax, split uniformly among ties."""
    actions = sorted(q_children)
    best = argmax_set([q_children[a] for a in actions])
    p = 1.0 / len(best)
    return {actions[i]: p for i in best}


def policy_backup(
    op: BackupOp,
    s: int,
    q_children: Mapping[int, float],
    chosen: Optional[int] = None,
    policy_probs: Optional[Mapping[int, float]] = None,
) -> float:
    if not q_children:
        raise MissingChild(f"no child estimates at state {s}")
    if op.policy is PolicyBackupKind.ON_POLICY_SAMPLE:
        if chosen is None or chosen not in q_children:
            raise MissingChild(f"on-policy back-up at state {s} lacks the chosen action {chosen}")
        return q_children[chosen]
    if op.policy is PolicyBackupKind.GREEDY_MAX:
        return max(q_children[a] for a in sorted(q_children))

    probs = policy_probs if policy_probs is not None else greedy_policy_probs(q_children)
    total = 0.0
    mass = 0.0
    for a, p in probs.items():
        if p == 0.0:
            continue
        if a not in q_children:
            raise MissingChild(f"expected back-up at state {s} lacks action {a}")
        total += p * q_children[a]
        mass += p
    if abs(mass - 1.0) > PROBABILITY_TOLERANCE:
        raise MissingChild(f"policy at state {s} covers probability mass {mass!r} of the children")
    return total


def dynamics_backup(op: BackupOp, s: int, a: int, observed: Observed, gamma: float) -> float:
    if op.dynamics is DynamicsKind.SAMPLE:
        if isinstance(observed, SampledChild):
            return observed.reward + gamma * observed.value
        raise DistributionRequired(f"sample back-up at (s={s}, a={a}) expects one observed child")
    if isinstance(observed, SampledChild):
        raise DistributionRequired(f"expected back-up at (s={s}, a={a}) needs the full distribution")
    total = 0.0
    for child in observed:
        total += child.probability * (child.reward + gamma * child.value)
    return total


def check_solved(
    s: int,
    local: LocalSolution,
    global_: GlobalSolution,
    tol: float,
    handle,
    leaf_value: Callable[[int], float],
) -> bool:
    """
    Depth-first residual sweep over the greedy envelope below `s`. Labels every closed
    state solved when all residuals are within `tol`; otherwise re-backs-up the closed
    states in reverse order. Works on graph-mode (state-keyed) local solutions.
    """
    if handle.mode is not AccessMode.SETTABLE_DESCRIPTIVE:
        raise WrongAccessMode("solved labels need settable descriptive access")
    gamma = handle.gamma

    def node_of(state: int) -> NodeRecord:
        node = local.nodes.get(state)
        if node is None:
            value = 0.0 if handle.is_terminal(state) else leaf_value(state)
            node = NodeRecord(state=state, v_agg=value, init_value=value)
            local.nodes[state] = node
            local.frontier.add(state)
        return node

    def is_solved(state: int) -> bool:
        return handle.is_terminal(state) or state in global_.solved or node_of(state).solved

    def bellman(state: int) -> tuple[float, int, tuple]:
        q_values = []
        outcomes_per_action = []
        for a in range(handle.n_actions):
            outcomes = handle.query_descriptive(state, a)
            outcomes_per_action.append(outcomes)
            q = 0.0
            for nxt, p, r in outcomes:
                v = 0.0 if handle.is_terminal(nxt) else node_of(nxt).v_agg
                q += p * (r + gamma * v)
            q_values.append(q)
        best = argmax_lowest(q_values)
        node = node_of(state)
        for a, q in enumerate(q_values):
            node.q_agg[a] = q
        return q_values[best], best, outcomes_per_action[best]

    if is_solved(s):
        return True

    solved = True
    open_stack = [s]
    closed: list[int] = []
    seen = {s}
    while open_stack:
        state = open_stack.pop()
        closed.append(state)
        value, _, outcomes = bellman(state)
        if abs(value - node_of(state).v_agg) > tol:
            solved = False
            continue
        for nxt, _, _ in outcomes:
            if nxt not in seen and not is_solved(nxt):
                seen.add(nxt)
                open_stack.append(nxt)

    if solved:
        for state in closed:
            node_of(state).solved = True
            global_.solved.add(state)
        logger.debug("Labelled %d states solved from %d", len(closed), s)
    else:
        for state in reversed(closed):
            node_of(state).v_agg = bellman(state)[0]
    return solved


def walk_back(
    trace: TraceRecord,
    op: BackupOp,
    gamma: float,
    global_: Optional[GlobalSolution] = None,
    sibling_values: Optional[Callable[[int, int], Mapping[int, float]]] = None,
) -> list[BackupEstimate]:
    """
    Backs a single-path trace up from its leaf. Emits, deepest first, one state-action
    and one state estimate per step and fills `trace.return_estimates` for every offset
    0..depth. `sibling_values(offset, state)` may supply Q estimates of the actions not
    taken, for back-up policies that look across actions.
    """
    estimates: list[BackupEstimate] = []
    depth = trace.depth
    value = trace.bootstrap_value
    trace.return_estimates[depth] = value
    for offset in range(depth - 1, -1, -1):
        step = trace.steps[offset]
        q_hat = dynamics_backup(op, step.state, step.action, SampledChild(step.reward, value), gamma)
        q_children = dict(sibling_values(offset, step.state)) if sibling_values is not None else {}
        q_children[step.action] = q_hat
        value = policy_backup(op, step.state, q_children, chosen=step.action)
        source_depth = depth - offset
        estimates.append(
            BackupEstimate(EstimateKind.STATE_ACTION, step.state, q_hat, source_depth, step.action)
        )
        estimates.append(BackupEstimate(EstimateKind.STATE, step.state, value, source_depth))
        trace.return_estimates[offset] = value
        if global_ is not None and BackupExtra.COUNTS in op.extras:
            global_.counts_s[step.state] += 1
            global_.counts_sa[step.state, step.action] += 1
    return estimates
