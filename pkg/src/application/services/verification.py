"""Per-seed comparisons of a preset run against the brute-force oracles."""
import logging
from typing import Optional

import numpy as np

from src.application.services.oracles import oracle_policy_evaluation
from src.domain.entities.mdp import TabularMdp
from src.domain.entities.results import CheckKind, OracleResult, RunResult, SeedVerdict, VerifyCriterion

logger = logging.getLogger(__name__)


def _state_values(result: RunResult) -> Optional[list[float]]:
    snapshot = result.global_snapshot
    if snapshot.v is not None:
        return snapshot.v
    if snapshot.q is not None:
        return [max(row) for row in snapshot.q]
    return None


def _greedy_actions(result: RunResult) -> Optional[list[int]]:
    snapshot = result.global_snapshot
    table = snapshot.q if snapshot.q is not None else snapshot.policy
    if table is None:
        return None
    return [int(np.argmax(row)) for row in table]


def _value_sup(mdp: TabularMdp, oracle: OracleResult, result: RunResult, tol: float) -> tuple[float, str]:
    values = _state_values(result)
    if values is None:
        return float("inf"), "run keeps no global value table"
    error = max(
        (abs(values[s] - oracle.v_star[s]) for s in range(mdp.n_states) if not mdp.is_terminal(s)),
        default=0.0,
    )
    return error, f"max |V - V*| = {error:.3g}"


def _root_value(mdp: TabularMdp, oracle: OracleResult, result: RunResult, tol: float) -> tuple[float, str]:
    root = result.first_root if result.first_root is not None else 0
    values = dict(result.local_values)
    if root not in values:
        global_values = _state_values(result)
        if global_values is None:
            return float("inf"), f"no estimate for root {root}"
        values[root] = global_values[root]
    # every state labelled solved must also be within tolerance
    checked = [s for s in {root} | set(result.global_snapshot.solved) if s in values and not mdp.is_terminal(s)]
    error = max((abs(values[s] - oracle.v_star[s]) for s in checked), default=0.0)
    return error, f"root {root}: V = {values[root]:.6g}, V* = {oracle.v_star[root]:.6g}; {len(checked)} states checked"


def _greedy_policy(mdp: TabularMdp, oracle: OracleResult, result: RunResult, tol: float) -> tuple[float, str]:
    """
    Infinite when any greedy action is non-optimal; otherwise the sup-norm error of the
    Q table, or of the V table for value-only runs.
    """
    greedy = _greedy_actions(result)
    if greedy is None:
        return float("inf"), "run keeps no Q table or policy"
    states = [s for s in range(mdp.n_states) if not mdp.is_terminal(s)]
    wrong = [s for s in states if greedy[s] not in oracle.optimal_policy[s]]
    if wrong:
        return float("inf"), f"{len(wrong)} non-optimal greedy actions (first at state {wrong[0]})"
    snapshot = result.global_snapshot
    if snapshot.q is not None:
        error = max(
            (abs(snapshot.q[s][a] - oracle.q_star[s][a]) for s in states for a in range(mdp.n_actions)),
            default=0.0,
        )
        return error, f"greedy policy optimal; max |Q - Q*| = {error:.3g}"
    if snapshot.v is not None:
        error = max((abs(snapshot.v[s] - oracle.v_star[s]) for s in states), default=0.0)
        return error, f"greedy policy optimal; max |V - V*| = {error:.3g}"
    return 0.0, "greedy policy optimal"


def _root_action(mdp: TabularMdp, oracle: OracleResult, result: RunResult, tol: float) -> tuple[float, str]:
    root = result.first_root if result.first_root is not None else 0
    action = result.recommended_action
    if action is None:
        greedy = _greedy_actions(result)
        action = greedy[root] if greedy is not None else None
    ok = action is not None and action in oracle.optimal_policy[root]
    return (0.0 if ok else 1.0), f"recommended {action} at root {root}, optimal {oracle.optimal_policy[root]}"


def _policy_value(mdp: TabularMdp, oracle: OracleResult, result: RunResult, tol: float) -> tuple[float, str]:
    values = _state_values(result)
    if values is None:
        return float("inf"), "run keeps no global value table"
    if result.global_snapshot.policy is not None:
        policy = result.global_snapshot.policy
    else:
        policy = [[1.0 / mdp.n_actions] * mdp.n_actions for _ in range(mdp.n_states)]
    reference = oracle_policy_evaluation(mdp, policy, tol=1e-10)
    error = max(
        (abs(values[s] - reference[s]) for s in range(mdp.n_states) if not mdp.is_terminal(s)),
        default=0.0,
    )
    return error, f"max |V - V^pi| = {error:.3g}"


CHECKS = {
    CheckKind.VALUE_SUP: _value_sup,
    CheckKind.ROOT_VALUE: _root_value,
    CheckKind.GREEDY_POLICY: _greedy_policy,
    CheckKind.ROOT_ACTION: _root_action,
    CheckKind.POLICY_VALUE: _policy_value,
}


def check_run(
    criterion: VerifyCriterion,
    mdp: TabularMdp,
    oracle: OracleResult,
    result: RunResult,
    tol: Optional[float] = None,
) -> SeedVerdict:
    """
    A seed passes when the check's error is within `tol`; the root action check needs
    an optimal recommendation regardless of `tol`.
    """
    tol = criterion.tol if tol is None else tol
    error, detail = CHECKS[criterion.check](mdp, oracle, result, tol)
    if criterion.check is CheckKind.ROOT_ACTION:
        passed = error == 0.0
    else:
        passed = error <= tol
    logger.debug("Seed %d %s: %s", result.seed, "passed" if passed else "failed", detail)
    return SeedVerdict(seed=result.seed, passed=passed, error=error, detail=detail)
