"""
Brute-force reference solutions. Nothing here imports the engine's back-up or update
code, so agreement with a preset run is evidence rather than a tautology.
"""
import logging
import math
from typing import Optional, Sequence

import numpy as np

from src.domain.entities.mdp import TabularMdp
from src.domain.entities.results import OracleResult
from src.domain.errors import NonConvergent

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITERATIONS = 10**6
ARGMAX_TOLERANCE = 1e-9


def _action_value(mdp: TabularMdp, v: Sequence[float], s: int, a: int) -> float:
    q = 0.0
    for nxt, p, r in mdp.outcomes(s, a):
        q += p * (r + mdp.gamma * (0.0 if mdp.is_terminal(nxt) else v[nxt]))
    return q


def oracle_value_iteration(
    mdp: TabularMdp,
    tol: float = 1e-9,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    record_history: bool = False,
) -> OracleResult:
    """
    Synchronous (Jacobi) value iteration from V = 0. Each sweep computes every
    state's new value from the previous sweep's table, actions in index order and
    outcomes in table order.
    """
    n = mdp.n_states
    v = [0.0] * n
    history: Optional[list[list[float]]] = [] if record_history else None
    for iteration in range(1, max_iterations + 1):
        new = [0.0] * n
        for s in range(n):
            if mdp.is_terminal(s):
                continue
            best = _action_value(mdp, v, s, 0)
            for a in range(1, mdp.n_actions):
                q = _action_value(mdp, v, s, a)
                if q > best:
                    best = q
            new[s] = best
        residual = max(abs(new[s] - v[s]) for s in range(n))
        v = new
        if history is not None:
            history.append(list(v))
        if residual <= tol:
            logger.info("Value iteration converged after %d iterations (residual %.3g)", iteration, residual)
            return _result(mdp, v, iteration, residual, history)
    raise NonConvergent(f"value iteration did not reach tol={tol} within {max_iterations} iterations")


def _result(
    mdp: TabularMdp,
    v: list[float],
    iterations: int,
    residual: float,
    history: Optional[list[list[float]]],
) -> OracleResult:
    q_star = []
    optimal = []
    for s in range(mdp.n_states):
        if mdp.is_terminal(s):
            q_star.append([0.0] * mdp.n_actions)
            optimal.append([])
            continue
        row = [_action_value(mdp, v, s, a) for a in range(mdp.n_actions)]
        best = max(row)
        q_star.append(row)
        optimal.append([a for a, q in enumerate(row) if best - q <= ARGMAX_TOLERANCE])
    return OracleResult(
        v_star=v,
        q_star=q_star,
        optimal_policy=optimal,
        iterations=iterations,
        residual=residual,
        history=history,
    )


def policy_matrices(mdp: TabularMdp, policy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Transition matrix and expected one-step reward under `policy`; terminal rows are zero."""
    n = mdp.n_states
    transition = np.zeros((n, n))
    reward = np.zeros(n)
    for s in range(n):
        if mdp.is_terminal(s):
            continue
        for a in range(mdp.n_actions):
            weight = policy[s, a]
            if weight == 0.0:
                continue
            for nxt, p, r in mdp.outcomes(s, a):
                reward[s] += weight * p * r
                if not mdp.is_terminal(nxt):
                    transition[s, nxt] += weight * p
    return transition, reward


def oracle_policy_evaluation(
    mdp: TabularMdp,
    policy: Sequence[Sequence[float]],
    tol: float = 1e-10,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
) -> list[float]:
    """Iterates V <- r_pi + gamma * P_pi V until the sup-norm change is within `tol`."""
    pi = np.asarray(policy, dtype=float)
    if pi.shape != (mdp.n_states, mdp.n_actions):
        raise ValueError(f"policy has shape {pi.shape}, expected {(mdp.n_states, mdp.n_actions)}")
    transition, reward = policy_matrices(mdp, pi)
    v = np.zeros(mdp.n_states)
    for iteration in range(max_iterations):
        new = reward + mdp.gamma * transition @ v
        residual = float(np.max(np.abs(new - v))) if len(v) else 0.0
        v = new
        if not np.all(np.isfinite(v)):
            raise NonConvergent(f"policy evaluation diverged: values became non-finite after {iteration + 1} iterations")
        if residual <= tol:
            return v.tolist()
    raise NonConvergent(f"policy evaluation did not reach tol={tol} within {max_iterations} iterations (improper policy?)")


def greedy_policy_matrix(mdp: TabularMdp, optimal_policy: Sequence[Sequence[int]]) -> np.ndarray:
    """Deterministic policy on the lowest optimal action; uniform at terminals."""
    pi = np.full((mdp.n_states, mdp.n_actions), 1.0 / mdp.n_actions)
    for s, actions in enumerate(optimal_policy):
        if actions:
            pi[s] = 0.0
            pi[s, actions[0]] = 1.0
    return pi


def oracle_mc_return(
    mdp: TabularMdp,
    policy: Sequence[Sequence[float]],
    s0: int,
    episodes: int,
    seed: int = 0,
    horizon: Optional[int] = None,
) -> tuple[float, Optional[float]]:
    """
    Mean and standard error of discounted returns of `policy` from `s0`. The standard
    error is None for a single episode.
    """
    if episodes < 1:
        raise ValueError("episodes must be at least 1")
    rng = np.random.default_rng(seed)
    pi = np.asarray(policy, dtype=float)
    horizon = horizon if horizon is not None else 100 * mdp.n_states
    returns = np.empty(episodes)
    for i in range(episodes):
        s, total, discount = s0, 0.0, 1.0
        for _ in range(horizon):
            if mdp.is_terminal(s):
                break
            a = int(rng.choice(mdp.n_actions, p=pi[s]))
            outcomes = mdp.outcomes(s, a)
            k = int(rng.choice(len(outcomes), p=[t.probability for t in outcomes]))
            nxt, _, r = outcomes[k]
            total += discount * r
            discount *= mdp.gamma
            s = nxt
        returns[i] = total
    mean = float(returns.mean())
    if episodes == 1:
        return mean, None
    return mean, float(returns.std(ddof=1) / math.sqrt(episodes))
