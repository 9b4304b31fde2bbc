"""Exact and finite-difference gradients of J(theta) for tabular softmax policies."""
import numpy as np

from src.application.services.oracles import oracle_policy_evaluation, policy_matrices
from src.domain.entities.mdp import TabularMdp

FD_EPSILON = 1e-5
EVALUATION_TOL = 1e-14


def softmax_policy(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    weights = np.exp(shifted)
    return weights / weights.sum(axis=1, keepdims=True)


def initial_vector(mdp: TabularMdp) -> np.ndarray:
    p0 = np.zeros(mdp.n_states)
    for s, p in mdp.initial_dist:
        p0[s] += p
    return p0


def policy_objective(mdp: TabularMdp, logits: np.ndarray) -> float:
    """J(theta) = sum_s p0(s) V^pi(s)."""
    v = oracle_policy_evaluation(mdp, softmax_policy(logits), tol=EVALUATION_TOL)
    return float(initial_vector(mdp) @ np.asarray(v))


def exact_policy_gradient(mdp: TabularMdp, logits: np.ndarray) -> np.ndarray:
    """
    dJ/dtheta[s, b] = d(s) * pi(b|s) * (Q(s, b) - V(s)), with d the discounted
    occupancy p0^T (I - gamma P_pi)^-1.
    """
    pi = softmax_policy(logits)
    transition, reward = policy_matrices(mdp, pi)
    n = mdp.n_states
    v = np.linalg.solve(np.eye(n) - mdp.gamma * transition, reward)
    occupancy = np.linalg.solve((np.eye(n) - mdp.gamma * transition).T, initial_vector(mdp))

    q = np.zeros((n, mdp.n_actions))
    for s in range(n):
        if mdp.is_terminal(s):
            continue
        for a in range(mdp.n_actions):
            for nxt, p, r in mdp.outcomes(s, a):
                q[s, a] += p * (r + mdp.gamma * (0.0 if mdp.is_terminal(nxt) else v[nxt]))

    grad = occupancy[:, None] * pi * (q - v[:, None])
    grad[[s for s in range(n) if mdp.is_terminal(s)]] = 0.0
    return grad


def finite_difference_gradient(mdp: TabularMdp, logits: np.ndarray, eps: float = FD_EPSILON) -> np.ndarray:
    grad = np.zeros_like(logits, dtype=float)
    for index in np.ndindex(*logits.shape):
        plus = logits.astype(float).copy()
        minus = plus.copy()
        plus[index] += eps
        minus[index] -= eps
        grad[index] = (policy_objective(mdp, plus) - policy_objective(mdp, minus)) / (2.0 * eps)
    return grad


def relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-12) -> float:
    scale = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), floor)
    return float(np.max(np.abs(a - b))) / scale
