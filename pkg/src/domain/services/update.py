import math
from typing import Optional

import numpy as np

from src.domain.entities.algorithm_config import (
    Baseline,
    GlobalUpdateKind,
    GlobalUpdateRule,
    LearningRateSchedule,
    LocalUpdateKind,
    LocalUpdateRule,
)
from src.domain.entities.solution import GlobalSolution, TraceRecord
from src.domain.errors import ConfigError, MissingReturns
from src.domain.math_utils import stable_softmax


def step_update(old: float, target: float, eta: float) -> float:
    # eta == 1 is an exact assignment so that Replace and Step(1) agree bit for bit
    if eta == 1.0:
        return target
    return old + eta * (target - old)


def eligibility_weight(lam: float, depth: int, final: bool = False) -> float:
    """(1 - lam) * lam^(depth-1); the deepest estimate of a truncated trace takes the tail lam^(depth-1)."""
    if final:
        return lam ** (depth - 1)
    return (1.0 - lam) * lam ** (depth - 1)


def local_update(
    rule: LocalUpdateRule,
    old: float,
    target: float,
    n: int = 1,
    depth: int = 1,
    final: bool = False,
) -> float:
    if rule.kind is LocalUpdateKind.REPLACE:
        return target
    if rule.kind is LocalUpdateKind.AVERAGE:
        return step_update(old, target, 1.0 / n)
    if rule.kind is LocalUpdateKind.STEP:
        return step_update(old, target, rule.eta)
    return step_update(old, target, eligibility_weight(rule.lam, depth, final))


def decay_learning_rate(rule: GlobalUpdateRule, step: int) -> float:
    if rule.schedule is LearningRateSchedule.CONSTANT:
        return rule.eta
    return rule.eta * rule.t0 / (rule.t0 + step)


def global_tabular_update(
    rule: GlobalUpdateRule,
    global_: GlobalSolution,
    s: int,
    a: Optional[int],
    target: float,
    step: int = 0,
) -> float:
    """Moves V^g(s) (a is None) or Q^g(s, a) toward `target`. Returns the old entry."""
    eta = decay_learning_rate(rule, step)
    if a is None:
        if global_.v is None:
            raise ConfigError("global V table is not maintained by this configuration")
        old = float(global_.v[s])
        global_.v[s] = step_update(old, target, eta)
        return old
    if global_.q is None:
        raise ConfigError("global Q table is not maintained by this configuration")
    old = float(global_.q[s, a])
    global_.q[s, a] = step_update(old, target, eta)
    return old


def log_softmax_gradient(logits: np.ndarray, a: int) -> np.ndarray:
    """Gradient of ln softmax(logits)[a] with respect to the logits: one-hot minus probabilities."""
    grad = -stable_softmax(logits)
    grad[a] += 1.0
    return grad


def policy_gradient_update(
    rule: GlobalUpdateRule,
    global_: GlobalSolution,
    trace: TraceRecord,
    step: int = 0,
) -> None:
    """
    REINFORCE step over a whole trace. Gradients are taken at the logits as they were
    before the update; with a V table the baseline is V^g(s_t) and V^g moves toward G_t.
    """
    if rule.kind is not GlobalUpdateKind.POLICY_GRADIENT_SOFTMAX:
        raise ConfigError("policy_gradient_update needs a policy-gradient rule")
    if global_.policy_logits is None:
        raise ConfigError("policy logits are not maintained by this configuration")
    missing = [t for t in range(trace.depth) if t not in trace.return_estimates]
    if missing:
        raise MissingReturns(f"trace lacks return estimates for offsets {missing}")

    eta = decay_learning_rate(rule, step)
    use_baseline = rule.baseline is Baseline.V_TABLE and global_.v is not None
    before = global_.policy_logits.copy()
    deltas = np.zeros_like(before)
    for t, step_ in enumerate(trace.steps):
        g = trace.return_estimates[t]
        b = float(global_.v[step_.state]) if use_baseline else 0.0
        deltas[step_.state] += eta * (g - b) * log_softmax_gradient(before[step_.state], step_.action)
    global_.policy_logits += deltas
    if not np.all(np.isfinite(global_.policy_logits)):
        raise FloatingPointError("policy logits became non-finite")

    if global_.v is not None:
        for t, step_ in enumerate(trace.steps):
            s = step_.state
            global_.v[s] = step_update(float(global_.v[s]), trace.return_estimates[t], eta)


def harmonic_partial_sum(rule: GlobalUpdateRule, steps: int) -> float:
    """Sum of the scheduled learning rates over the first `steps` steps."""
    return math.fsum(decay_learning_rate(rule, k) for k in range(steps))
