"""
Named configurations reproducing the classic tabular algorithms as points in the
dimension space of `AlgorithmConfig`.
"""
from typing import Callable

from src.domain.entities.algorithm_config import (
    AlgorithmConfig,
    BackupExtra,
    BackupOp,
    Baseline,
    BootstrapFn,
    BootstrapKind,
    BootstrapLocation,
    BudgetKind,
    Coverage,
    DepthKind,
    DepthRule,
    DynamicsKind,
    ExpansionPolicy,
    GlobalUpdateKind,
    GlobalUpdateRule,
    HeuristicTable,
    InitKind,
    InitScheme,
    LocalUpdateKind,
    LocalUpdateRule,
    NextStateKind,
    PlanningKind,
    PlanningSpec,
    PolicyBackupKind,
    RecommendMode,
    ReuseMode,
    RootKind,
    RootStrategySpec,
    SelectionRule,
    SelectKind,
    SolutionSpec,
    SolutionType,
    TableKind,
    TieBreak,
    TrialBudget,
)
from src.domain.entities.mdp import AccessMode
from src.domain.errors import UnknownPreset

MODEL_FREE_ETA = 0.1
SEARCH_TRIALS = 1000
TD_LAMBDA_DEPTH = 10
TD_LAMBDA = 0.9
KNOWN_THRESHOLD = 10


def value_iteration() -> AlgorithmConfig:
    return AlgorithmConfig(
        name="value_iteration",
        solution=SolutionSpec(coverage=Coverage.GLOBAL, type=SolutionType.V, init=InitScheme(value=0.0)),
        root=RootStrategySpec(kind=RootKind.ORDERED),
        budget=TrialBudget(kind=BudgetKind.EXHAUSTIVE),
        depth=DepthRule(kind=DepthKind.FIXED, n=1),
        select=SelectionRule(bf=SelectKind.ORDERED, af=SelectKind.ORDERED),
        next_state=NextStateKind.ORDERED,
        bootstrap=BootstrapFn(kind=BootstrapKind.LEARNED_GLOBAL, which=TableKind.V),
        backup=BackupOp(policy=PolicyBackupKind.GREEDY_MAX, dynamics=DynamicsKind.EXPECTED),
        update_local=LocalUpdateRule(kind=LocalUpdateKind.REPLACE),
        update_global=GlobalUpdateRule(kind=GlobalUpdateKind.TABULAR_STEP, eta=1.0),
        access_required=AccessMode.SETTABLE_DESCRIPTIVE,
        sweep_sync=True,
    )


def _heuristic_search(name: str) -> AlgorithmConfig:
    heuristic = HeuristicTable()
    return AlgorithmConfig(
        name=name,
        solution=SolutionSpec(coverage=Coverage.LOCAL, type=SolutionType.V, heuristic=heuristic),
        root=RootStrategySpec(kind=RootKind.FORWARD_SAMPLING, recommend=RecommendMode.MAX_VALUE),
        budget=TrialBudget(kind=BudgetKind.UNTIL_CONVERGENCE, tol=1e-6),
        depth=DepthRule(kind=DepthKind.ADAPTIVE_FRONTIER),
        select=SelectionRule(bf=SelectKind.GREEDY, af=SelectKind.ORDERED, nr=SelectKind.GREEDY),
        next_state=NextStateKind.ORDERED,
        bootstrap=BootstrapFn(kind=BootstrapKind.HEURISTIC, heuristic=heuristic),
        backup=BackupOp(
            policy=PolicyBackupKind.GREEDY_MAX,
            dynamics=DynamicsKind.EXPECTED,
            extras=frozenset({BackupExtra.SOLVED_LABELS}),
        ),
        update_local=LocalUpdateRule(kind=LocalUpdateKind.REPLACE),
        reuse_local=ReuseMode.FULL,
        access_required=AccessMode.SETTABLE_DESCRIPTIVE,
    )


def lao_star() -> AlgorithmConfig:
    """Best-first: greedy inside the explored envelope, full expansion at the frontier."""
    return _heuristic_search("lao_star")


def labeled_rtdp() -> AlgorithmConfig:
    return _heuristic_search("labeled_rtdp").model_copy(
        update={
            "budget": TrialBudget(kind=BudgetKind.UNTIL_CONVERGENCE, tol=0.0),
            "depth": DepthRule(kind=DepthKind.FIXED, n=1),
            "next_state": NextStateKind.SAMPLE,
        }
    )


def mc_search() -> AlgorithmConfig:
    return AlgorithmConfig(
        name="mc_search",
        solution=SolutionSpec(coverage=Coverage.LOCAL, type=SolutionType.Q),
        root=RootStrategySpec(kind=RootKind.FORWARD_SAMPLING, recommend=RecommendMode.MAX_VALUE),
        budget=TrialBudget(kind=BudgetKind.FIXED_TRIALS, n=SEARCH_TRIALS),
        depth=DepthRule(kind=DepthKind.INFINITE),
        select=SelectionRule(bf=SelectKind.ORDERED, af=SelectKind.RANDOM, nr=SelectKind.GREEDY),
        next_state=NextStateKind.SAMPLE,
        bootstrap=BootstrapFn(kind=BootstrapKind.ZERO),
        backup=BackupOp(policy=PolicyBackupKind.ON_POLICY_SAMPLE, dynamics=DynamicsKind.SAMPLE),
        update_local=LocalUpdateRule(kind=LocalUpdateKind.AVERAGE),
        access_required=AccessMode.SETTABLE_GENERATIVE,
        expansion=ExpansionPolicy.ROOT_ONLY,
    )


def mcts() -> AlgorithmConfig:
    """UCT: UCB inside the tree, one new node per trial, uniform random roll-outs to the end."""
    return AlgorithmConfig(
        name="mcts",
        solution=SolutionSpec(coverage=Coverage.LOCAL, type=SolutionType.Q, tree_mode=True),
        root=RootStrategySpec(kind=RootKind.FORWARD_SAMPLING, recommend=RecommendMode.MAX_COUNT),
        budget=TrialBudget(kind=BudgetKind.FIXED_TRIALS, n=SEARCH_TRIALS),
        depth=DepthRule(kind=DepthKind.INFINITE),
        select=SelectionRule(bf=SelectKind.UCB, af=SelectKind.RANDOM, nr=SelectKind.GREEDY),
        next_state=NextStateKind.SAMPLE,
        bootstrap=BootstrapFn(kind=BootstrapKind.ZERO),
        backup=BackupOp(
            policy=PolicyBackupKind.ON_POLICY_SAMPLE,
            dynamics=DynamicsKind.SAMPLE,
            extras=frozenset({BackupExtra.COUNTS}),
        ),
        update_local=LocalUpdateRule(kind=LocalUpdateKind.AVERAGE),
        access_required=AccessMode.SETTABLE_GENERATIVE,
        expansion=ExpansionPolicy.ONE_PER_TRIAL,
    )


def q_learning() -> AlgorithmConfig:
    return AlgorithmConfig(
        name="q_learning",
        solution=SolutionSpec(coverage=Coverage.GLOBAL, type=SolutionType.Q),
        root=RootStrategySpec(kind=RootKind.FORWARD_SAMPLING),
        budget=TrialBudget(kind=BudgetKind.FIXED_TRIALS, n=1),
        depth=DepthRule(kind=DepthKind.FIXED, n=1),
        select=SelectionRule(
            bf=SelectKind.EPSILON_GREEDY, af=SelectKind.EPSILON_GREEDY, eps=0.1, ties=TieBreak.RANDOM
        ),
        next_state=NextStateKind.SAMPLE,
        bootstrap=BootstrapFn(
            kind=BootstrapKind.LEARNED_GLOBAL, location=BootstrapLocation.STATE_ACTION, which=TableKind.Q
        ),
        backup=BackupOp(policy=PolicyBackupKind.GREEDY_MAX, dynamics=DynamicsKind.SAMPLE),
        update_local=LocalUpdateRule(kind=LocalUpdateKind.REPLACE),
        update_global=GlobalUpdateRule(kind=GlobalUpdateKind.TABULAR_STEP, eta=MODEL_FREE_ETA),
        access_required=AccessMode.RESETTABLE_GENERATIVE,
    )


def sarsa() -> AlgorithmConfig:
    """On-policy one-step control: the bootstrap action is the next behaviour action."""
    base = q_learning()
    return base.model_copy(
        update={
            "name": "sarsa",
            "backup": base.backup.model_copy(update={"policy": PolicyBackupKind.ON_POLICY_SAMPLE}),
        }
    )


def td_zero() -> AlgorithmConfig:
    """One-step TD evaluation of the (uniform, unless learned) stochastic policy."""
    return AlgorithmConfig(
        name="td_zero",
        solution=SolutionSpec(coverage=Coverage.GLOBAL, type=SolutionType.V),
        root=RootStrategySpec(kind=RootKind.FORWARD_SAMPLING),
        budget=TrialBudget(kind=BudgetKind.FIXED_TRIALS, n=1),
        depth=DepthRule(kind=DepthKind.FIXED, n=1),
        select=SelectionRule(bf=SelectKind.STOCHASTIC_POLICY, af=SelectKind.STOCHASTIC_POLICY),
        next_state=NextStateKind.SAMPLE,
        bootstrap=BootstrapFn(kind=BootstrapKind.LEARNED_GLOBAL, which=TableKind.V),
        backup=BackupOp(policy=PolicyBackupKind.ON_POLICY_SAMPLE, dynamics=DynamicsKind.SAMPLE),
        update_local=LocalUpdateRule(kind=LocalUpdateKind.REPLACE),
        update_global=GlobalUpdateRule(kind=GlobalUpdateKind.TABULAR_STEP, eta=MODEL_FREE_ETA),
        access_required=AccessMode.RESETTABLE_GENERATIVE,
    )


def td_lambda() -> AlgorithmConfig:
    """
    Every state of a real episode becomes the root once; the trials at a root replay
    the stored episode to depths 1..d_max and combine their returns with weights
    (1 - lambda) * lambda^(d - 1).
    """
    return td_zero().model_copy(
        update={
            "name": "td_lambda",
            "budget": TrialBudget(kind=BudgetKind.FIXED_TRIALS, n=TD_LAMBDA_DEPTH),
            "depth": DepthRule(kind=DepthKind.INCREASING, n=TD_LAMBDA_DEPTH),
            "update_local": LocalUpdateRule(kind=LocalUpdateKind.ELIGIBILITY, lam=TD_LAMBDA),
            "reuse_local": ReuseMode.TRACE,
        }
    )


def reinforce() -> AlgorithmConfig:
    return AlgorithmConfig(
        name="reinforce",
        solution=SolutionSpec(coverage=Coverage.GLOBAL, type=SolutionType.POLICY),
        root=RootStrategySpec(kind=RootKind.FORWARD_SAMPLING),
        budget=TrialBudget(kind=BudgetKind.FIXED_TRIALS, n=1),
        depth=DepthRule(kind=DepthKind.INFINITE),
        select=SelectionRule(bf=SelectKind.STOCHASTIC_POLICY, af=SelectKind.STOCHASTIC_POLICY),
        next_state=NextStateKind.SAMPLE,
        bootstrap=BootstrapFn(kind=BootstrapKind.ZERO),
        backup=BackupOp(policy=PolicyBackupKind.ON_POLICY_SAMPLE, dynamics=DynamicsKind.SAMPLE),
        update_local=LocalUpdateRule(kind=LocalUpdateKind.REPLACE),
        update_global=GlobalUpdateRule(kind=GlobalUpdateKind.POLICY_GRADIENT_SOFTMAX, eta=MODEL_FREE_ETA),
        access_required=AccessMode.RESETTABLE_GENERATIVE,
    )


def actor_critic() -> AlgorithmConfig:
    """REINFORCE with the V table as baseline."""
    base = reinforce()
    return base.model_copy(
        update={
            "name": "actor_critic",
            "solution": base.solution.model_copy(update={"type": SolutionType.ACTOR_CRITIC}),
            "update_global": base.update_global.model_copy(update={"baseline": Baseline.V_TABLE}),
        }
    )


def dyna_q() -> AlgorithmConfig:
    return q_learning().model_copy(
        update={
            "name": "dyna_q",
            "planning": PlanningSpec(
                kind=PlanningKind.DYNA,
                planning_steps=10,
                dynamics=DynamicsKind.SAMPLE,
                eta=MODEL_FREE_ETA,
            ),
        }
    )


def prioritized_sweeping() -> AlgorithmConfig:
    """
    Q-learning with an expected-update planner over the learned model, swept in
    priority order. Unseen and under-sampled pairs stay at the optimistic bound, so
    the greedy behaviour explores until every pair has KNOWN_THRESHOLD samples.
    """
    base = q_learning()
    return base.model_copy(
        update={
            "name": "prioritized_sweeping",
            "solution": base.solution.model_copy(update={"init": InitScheme(kind=InitKind.OPTIMISTIC)}),
            "select": base.select.model_copy(
                update={"bf": SelectKind.COUNT_NOVELTY, "af": SelectKind.COUNT_NOVELTY, "novelty_beta": 0.1}
            ),
            "backup": base.backup.model_copy(
                update={"extras": frozenset({BackupExtra.PRIORITIES, BackupExtra.COUNTS})}
            ),
            "planning": PlanningSpec(
                kind=PlanningKind.PRIORITIZED_SWEEPING,
                planning_steps=10,
                dynamics=DynamicsKind.EXPECTED,
                eta=1.0,
                known_threshold=KNOWN_THRESHOLD,
            ),
        }
    )


PRESETS: dict[str, Callable[[], AlgorithmConfig]] = {
    "value_iteration": value_iteration,
    "lao_star": lao_star,
    "labeled_rtdp": labeled_rtdp,
    "mc_search": mc_search,
    "mcts": mcts,
    "q_learning": q_learning,
    "sarsa": sarsa,
    "td_zero": td_zero,
    "td_lambda": td_lambda,
    "reinforce": reinforce,
    "actor_critic": actor_critic,
    "dyna_q": dyna_q,
    "prioritized_sweeping": prioritized_sweeping,
}


def preset(name: str) -> AlgorithmConfig:
    try:
        factory = PRESETS[name]
    except KeyError:
        raise UnknownPreset(f"unknown preset '{name}' (known: {', '.join(sorted(PRESETS))})") from None
    return factory()


def list_presets() -> list[str]:
    return sorted(PRESETS)
