"""
The generic trial-based planning/learning loop.

An outer loop picks root states and an inner loop runs trials from each root. Every
trial is a forward recursion (`_visit_state` / `_visit_action`) followed by one-step
back-ups on the way out, after which the local solution feeds the global one.
"""
import logging
import math
import sys
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from src.domain.entities.algorithm_config import (
    AlgorithmConfig,
    BootstrapKind,
    BootstrapLocation,
    BudgetKind,
    Coverage,
    DepthKind,
    DepthRule,
    DynamicsKind,
    ExpansionPolicy,
    GlobalUpdateKind,
    InitKind,
    NextStateKind,
    Phase,
    PlanningKind,
    PolicyBackupKind,
    RecommendMode,
    ReuseMode,
    RootKind,
    RootStrategySpec,
    SolutionType,
    TableKind,
    TrialBudget,
)
from src.domain.entities.mdp import AccessMode, TabularMdp
from src.domain.entities.results import RootRecord, RunResult
from src.domain.entities.solution import (
    BackupEstimate,
    EstimateKind,
    LocalSolution,
    NodeKey,
    TraceRecord,
    TraceStep,
)
from src.domain.errors import ConfigError, NoVisitedChildren, UnvisitedPair
from src.domain.math_utils import argmax_lowest
from src.domain.services.access import AccessHandle
from src.domain.services.backup import (
    ExpandedChild,
    SampledChild,
    bootstrap,
    check_solved,
    dynamics_backup,
    policy_backup,
    walk_back,
)
from src.domain.services.control import (
    RootStrategy,
    depth_limit,
    depth_reached,
    first_root,
    mark_visited,
    next_root,
    push_priority,
    trials_remaining,
)
from src.domain.services.learned_model import LearnedTabularModel
from src.domain.services.select import (
    AllChildren,
    action_probabilities,
    action_values,
    select_action,
    select_next_state,
)
from src.domain.services.solution_store import (
    create_node,
    expand_node,
    init_global,
    init_local,
    record_estimate,
    record_lookahead,
    recommend_action,
)
from src.domain.services.update import global_tabular_update, policy_gradient_update

logger = logging.getLogger(__name__)

DEFAULT_ROOT_BUDGET = 1000
DEFAULT_SWEEPS = 1000
DRAIN_FACTOR = 100
HORIZON_FACTOR = 10


def optimistic_bound(source) -> float:
    if isinstance(source, TabularMdp):
        try:
            return source.optimistic_bound()
        except ValueError as e:
            raise ConfigError(f"solution.init=optimistic: {e}") from e
    return 0.0


def resolve_config(config: AlgorithmConfig, source) -> AlgorithmConfig:
    """Fills caps and the optimistic heuristic that depend on the MDP's size and rewards."""
    n_states, n_actions = source.n_states, source.n_actions
    update = {}
    if config.depth.cap is None:
        update["depth"] = config.depth.model_copy(update={"cap": HORIZON_FACTOR * n_states})
    budget = config.budget
    if budget.kind is BudgetKind.EXHAUSTIVE and budget.cap is None:
        update["budget"] = budget.model_copy(update={"cap": n_actions})
    elif budget.kind is BudgetKind.UNTIL_CONVERGENCE and budget.max_trials is None:
        update["budget"] = budget.model_copy(update={"max_trials": n_actions * n_states})
    heuristic = config.bootstrap.heuristic
    if heuristic is not None and not heuristic.is_resolved:
        resolved = heuristic.model_copy(update={"constant": optimistic_bound(source)})
        update["bootstrap"] = config.bootstrap.model_copy(update={"heuristic": resolved})
        if config.solution.heuristic is not None and not config.solution.heuristic.is_resolved:
            update["solution"] = config.solution.model_copy(update={"heuristic": resolved})
    return config.model_copy(update=update) if update else config


def validate_config(config: AlgorithmConfig, handle: AccessHandle) -> None:
    """Checks every dimension against the others and against the handle's access mode."""
    mode = handle.mode
    problems: list[str] = []
    descriptive = mode is AccessMode.SETTABLE_DESCRIPTIVE

    if config.backup.dynamics is DynamicsKind.EXPECTED and not descriptive:
        problems.append(f"dynamics-expectation requires descriptive access (backup.dynamics=expected, access={mode.value})")
    if config.next_state is NextStateKind.ORDERED and not descriptive:
        problems.append(f"ordered next-state selection requires descriptive access (select.next_state=ordered, access={mode.value})")
    if config.labels_enabled and not descriptive:
        problems.append(f"solved labels require descriptive access (backup.extras=solved_labels, access={mode.value})")
    if mode.rank < config.access_required.rank:
        problems.append(f"access_required={config.access_required.value} exceeds the handle's access {mode.value}")

    if not mode.is_settable:
        single = config.budget.kind is BudgetKind.FIXED_TRIALS and config.budget.n == 1
        if not single and config.reuse_local is not ReuseMode.TRACE:
            problems.append(f"more than one trial per root requires settable access (budget={config.budget.kind.value}, access={mode.value})")
        if config.root.kind is not RootKind.FORWARD_SAMPLING:
            problems.append(f"root.kind={config.root.kind.value} requires settable access (access={mode.value})")

    solution = config.solution
    rule = config.update_global
    if solution.coverage is Coverage.LOCAL and rule is not None:
        problems.append("coverage=local forbids a global update rule (solution.coverage, update.global)")
    if solution.coverage is Coverage.GLOBAL and rule is None:
        problems.append("coverage=global needs a global update rule (solution.coverage, update.global)")
    if rule is not None:
        wants_pg = solution.type in (SolutionType.POLICY, SolutionType.ACTOR_CRITIC)
        is_pg = rule.kind is GlobalUpdateKind.POLICY_GRADIENT_SOFTMAX
        if wants_pg != is_pg:
            problems.append(f"solution.type={solution.type.value} is incompatible with update.global={rule.kind.value}")

    fn = config.bootstrap
    if fn.kind is BootstrapKind.LEARNED_GLOBAL:
        if solution.coverage is Coverage.LOCAL:
            problems.append("bootstrap=learned_global requires a global table (solution.coverage=local)")
        elif fn.which is TableKind.Q or fn.location is BootstrapLocation.STATE_ACTION:
            if solution.type is not SolutionType.Q:
                problems.append(f"bootstrap from Q requires solution.type=q (got {solution.type.value})")
        elif solution.type not in (SolutionType.V, SolutionType.Q, SolutionType.ACTOR_CRITIC):
            problems.append(f"bootstrap from V requires a value table (solution.type={solution.type.value})")

    if config.sweep_sync and config.root.kind is not RootKind.ORDERED:
        problems.append("sweep-synchronous updates require ordered roots (root.kind)")
    if config.labels_enabled and solution.tree_mode:
        problems.append("solved labels need graph-mode local solutions (solution.tree_mode)")
    if config.reuse_local is ReuseMode.TRACE and config.next_state is NextStateKind.ORDERED:
        problems.append("trace replay follows one sampled path (reuse_local=trace, select.next_state=ordered)")
    if config.planning is not None:
        if solution.type is not SolutionType.Q or solution.coverage is not Coverage.GLOBAL:
            problems.append("model-based planning requires a global Q table (planning, solution.type)")
    sweeping = config.planning is not None and config.planning.kind is PlanningKind.PRIORITIZED_SWEEPING
    if config.priorities_enabled and not sweeping:
        problems.append("backup.extras=priorities needs a prioritized-sweeping planner (planning.kind)")

    if problems:
        raise ConfigError("; ".join(problems))


def planning_config(config: AlgorithmConfig) -> AlgorithmConfig:
    """The configuration the planner runs with over the learned model."""
    spec = config.planning
    select = config.select.model_copy(update={"bf": spec.select, "af": spec.select, "nr": spec.select})
    common = dict(
        name=f"{config.name}:planning",
        depth=DepthRule(kind=DepthKind.FIXED, n=1),
        select=select,
        update_global=config.update_global.model_copy(update={"eta": spec.eta}),
        reuse_local=ReuseMode.NONE,
        access_required=AccessMode.SETTABLE_DESCRIPTIVE,
        expansion=ExpansionPolicy.ALL,
        planning=None,
        sweep_sync=False,
    )
    if spec.kind is PlanningKind.DYNA:
        return config.model_copy(
            update=dict(
                common,
                root=RootStrategySpec(kind=RootKind.VISITED_SET, sampling=spec.sampling),
                budget=TrialBudget(kind=BudgetKind.FIXED_TRIALS, n=1),
                next_state=NextStateKind.SAMPLE,
                backup=config.backup.model_copy(update={"dynamics": spec.dynamics, "extras": frozenset()}),
            )
        )
    # an expected-update trial backs up every action at the root, the untaken ones by lookahead
    expected = spec.dynamics is DynamicsKind.EXPECTED
    return config.model_copy(
        update=dict(
            common,
            root=RootStrategySpec(kind=RootKind.BACKWARD_SAMPLING, priority_threshold=config.root.priority_threshold),
            budget=TrialBudget(kind=BudgetKind.FIXED_TRIALS, n=1) if expected else TrialBudget(kind=BudgetKind.EXHAUSTIVE),
            next_state=NextStateKind.ORDERED if expected else NextStateKind.SAMPLE,
            backup=config.backup.model_copy(
                update={"policy": PolicyBackupKind.GREEDY_MAX, "dynamics": spec.dynamics, "extras": frozenset()}
            ),
        )
    )


@dataclass
class _Trial:
    index: int
    on_path: set = field(default_factory=set)
    seen: set = field(default_factory=set)
    steps: list[TraceStep] = field(default_factory=list)
    returns: dict[int, float] = field(default_factory=dict)
    leaf_value: float = 0.0
    leaf_depth: int = 0
    branching: bool = False
    expanded: bool = False
    max_delta: float = 0.0

    def leaf(self, depth: int, value: float) -> None:
        self.returns[depth] = value
        self.leaf_value = value
        self.leaf_depth = max(self.leaf_depth, depth)


class FrapEngine:
    """
    Runs one configuration against one access handle. Single-threaded: the recursion
    mutates the local and global stores in place.
    """

    def __init__(
        self,
        config: AlgorithmConfig,
        handle: AccessHandle,
        seed: int = 0,
        global_=None,
        rng: Optional[np.random.Generator] = None,
        record_timing: bool = False,
    ):
        self.config = resolve_config(config, handle.source)
        self.handle = handle
        self.seed = seed
        self.rng = rng if rng is not None else np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))
        self.gamma = handle.gamma
        self.n_states = handle.n_states
        self.n_actions = handle.n_actions
        self.record_timing = record_timing
        self.global_ = global_ if global_ is not None else init_global(
            self.config,
            self.n_states,
            self.n_actions,
            self._optimistic_init(),
            terminals=[s for s in range(self.n_states) if handle.is_terminal(s)],
        )
        self.strategy = RootStrategy(self.config.root, self.n_states)
        self.local: Optional[LocalSolution] = None
        self.iteration = 0
        # transitions seen during trials are real only on a resettable handle
        self._real_in_trials = not handle.mode.is_settable

        self._pending_action: Optional[tuple[int, int]] = None
        self._pending_traces: list[TraceRecord] = []
        self._real_transitions: list[tuple[int, int, float, int, bool]] = []
        self._episode_return = 0.0
        self._discount = 1.0
        self._finished_return: Optional[float] = None
        self._episode_done = False
        self._episode_roots: list[int] = []
        self.episode_returns: list[float] = []

        self._deferred: list[tuple[int, Optional[int], float]] = []
        self._sweep_residual = 0.0
        self._last_td_error = 0.0
        self.sweep_values: list[list[float]] = []
        self.converged = False

        self.model: Optional[LearnedTabularModel] = None
        self.planner: Optional["FrapEngine"] = None
        if self.config.planning is not None:
            spec = self.config.planning
            self.model = LearnedTabularModel(
                self.n_states,
                self.n_actions,
                self.gamma,
                handle.source.initial_dist,
                known_threshold=spec.known_threshold,
                optimistic_reward=(1.0 - self.gamma) * optimistic_bound(handle.source) if spec.known_threshold else 0.0,
            )
            self.planner = FrapEngine(
                planning_config(self.config),
                self.model.as_handle(seed=seed),
                seed=seed,
                global_=self.global_,
                rng=self.rng,
            )

        cap = self.config.depth.cap
        if sys.getrecursionlimit() < 4 * cap + 200:
            sys.setrecursionlimit(4 * cap + 200)

    # --- outer loop ---

    def run(self, root_budget: Optional[int] = None) -> RunResult:
        start = time.perf_counter()
        cfg = self.config
        budget = root_budget or cfg.root_budget or self._default_root_budget()
        logger.info("Starting %s: seed=%d, root budget=%d", cfg.name, self.seed, budget)

        root: Optional[int] = first_root(self.strategy, self.handle)
        first = root
        carry: Optional[LocalSolution] = None
        records: list[RootRecord] = []
        for _ in range(budget):
            self.local = init_local(root, carry, cfg, self._initial_value(root))
            records.append(self.run_root(root))
            if self._after_root(root):
                break
            self._plan()
            root = self._advance(root)
            if root is None:
                break
            carry = self.local

        self._drain()
        wall_ms = (time.perf_counter() - start) * 1000.0
        logger.info(
            "Finished %s after %d roots: queries=%d, converged=%s",
            cfg.name,
            len(records),
            self.handle.query_count,
            self.converged,
        )
        return RunResult(
            preset=cfg.name,
            records=records,
            global_snapshot=self.global_.snapshot(),
            local_values=self._local_values(),
            query_count=self.handle.query_count,
            wall_time_ms=wall_ms,
            seed=self.seed,
            config=cfg,
            converged=self.converged,
            sweep_values=self.sweep_values,
            episode_returns=self.episode_returns,
            recommended_action=self._final_recommendation(),
            first_root=first,
        )

    def run_root(self, root: int, allowed: Optional[Sequence[int]] = None) -> RootRecord:
        started = time.perf_counter()
        self._finished_return = None
        trials, residual = self._process_root(root, allowed)
        node = self.local.root_node()
        record = RootRecord(
            iteration=self.iteration,
            root=root,
            trials=trials,
            residual=residual,
            v_root=node.v_agg if node is not None else 0.0,
            episode_return=self._finished_return,
            queries=self.handle.query_count,
            wall_ms=(time.perf_counter() - started) * 1000.0 if self.record_timing else 0.0,
        )
        self.iteration += 1
        return record

    def plan_root(self, root: int, allowed: Sequence[int]) -> None:
        self.local = init_local(root, None, self.config, self._initial_value(root))
        self._process_root(root, allowed)
        self.iteration += 1

    def _process_root(self, root: int, allowed: Optional[Sequence[int]]) -> tuple[int, float]:
        cfg = self.config
        trials, residual = 0, math.inf
        while trials_remaining(cfg.budget, trials, residual):
            if cfg.labels_enabled and self._is_solved(root):
                break
            residual = self._run_trial(root, trials + 1, allowed)
            trials += 1
        self._update_global(root)
        return trials, residual

    def _default_root_budget(self) -> int:
        if self.config.root.kind is RootKind.ORDERED:
            return DEFAULT_SWEEPS * self.n_states
        return DEFAULT_ROOT_BUDGET

    def _after_root(self, root: int) -> bool:
        cfg = self.config
        if cfg.root.kind is RootKind.ORDERED and cfg.update_global is not None and root == self.n_states - 1:
            for s, a, target in self._deferred:
                global_tabular_update(cfg.update_global, self.global_, s, a, target, step=self.iteration)
            self._deferred.clear()
            if self.global_.v is not None:
                self.sweep_values.append(self.global_.v.tolist())
            residual, self._sweep_residual = self._sweep_residual, 0.0
            logger.debug("Sweep %d finished with residual %.3g", len(self.sweep_values), residual)
            if residual <= cfg.convergence_tol:
                self.converged = True
                return True
        if cfg.labels_enabled and all(self._is_solved(s) for s, _ in self.handle.source.initial_dist):
            self.converged = True
            return True
        return False

    def _advance(self, root: int) -> Optional[int]:
        cfg = self.config
        if cfg.reuse_local is ReuseMode.TRACE:
            return self._advance_replay(root)
        action = None
        if cfg.root.kind is RootKind.FORWARD_SAMPLING and self.handle.mode.is_settable:
            action = self._recommend(root)
        self._episode_done = False
        nxt = next_root(
            self.strategy, self.local, self.global_, self.handle, self.rng, action, on_step=self._on_executed
        )
        if cfg.labels_enabled and cfg.root.kind is RootKind.FORWARD_SAMPLING:
            nxt = self._label_episode(root, nxt)
        return nxt

    def _on_executed(self, s: int, a: int, reward: float, nxt: int, terminal: bool) -> None:
        self._episode_done = terminal
        self._on_real_transition(s, a, reward, nxt, terminal)

    def _label_episode(self, root: int, nxt: int) -> int:
        """At the end of a forward episode, checks the visited roots for convergence deepest first."""
        self._episode_roots.append(root)
        done = self._episode_done or self._is_solved(nxt) or len(self._episode_roots) >= self.config.depth.cap
        if not done:
            return nxt
        for s in reversed(self._episode_roots):
            if not check_solved(s, self.local, self.global_, self.config.label_tol, self.handle, self._initial_value):
                break
        self._episode_roots = []
        if not self._episode_done:
            nxt = self.handle.sample_initial_state()
        return nxt

    def _is_solved(self, s: int) -> bool:
        if self.handle.is_terminal(s) or s in self.global_.solved:
            return True
        node = self.local.nodes.get(s) if self.local is not None and not self.local.tree_mode else None
        return node is not None and node.solved

    # --- global updates ---

    def _update_global(self, root: int) -> None:
        rule = self.config.update_global
        if rule is None:
            return
        if rule.kind is GlobalUpdateKind.POLICY_GRADIENT_SOFTMAX:
            for trace in self._pending_traces:
                policy_gradient_update(rule, self.global_, trace, step=self.iteration)
            self._pending_traces.clear()
            return
        node = self.local.root_node()
        if node is None:
            return
        writes: list[tuple[Optional[int], float]] = []
        if self.global_.v is not None and node.n_s > 0:
            writes.append((None, node.v_agg))
        if self.global_.q is not None:
            writes.extend((a, node.q_agg[a]) for a in sorted(node.q_agg))
        self._last_td_error = 0.0
        for a, target in writes:
            old = float(self.global_.v[root]) if a is None else float(self.global_.q[root, a])
            self._last_td_error = max(self._last_td_error, abs(target - old))
            if self.config.sweep_sync:
                self._deferred.append((root, a, target))
                change = abs(target - old)
            else:
                global_tabular_update(rule, self.global_, root, a, target, step=self.iteration)
                new = float(self.global_.v[root]) if a is None else float(self.global_.q[root, a])
                change = abs(new - old)
            self._sweep_residual = max(self._sweep_residual, change)

    # --- model-based planning ---

    def _plan(self) -> None:
        if self.planner is None:
            return
        spec = self.config.planning
        transitions, self._real_transitions = self._real_transitions, []
        if spec.kind is PlanningKind.DYNA:
            for _ in range(spec.planning_steps):
                s = next_root(self.planner.strategy, self.local, self.global_, self.planner.handle, self.rng)
                if s is None:
                    break
                allowed = self.model.visited_actions(s)
                if allowed:
                    self.planner.plan_root(s, allowed)
            return

        queue = self.planner.strategy
        budget = spec.planning_steps
        for s, _, _, _, _ in transitions:
            queue.offer(s, self._last_td_error)
        # states acted in are backed up first
        for s in dict.fromkeys(t[0] for t in transitions):
            if budget <= 0:
                break
            self._sweep(s)
            budget -= 1
        for _ in range(budget):
            s = queue.pop_max()
            if s is None:
                break
            self._sweep(s)

    def _sweep(self, s: int) -> None:
        """One full back-up of `s` over the learned model; predecessors are queued by the change."""
        allowed = self.model.visited_actions(s)
        if not allowed:
            return
        before = self.global_.state_value(s)
        self.planner.plan_root(s, allowed)
        if self.config.priorities_enabled:
            delta = abs(self.global_.state_value(s) - before)
            push_priority(self.planner.strategy, s, delta, self.model.predecessor_probabilities(s))

    def _drain(self) -> None:
        """Sweeps the priority queue until it empties or DRAIN_FACTOR * |S| * |A| back-ups are spent."""
        if self.planner is None or self.config.planning.kind is not PlanningKind.PRIORITIZED_SWEEPING:
            return
        queue = self.planner.strategy
        limit = DRAIN_FACTOR * self.n_states * self.n_actions
        for swept in range(limit):
            s = queue.pop_max()
            if s is None:
                logger.debug("Priority queue drained after %d back-ups", swept)
                return
            self._sweep(s)
        logger.debug("Priority queue still holds states after %d back-ups", limit)

    def _on_real_transition(self, s: int, a: int, reward: float, nxt: int, terminal: bool) -> None:
        self._episode_return += self._discount * reward
        self._discount *= self.gamma
        if terminal:
            self.episode_returns.append(self._episode_return)
            self._finished_return = self._episode_return
            self._episode_return, self._discount = 0.0, 1.0
        if self.model is not None:
            self.model.observe(s, a, nxt, reward, terminal)
            mark_visited(self.planner.strategy, s)
            self._real_transitions.append((s, a, reward, nxt, terminal))

    # --- one trial ---

    def _run_trial(self, root: int, trial_index: int, allowed: Optional[Sequence[int]]) -> float:
        if self.config.reuse_local is ReuseMode.TRACE:
            return self._replay_trial(root, trial_index)
        ctx = _Trial(index=trial_index)
        self._visit_state(root, self.local.root_key, 0, ctx, False, allowed)
        if not ctx.branching:
            trace = TraceRecord(steps=ctx.steps, bootstrap_value=ctx.leaf_value, return_estimates=ctx.returns)
            self.local.trace_buffer.append(trace)
            if self.config.update_global is not None and (
                self.config.update_global.kind is GlobalUpdateKind.POLICY_GRADIENT_SOFTMAX
            ):
                self._pending_traces.append(trace)
        return math.inf if ctx.expanded else ctx.max_delta

    def _visit_state(
        self,
        s: int,
        key: NodeKey,
        depth: int,
        ctx: _Trial,
        expanded_on_path: bool,
        allowed: Optional[Sequence[int]] = None,
    ) -> float:
        cfg = self.config
        local = self.local
        if self.handle.is_terminal(s):
            ctx.leaf(depth, 0.0)
            return 0.0
        node = local.nodes.get(key)
        if cfg.labels_enabled and node is not None and node.solved:
            ctx.leaf(depth, node.v_agg)
            return node.v_agg

        repeated = key in ctx.on_path or key in ctx.seen
        if depth_reached(cfg.depth, local, key, depth, ctx.index, expanded_on_path, repeated):
            if node is None and self._may_create(depth, expanded_on_path):
                create_node(local, key, s, self._initial_value(s))
            value = self._leaf_value(s, key, depth, choose=True)
            ctx.leaf(depth, value)
            return value

        if node is None and self._may_create(depth, expanded_on_path):
            node = create_node(local, key, s, self._initial_value(s))
        expanded_here = False
        if node is not None and key in local.frontier:
            expand_node(local, key)
            expanded_here = ctx.expanded = True
        phase = Phase.BF if node is not None and not expanded_on_path else Phase.AF

        ctx.on_path.add(key)
        if cfg.next_state is NextStateKind.ORDERED:
            ctx.seen.add(key)
        a = self._choose(s, key, depth, phase, allowed if depth == 0 else None)
        q_hat = self._visit_action(s, key, a, depth, ctx, expanded_on_path or expanded_here)
        ctx.on_path.discard(key)

        q_children = {a: q_hat}
        op = cfg.backup
        needs_all = op.policy is not PolicyBackupKind.ON_POLICY_SAMPLE
        if needs_all and op.dynamics is DynamicsKind.EXPECTED:
            for b in range(self.n_actions):
                if b != a:
                    q_b = self._lookahead(s, key, b, depth)
                    if q_b is not None:
                        q_children[b] = q_b
                        if node is not None:
                            record_lookahead(node, b, q_b, cfg.update_local)
        elif needs_all:
            known = action_values(s, local, self.global_, key)
            for b, q_b in enumerate(known):
                if b != a and q_b is not None:
                    q_children[b] = q_b
        probs = None
        if op.policy is PolicyBackupKind.EXPECTED:
            probs = action_probabilities(cfg.select, phase, s, local, self.global_, key, self._fallback, self.iteration)
            probs = {b: p for b, p in probs.items() if b in q_children or p > 0.0}
        v_hat = policy_backup(op, s, q_children, chosen=a, policy_probs=probs)

        if node is not None:
            source_depth = max(ctx.leaf_depth - depth, 1)
            record_estimate(
                local, BackupEstimate(EstimateKind.STATE_ACTION, s, q_hat, source_depth, a), cfg.update_local, key
            )
            delta = record_estimate(
                local, BackupEstimate(EstimateKind.STATE, s, v_hat, source_depth), cfg.update_local, key
            )
            ctx.max_delta = max(ctx.max_delta, delta)
        ctx.returns[depth] = v_hat
        return v_hat

    def _visit_action(
        self, s: int, key: NodeKey, a: int, depth: int, ctx: _Trial, expanded_on_path: bool
    ) -> float:
        cfg = self.config
        handle = self.handle
        try:
            if cfg.needs_descriptive:
                observed = handle.query_descriptive(s, a)
            else:
                observed = handle.query_generative(s, a)
        except UnvisitedPair:
            # the learned model has no data here: treat it as frontier
            return self._action_bootstrap(s, a)
        if cfg.counts_enabled:
            self.global_.counts_s[s] += 1
            self.global_.counts_sa[s, a] += 1

        choice = select_next_state(cfg.next_state, observed, self.rng)
        if isinstance(choice, AllChildren):
            ctx.branching = True
            children = []
            for t in choice.children:
                v = self._visit_state(t.next_state, self.local.key_for(key, a, t.next_state), depth + 1, ctx, expanded_on_path)
                children.append(ExpandedChild(t.next_state, t.probability, t.reward, v))
            return dynamics_backup(cfg.backup, s, a, children, self.gamma)

        nxt, reward = choice
        terminal = handle.is_terminal(nxt)
        if self._real_in_trials:
            self._on_real_transition(s, a, reward, nxt, terminal)
        ctx.steps.append(TraceStep(s, a, reward, nxt, terminal))
        v = self._visit_state(nxt, self.local.key_for(key, a, nxt), depth + 1, ctx, expanded_on_path)

        if cfg.backup.dynamics is DynamicsKind.EXPECTED:
            children = []
            used = False
            for t in observed:
                if t.next_state == nxt and not used:
                    value, used = v, True
                else:
                    value = self._leaf_value(t.next_state, self.local.key_for(key, a, t.next_state), depth + 1)
                children.append(ExpandedChild(t.next_state, t.probability, t.reward, value))
            return dynamics_backup(cfg.backup, s, a, children, self.gamma)
        return dynamics_backup(cfg.backup, s, a, SampledChild(reward, v), self.gamma)

    def _lookahead(self, s: int, key: NodeKey, a: int, depth: int) -> Optional[float]:
        """One-step expected back-up of an action not taken, over current child estimates."""
        try:
            outcomes = self.handle.query_descriptive(s, a)
        except UnvisitedPair:
            return None
        children = [
            ExpandedChild(
                t.next_state,
                t.probability,
                t.reward,
                self._leaf_value(t.next_state, self.local.key_for(key, a, t.next_state), depth + 1),
            )
            for t in outcomes
        ]
        return dynamics_backup(self.config.backup, s, a, children, self.gamma)

    # --- trace replay (episodic model-free presets) ---

    def _replay_trial(self, root: int, trial_index: int) -> float:
        """
        Re-walks the stored real episode from the current root to depth min(k, n),
        extending it with real steps on demand. Only the root receives an estimate.
        """
        cfg = self.config
        local = self.local
        limit = depth_limit(cfg.depth, trial_index) or cfg.depth.cap
        steps: list[TraceStep] = []
        while len(steps) < limit:
            i = local.episode_offset + len(steps)
            if i >= len(local.episode) and not self._extend_episode():
                break
            step = local.episode[i]
            steps.append(step)
            if step.terminal:
                break
        if not steps:
            return 0.0

        trace = TraceRecord(steps=steps)
        last = steps[-1]
        if last.terminal:
            trace.bootstrap_value = 0.0
        else:
            trace.bootstrap_value = self._leaf_value(last.next_state, last.next_state, len(steps))
        estimates = walk_back(trace, cfg.backup, self.gamma, self.global_)
        if cfg.update_global is not None and cfg.update_global.kind is GlobalUpdateKind.POLICY_GRADIENT_SOFTMAX:
            self._pending_traces.append(trace)

        final = cfg.depth.kind is not DepthKind.INCREASING or trial_index >= cfg.depth.n
        sa_est, s_est = estimates[-2], estimates[-1]
        record_estimate(
            local,
            BackupEstimate(EstimateKind.STATE_ACTION, root, sa_est.value, limit, sa_est.a),
            cfg.update_local,
            local.root_key,
            final,
        )
        return record_estimate(
            local, BackupEstimate(EstimateKind.STATE, root, s_est.value, limit), cfg.update_local, local.root_key, final
        )

    def _extend_episode(self) -> bool:
        state = self.handle.current_state
        if state is None or self.handle.is_terminal(state):
            return False
        a = select_action(
            self.config.select, Phase.BF, state, self.local, self.global_, self.rng,
            fallback=self._fallback, step=self.iteration,
        )
        result = self.handle.step(a)
        self._on_real_transition(state, a, result.reward, result.next_state, result.terminal)
        self.local.episode.append(TraceStep(state, a, result.reward, result.next_state, result.terminal))
        return True

    def _advance_replay(self, root: int) -> int:
        local = self.local
        offset = local.episode_offset
        if offset >= len(local.episode) and not self._extend_episode():
            return self._restart_episode()
        step = local.episode[offset]
        if step.terminal:
            return self._restart_episode()
        local.episode_offset = offset + 1
        return step.next_state

    def _restart_episode(self) -> int:
        self.local.episode = []
        self.local.episode_offset = 0
        return self.handle.reset()

    # --- helpers ---

    def _choose(self, s: int, key: NodeKey, depth: int, phase: Phase, allowed: Optional[Sequence[int]]) -> int:
        if depth == 0:
            pending, self._pending_action = self._pending_action, None
            if pending is not None and pending[0] == s and (allowed is None or pending[1] in allowed):
                return pending[1]
        return select_action(
            self.config.select, phase, s, self.local, self.global_, self.rng,
            key=key, fallback=self._fallback, allowed=allowed, step=self.iteration,
        )

    def _leaf_value(self, s: int, key: NodeKey, depth: int, choose: bool = False) -> float:
        """
        Value substituted for the rest of a trial at `s`. With state-action bootstrapping
        the back-up policy is applied over bootstrap(s, .); an on-policy back-up draws
        the behaviour action, which becomes the next root's action.
        """
        cfg = self.config
        fn = cfg.bootstrap
        terminal = self.handle.is_terminal(s)
        if terminal:
            return 0.0
        node = self.local.nodes.get(key)
        local_value = node.v_agg if node is not None else None
        if fn.location is BootstrapLocation.STATE:
            return bootstrap(fn, s, None, self.global_, terminal, local_value)

        q_children = {b: bootstrap(fn, s, b, self.global_) for b in range(self.n_actions)}
        op = cfg.backup
        chosen = None
        probs = None
        if op.policy is PolicyBackupKind.ON_POLICY_SAMPLE:
            if choose:
                chosen = select_action(
                    cfg.select, Phase.NR, s, self.local, self.global_, self.rng,
                    key=key, fallback=self._fallback, step=self.iteration,
                )
                if depth > 0 and self._real_in_trials:
                    self._pending_action = (s, chosen)
            else:
                actions = sorted(q_children)
                chosen = actions[argmax_lowest([q_children[b] for b in actions])]
        elif op.policy is PolicyBackupKind.EXPECTED:
            probs = action_probabilities(cfg.select, Phase.NR, s, self.local, self.global_, key, self._fallback, self.iteration)
        return policy_backup(op, s, q_children, chosen=chosen, policy_probs=probs)

    def _action_bootstrap(self, s: int, a: int) -> float:
        fn = self.config.bootstrap
        if fn.kind is BootstrapKind.LEARNED_GLOBAL and self.global_.q is None:
            return bootstrap(fn, s, None, self.global_)
        return bootstrap(fn, s, a, self.global_)

    def _fallback(self, s: int, a: int) -> Optional[float]:
        fn = self.config.bootstrap
        with_actions = fn.kind is BootstrapKind.HEURISTIC and fn.heuristic.action_values is not None
        if fn.location is BootstrapLocation.STATE_ACTION or with_actions:
            return bootstrap(fn, s, a, self.global_, self.handle.is_terminal(s))
        return None

    def _initial_value(self, s: int) -> float:
        if self.handle.is_terminal(s):
            return 0.0
        cfg = self.config
        if cfg.bootstrap.kind is BootstrapKind.HEURISTIC:
            return cfg.bootstrap.heuristic.value(s)
        if self.global_.v is not None:
            return float(self.global_.v[s])
        if self.global_.q is not None:
            return float(self.global_.q[s].max())
        init = cfg.solution.init
        if init.kind is InitKind.OPTIMISTIC:
            return init.c_hi if init.c_hi is not None else self._optimistic_init()
        return init.value if init.kind is InitKind.UNIFORM else 0.0

    def _optimistic_init(self) -> float:
        if self.config.solution.init.kind is not InitKind.OPTIMISTIC or self.config.solution.init.c_hi is not None:
            return 0.0
        return optimistic_bound(self.handle.source)

    def _may_create(self, depth: int, expanded_on_path: bool) -> bool:
        policy = self.config.expansion
        if policy is ExpansionPolicy.ALL:
            return True
        if policy is ExpansionPolicy.ONE_PER_TRIAL:
            return not expanded_on_path
        return depth == 0

    def _recommend(self, root: int) -> int:
        cfg = self.config
        mode = cfg.root.recommend
        if mode is not RecommendMode.SELECT:
            try:
                return recommend_action(self.local, self.local.root_key, mode)
            except NoVisitedChildren:
                pass
        return select_action(
            cfg.select, Phase.NR, root, self.local, self.global_, self.rng,
            key=self.local.root_key, fallback=self._fallback, step=self.iteration,
        )

    def _final_recommendation(self) -> Optional[int]:
        if self.local is None:
            return None
        mode = self.config.root.recommend
        if mode is RecommendMode.SELECT:
            mode = RecommendMode.MAX_VALUE
        try:
            return recommend_action(self.local, self.local.root_key, mode)
        except NoVisitedChildren:
            pass
        root = self.local.root
        if self.global_.q is not None:
            return argmax_lowest(self.global_.q[root])
        if self.global_.policy_logits is not None:
            return argmax_lowest(self.global_.policy_logits[root])
        return None

    def _local_values(self) -> dict[int, float]:
        if self.local is None:
            return {}
        if self.local.tree_mode:
            node = self.local.root_node()
            return {self.local.root: node.v_agg} if node is not None and node.n_s > 0 else {}
        return {
            node.state: node.v_agg
            for node in self.local.nodes.values()
            if node.n_s > 0 or node.solved
        }


def run(
    config: AlgorithmConfig,
    handle: AccessHandle,
    root_budget: Optional[int] = None,
    seed: int = 0,
    record_timing: bool = False,
) -> RunResult:
    validate_config(config, handle)
    engine = FrapEngine(config, handle, seed=seed, record_timing=record_timing)
    return engine.run(root_budget)
