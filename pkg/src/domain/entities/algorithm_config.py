import math
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.domain.entities.mdp import AccessMode
from src.domain.errors import MissingHeuristicEntry


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


# --- Solution representation ---

class Coverage(str, Enum):
    LOCAL = "local"
    GLOBAL = "global"


class SolutionType(str, Enum):
    V = "v"
    Q = "q"
    POLICY = "policy"
    ACTOR_CRITIC = "actor_critic"


class InitKind(str, Enum):
    UNIFORM = "uniform"
    RANDOM = "random"
    OPTIMISTIC = "optimistic"
    HEURISTIC = "heuristic"


class InitScheme(_Frozen):
    kind: InitKind = InitKind.UNIFORM
    value: float = 0.0
    seed: int = 0
    scale: float = Field(default=0.01, ge=0.0)
    # None resolves to r_max / (1 - gamma), or 0 for stochastic shortest path problems
    c_hi: Optional[float] = None


class HeuristicTable(_Frozen):
    """
    State (and optionally state-action) value estimates used for bootstrapping.

    `constant=None` with no explicit values means "optimistic": the engine resolves it
    to the r_max / (1 - gamma) bound of the MDP it runs on.
    """

    constant: Optional[float] = None
    values: Optional[tuple[float, ...]] = None
    action_values: Optional[tuple[tuple[float, ...], ...]] = None
    admissible: bool = True

    @property
    def is_resolved(self) -> bool:
        return self.constant is not None or self.values is not None

    def value(self, s: int, a: Optional[int] = None) -> float:
        if a is not None and self.action_values is not None:
            try:
                return self.action_values[s][a]
            except IndexError:
                raise MissingHeuristicEntry(f"no heuristic entry for (s={s}, a={a})") from None
        if self.values is not None:
            if not 0 <= s < len(self.values):
                raise MissingHeuristicEntry(f"no heuristic entry for state {s}")
            return self.values[s]
        if self.constant is None:
            raise MissingHeuristicEntry("optimistic heuristic has not been resolved against an MDP")
        return self.constant


class SolutionSpec(_Frozen):
    coverage: Coverage = Coverage.GLOBAL
    type: SolutionType = SolutionType.V
    init: InitScheme = InitScheme()
    heuristic: Optional[HeuristicTable] = None
    tree_mode: bool = False


# --- Root selection and budgets ---

class RootKind(str, Enum):
    ORDERED = "ordered"
    FORWARD_SAMPLING = "forward"
    BACKWARD_SAMPLING = "backward"
    VISITED_SET = "visited"


class RecommendMode(str, Enum):
    MAX_VALUE = "max_value"
    MAX_COUNT = "max_count"
    SELECT = "select"


class VisitedSampling(str, Enum):
    UNIFORM = "uniform"
    RECENCY = "recency"


class RootStrategySpec(_Frozen):
    kind: RootKind = RootKind.ORDERED
    recommend: RecommendMode = RecommendMode.SELECT
    priority_threshold: float = Field(default=1e-5, ge=0.0)
    sampling: VisitedSampling = VisitedSampling.UNIFORM


class BudgetKind(str, Enum):
    FIXED_TRIALS = "fixed"
    UNTIL_CONVERGENCE = "until_convergence"
    EXHAUSTIVE = "exhaustive"


class TrialBudget(_Frozen):
    kind: BudgetKind = BudgetKind.FIXED_TRIALS
    n: int = Field(default=1, ge=1)
    tol: float = Field(default=1e-6, ge=0.0)
    # UntilConvergence safety cap; None resolves to |A| * |S|
    max_trials: Optional[int] = Field(default=None, ge=1)
    # Exhaustive cap; None resolves to |A|
    cap: Optional[int] = Field(default=None, ge=1)


class DepthKind(str, Enum):
    FIXED = "fixed"
    INFINITE = "infinite"
    ADAPTIVE_FRONTIER = "adaptive_frontier"
    ADAPTIVE_DUPLICATE = "adaptive_duplicate"
    INCREASING = "increasing"


class DepthRule(_Frozen):
    kind: DepthKind = DepthKind.FIXED
    n: int = Field(default=1, ge=0)
    # horizon cap applied to every rule; None resolves to 10 * n_states
    cap: Optional[int] = Field(default=None, ge=1)


# --- Selection ---

class SelectKind(str, Enum):
    ORDERED = "ordered"
    RANDOM = "random"
    GREEDY = "greedy"
    EPSILON_GREEDY = "epsilon_greedy"
    BOLTZMANN = "boltzmann"
    UCB = "ucb"
    COUNT_NOVELTY = "count_novelty"
    STOCHASTIC_POLICY = "stochastic_policy"


class TieBreak(str, Enum):
    LOWEST = "lowest"
    RANDOM = "random"


class Phase(str, Enum):
    BF = "bf"
    AF = "af"
    NR = "nr"


class SelectionRule(_Frozen):
    bf: SelectKind = SelectKind.GREEDY
    af: SelectKind = SelectKind.RANDOM
    nr: Optional[SelectKind] = None
    eps: float = Field(default=0.1, ge=0.0, le=1.0)
    eps_final: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    decay_steps: int = Field(default=0, ge=0)
    temperature: float = Field(default=1.0, gt=0.0)
    ucb_c: float = Field(default=math.sqrt(2.0), ge=0.0)
    novelty_beta: float = Field(default=1.0, ge=0.0)
    ties: TieBreak = TieBreak.LOWEST

    def kind_for(self, phase: Phase) -> SelectKind:
        if phase is Phase.BF:
            return self.bf
        if phase is Phase.AF:
            return self.af
        return self.nr if self.nr is not None else self.bf


class NextStateKind(str, Enum):
    SAMPLE = "sample"
    ORDERED = "ordered"


# --- Bootstrap and back-ups ---

class BootstrapKind(str, Enum):
    ZERO = "zero"
    HEURISTIC = "heuristic"
    LEARNED_GLOBAL = "learned_global"


class BootstrapLocation(str, Enum):
    STATE = "state"
    STATE_ACTION = "state_action"


class TableKind(str, Enum):
    V = "v"
    Q = "q"


class BootstrapFn(_Frozen):
    kind: BootstrapKind = BootstrapKind.ZERO
    location: BootstrapLocation = BootstrapLocation.STATE
    which: TableKind = TableKind.V
    heuristic: Optional[HeuristicTable] = None


class PolicyBackupKind(str, Enum):
    ON_POLICY_SAMPLE = "on_policy"
    EXPECTED = "expected"
    GREEDY_MAX = "greedy_max"


class DynamicsKind(str, Enum):
    SAMPLE = "sample"
    EXPECTED = "expected"


class BackupExtra(str, Enum):
    COUNTS = "counts"
    SOLVED_LABELS = "solved_labels"
    PRIORITIES = "priorities"


class BackupOp(_Frozen):
    policy: PolicyBackupKind = PolicyBackupKind.GREEDY_MAX
    dynamics: DynamicsKind = DynamicsKind.SAMPLE
    extras: frozenset[BackupExtra] = frozenset()


# --- Updates ---

class LocalUpdateKind(str, Enum):
    REPLACE = "replace"
    AVERAGE = "average"
    STEP = "step"
    ELIGIBILITY = "eligibility"


class LocalUpdateRule(_Frozen):
    kind: LocalUpdateKind = LocalUpdateKind.REPLACE
    eta: float = Field(default=1.0, gt=0.0, le=1.0)
    lam: float = Field(default=0.9, ge=0.0, le=1.0)


class GlobalUpdateKind(str, Enum):
    TABULAR_STEP = "tabular_step"
    POLICY_GRADIENT_SOFTMAX = "policy_gradient"


class LearningRateSchedule(str, Enum):
    CONSTANT = "constant"
    HARMONIC = "harmonic"


class Baseline(str, Enum):
    NONE = "none"
    V_TABLE = "v_table"


class GlobalUpdateRule(_Frozen):
    kind: GlobalUpdateKind = GlobalUpdateKind.TABULAR_STEP
    eta: float = Field(default=0.1, gt=0.0)
    schedule: LearningRateSchedule = LearningRateSchedule.CONSTANT
    t0: float = Field(default=100.0, gt=0.0)
    baseline: Baseline = Baseline.NONE


# --- Engine-level knobs ---

class ReuseMode(str, Enum):
    NONE = "none"
    TRACE = "trace"
    FULL = "full"


class ExpansionPolicy(str, Enum):
    ROOT_ONLY = "root_only"
    ONE_PER_TRIAL = "one_per_trial"
    ALL = "all"


class PlanningKind(str, Enum):
    DYNA = "dyna"
    PRIORITIZED_SWEEPING = "prioritized_sweeping"


class PlanningSpec(_Frozen):
    kind: PlanningKind = PlanningKind.DYNA
    planning_steps: int = Field(default=10, ge=0)
    dynamics: DynamicsKind = DynamicsKind.SAMPLE
    eta: float = Field(default=0.1, gt=0.0, le=1.0)
    select: SelectKind = SelectKind.RANDOM
    sampling: VisitedSampling = VisitedSampling.UNIFORM
    # pairs seen fewer times than this plan as an optimistic self-loop; 0 disables
    known_threshold: int = Field(default=0, ge=0)


class AlgorithmConfig(_Frozen):
    """
    One value per framework dimension. Presets are named instances; overrides go
    through `model_copy(update=...)` or the flat key=value config file.
    """

    name: str = "custom"
    solution: SolutionSpec = SolutionSpec()
    root: RootStrategySpec = RootStrategySpec()
    budget: TrialBudget = TrialBudget()
    depth: DepthRule = DepthRule()
    select: SelectionRule = SelectionRule()
    next_state: NextStateKind = NextStateKind.SAMPLE
    bootstrap: BootstrapFn = BootstrapFn()
    backup: BackupOp = BackupOp()
    update_local: LocalUpdateRule = LocalUpdateRule()
    update_global: Optional[GlobalUpdateRule] = None
    root_budget: Optional[int] = Field(default=None, ge=1)
    reuse_local: ReuseMode = ReuseMode.NONE
    access_required: AccessMode = AccessMode.SETTABLE_DESCRIPTIVE
    expansion: ExpansionPolicy = ExpansionPolicy.ALL
    label_tol: float = Field(default=1e-6, ge=0.0)
    convergence_tol: float = Field(default=1e-6, ge=0.0)
    sweep_sync: bool = False
    planning: Optional[PlanningSpec] = None

    @model_validator(mode="after")
    def _check_bootstrap_source(self) -> "AlgorithmConfig":
        if self.bootstrap.kind is BootstrapKind.HEURISTIC and self.bootstrap.heuristic is None:
            raise ValueError("bootstrap.kind=heuristic needs a heuristic table")
        return self

    @property
    def labels_enabled(self) -> bool:
        return BackupExtra.SOLVED_LABELS in self.backup.extras

    @property
    def counts_enabled(self) -> bool:
        return BackupExtra.COUNTS in self.backup.extras

    @property
    def priorities_enabled(self) -> bool:
        return BackupExtra.PRIORITIES in self.backup.extras

    @property
    def needs_descriptive(self) -> bool:
        return self.backup.dynamics is DynamicsKind.EXPECTED or self.next_state is NextStateKind.ORDERED
