import numpy as np
import pytest

from src.domain.entities.algorithm_config import (
    BackupExtra,
    BackupOp,
    BootstrapFn,
    BootstrapKind,
    BootstrapLocation,
    DynamicsKind,
    HeuristicTable,
    PolicyBackupKind,
    TableKind,
)
from src.domain.entities.mdp import AccessMode
from src.domain.entities.solution import EstimateKind, GlobalSolution, LocalSolution, TraceRecord, TraceStep
from src.domain.errors import DistributionRequired, MissingChild, WrongAccessMode
from src.domain.services.access import AccessHandle
from src.domain.services.backup import (
    ExpandedChild,
    SampledChild,
    bootstrap,
    check_solved,
    dynamics_backup,
    greedy_policy_probs,
    policy_backup,
    walk_back,
)
from src.domain.services.environments import make_chain, make_split_mdp

GREEDY_EXPECTED = BackupOp(policy=PolicyBackupKind.GREEDY_MAX, dynamics=DynamicsKind.EXPECTED)


@pytest.fixture
def global_v():
    return GlobalSolution(n_states=3, n_actions=2, v=np.array([0.5, 1.5, 0.0]))


def test_bootstrap_zero_and_terminal(global_v):
    assert bootstrap(BootstrapFn(kind=BootstrapKind.ZERO), 1, None, global_v) == 0.0
    fn = BootstrapFn(kind=BootstrapKind.LEARNED_GLOBAL)
    assert bootstrap(fn, 1, None, global_v, terminal=True) == 0.0
    assert bootstrap(fn, 1, None, global_v) == 1.5


def test_bootstrap_from_q():
    global_q = GlobalSolution(n_states=2, n_actions=2, q=np.array([[1.0, 4.0], [0.0, 0.0]]))
    fn = BootstrapFn(kind=BootstrapKind.LEARNED_GLOBAL, location=BootstrapLocation.STATE_ACTION, which=TableKind.Q)
    assert bootstrap(fn, 0, 0, global_q) == 1.0
    assert bootstrap(fn, 0, None, global_q) == 4.0


def test_bootstrap_heuristic_prefers_local_value(global_v):
    fn = BootstrapFn(kind=BootstrapKind.HEURISTIC, heuristic=HeuristicTable(constant=10.0))
    assert bootstrap(fn, 0, None, global_v) == 10.0
    assert bootstrap(fn, 0, None, global_v, local_value=2.0) == 2.0


def test_greedy_max_equals_expected_under_argmax_point_mass():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        values = rng.normal(size=4).round(2)
        q_children = dict(enumerate(values.tolist()))
        greedy = policy_backup(BackupOp(policy=PolicyBackupKind.GREEDY_MAX), 0, q_children)
        best = int(np.argmax(values))
        expected = policy_backup(
            BackupOp(policy=PolicyBackupKind.EXPECTED), 0, q_children, policy_probs={best: 1.0}
        )
        assert greedy == expected


def test_greedy_policy_probs_splits_ties():
    assert greedy_policy_probs({0: 1.0, 1: 2.0, 2: 2.0}) == {1: 0.5, 2: 0.5}


def test_on_policy_needs_chosen_action():
    op = BackupOp(policy=PolicyBackupKind.ON_POLICY_SAMPLE)
    assert policy_backup(op, 0, {0: 1.0, 1: 3.0}, chosen=0) == 1.0
    with pytest.raises(MissingChild):
        policy_backup(op, 0, {0: 1.0}, chosen=1)


def test_expected_policy_backup_needs_every_weighted_child():
    op = BackupOp(policy=PolicyBackupKind.EXPECTED)
    with pytest.raises(MissingChild):
        policy_backup(op, 0, {0: 1.0}, policy_probs={0: 0.5, 1: 0.5})
    assert policy_backup(op, 0, {0: 1.0, 1: 3.0}, policy_probs={0: 0.5, 1: 0.5}) == 2.0


def test_expected_dynamics_is_weighted_sample_backups():
    children = [ExpandedChild(1, 0.5, 1.0, 0.0), ExpandedChild(2, 0.5, 3.0, 0.0)]
    sample_op = BackupOp(dynamics=DynamicsKind.SAMPLE)
    weighted = sum(
        c.probability * dynamics_backup(sample_op, 0, 0, SampledChild(c.reward, c.value), 0.9) for c in children
    )
    assert dynamics_backup(GREEDY_EXPECTED, 0, 0, children, 0.9) == weighted == 2.0


def test_dynamics_kind_mismatch():
    with pytest.raises(DistributionRequired):
        dynamics_backup(GREEDY_EXPECTED, 0, 0, SampledChild(1.0, 0.0), 0.9)
    with pytest.raises(DistributionRequired):
        dynamics_backup(BackupOp(dynamics=DynamicsKind.SAMPLE), 0, 0, [ExpandedChild(1, 1.0, 0.0, 0.0)], 0.9)


def test_sample_backup_is_unbiased_on_split():
    handle = AccessHandle(make_split_mdp(), AccessMode.SETTABLE_GENERATIVE, seed=1)
    op = BackupOp(dynamics=DynamicsKind.SAMPLE)
    n = 100000
    total = 0.0
    for _ in range(n):
        nxt, reward = handle.query_generative(0, 0)
        total += dynamics_backup(op, 0, 0, SampledChild(reward, 0.0), 0.9)
    assert abs(total / n - 2.0) <= 4.0 / n**0.5


def test_walk_back_fills_every_offset():
    trace = TraceRecord(
        steps=[TraceStep(0, 0, 0.0, 1), TraceStep(1, 0, 1.0, 2, terminal=True)],
        bootstrap_value=0.0,
    )
    op = BackupOp(policy=PolicyBackupKind.ON_POLICY_SAMPLE, extras=frozenset({BackupExtra.COUNTS}))
    global_ = GlobalSolution(n_states=3, n_actions=2)
    estimates = walk_back(trace, op, 0.5, global_)
    assert trace.return_estimates == {2: 0.0, 1: 1.0, 0: 0.5}
    assert [e.kind for e in estimates] == [
        EstimateKind.STATE_ACTION, EstimateKind.STATE, EstimateKind.STATE_ACTION, EstimateKind.STATE
    ]
    assert estimates[-1].s == 0 and estimates[-1].source_depth == 2
    assert global_.counts_s.tolist() == [1, 1, 0]


def test_check_solved_labels_converged_chain():
    mdp = make_chain(3, 0.9)
    handle = AccessHandle(mdp, AccessMode.SETTABLE_DESCRIPTIVE)
    local = LocalSolution(root=0, root_key=0)
    global_ = GlobalSolution(n_states=3, n_actions=2)
    exact = {0: 0.9, 1: 1.0}
    assert check_solved(0, local, global_, 1e-9, handle, lambda s: exact[s])
    assert global_.solved == {0, 1}
    assert local.nodes[0].solved and local.nodes[1].solved


def test_check_solved_rejects_and_backs_up():
    mdp = make_chain(3, 0.9)
    handle = AccessHandle(mdp, AccessMode.SETTABLE_DESCRIPTIVE)
    local = LocalSolution(root=0, root_key=0)
    global_ = GlobalSolution(n_states=3, n_actions=2)
    assert not check_solved(0, local, global_, 1e-9, handle, lambda s: 5.0)
    assert global_.solved == set()
    # 0 was closed and re-backed-up: max(0.9 * 5, 0.9 * 5)
    assert local.nodes[0].v_agg == pytest.approx(4.5)


def test_check_solved_needs_descriptive_access():
    handle = AccessHandle(make_chain(3, 0.9), AccessMode.SETTABLE_GENERATIVE)
    with pytest.raises(WrongAccessMode):
        check_solved(0, LocalSolution(root=0, root_key=0), GlobalSolution(3, 2), 1e-6, handle, lambda s: 0.0)
