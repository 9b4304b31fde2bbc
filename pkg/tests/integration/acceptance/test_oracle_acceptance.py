"""
Oracle-backed end-to-end checks of the presets. The seed counts and thresholds are
the full acceptance ones; the long runs carry the `slow` marker.
"""
import statistics

import numpy as np
import pytest

from src.application.services.frap_engine import FrapEngine, validate_config
from src.application.services.oracles import oracle_value_iteration
from src.application.services.presets import list_presets, preset
from src.application.use_cases.run_algorithm_use_case import run_blocking
from src.domain.entities.algorithm_config import (
    BudgetKind,
    DynamicsKind,
    LocalUpdateKind,
    LocalUpdateRule,
    NextStateKind,
    ReuseMode,
    RootKind,
    TrialBudget,
)
from src.domain.entities.mdp import AccessMode
from src.domain.errors import ConfigError, FrapError, WrongAccessMode
from src.domain.services.access import AccessHandle
from src.domain.services.environments import (
    BUILTIN_ENVIRONMENTS,
    builtin_environment,
    make_chain,
    make_gridworld5,
    make_ssp_racetrack_small,
    make_stochastic_tree,
)
from src.infrastructure.metrics.metrics_writer import emit_metrics, rows_from_result

MODES = (AccessMode.SETTABLE_DESCRIPTIVE, AccessMode.SETTABLE_GENERATIVE, AccessMode.RESETTABLE_GENERATIVE)


def _q_error(mdp, oracle, q):
    return max(
        abs(q[s][a] - oracle.q_star[s][a])
        for s in range(mdp.n_states)
        for a in range(mdp.n_actions)
        if not mdp.is_terminal(s)
    )


def _v_error(mdp, oracle, q):
    return max(abs(max(q[s]) - oracle.v_star[s]) for s in range(mdp.n_states) if not mdp.is_terminal(s))


def _greedy_is_optimal(mdp, oracle, q):
    return all(
        int(np.argmax(q[s])) in oracle.optimal_policy[s] for s in range(mdp.n_states) if not mdp.is_terminal(s)
    )


def _steps_to(config, mdp, seed, reached, chunk, budget):
    """Real steps a learner needs until `reached(q)` holds at a checkpoint; `budget` if never."""
    handle = AccessHandle(mdp, config.access_required, seed=seed)
    validate_config(config, handle)
    engine = FrapEngine(config, handle, seed=seed)
    while handle.query_count < budget:
        engine.run(root_budget=chunk)
        if reached(engine.global_.q.tolist()):
            return handle.query_count
    return budget


@pytest.mark.parametrize("factory", [lambda: make_chain(3, 0.9), make_gridworld5])
def test_value_iteration_sweeps_equal_oracle_sweeps(factory):
    mdp = factory()
    config = preset("value_iteration")
    result = run_blocking(config, mdp, None, 0)
    oracle = oracle_value_iteration(mdp, tol=config.convergence_tol, record_history=True)

    assert result.converged
    assert result.sweep_values == oracle.history
    assert len(result.sweep_values) <= 1000


@pytest.mark.parametrize("name", sorted(BUILTIN_ENVIRONMENTS))
def test_td_lambda_zero_equals_td_zero(name):
    mdp = builtin_environment(name)
    zero_lambda = preset("td_lambda").model_copy(
        update={"update_local": LocalUpdateRule(kind=LocalUpdateKind.ELIGIBILITY, lam=0.0)}
    )
    for seed in (0, 1):
        lam = run_blocking(zero_lambda, mdp, 300, seed)
        td = run_blocking(preset("td_zero"), mdp, 300, seed)
        assert lam.global_snapshot.v == td.global_snapshot.v


def test_labeled_rtdp_labels_are_sound():
    mdp = make_ssp_racetrack_small()
    oracle = oracle_value_iteration(mdp, tol=1e-10)
    result = run_blocking(preset("labeled_rtdp"), mdp, None, 0)
    s0 = mdp.initial_dist[0][0]

    assert result.converged
    assert s0 in result.global_snapshot.solved
    assert result.local_values[s0] == pytest.approx(oracle.v_star[s0], abs=1e-6)
    for s in result.global_snapshot.solved:
        if s in result.local_values:
            assert abs(result.local_values[s] - oracle.v_star[s]) <= 1e-5


@pytest.mark.slow
def test_q_learning_on_chain10():
    mdp = make_chain(10, 0.9)
    oracle = oracle_value_iteration(mdp)
    optimal_policies = accurate_tables = 0
    for seed in range(20):
        q = run_blocking(preset("q_learning"), mdp, 50_000, seed).global_snapshot.q
        optimal_policies += _greedy_is_optimal(mdp, oracle, q)
        accurate_tables += _q_error(mdp, oracle, q) <= 0.05
    assert optimal_policies >= 18
    assert accurate_tables >= 15


@pytest.mark.slow
@pytest.mark.parametrize("factory", [lambda: make_chain(3, 0.9), make_stochastic_tree])
def test_mcts_recommends_an_optimal_root_action(factory):
    mdp = factory()
    oracle = oracle_value_iteration(mdp)
    hits = sum(
        run_blocking(preset("mcts"), mdp, 1, seed).recommended_action in oracle.optimal_policy[0]
        for seed in range(100)
    )
    assert hits >= 95


@pytest.mark.slow
def test_prioritized_sweeping_on_gridworld5():
    mdp = make_gridworld5()
    oracle = oracle_value_iteration(mdp, tol=1e-10)
    errors, ratios = [], []
    for seed in range(20):
        sweeping = run_blocking(preset("prioritized_sweeping"), mdp, 5000, seed)
        errors.append(_v_error(mdp, oracle, sweeping.global_snapshot.q))
        # a q-learning run that never gets there counts as needing the whole budget
        learning = _steps_to(
            preset("q_learning"), mdp, seed, lambda q: _v_error(mdp, oracle, q) <= 0.01, chunk=1000, budget=20_000
        )
        ratios.append(sweeping.query_count / learning)
    assert statistics.median(errors) <= 0.01
    assert statistics.median(ratios) <= 0.5


@pytest.mark.slow
def test_dyna_q_needs_a_fifth_of_q_learning_steps():
    mdp = make_chain(10, 0.9)
    oracle = oracle_value_iteration(mdp)

    def reached(q):
        return _greedy_is_optimal(mdp, oracle, q) and _q_error(mdp, oracle, q) <= 0.05

    ratios = []
    for seed in range(20):
        dyna = _steps_to(preset("dyna_q"), mdp, seed, reached, chunk=25, budget=50_000)
        learning = _steps_to(preset("q_learning"), mdp, seed, reached, chunk=250, budget=50_000)
        ratios.append(dyna / learning)
    assert statistics.median(ratios) <= 0.2


def _access_illegal(config, mode):
    descriptive = mode is AccessMode.SETTABLE_DESCRIPTIVE
    if not descriptive and (config.needs_descriptive or config.labels_enabled):
        return True
    if mode.rank < config.access_required.rank:
        return True
    if not mode.is_settable:
        single = config.budget.kind is BudgetKind.FIXED_TRIALS and config.budget.n == 1
        if not single and config.reuse_local is not ReuseMode.TRACE:
            return True
        if config.root.kind is not RootKind.FORWARD_SAMPLING:
            return True
    return False


def _pick(rng, options):
    return options[int(rng.integers(len(options)))]


def _random_config(rng):
    config = preset(_pick(rng, list_presets()))
    update = {}
    if rng.random() < 0.5:
        update["backup"] = config.backup.model_copy(update={"dynamics": _pick(rng, list(DynamicsKind))})
    if rng.random() < 0.5:
        update["next_state"] = _pick(rng, list(NextStateKind))
    if rng.random() < 0.5:
        update["budget"] = TrialBudget(kind=BudgetKind.FIXED_TRIALS, n=int(rng.integers(1, 3)))
    return config.model_copy(update=update) if update else config


@pytest.mark.slow
def test_capability_fuzz():
    rng = np.random.default_rng(2024)
    environments = {name: builtin_environment(name) for name in sorted(BUILTIN_ENVIRONMENTS)}
    rejected = ran = 0
    for case in range(10_000):
        config = _random_config(rng)
        mdp = environments[_pick(rng, sorted(environments))]
        mode = _pick(rng, MODES)
        handle = AccessHandle(mdp, mode, seed=case)
        if _access_illegal(config, mode):
            with pytest.raises(ConfigError, match="access"):
                validate_config(config, handle)
            rejected += 1
            continue
        try:
            validate_config(config, handle)
        except ConfigError as e:
            assert "access" not in str(e), f"case {case}: {config.name} on {mode.value}: {e}"
            continue
        try:
            FrapEngine(config, handle, seed=case).run(root_budget=2)
        except WrongAccessMode as e:
            pytest.fail(f"case {case}: {config.name} on {mode.value} queried outside its mode: {e}")
        except FrapError:
            pass
        ran += 1
    assert rejected > 0
    assert ran > 0


@pytest.mark.parametrize("name", list_presets())
def test_capability_enforcement(name):
    config = preset(name)
    mdp = make_chain(3, 0.9)
    for mode in MODES:
        handle = AccessHandle(mdp, mode)
        if mode.rank < config.access_required.rank:
            with pytest.raises(ConfigError):
                validate_config(config, handle)
        else:
            validate_config(config, handle)
    # runs at the required access never query outside it
    run_blocking(config, mdp, 3, 0)


@pytest.mark.parametrize("name", ["mcts", "dyna_q", "td_lambda", "labeled_rtdp"])
def test_metrics_are_reproducible(name):
    mdp = make_chain(10, 0.9)
    first = emit_metrics(rows_from_result(run_blocking(preset(name), mdp, 20, 11)))
    second = emit_metrics(rows_from_result(run_blocking(preset(name), mdp, 20, 11)))
    assert first == second
