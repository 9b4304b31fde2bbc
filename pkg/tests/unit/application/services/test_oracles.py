import numpy as np
import pytest

from src.application.services.oracles import (
    greedy_policy_matrix,
    oracle_mc_return,
    oracle_policy_evaluation,
    oracle_value_iteration,
)
from src.domain.entities.mdp import TabularMdp
from src.domain.errors import NonConvergent
from src.domain.services.environments import make_chain, make_gridworld5, make_split_mdp, make_stochastic_tree


@pytest.fixture
def chain3():
    return make_chain(3, 0.9)


def test_chain3_values(chain3):
    result = oracle_value_iteration(chain3, tol=1e-9)
    assert result.v_star == pytest.approx([0.9, 1.0, 0.0], abs=1e-9)
    assert result.optimal_policy == [[0], [0], []]
    assert result.residual <= 1e-9


def test_q_star_is_one_bellman_step_of_v_star():
    mdp = make_gridworld5()
    result = oracle_value_iteration(mdp, tol=1e-10)
    for s in range(mdp.n_states):
        for a in range(mdp.n_actions):
            expected = sum(
                p * (r + mdp.gamma * (0.0 if mdp.is_terminal(nxt) else result.v_star[nxt]))
                for nxt, p, r in mdp.outcomes(s, a)
            )
            assert result.q_star[s][a] == pytest.approx(expected, abs=1e-12)


def test_all_terminal_mdp_converges_immediately():
    mdp = TabularMdp.from_table(2, 1, 0.9, {}, terminals=[0, 1])
    result = oracle_value_iteration(mdp)
    assert result.v_star == [0.0, 0.0]
    assert result.iterations == 1


def test_myopic_values():
    mdp = make_split_mdp(gamma=0.0)
    assert oracle_value_iteration(mdp).v_star[0] == 2.0


def test_stochastic_tree_prefers_action_zero():
    result = oracle_value_iteration(make_stochastic_tree())
    assert result.v_star[0] == pytest.approx(0.9)
    assert result.q_star[0][1] == pytest.approx(0.51)
    assert result.optimal_policy[0] == [0]


def test_history_rises_monotonically_with_nonnegative_rewards(chain3):
    history = oracle_value_iteration(chain3, record_history=True).history
    assert history == [[0.0, 1.0, 0.0], [0.9, 1.0, 0.0], [0.9, 1.0, 0.0]]
    for before, after in zip(history, history[1:]):
        assert all(b <= a + 1e-15 for b, a in zip(before, after))


def test_iteration_cap(chain3):
    with pytest.raises(NonConvergent):
        oracle_value_iteration(chain3, tol=0.0, max_iterations=1)


def test_greedy_policy_evaluation_matches_v_star():
    mdp = make_gridworld5()
    result = oracle_value_iteration(mdp, tol=1e-10)
    values = oracle_policy_evaluation(mdp, greedy_policy_matrix(mdp, result.optimal_policy), tol=1e-10)
    assert values == pytest.approx(result.v_star, abs=1e-7)


def test_uniform_policy_on_chain3(chain3):
    uniform = np.full((3, 2), 0.5)
    values = oracle_policy_evaluation(chain3, uniform, tol=1e-12)
    # V1 = 0.5 + 0.45 V1; V0 = 0.45 V1 + 0.45 V0
    v1 = 0.5 / 0.55
    v0 = 0.45 * v1 / 0.55
    assert values == pytest.approx([v0, v1, 0.0], abs=1e-10)


def test_improper_policy_does_not_converge():
    mdp = TabularMdp.from_table(2, 1, 1.0, {(0, 0): [(0, 1.0, -1.0)]}, terminals=[1])
    with pytest.raises(NonConvergent, match="within 100 iterations"):
        oracle_policy_evaluation(mdp, np.ones((2, 1)), max_iterations=100)


def test_overflowing_values_report_divergence():
    mdp = TabularMdp.from_table(2, 1, 1.0, {(0, 0): [(0, 1.0, -1e308)]}, terminals=[1])
    with pytest.raises(NonConvergent, match="diverged: values became non-finite after 2 iterations"):
        oracle_policy_evaluation(mdp, np.ones((2, 1)), max_iterations=100)


def test_policy_shape_is_checked(chain3):
    with pytest.raises(ValueError):
        oracle_policy_evaluation(chain3, np.full((2, 2), 0.5))


def test_deterministic_mc_return(chain3):
    policy = greedy_policy_matrix(chain3, [[0], [0], []])
    mean, stderr = oracle_mc_return(chain3, policy, 0, episodes=10)
    assert mean == 0.9
    assert stderr == 0.0


def test_single_episode_has_no_stderr(chain3):
    policy = greedy_policy_matrix(chain3, [[0], [0], []])
    assert oracle_mc_return(chain3, policy, 0, episodes=1)[1] is None


def test_mc_return_agrees_with_policy_evaluation():
    mdp = make_gridworld5()
    uniform = np.full((mdp.n_states, mdp.n_actions), 0.25)
    start = mdp.initial_dist[0][0]
    expected = oracle_policy_evaluation(mdp, uniform)[start]
    mean, stderr = oracle_mc_return(mdp, uniform, start, episodes=500, seed=3, horizon=2000)
    assert abs(mean - expected) <= 4.0 * stderr + 1e-3
