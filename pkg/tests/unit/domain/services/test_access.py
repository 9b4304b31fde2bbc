import pytest

from src.domain.entities.mdp import AccessMode, Sample
from src.domain.errors import EpisodeEnded, TerminalQuery, WrongAccessMode
from src.domain.services.access import AccessHandle
from src.domain.services.environments import make_chain, make_split_mdp


@pytest.fixture
def chain3():
    return make_chain(3, 0.9)


def test_descriptive_query_counts(chain3):
    handle = AccessHandle(chain3, AccessMode.SETTABLE_DESCRIPTIVE)
    outcomes = handle.query_descriptive(1, 0)
    assert [(t.next_state, t.probability, t.reward) for t in outcomes] == [(2, 1.0, 1.0)]
    assert handle.query_count == 1


def test_generative_handle_refuses_descriptive_queries(chain3):
    handle = AccessHandle(chain3, AccessMode.SETTABLE_GENERATIVE)
    with pytest.raises(WrongAccessMode):
        handle.query_descriptive(0, 0)
    assert handle.query_count == 0


def test_query_at_terminal(chain3):
    handle = AccessHandle(chain3, AccessMode.SETTABLE_GENERATIVE)
    with pytest.raises(TerminalQuery):
        handle.query_generative(2, 0)


def test_generative_sample(chain3):
    handle = AccessHandle(chain3, AccessMode.SETTABLE_GENERATIVE)
    assert handle.query_generative(0, 0) == Sample(1, 0.0)
    assert handle.query_count == 1


def test_resettable_handle_moves_forward(chain3):
    handle = AccessHandle(chain3, AccessMode.RESETTABLE_GENERATIVE)
    assert handle.reset() == 0
    result = handle.step(0)
    assert result.next_state == 1 and not result.terminal
    result = handle.step(0)
    assert result == (2, 1.0, True)
    with pytest.raises(EpisodeEnded):
        handle.step(0)


def test_resettable_handle_only_answers_at_current_state(chain3):
    handle = AccessHandle(chain3, AccessMode.RESETTABLE_GENERATIVE)
    handle.reset()
    with pytest.raises(WrongAccessMode):
        handle.query_generative(1, 0)
    assert handle.query_generative(0, 0) == Sample(1, 0.0)
    assert handle.current_state == 1


def test_resettable_descriptive_is_refused(chain3):
    with pytest.raises(WrongAccessMode):
        AccessHandle(chain3, AccessMode.RESETTABLE_DESCRIPTIVE)


def test_same_seed_same_samples():
    split = make_split_mdp()
    first = AccessHandle(split, AccessMode.SETTABLE_GENERATIVE, seed=11)
    second = AccessHandle(split, AccessMode.SETTABLE_GENERATIVE, seed=11)
    assert [first.query_generative(0, 0) for _ in range(50)] == [second.query_generative(0, 0) for _ in range(50)]


def test_split_samples_are_unbiased():
    handle = AccessHandle(make_split_mdp(), AccessMode.SETTABLE_GENERATIVE, seed=5)
    n = 20000
    mean = sum(handle.query_generative(0, 0).reward for _ in range(n)) / n
    # reward is 1 or 3 with equal probability: sd 1, so 4 sigma is 4 / sqrt(n)
    assert abs(mean - 2.0) <= 4.0 / n**0.5
