import pytest

from src.domain.errors import MdpParseError, MdpValidationError
from src.domain.services.environments import make_gridworld5
from src.domain.services.learned_model import LearnedTabularModel
from src.infrastructure.persistence.mdp_text_codec import LEARNED_HEADER, emit_mdp, emit_model, load_mdp

CHAIN_TEXT = """
# three-state chain
mdp 3 2 0.9
initial 0 1.0
terminal 2
t 0 0 1 1.0 0.0
t 0 1 0 1.0 0.0
t 1 0 2 1.0 1.0   # pays on entering the goal
t 1 1 1 1.0 0.0
"""


def test_load_chain():
    mdp = load_mdp(CHAIN_TEXT)
    assert (mdp.n_states, mdp.n_actions, mdp.gamma) == (3, 2, 0.9)
    assert mdp.terminals == frozenset({2})
    assert mdp.outcomes(1, 0) == ((2, 1.0, 1.0),)
    assert mdp.initial_dist == ((0, 1.0),)


def test_initial_state_defaults_to_zero():
    mdp = load_mdp("mdp 2 1 0.5\nterminal 1\nt 0 0 1 1 2\n")
    assert mdp.initial_dist == ((0, 1.0),)


def test_bytes_are_decoded():
    assert load_mdp(CHAIN_TEXT.encode("utf-8")).n_states == 3


def test_emit_then_load_is_lossless():
    mdp = make_gridworld5()
    text = emit_mdp(mdp)
    assert load_mdp(text) == mdp
    assert emit_mdp(load_mdp(text)) == text


def test_repeated_next_states_are_merged():
    mdp = load_mdp("mdp 2 1 1.0\nterminal 1\nt 0 0 1 0.25 4\nt 0 0 1 0.75 0\n")
    assert mdp.outcomes(0, 0) == ((1, 1.0, 1.0),)


def test_missing_header():
    with pytest.raises(MdpParseError, match="missing header"):
        load_mdp("# nothing here\n")


def test_bad_line_reports_its_number():
    with pytest.raises(MdpParseError) as exc:
        load_mdp("mdp 2 1 0.9\nterminal 1\nmove 0 0 1\n")
    assert exc.value.line == 3
    assert str(exc.value).startswith("line 3:")


def test_non_numeric_field():
    with pytest.raises(MdpParseError, match="n_states must be an integer"):
        load_mdp("mdp three 1 0.9\n")


def test_duplicate_header():
    with pytest.raises(MdpParseError, match="duplicate header"):
        load_mdp("mdp 1 1 0.9\nmdp 1 1 0.9\n")


def test_invalid_utf8():
    with pytest.raises(MdpParseError, match="UTF-8"):
        load_mdp(b"\xff\xfe")


def test_probability_mass_is_validated():
    with pytest.raises(MdpValidationError, match="probability mass"):
        load_mdp("mdp 2 1 0.9\nterminal 1\nt 0 0 1 0.5 0\n")


def test_terminal_outgoing_is_rejected():
    with pytest.raises(MdpValidationError, match="terminal outgoing"):
        load_mdp("mdp 2 1 0.9\nterminal 1\nt 0 0 1 1 0\nt 1 0 0 1 0\n")


def test_index_range_is_validated():
    with pytest.raises(MdpValidationError, match="index range"):
        load_mdp("mdp 2 1 0.9\nterminal 1\nt 0 0 5 1 0\n")


def test_gamma_range_is_validated():
    with pytest.raises(MdpValidationError):
        load_mdp("mdp 2 1 1.5\nterminal 1\nt 0 0 1 1 0\n")


def test_emit_learned_model():
    model = LearnedTabularModel(n_states=3, n_actions=2, gamma=0.5)
    model.observe(1, 1, 2, 1.0, True)
    lines = emit_model(model).splitlines()
    assert lines[0] == LEARNED_HEADER
    assert lines[1] == "mdp 3 2 0.5"
    assert "terminal 2" in lines
    assert lines[-1] == "t 1 1 2 1 1"
