"""
Line-based MDP text format:

    mdp <n_states> <n_actions> <gamma>
    initial <s> <p>          (repeatable; defaults to state 0)
    terminal <s>             (repeatable)
    t <s> <a> <s'> <p> <r>   (repeatable)

`#` starts a comment. Numbers are emitted with 17 significant digits so a
load/emit round-trip is lossless.
"""
import logging
from collections import defaultdict
from typing import Union

from pydantic import ValidationError

from src.domain.entities.mdp import TabularMdp
from src.domain.errors import MdpParseError, MdpValidationError, UnvisitedPair
from src.domain.services.learned_model import LearnedTabularModel

logger = logging.getLogger(__name__)

LEARNED_HEADER = "# learned"


def _fmt(x: float) -> str:
    return format(x, ".17g")


def _parse_int(token: str, line_no: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise MdpParseError(f"{what} must be an integer, got '{token}'", line_no) from None


def _parse_float(token: str, line_no: int, what: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise MdpParseError(f"{what} must be a number, got '{token}'", line_no) from None


def load_mdp(text: Union[str, bytes]) -> TabularMdp:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise MdpParseError(f"not UTF-8 text: {e}") from e

    header = None
    initial: list[tuple[int, float]] = []
    terminals: list[int] = []
    table: dict[tuple[int, int], list[tuple[int, float, float]]] = defaultdict(list)

    for line_no, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split("#", 1)[0].split()
        if not tokens:
            continue
        keyword, args = tokens[0], tokens[1:]
        if header is None:
            if keyword != "mdp" or len(args) != 3:
                raise MdpParseError("expected header 'mdp <n_states> <n_actions> <gamma>'", line_no)
            header = (
                _parse_int(args[0], line_no, "n_states"),
                _parse_int(args[1], line_no, "n_actions"),
                _parse_float(args[2], line_no, "gamma"),
            )
            continue
        if keyword == "initial" and len(args) == 2:
            initial.append((_parse_int(args[0], line_no, "state"), _parse_float(args[1], line_no, "probability")))
        elif keyword == "terminal" and len(args) == 1:
            terminals.append(_parse_int(args[0], line_no, "state"))
        elif keyword == "t" and len(args) == 5:
            s = _parse_int(args[0], line_no, "state")
            a = _parse_int(args[1], line_no, "action")
            nxt = _parse_int(args[2], line_no, "next state")
            table[(s, a)].append(
                (nxt, _parse_float(args[3], line_no, "probability"), _parse_float(args[4], line_no, "reward"))
            )
        elif keyword == "mdp":
            raise MdpParseError("duplicate header", line_no)
        else:
            raise MdpParseError(f"unrecognised line '{raw.strip()}'", line_no)

    if header is None:
        raise MdpParseError("missing header 'mdp <n_states> <n_actions> <gamma>'")
    n_states, n_actions, gamma = header
    try:
        return TabularMdp.from_table(
            n_states,
            n_actions,
            gamma,
            dict(table),
            terminals=terminals,
            initial=initial or None,
        )
    except ValidationError as e:
        raise MdpValidationError(_first_message(e)) from e
    except ValueError as e:
        raise MdpValidationError(str(e)) from e


def _first_message(error: ValidationError) -> str:
    details = error.errors()
    if not details:
        return str(error)
    first = details[0]
    message = str(first.get("msg", error))
    # pydantic prefixes errors raised in validators with "Value error, "
    return message.removeprefix("Value error, ")


def emit_mdp(mdp: TabularMdp, header_comment: str = "") -> str:
    lines = []
    if header_comment:
        lines.append(header_comment)
    lines.append(f"mdp {mdp.n_states} {mdp.n_actions} {_fmt(mdp.gamma)}")
    for s, p in mdp.initial_dist:
        lines.append(f"initial {s} {_fmt(p)}")
    for s in sorted(mdp.terminals):
        lines.append(f"terminal {s}")
    for s in range(mdp.n_states):
        for a in range(mdp.n_actions):
            for nxt, p, r in mdp.outcomes(s, a):
                lines.append(f"t {s} {a} {nxt} {_fmt(p)} {_fmt(r)}")
    return "\n".join(lines) + "\n"


def emit_model(model: LearnedTabularModel) -> str:
    """Dumps the maximum-likelihood estimates of every observed pair."""
    lines = [LEARNED_HEADER, f"mdp {model.n_states} {model.n_actions} {_fmt(model.gamma)}"]
    for s, p in model.initial_dist:
        lines.append(f"initial {s} {_fmt(p)}")
    for s in sorted(model.terminals_seen):
        lines.append(f"terminal {s}")
    for s in range(model.n_states):
        for a in range(model.n_actions):
            try:
                outcomes = model.estimate(s, a)
            except UnvisitedPair:
                continue
            for nxt, p, r in outcomes:
                lines.append(f"t {s} {a} {nxt} {_fmt(p)} {_fmt(r)}")
    return "\n".join(lines) + "\n"
