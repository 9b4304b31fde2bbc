"""
Flat `key = value` algorithm configuration files.

    # comments and blank lines are ignored
    preset = mcts
    budget.trials = 200
    select.ucb_c = 1.0

`preset` picks the base configuration; every other key overrides one dimension.
"""
from enum import Enum
from typing import Callable, Iterable, Mapping, Optional, Union

from pydantic import BaseModel, ValidationError

from src.application.services.presets import preset
from src.domain.entities.algorithm_config import (
    AlgorithmConfig,
    BackupExtra,
    Baseline,
    BootstrapKind,
    BootstrapLocation,
    BudgetKind,
    DepthKind,
    DynamicsKind,
    GlobalUpdateKind,
    GlobalUpdateRule,
    HeuristicTable,
    LearningRateSchedule,
    LocalUpdateKind,
    NextStateKind,
    PlanningSpec,
    PolicyBackupKind,
    RecommendMode,
    ReuseMode,
    RootKind,
    SelectKind,
    TieBreak,
)
from src.domain.errors import ConfigError, UnknownPreset

# (line number or None, key, raw value)
Entry = tuple[Optional[int], str, str]
Setter = Callable[[AlgorithmConfig, str], AlgorithmConfig]


def _replace(model: BaseModel, **changes) -> BaseModel:
    return type(model).model_validate({**dict(model), **changes})


def _enum(kind: type[Enum]) -> Callable[[str], Enum]:
    def parse(raw: str) -> Enum:
        try:
            return kind(raw)
        except ValueError:
            allowed = ", ".join(member.value for member in kind)
            raise ValueError(f"'{raw}' is not one of {allowed}") from None

    return parse


def _optional(parse: Callable[[str], object]) -> Callable[[str], object]:
    return lambda raw: None if raw.lower() == "none" else parse(raw)


def _extras(raw: str) -> frozenset:
    if raw.lower() in ("", "none"):
        return frozenset()
    return frozenset(_enum(BackupExtra)(part.strip()) for part in raw.split(",") if part.strip())


def _nested(section: str, field: str, parse: Callable[[str], object]) -> Setter:
    def setter(config: AlgorithmConfig, raw: str) -> AlgorithmConfig:
        inner = _replace(getattr(config, section), **{field: parse(raw)})
        return _replace(config, **{section: inner})

    return setter


def _top(field: str, parse: Callable[[str], object]) -> Setter:
    return lambda config, raw: _replace(config, **{field: parse(raw)})


def _budget_trials(config: AlgorithmConfig, raw: str) -> AlgorithmConfig:
    n = int(raw)
    changes = {"n": n}
    if config.budget.kind is BudgetKind.EXHAUSTIVE:
        changes["cap"] = n
    elif config.budget.kind is BudgetKind.UNTIL_CONVERGENCE:
        changes["max_trials"] = n
    return _replace(config, budget=_replace(config.budget, **changes))


def _bootstrap_kind(config: AlgorithmConfig, raw: str) -> AlgorithmConfig:
    kind = _enum(BootstrapKind)(raw)
    changes = {"kind": kind}
    if kind is BootstrapKind.HEURISTIC and config.bootstrap.heuristic is None:
        changes["heuristic"] = HeuristicTable()
    return _replace(config, bootstrap=_replace(config.bootstrap, **changes))


def _global_rule(config: AlgorithmConfig) -> GlobalUpdateRule:
    if config.update_global is None:
        raise ValueError("the configuration has no global update rule")
    return config.update_global


def _update_global(config: AlgorithmConfig, raw: str) -> AlgorithmConfig:
    if raw.lower() == "none":
        return _replace(config, update_global=None)
    kind = _enum(GlobalUpdateKind)(raw)
    rule = config.update_global or GlobalUpdateRule()
    return _replace(config, update_global=_replace(rule, kind=kind))


def _update_eta(config: AlgorithmConfig, raw: str) -> AlgorithmConfig:
    eta = float(raw)
    if config.update_global is not None:
        return _replace(config, update_global=_replace(config.update_global, eta=eta))
    return _replace(config, update_local=_replace(config.update_local, eta=eta))


def _global_field(field: str, parse: Callable[[str], object]) -> Setter:
    def setter(config: AlgorithmConfig, raw: str) -> AlgorithmConfig:
        return _replace(config, update_global=_replace(_global_rule(config), **{field: parse(raw)}))

    return setter


def _planning_steps(config: AlgorithmConfig, raw: str) -> AlgorithmConfig:
    planning = config.planning or PlanningSpec()
    return _replace(config, planning=_replace(planning, planning_steps=int(raw)))


def _known_threshold(config: AlgorithmConfig, raw: str) -> AlgorithmConfig:
    planning = config.planning or PlanningSpec()
    return _replace(config, planning=_replace(planning, known_threshold=int(raw)))


SETTERS: dict[str, Setter] = {
    "root.kind": _nested("root", "kind", _enum(RootKind)),
    "root.recommend": _nested("root", "recommend", _enum(RecommendMode)),
    "budget.kind": _nested("budget", "kind", _enum(BudgetKind)),
    "budget.trials": _budget_trials,
    "budget.tol": _nested("budget", "tol", float),
    "depth.kind": _nested("depth", "kind", _enum(DepthKind)),
    "depth.n": _nested("depth", "n", int),
    "depth.cap": _nested("depth", "cap", _optional(int)),
    "ps.threshold": _nested("root", "priority_threshold", float),
    "select.bf": _nested("select", "bf", _enum(SelectKind)),
    "select.af": _nested("select", "af", _enum(SelectKind)),
    "select.nr": _nested("select", "nr", _optional(_enum(SelectKind))),
    "select.eps": _nested("select", "eps", float),
    "select.eps_final": _nested("select", "eps_final", _optional(float)),
    "select.decay_steps": _nested("select", "decay_steps", int),
    "select.temp": _nested("select", "temperature", float),
    "select.ucb_c": _nested("select", "ucb_c", float),
    "select.novelty_beta": _nested("select", "novelty_beta", float),
    "select.ties": _nested("select", "ties", _enum(TieBreak)),
    "select.next_state": _top("next_state", _enum(NextStateKind)),
    "backup.policy": _nested("backup", "policy", _enum(PolicyBackupKind)),
    "backup.dynamics": _nested("backup", "dynamics", _enum(DynamicsKind)),
    "backup.extras": _nested("backup", "extras", _extras),
    "bootstrap.kind": _bootstrap_kind,
    "bootstrap.location": _nested("bootstrap", "location", _enum(BootstrapLocation)),
    "label.tol": _top("label_tol", float),
    "update.local": _nested("update_local", "kind", _enum(LocalUpdateKind)),
    "update.global": _update_global,
    "update.eta": _update_eta,
    "update.lambda": _nested("update_local", "lam", float),
    "update.schedule": _global_field("schedule", _enum(LearningRateSchedule)),
    "update.baseline": _global_field("baseline", _enum(Baseline)),
    "dyna.planning_steps": _planning_steps,
    "ps.known_threshold": _known_threshold,
    "root_budget": _top("root_budget", _optional(int)),
    "reuse_local": _top("reuse_local", _enum(ReuseMode)),
}

KNOWN_KEYS = frozenset(SETTERS) | {"preset"}


def _where(key: str, line: Optional[int]) -> str:
    return f"key '{key}'" + (f" (line {line})" if line is not None else "")


def parse_entries(text: str) -> list[Entry]:
    entries: list[Entry] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            raise ConfigError(f"line {line_no}: expected 'key = value', got '{content}'")
        key, value = (part.strip() for part in content.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"unknown {_where(key, line_no)}")
        entries.append((line_no, key, value))
    return entries


def apply_overrides(
    config: AlgorithmConfig,
    overrides: Union[Mapping[str, str], Iterable[Entry]],
) -> AlgorithmConfig:
    """
    Applies key=value overrides to `config`. `*.kind` keys go first so that values
    such as `budget.trials` are interpreted against the final kind.
    """
    if isinstance(overrides, Mapping):
        entries = [(None, key, str(value)) for key, value in overrides.items()]
    else:
        entries = list(overrides)
    entries.sort(key=lambda entry: 0 if entry[1].endswith(".kind") else 1)
    for line, key, raw in entries:
        if key == "preset":
            continue
        setter = SETTERS.get(key)
        if setter is None:
            raise ConfigError(f"unknown {_where(key, line)}")
        try:
            config = setter(config, raw.strip())
        except ValidationError as e:
            message = e.errors()[0].get("msg", str(e)) if e.errors() else str(e)
            raise ConfigError(f"invalid value '{raw}' for {_where(key, line)}: {message}") from e
        except ValueError as e:
            raise ConfigError(f"invalid value '{raw}' for {_where(key, line)}: {e}") from e
    return config


def parse_algorithm_config(text: str) -> AlgorithmConfig:
    entries = parse_entries(text)
    names = [(line, value) for line, key, value in entries if key == "preset"]
    if len(names) > 1:
        raise ConfigError(f"key 'preset' given more than once (line {names[1][0]})")
    if names:
        line, name = names[0]
        try:
            base = preset(name)
        except UnknownPreset as e:
            raise UnknownPreset(f"line {line}: {e}") from e
    else:
        base = AlgorithmConfig()
    return apply_overrides(base, entries)
