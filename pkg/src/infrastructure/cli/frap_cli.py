"""
Command-line entry point.

    python -m src run --env builtin:chain3 --preset q_learning --roots 5000 --out runs/q
    python -m src oracle --env chain3.mdp
    python -m src verify --env builtin:chain10 --preset q_learning --seeds 20
    python -m src compare --env builtin:gridworld5 --preset prioritized_sweeping --preset q_learning --seeds 20

Exit codes: 0 success or verification passed, 1 verification failed or the run
failed, 2 bad usage, unreadable input or invalid configuration.
"""
import argparse
import asyncio
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from src.application.services.presets import list_presets, preset
from src.application.use_cases.compare_presets_use_case import ComparePresetsUseCase
from src.application.use_cases.run_algorithm_use_case import RunAlgorithmUseCase
from src.application.use_cases.solve_oracle_use_case import SolveOracleUseCase
from src.application.use_cases.verify_preset_use_case import VerifyPresetUseCase
from src.domain.entities.algorithm_config import AlgorithmConfig
from src.domain.entities.results import ComparisonReport, RunResult, VerificationReport
from src.domain.errors import ConfigError, FrapError, MdpNotFound, MdpParseError, MdpValidationError, UnknownPreset
from src.infrastructure.config.algorithm_config_file import apply_overrides, parse_algorithm_config
from src.infrastructure.config.settings import FrapSettings, get_settings
from src.infrastructure.config.verify_manifest import load_manifest
from src.infrastructure.logging_config import configure_logging
from src.infrastructure.metrics.metrics_writer import emit_metrics, rows_from_result
from src.infrastructure.persistence.file_mdp_repository import FileMdpRepository

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

USAGE_ERRORS = (ConfigError, UnknownPreset, MdpParseError, MdpValidationError, MdpNotFound)


def _override(raw: str) -> tuple[str, str]:
    if "=" not in raw:
        raise argparse.ArgumentTypeError(f"expected key=value, got '{raw}'")
    key, value = raw.split("=", 1)
    return key.strip(), value.strip()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="frap", description="Composable tabular planning and learning.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a preset or a configuration file on an environment")
    run.add_argument("--env", required=True, help="MDP file or builtin:<name>")
    source = run.add_mutually_exclusive_group(required=True)
    source.add_argument("--preset", help="one of: " + ", ".join(list_presets()))
    source.add_argument("--config", help="key = value configuration file")
    run.add_argument("--set", dest="overrides", action="append", type=_override, default=[], metavar="KEY=VALUE")
    run.add_argument("--roots", type=int, help="root budget (outer-loop iterations)")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", help="output prefix; writes <prefix>.csv and <prefix>.json")
    run.add_argument("--format", choices=("csv", "json"), default="csv", help="metrics format on stdout")
    run.add_argument("--timing", action="store_true", help="record per-root wall-clock time in the metrics")

    oracle = sub.add_parser("oracle", help="solve an environment exactly")
    oracle.add_argument("--env", required=True)
    oracle.add_argument("--tol", type=float, default=1e-9)
    oracle.add_argument("--out", help="write the JSON result here instead of stdout")

    verify = sub.add_parser("verify", help="check a preset against the oracle")
    verify.add_argument("--env", required=True)
    verify.add_argument("--preset", required=True)
    verify.add_argument("--tol", type=float, help="override the manifest tolerance")
    verify.add_argument("--seeds", type=int, default=1)
    verify.add_argument("--roots", type=int)
    verify.add_argument("--seed", type=int, default=0, help="first seed")

    compare = sub.add_parser("compare", help="paired comparison of presets over seeds")
    compare.add_argument("--env", required=True)
    compare.add_argument("--preset", dest="presets", action="append", required=True)
    compare.add_argument("--seeds", type=int, default=1)
    compare.add_argument("--roots", type=int)
    compare.add_argument("--seed", type=int, default=0, help="first seed")
    compare.add_argument("--out", help="write the JSON report here")
    return parser


def _load_config(args: argparse.Namespace) -> AlgorithmConfig:
    if args.config is not None:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read configuration file '{args.config}': {e}") from e
        config = parse_algorithm_config(text)
    else:
        config = preset(args.preset)
    if args.overrides:
        config = apply_overrides(config, dict(args.overrides))
    return config


def _summary(result: RunResult) -> dict:
    return {
        "preset": result.preset,
        "seed": result.seed,
        "query_count": result.query_count,
        "converged": result.converged,
        "roots_processed": len(result.records),
        "recommended_action": result.recommended_action,
        "first_root": result.first_root,
        "wall_time_ms": result.wall_time_ms,
        "episode_returns": result.episode_returns,
        "local_values": {str(s): v for s, v in result.local_values.items()},
        "global_snapshot": result.global_snapshot.model_dump(),
    }


def _seed(args: argparse.Namespace, settings: FrapSettings) -> int:
    return settings.FRAP_SEED if settings.FRAP_SEED is not None else args.seed


async def _run(args: argparse.Namespace, settings: FrapSettings) -> int:
    config = _load_config(args)
    use_case = RunAlgorithmUseCase(mdp_repository=FileMdpRepository())
    result = await use_case.execute(args.env, config, roots=args.roots, seed=_seed(args, settings), record_timing=args.timing)
    rows = rows_from_result(result)
    if args.out:
        prefix = Path(args.out)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        Path(f"{prefix}.csv").write_bytes(emit_metrics(rows, "csv"))
        Path(f"{prefix}.json").write_text(json.dumps(_summary(result), indent=2), encoding="utf-8")
        logger.info("Wrote %s.csv and %s.json", prefix, prefix)
    else:
        sys.stdout.write(emit_metrics(rows, args.format).decode("utf-8"))
    return EXIT_OK


async def _oracle(args: argparse.Namespace, settings: FrapSettings) -> int:
    use_case = SolveOracleUseCase(FileMdpRepository(), max_iterations=settings.FRAP_ORACLE_MAX_ITERATIONS)
    result = await use_case.execute(args.env, tol=args.tol)
    text = result.model_dump_json(exclude_none=True)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")
    return EXIT_OK


def _print_verification(report: VerificationReport) -> None:
    for verdict in report.verdicts:
        mark = "PASS" if verdict.passed else "FAIL"
        sys.stdout.write(f"seed {verdict.seed}: {mark} ({verdict.detail})\n")
    sys.stdout.write(
        f"{report.preset} on {report.env} [{report.check.value}, tol {report.tol:g}]: "
        f"{report.passes}/{report.seeds} passed, {report.required} required -> "
        f"{'PASS' if report.passed else 'FAIL'}\n"
    )


async def _verify(args: argparse.Namespace, settings: FrapSettings) -> int:
    manifest = load_manifest(settings.FRAP_VERIFY_MANIFEST)
    use_case = VerifyPresetUseCase(FileMdpRepository(), manifest, workers=settings.FRAP_WORKERS)
    report = await use_case.execute(
        args.env, args.preset, tol=args.tol, seeds=args.seeds, roots=args.roots, base_seed=_seed(args, settings)
    )
    _print_verification(report)
    return EXIT_OK if report.passed else EXIT_FAILED


def _print_comparison(report: ComparisonReport) -> None:
    sys.stdout.write("preset,seed,mean_return,queries,v_root\n")
    for row in report.rows:
        mean_return = "" if row.mean_return is None else repr(row.mean_return)
        sys.stdout.write(f"{row.preset},{row.seed},{mean_return},{row.queries},{row.v_root!r}\n")
    for name in report.presets:
        sys.stdout.write(
            f"# {name}: median queries {report.median_queries[name]:g}, median return {report.median_return[name]}\n"
        )


async def _compare(args: argparse.Namespace, settings: FrapSettings) -> int:
    use_case = ComparePresetsUseCase(FileMdpRepository(), workers=settings.FRAP_WORKERS)
    report = await use_case.execute(
        args.env, args.presets, seeds=args.seeds, roots=args.roots, base_seed=_seed(args, settings)
    )
    _print_comparison(report)
    if args.out:
        Path(args.out).write_text(report.model_dump_json(indent=2), encoding="utf-8")
    return EXIT_OK


COMMANDS = {
    "run": _run,
    "oracle": _oracle,
    "verify": _verify,
    "compare": _compare,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    settings = get_settings()
    configure_logging(settings.FRAP_LOG_LEVEL)
    try:
        return asyncio.run(COMMANDS[args.command](args, settings))
    except USAGE_ERRORS as e:
        sys.stderr.write(f"{type(e).__name__}: {e}\n")
        return EXIT_USAGE
    except (FrapError, OSError) as e:
        sys.stderr.write(f"{type(e).__name__}: {e}\n")
        return EXIT_FAILED
