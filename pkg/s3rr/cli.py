"""``s3rr`` command line: run pipeline stages, validate configs, pool seeds."""

import argparse
import json
import logging
import sys
from collections.abc import Sequence
from importlib import resources
from pathlib import Path

from s3rr.app_settings import S3RRSettings
from s3rr.constants import PIPELINE_STAGES, Stage
from s3rr.exceptions import ConfigError, MissingArtifactError, S3RRError
from s3rr.pipeline_config import (
    apply_overrides,
    load_config,
    read_config_document,
    validate_config,
)
from s3rr.services.evaluation.metrics import summarize_trials
from s3rr.services.pipeline import EVAL_SUMMARY, PipelineRunner
from s3rr.services.serialization import read_json, write_json


logger = logging.getLogger("s3rr.cli")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_MISSING_ARTIFACT = 2
EXIT_CONFIG = 3

AGGREGATED_METRICS = {
    "pearson_r": ("correlation", "pearson_r"),
    "degradation_test_r": ("degradation_test_r",),
    "percent_of_best": ("policy", "percent_of_best"),
    "percent_of_demo_mean": ("policy", "percent_of_demo_mean"),
    "policy_mean": ("policy", "policy_mean"),
}


def resolve_config_path(name: str) -> Path:
    """A config file path, or the name of a config bundled with the package."""
    path = Path(name)
    if path.exists():
        return path
    bundled = resources.files("s3rr").joinpath("configs").joinpath(f"{name}.json")
    if bundled.is_file():
        return Path(str(bundled))
    raise ConfigError(f"no such config file or bundled config: {name}", "config")


def parse_stages(text: str | None) -> tuple[Stage, ...]:
    if not text:
        return PIPELINE_STAGES
    stages = []
    for name in text.split(","):
        try:
            stage = Stage(name.strip())
        except ValueError as e:
            raise ConfigError(f"unknown stage {name.strip()!r}", "--stages") from e
        if stage == Stage.PIPELINE:
            raise ConfigError("'pipeline' cannot be listed as a stage", "--stages")
        stages.append(stage)
    # always executed in pipeline order
    return tuple(stage for stage in PIPELINE_STAGES if stage in stages)


def _overrides(args: argparse.Namespace) -> list[str]:
    overrides = list(args.set or [])
    if getattr(args, "seed", None) is not None:
        overrides.append(f"seed={args.seed}")
    return overrides


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(resolve_config_path(args.config), _overrides(args))
    out_dir = args.out_dir or config.out_dir
    if not out_dir:
        raise ConfigError("an output directory is required (--out-dir or out_dir)", "out_dir")
    stage = Stage(args.stage)
    stages = parse_stages(args.stages) if stage == Stage.PIPELINE else (stage,)
    manifest = PipelineRunner(config, out_dir).run(stages)
    logger.info("run complete: %d stage outputs recorded in %s", len(manifest.outputs), out_dir)
    for warning in manifest.warnings:
        logger.warning("%s", warning)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    raw = apply_overrides(read_config_document(resolve_config_path(args.config)), args.set or [])
    violations = validate_config(raw)
    for field_path, message in violations:
        print(f"{field_path}: {message}")
    noun = "violation" if len(violations) == 1 else "violations"
    print(f"{len(violations)} {noun}")
    return EXIT_CONFIG if violations else EXIT_OK


def _lookup(summary: dict, keys: Sequence[str]) -> float | None:
    value = summary
    for key in keys:
        if not isinstance(value, dict) or key not in value:
            return None
        value = value[key]
    return value


def aggregate_runs(run_dirs: Sequence[str | Path]) -> dict[str, dict]:
    """Median and mean ± std of each headline metric across run directories."""
    summaries = []
    for run_dir in run_dirs:
        path = Path(run_dir) / EVAL_SUMMARY
        if not path.exists():
            raise MissingArtifactError(str(path), "aggregate")
        summaries.append(read_json(path))
    result: dict[str, dict] = {}
    for name, keys in AGGREGATED_METRICS.items():
        values = [v for v in (_lookup(s, keys) for s in summaries) if v is not None]
        if values:
            result[name] = summarize_trials(values).to_dict()
    return result


def cmd_aggregate(args: argparse.Namespace) -> int:
    result = aggregate_runs(args.run_dirs)
    if args.output:
        write_json(args.output, result)
    print(json.dumps(result, sort_keys=True, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="s3rr", description="Self-supervised reward regression from suboptimal demonstrations"
    )
    parser.add_argument("--log-level", default=None, help="overrides SRRR_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one stage, or the whole pipeline")
    run.add_argument("stage", choices=[stage.value for stage in Stage])
    run.add_argument("--config", required=True, help="config file or bundled config name")
    run.add_argument("--out-dir", default=None)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--set", action="append", metavar="PATH=VALUE", help="config override")
    run.add_argument("--stages", default=None, help="comma-separated subset for 'pipeline'")
    run.set_defaults(func=cmd_run)

    validate = sub.add_parser("validate", help="list every violation in a config")
    validate.add_argument("config")
    validate.add_argument("--set", action="append", metavar="PATH=VALUE")
    validate.set_defaults(func=cmd_validate)

    aggregate = sub.add_parser("aggregate", help="pool eval summaries across seeds")
    aggregate.add_argument("run_dirs", nargs="+")
    aggregate.add_argument("--output", default=None)
    aggregate.set_defaults(func=cmd_aggregate)
    return parser


def configure_logging(level: str | None) -> None:
    if level is None:
        level = S3RRSettings.from_environ().log_level
    level = level.upper()
    if not isinstance(logging.getLevelName(level), int):
        raise ConfigError(f"unknown log level {level!r}", "--log-level")
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        configure_logging(args.log_level)
        return args.func(args)
    except MissingArtifactError as e:
        logger.error("%s", e)
        return EXIT_MISSING_ARTIFACT
    except ConfigError as e:
        logger.error("invalid config: %s", e)
        return EXIT_CONFIG
    except S3RRError as e:
        logger.error("%s", e)
        return EXIT_FAILURE
    except ValueError as e:
        # contract checks of the value types raise plain ValueError mid-run
        logger.error("run failed: %s", e)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
