"""Command line entry: resolves the run config, dispatches to the pipeline and maps exceptions to exit codes"""
import argparse
import sys
from typing import Any, Callable, Dict, List, Optional

import sentry_sdk

from wetsim.cli.artifacts import ArtifactWriter
from wetsim.cli.config_file import load_run_config
from wetsim.cli.models import Command, RunConfig
from wetsim.cli.pipelines import (
    run_report,
    run_sample_static,
    run_simulate_continuum,
    run_simulate_lattice,
    run_simulate_spde,
)
from wetsim.cli.verify import run_verify
from wetsim.config import settings
from wetsim.exceptions import EXIT_CONFIG_ERROR, EXIT_TEST_FAILURE, WettingException
from wetsim.log import Loggers
from wetsim.utils.parallel import ReplicaExecutor
from wetsim.utils.utility import config_digest

logger = Loggers.get_named_logger("WETSIM_CLI")

PIPELINES: Dict[Command, Callable[..., Dict[str, Any]]] = {
    Command.SAMPLE_STATIC: run_sample_static,
    Command.SIMULATE_LATTICE: run_simulate_lattice,
    Command.SIMULATE_CONTINUUM: run_simulate_continuum,
    Command.SIMULATE_SPDE: run_simulate_spde,
    Command.VERIFY: run_verify,
    Command.REPORT: run_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wetsim", description="Wetting-model simulations and acceptance checks")
    parser.add_argument("--config", help="flat 'key = value' run config file")
    parser.add_argument("--seed", type=int, help="64-bit master seed")
    parser.add_argument("--out", dest="out_dir", help="artifact directory")
    parser.add_argument("--threads", type=int, help="worker threads; outputs do not depend on it")
    parser.add_argument("--command", choices=[command.value for command in Command])
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    return parser


def execute(config: RunConfig) -> Dict[str, Any]:
    """
    Runs the configured pipeline and writes its manifest.

    :param config: run config
    :return: pipeline summary
    """
    keys = config.keys()
    resolved = config.resolved()
    writer = ArtifactWriter(config.out_dir, config.command.value, config_digest(resolved))
    logger.info(f"{config.command.value} seed={config.seed} digest={writer.digest} -> {config.out_dir}")
    summary = PIPELINES[config.command](config, keys, writer)
    writer.write_manifest(resolved, summary)
    return summary


def run(argv: Optional[List[str]] = None) -> int:
    """
    Parses arguments and runs one command.

    :param argv: arguments without the program name
    :return: exit status, 0 on success, 1 on a failed check, 2 on a configuration error
    """
    args = build_parser().parse_args(argv)
    if args.verbose:
        Loggers.set_level("DEBUG")
    if settings.sentry and settings.sentry.dsn:
        sentry_sdk.init(dsn=settings.sentry.dsn, environment=settings.environment, traces_sample_rate=1.0)
    try:
        config = load_run_config(args.config, args.overrides, {
            "command": args.command, "seed": args.seed, "out_dir": args.out_dir, "threads": args.threads,
        })
        ReplicaExecutor.configure(config.threads, config.chunks)
        summary = execute(config)
    except WettingException as error:
        logger.error(error.detail)
        return error.exit_code
    except ValueError as error:
        # pydantic validation of simulation models built from command keys
        logger.error(f"Configuration error: {error}")
        return EXIT_CONFIG_ERROR
    if config.command == Command.VERIFY and not summary["passed"]:
        logger.error(f"acceptance checks failed: {summary['failed']}")
        return EXIT_TEST_FAILURE
    return 0


def main() -> None:
    sys.exit(run())
