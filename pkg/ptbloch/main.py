#!/usr/bin/env python3
import signal
import sys

import yaml

from ptbloch.cli import load_experiment_config, parse_arguments
from ptbloch.config import DATETIME_STR, EXIT_CODE
from ptbloch.debug import install_debugger_hook
from ptbloch.errors import ConfigError, NumericalError
from ptbloch.experiments import EXPERIMENTS
from ptbloch.ptb_logging import apply_logging_options, setup_logging
from ptbloch.reporting import print_summary
from ptbloch.rules import CheckState

logger = setup_logging("ptbloch")


def signal_handler(sig, frame):
    """Handle signals like SIGINT (Ctrl+C) and SIGTERM."""
    signal_name = signal.Signals(sig).name
    logger.warning(f"Received signal {signal_name} ({sig})")
    logger.info("Exiting immediately")
    sys.exit(EXIT_CODE.INTERRUPTED)


def worst_state(issues_by_section):
    states = {issue.validation for issues in issues_by_section.values() for issue in issues}
    for state in (CheckState.FAILED, CheckState.WARNING):
        if state in states:
            return state
    return CheckState.PASSED


def run_experiment(args, run_datetime=DATETIME_STR):
    """Run one subcommand and map failures onto exit codes: config errors 2, numerical failures 1."""
    try:
        config = load_experiment_config(args)
    except (ConfigError, yaml.YAMLError) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CODE.CONFIG_ERROR

    experiment_class = EXPERIMENTS.get(args.program)
    if not experiment_class:
        logger.error(f"Unsupported command: {args.program}")
        return EXIT_CODE.CONFIG_ERROR

    experiment = experiment_class(config, logger=logger, run_datetime=run_datetime, debug=args.debug)
    ret_code = EXIT_CODE.NUMERICAL_FAILURE
    try:
        ret_code = experiment.run()
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        ret_code = EXIT_CODE.CONFIG_ERROR
    except NumericalError as e:
        logger.error(f"Numerical failure ({type(e).__name__}): {e}")
        ret_code = EXIT_CODE.NUMERICAL_FAILURE
    finally:
        experiment.exit_code = ret_code
        logger.status(f'Writing metadata for experiment to: {experiment.metadata_file_path}')
        try:
            experiment.write_metadata()
        except Exception as e:
            logger.error(f"Error writing metadata: {str(e)}")

    print_summary(f"{args.program} results", experiment.summary, issues=experiment.issues,
                  outputs=experiment.output_files, state=worst_state(experiment.issues))
    return ret_code


def main(argv=None):
    signal.signal(signal.SIGINT, signal_handler)
    signal.signal(signal.SIGTERM, signal_handler)

    args = parse_arguments(argv)
    install_debugger_hook(args)
    apply_logging_options(logger, args)

    return run_experiment(args)


if __name__ == "__main__":
    sys.exit(main())
