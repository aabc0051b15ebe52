"""The `popcast` command line.

Exit codes: 0 on success, 1 for a usage error, 2 for an invalid configuration and 3 for over capacity or bad input
data. Every error is reported with one line on stderr.
"""
import argparse
import logging
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Iterator, Optional, Sequence

from .allocation import capacity_limits, rank_sessions
from .errors import ConfigError, DataError, PopcastError, UsageError
from .parameters import ParametersList, SystemConfig, presets
from .report import read_snapshots, read_trace, write_allocation, write_limits, write_summary, \
    write_sweep_aggregate, write_sweep_records, write_timeline, write_trace
from .scenarios import SEED_LIMIT, ScenarioKind, synthesize_trace
from .simulation import aggregate, evaluate, instance, replay, sweep

__all__ = ["run", "main", "build_parser"]

logger = logging.getLogger(__name__)


class _ArgumentParser(argparse.ArgumentParser):
    """Argument parser raising `UsageError` instead of exiting."""

    def error(self, message):
        command = self.prog.partition(" ")[2]
        raise UsageError(f"{command}: {message}" if command else message)


@contextmanager
def _output(path: Optional[Path], default: IO[str]) -> Iterator[IO[str]]:
    if path is None:
        yield default
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as stream:
            yield stream
    except OSError as error:
        raise DataError(f"can't write '{path}': {error.strerror}") from None


def _common_options() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    group = common.add_argument_group("configuration")
    group.add_argument("--config", type=Path, help="flat 'key = value' configuration file")
    group.add_argument("--preset", choices=sorted(presets), default="default",
                       help="named parameter set the configuration file and flags start from")
    group.add_argument("--capacity-kbps", type=float, help="capacity C of the link")
    group.add_argument("--beta-max-kbps", type=float, help="full-quality bandwidth of a session")
    group.add_argument("--beta-min-kbps", type=float, help="minimum-quality bandwidth of a session")
    group.add_argument("--layer-granularity-kbps", type=float, help="bandwidth of one enhancement layer")
    group.add_argument("--seed", type=int, help="master seed")
    group.add_argument("--trials", type=int, help="trials per number of sessions")
    common.add_argument("--out", type=Path, help="output file instead of stdout")
    common.add_argument("-v", "--verbose", action="count", default=0, help="more logging, repeat for debug")
    return common


def build_parser() -> argparse.ArgumentParser:
    """Make the parser with all subcommands."""
    common = _common_options()
    parser = _ArgumentParser(prog="popcast",
                             description="Popularity based bandwidth allocation for broadcast video sessions.")
    commands = parser.add_subparsers(dest="command", metavar="command", required=True)

    allocate_parser = commands.add_parser("allocate", parents=[common], help="allocate a snapshot of sessions")
    allocate_parser.add_argument("--snapshot", type=Path, required=True, help="CSV with session_id,viewers")
    allocate_parser.set_defaults(handler=_allocate)

    sweep_parser = commands.add_parser("sweep", parents=[common], help="sweep over the number of sessions")
    sweep_parser.add_argument("--scenario", type=int, choices=[1, 2], required=True)
    sweep_parser.add_argument("--m-from", type=int, required=True, help="first number of sessions")
    sweep_parser.add_argument("--m-to", type=int, required=True, help="last number of sessions (inclusive)")
    sweep_parser.add_argument("--users", type=int, default=200, help="total number of users")
    sweep_parser.add_argument("--workers", type=int, default=1, help="number of worker processes")
    sweep_parser.add_argument("--aggregate-out", type=Path, help="output file for the means per number of sessions")
    sweep_parser.set_defaults(handler=_sweep)

    instance_parser = commands.add_parser("instance", parents=[common], help="allocate one generated population")
    instance_parser.add_argument("--scenario", type=int, choices=[1, 2], required=True)
    instance_parser.add_argument("--sessions", type=int, required=True, help="number of sessions")
    instance_parser.add_argument("--users", type=int, default=200, help="total number of users")
    instance_parser.add_argument("--trial", type=int, default=0, help="trial index the seed is derived for")
    instance_parser.set_defaults(handler=_instance)

    replay_parser = commands.add_parser("replay", parents=[common], help="replay an event trace")
    replay_parser.add_argument("--trace", type=Path, required=True, help="CSV with timestamp,event,session_id")
    replay_parser.set_defaults(handler=_replay)

    trace_parser = commands.add_parser("trace", parents=[common], help="generate a random event trace")
    trace_parser.add_argument("--events", type=int, required=True, help="number of events")
    trace_parser.add_argument("--max-sessions", type=int, help="most sessions running at once")
    trace_parser.add_argument("--horizon", type=float, default=3600., help="expected duration in seconds")
    trace_parser.set_defaults(handler=_trace)

    limits_parser = commands.add_parser("limits", parents=[common], help="print N_HQ and N_LQ")
    limits_parser.set_defaults(handler=_limits)
    return parser


def _parameters(args: argparse.Namespace) -> ParametersList:
    params = presets[args.preset].copy()
    if args.config is not None:
        params.from_file(args.config)
    overrides = {
        "capacity_kbps": args.capacity_kbps,
        "beta_max_kbps": args.beta_max_kbps,
        "beta_min_kbps": args.beta_min_kbps,
        "layer_granularity_kbps": args.layer_granularity_kbps,
        "seed": args.seed,
        "trials": args.trials
    }
    params.from_dict({key: value for key, value in overrides.items() if value is not None})
    if not 0 <= params["seed"] < SEED_LIMIT:
        raise ConfigError(f"the seed must be an unsigned 64-bit integer, {params['seed']} given")
    if params["trials"] < 1:
        raise ConfigError(f"at least one trial is needed, {params['trials']} given")
    return params


def _allocate(args: argparse.Namespace, params: ParametersList, config: SystemConfig, stdout: IO[str]) -> int:
    ranked = rank_sessions(read_snapshots(args.snapshot))
    if not ranked.entries:
        raise DataError(f"no sessions in '{args.snapshot}'")
    evaluation = evaluate(config, ranked)
    with _output(args.out, stdout) as stream:
        write_allocation(evaluation, stream)
        stream.write("\n")
        write_summary(evaluation, stream)
    return 0


def _sweep(args: argparse.Namespace, params: ParametersList, config: SystemConfig, stdout: IO[str]) -> int:
    if args.m_from > args.m_to:
        raise UsageError(f"--m-from ({args.m_from}) larger than --m-to ({args.m_to})")
    records = sweep(config, ScenarioKind.from_number(args.scenario), range(args.m_from, args.m_to + 1),
                    trials=int(params["trials"]), seed=int(params["seed"]), total_users=args.users,
                    workers=args.workers)
    with _output(args.out, stdout) as stream:
        write_sweep_records(records, stream)
    if args.out is None and args.aggregate_out is None:
        stdout.write("\n")
    with _output(args.aggregate_out, stdout) as stream:
        write_sweep_aggregate(aggregate(records), stream)
    return 0


def _instance(args: argparse.Namespace, params: ParametersList, config: SystemConfig, stdout: IO[str]) -> int:
    evaluation = instance(config, ScenarioKind.from_number(args.scenario), args.sessions, total_users=args.users,
                          seed=int(params["seed"]), trial=args.trial)
    with _output(args.out, stdout) as stream:
        write_allocation(evaluation, stream)
        stream.write("\n")
        write_summary(evaluation, stream)
    return 0


def _replay(args: argparse.Namespace, params: ParametersList, config: SystemConfig, stdout: IO[str]) -> int:
    timeline = replay(config, read_trace(args.trace))
    with _output(args.out, stdout) as stream:
        write_timeline(timeline, config, stream)
    return 0


def _trace(args: argparse.Namespace, params: ParametersList, config: SystemConfig, stdout: IO[str]) -> int:
    trace = synthesize_trace(config, args.events, seed=int(params["seed"]), max_sessions=args.max_sessions,
                             horizon=args.horizon)
    with _output(args.out, stdout) as stream:
        write_trace(trace, stream)
    return 0


def _limits(args: argparse.Namespace, params: ParametersList, config: SystemConfig, stdout: IO[str]) -> int:
    with _output(args.out, stdout) as stream:
        write_limits(capacity_limits(config), stream)
    return 0


def _configure_logging(verbose: int, stderr: IO[str]):
    level = logging.WARNING if verbose == 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(stream=stderr, level=level, format="%(levelname)s %(name)s: %(message)s", force=True)
    logging.captureWarnings(True)


def run(argv: Optional[Sequence[str]] = None, stdout: Optional[IO[str]] = None,
        stderr: Optional[IO[str]] = None) -> int:
    """Run the command line with the arguments `argv` and return the exit code.

    Parameters:
        argv (Optional[Sequence[str]]): The arguments without the program name, `sys.argv[1:]` if not given.
        stdout (Optional[IO[str]]): The stream for the output, `sys.stdout` if not given.
        stderr (Optional[IO[str]]): The stream for the diagnostics, `sys.stderr` if not given.
    """
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        args = build_parser().parse_args(argv)
        _configure_logging(args.verbose, stderr)
        params = _parameters(args)
        config = params.system_config()
        return args.handler(args, params, config, stdout)
    except PopcastError as error:
        print(f"popcast: error: {error}", file=stderr)
        return error.exit_code
    except SystemExit as exit_request:
        # --help
        return exit_request.code if isinstance(exit_request.code, int) else 0


def main():
    """Entry point of the `popcast` script."""
    sys.exit(run())
