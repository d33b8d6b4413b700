import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from ftcbf import __version__
from ftcbf.api.render import RunNotFoundError, RunStore, summarize
from ftcbf.api.sim import SimConfig, build_scenario, run
from ftcbf.api.verify import SuiteRouter, VerifyContext
from ftcbf.core.config import BUNDLED_SCENARIO, QpSettings, Settings, get_settings
from ftcbf.core.errors import FtcbfError, PreconditionError, QpFailure, ScenarioValidationError
from ftcbf.core.logging import configure_logging
from ftcbf.models.scenario import load_scenario

logger = logging.getLogger(__name__)

# --- Exit codes ---
EXIT_ACCEPT = 0
EXIT_INVALID = 1
EXIT_REJECTED = 2
EXIT_INFEASIBLE = 3

STATUS_EXIT = {"accept": EXIT_ACCEPT, "reject": EXIT_REJECTED, "timeout": EXIT_REJECTED, "infeasible": EXIT_INFEASIBLE}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ftcbf",
        description="Drive multi-agent systems through lasso-shaped reachability tasks with finite-time barrier QPs.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    run_cmd = commands.add_parser("run", help="simulate a scenario and write CSV/SVG outputs")
    run_cmd.add_argument("scenario", type=Path, help="scenario JSON file")
    run_cmd.add_argument("--out", type=Path, default=None, help="output directory (default: $FTCBF_OUTPUT_ROOT/<name>)")
    run_cmd.add_argument("--dt", type=float, default=None, help="integration step in seconds")
    run_cmd.add_argument("--gamma", type=float, default=None, help="finite-time gain")
    run_cmd.add_argument("--rho", type=float, default=None, help="finite-time exponent in [0, 1)")
    run_cmd.add_argument("--epsilon", type=float, default=None, help="complement margin")
    run_cmd.add_argument("--cycles", type=int, default=None, help="suffix cycles to complete")
    run_cmd.add_argument("--max-time", type=float, default=None, help="simulated time limit in seconds")

    progress_cmd = commands.add_parser("progress", help="goal-progress series of a finished run")
    progress_cmd.add_argument("run_dir", type=Path, help="directory written by `run`")

    verify_cmd = commands.add_parser("verify", help="run the property suites")
    verify_cmd.add_argument("scenario", type=Path, nargs="?", default=BUNDLED_SCENARIO, help="scenario JSON file")
    verify_cmd.add_argument("--sweep", action="store_true", help="add the gamma/rho grid and the dt-halving check")
    verify_cmd.add_argument("--suite", action="append", default=None, help="run only this suite (repeatable)")
    verify_cmd.add_argument("--seed", type=int, default=0, help="seed of the randomized suites")
    verify_cmd.add_argument("--report", type=Path, default=None, help="also write the JSON report here")
    return parser


def _report_error(e: FtcbfError) -> None:
    if isinstance(e, ScenarioValidationError):
        print("scenario is invalid:", file=sys.stderr)
        for problem in e.problems:
            print(f"  {problem['pointer']}: {problem['message']}", file=sys.stderr)
        return
    kind = "precondition failed" if isinstance(e, PreconditionError) else "error"
    print(f"{kind}: {e.message}", file=sys.stderr)
    for key, value in sorted(e.details.items()):
        print(f"  {key}: {value}", file=sys.stderr)


# --- Commands ---
def cmd_run(args: argparse.Namespace, settings: Settings) -> int:
    """
    Simulate a scenario and write its outputs.

    Args:
        args: Parsed `run` arguments (scenario path, --out and the overrides).
        settings: Environment settings; supplies the output root and QP debug flag.

    Returns:
        Exit code for the final status: 0 accept, 2 reject or timeout, 3 infeasible.
    """
    model = load_scenario(args.scenario).with_overrides(
        dt=args.dt,
        gamma=args.gamma,
        rho=args.rho,
        epsilon=args.epsilon,
        suffix_cycles_target=args.cycles,
        max_time=args.max_time,
    )
    scenario = build_scenario(model)
    config = SimConfig.from_scenario(model)
    out_dir = args.out or settings.output_root / model.name

    error = None
    try:
        result = run(scenario, config, QpSettings(debug=settings.qp_debug))
    except QpFailure as e:
        if e.partial_result is None:
            raise
        _report_error(e)
        result, error = e.partial_result, e

    summary = summarize(model.name, result, error)
    paths = RunStore().save_run(out_dir, model, scenario, result, summary)
    for name, path in paths.items():
        logger.info("%-10s %s", name, path)
    print(summary.one_line())
    return STATUS_EXIT.get(result.status, EXIT_REJECTED)


def cmd_progress(args: argparse.Namespace, settings: Settings) -> int:
    """Recompute goal progress for a saved run and write progress.csv and progress.svg."""
    store = RunStore()
    stored = store.load_run(args.run_dir)
    paths = store.save_progress(args.run_dir, stored)
    print(f"progress written to {paths['progress']} and {paths['plot']}")
    return EXIT_ACCEPT


def cmd_verify(args: argparse.Namespace, settings: Settings) -> int:
    context = VerifyContext(
        model=load_scenario(args.scenario),
        sweep=args.sweep,
        seed=args.seed,
        qp_settings=QpSettings(debug=settings.qp_debug),
    )
    report = SuiteRouter().run(context, args.suite)
    text = report.model_dump_json(indent=2)
    if args.report:
        args.report.parent.mkdir(parents=True, exist_ok=True)
        args.report.write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_ACCEPT if report.passed else EXIT_INVALID


COMMANDS = {"run": cmd_run, "progress": cmd_progress, "verify": cmd_verify}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        settings = get_settings()
    except FtcbfError as e:
        _report_error(e)
        return EXIT_INVALID
    configure_logging(settings.log_level)

    try:
        return COMMANDS[args.command](args, settings)
    except QpFailure as e:
        _report_error(e)
        return EXIT_INFEASIBLE
    except (FtcbfError, ValueError) as e:
        if isinstance(e, FtcbfError):
            _report_error(e)
        else:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
