"""
Main entry point for the fault transient simulator.
"""
import argparse
import logging
import sys

from src.cli import cmd_cct, cmd_compare, cmd_equilibrium, cmd_simulate
from src.config.settings import load_run_config, load_settings
from src.core.errors import ConfigError
from src.integrators import METHODS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ftsim",
        description="Generator fault transients, equilibria and critical clearing time search",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run document (defaults to the built-in benchmark)")
    common.add_argument("--method", choices=METHODS, help="Integration method")
    common.add_argument("--h", type=float, help="Step size in seconds")
    common.add_argument("--t-break", type=float, dest="t_break", help="Fault duration in seconds")
    common.add_argument("--horizon", type=float, dest="stage3_duration", help="Post-clearing stage length in seconds")
    common.add_argument("--decimation", type=int, help="Keep every n-th step in the trajectory")
    common.add_argument("--out-dir", dest="out_dir", help="Output directory")
    common.add_argument("--dump-reduction", action="store_true", default=None, dest="dump_reduction",
                        help="Write the reduced coefficient matrices of every stage")

    sub = parser.add_subparsers(dest="command", required=True)

    equilibrium = sub.add_parser("equilibrium", parents=[common], help="Solve a stage operating point")
    equilibrium.add_argument("--stage", help="Stage name or 1-based index (default: first stage)")

    sub.add_parser("simulate", parents=[common], help="Run the three-stage fault transient")

    cct = sub.add_parser("cct", parents=[common], help="Search the critical clearing time")
    cct.add_argument("--bracket", type=float, nargs=2, metavar=("T_LO", "T_HI"), help="Initial [stable, unstable] bracket")
    cct.add_argument("--tol", type=float, help="Target bracket width in seconds")
    cct.add_argument("--jobs", type=int, help="Concurrent probes per round")

    compare = sub.add_parser("compare", parents=[common], help="Run two methods and tabulate differences")
    compare.add_argument("--methods", nargs=2, choices=METHODS, required=True, metavar=("A", "B"),
                         help="The two methods to compare")
    return parser


def main(argv=None) -> int:
    """
    Parse arguments, configure logging and dispatch to a command.
    """
    args = build_parser().parse_args(argv)
    try:
        settings = load_settings()
    except ValueError as e:
        print(f"Error: {str(e)}", file=sys.stderr)
        return 1

    logging.basicConfig(
        level=getattr(logging, settings.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    logger = logging.getLogger("ftsim")

    overrides = {
        key: getattr(args, key, None)
        for key in ("method", "h", "t_break", "stage3_duration", "decimation", "out_dir",
                    "dump_reduction", "bracket", "tol", "jobs")
    }
    try:
        config = load_run_config(args.config, overrides, settings)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return 1

    if args.command == "equilibrium":
        return cmd_equilibrium(config, args.stage)
    if args.command == "simulate":
        return cmd_simulate(config)
    if args.command == "cct":
        return cmd_cct(config)
    return cmd_compare(config, *args.methods)


if __name__ == "__main__":
    sys.exit(main())
