"""diffusion-el command-line interface.

Exit codes: 0 success, 2 invalid configuration or data, 3 numerical failure.
"""

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

import yaml

from diffusion_el import __version__
from diffusion_el.cli.commands import cmd_bandwidth, cmd_fit, cmd_simulate, cmd_study, cmd_test
from diffusion_el.utils.config_loader import ConfigLoader
from diffusion_el.utils.errors import ConfigError, DataFormatError, DiffusionElError, ParameterDomainError
from diffusion_el.utils.logger import Logger

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

COMMANDS = {
    "test": cmd_test,
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "bandwidth": cmd_bandwidth,
    "study": cmd_study,
}

# flag -> (config key, type, help)
FLAGS = {
    "--model": ("model", str, "model family or preset (vasicek, cir, icir, cev, nldrift, vasicek0, cir0, ...)"),
    "--theta": ("theta", str, "parameters, e.g. kappa=0.86,alpha=0.089,sigma2=0.0022"),
    "--data": ("data", str, "observed series, one value per line"),
    "--delta": ("delta", float, "sampling interval in years"),
    "--region": ("region", str, "auto, a region preset or u_min,u_max,v_min,v_max"),
    "--bandwidths": ("bandwidths", str, "explicit bandwidths h_1,...,h_J"),
    "--bandwidth-scheme": ("bandwidth_scheme", str, "fixed, ref-third-smallest, cv-lower-range or endpoints"),
    "--n-bandwidths": ("n_bandwidths", int, "number of bandwidths J"),
    "--ratio": ("ratio", float, "bandwidth ratio a"),
    "--h-min": ("h_min", float, "smallest bandwidth of the endpoints scheme"),
    "--h-max": ("h_max", float, "largest bandwidth of the endpoints scheme"),
    "--variant": ("variant", str, "el or lsel"),
    "--mode": ("mode", str, "grid or data"),
    "--grid": ("grid", str, "region grid m_u,m_v"),
    "--n-boot": ("n_boot", int, "bootstrap replicates B"),
    "--alpha": ("alpha", float, "level"),
    "--seed": ("seed", int, "master seed"),
    "--workers": ("workers", int, "processes (-1 for all cores)"),
    "--euler-substeps": ("euler_substeps", int, "Euler sub-steps per interval"),
    "-n": ("n", int, "number of transitions"),
    "--x0": ("x0", float, "initial state of a simulation"),
    "--output": ("output", str, "output directory (or CSV file for simulate)"),
    "--preset": ("preset", str, "study preset (vasicek-table1, cir-table3, power-table4a, ...)"),
    "--reps": ("reps", int, "Monte Carlo repetitions"),
}


def _parse_assignment(text: str) -> Dict[str, Any]:
    if "=" not in text:
        raise ConfigError(f"--set expects KEY=VALUE, given: {text}")
    key, value = text.split("=", 1)
    return {key.strip(): yaml.safe_load(value)}


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one sub-command per command."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML file with one `key: value` setting per line")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="any configuration key")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    common.add_argument("--log-file", help="also write the log to this file")
    for flag, (key, kind, text) in FLAGS.items():
        common.add_argument(flag, dest=key, type=kind, default=None, help=text)
    common.add_argument("--full-scale", dest="full_scale", action="store_const", const=True, help="B=250, 500 reps")
    common.add_argument(
        "--data-driven", dest="data_driven", action="store_const", const=True, help="per-path Scott bandwidth sets"
    )
    common.add_argument(
        "--reselect", dest="reselect_bandwidths", action="store_const", const=True, help="reselect per replicate"
    )
    common.add_argument(
        "--no-asymptotic", dest="asymptotic", action="store_const", const=False, help="skip the asymptotic tests"
    )

    parser = argparse.ArgumentParser(
        prog="diffusion-el", description="Empirical likelihood specification tests for diffusion models"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("test", parents=[common], help="test a model on an observed series")
    commands.add_parser("simulate", parents=[common], help="simulate a path")
    commands.add_parser("fit", parents=[common], help="maximum likelihood fit")
    commands.add_parser("bandwidth", parents=[common], help="bandwidths and density surfaces")
    commands.add_parser("study", parents=[common], help="Monte Carlo size or power study")
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    keys = [key for key, _, _ in FLAGS.values()] + ["full_scale", "data_driven", "reselect_bandwidths", "asymptotic"]
    overrides = {key: getattr(args, key) for key in keys}
    for assignment in args.set:
        overrides.update(_parse_assignment(assignment))
    return overrides


def main(argv: Optional[List[str]] = None) -> int:
    """Run a command and return its exit code."""
    args = build_parser().parse_args(argv)
    Logger("diffusion_el", logging.DEBUG if args.verbose else logging.INFO, args.log_file)
    try:
        config = ConfigLoader(args.config, _overrides(args)).config
        result = COMMANDS[args.command](config)
    except (ConfigError, DataFormatError, ParameterDomainError) as exc:
        logger.error(f"{args.command}: {exc}")
        return EXIT_VALIDATION
    except DiffusionElError as exc:
        logger.error(f"{args.command}: numerical failure: {exc}")
        return EXIT_NUMERICAL
    if args.command == "test":
        print(result.format_text())
    elif args.command == "study":
        print(result.format_table())
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
