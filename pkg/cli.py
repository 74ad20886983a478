"""Command-line interface for the Lyapunov toolkit"""

import argparse
import json
import logging
import os
import sys
from typing import List, Optional

import yaml
from pydantic import ValidationError

from core.artifacts import RunStatus
from core.config import apply_overrides, load_config, write_schema
from core.errors import ToolkitError
from core.reports import to_plain
from core.system import ExperimentRunner, commands

logger = logging.getLogger("lyapunov_toolkit.cli")

COMMAND_HELP = {
    "simulate-ode": "Integrate the forward equation dp/dt = p Gamma(p)",
    "fixed-points": "Find and classify the fixed points p = pi(p)",
    "stationary": "Frozen stationary laws pi(r) over points or a grid",
    "descent": "Check that J decreases along ODE trajectories",
    "check-subsolution": "Evaluate H(r, -DJ(r)) on an interior grid",
    "duality": "Legendre duality checks between H and L",
    "concavity": "Concavity of H(r, .) along a line",
    "potential-test": "Curl test for the existence of a potential U",
    "slow-adaptation": "Admissible adaptation rates for R(.||pi*)",
    "finite-n": "Law of the N-particle empirical measure on the lattice",
    "particles": "Gillespie replicas against the ODE solution",
    "landscape": "Values of J over an interior grid",
}


def format_validation_error(error: ValidationError) -> str:
    lines = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<root>"
        lines.append(f"  {location}: {item['msg']}")
    return "\n".join(lines)


class LyapunovCLI:
    """Command-line interface for the analyses"""

    def __init__(self):
        self.parser = self._create_parser()
        self.runner = None
        self._log_handler = None

    def _create_parser(self) -> argparse.ArgumentParser:
        """Create the command-line argument parser"""
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument("--config", type=str, default="config.yaml", help="Path to configuration file (YAML or JSON)")
        common.add_argument("--jobs", type=int, help="Worker threads (default: available cores)")
        common.add_argument("--seed", type=int, help="Random seed")
        common.add_argument("--out", type=str, help="Output directory")
        common.add_argument("--tolerance-profile", type=str, choices=["strict", "fd"],
                            help="Analytic gradients (strict) or finite differences (fd)")

        parser = argparse.ArgumentParser(description="Lyapunov toolkit for nonlinear Markov processes")
        subparsers = parser.add_subparsers(dest="command", help="Command to execute")
        for command in commands():
            subparsers.add_parser(command, parents=[common], help=COMMAND_HELP[command])

        schema_parser = subparsers.add_parser("schema", help="Write the configuration JSON schema")
        schema_parser.add_argument("--out", type=str, default=".", help="Output directory")
        return parser

    def run(self, argv: Optional[List[str]] = None) -> int:
        """Run the CLI and return the exit status"""
        args = self.parser.parse_args(argv)

        if args.command == "schema":
            return self._schema_command(args)
        if args.command in commands():
            return self._analysis_command(args)
        self.parser.print_help()
        return RunStatus.ERROR.value

    def _schema_command(self, args) -> int:
        """Write schema.json"""
        try:
            os.makedirs(args.out, exist_ok=True)
            path = write_schema(os.path.join(args.out, "schema.json"))
            print(f"Schema written to {path}")
            return RunStatus.SUCCESS.value
        except OSError as e:
            print(f"Error writing schema: {e}")
            return RunStatus.ERROR.value

    def _attach_log_file(self, output_dir: str):
        os.makedirs(output_dir, exist_ok=True)
        handler = logging.FileHandler(os.path.join(output_dir, "run.log"))
        handler.setFormatter(logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s'))
        logging.getLogger("lyapunov_toolkit").addHandler(handler)
        self._log_handler = handler

    def _detach_log_file(self):
        if self._log_handler is not None:
            logging.getLogger("lyapunov_toolkit").removeHandler(self._log_handler)
            self._log_handler.close()
            self._log_handler = None

    def _analysis_command(self, args) -> int:
        """Load the configuration, run one analysis and print its summary"""
        try:
            config = load_config(args.config)
            config = apply_overrides(config, seed=args.seed, jobs=args.jobs, output_dir=args.out,
                                     tolerance_profile=args.tolerance_profile)
        except ValidationError as e:
            print(f"Error in configuration {args.config}:\n{format_validation_error(e)}")
            logger.error(f"Invalid configuration {args.config}")
            return RunStatus.ERROR.value
        except (yaml.YAMLError, OSError, ValueError) as e:
            print(f"Error loading configuration: {e}")
            logger.error(f"Could not load {args.config}: {e}")
            return RunStatus.ERROR.value

        self._attach_log_file(config.output_dir)
        try:
            self.runner = ExperimentRunner(config)
            manifest, summary = self.runner.run(args.command)
        except ValidationError as e:
            print(f"Error in model specification:\n{format_validation_error(e)}")
            return RunStatus.ERROR.value
        except (ToolkitError, OSError, ValueError) as e:
            print(f"Error running {args.command}: {type(e).__name__}: {e}")
            return RunStatus.ERROR.value
        finally:
            self._detach_log_file()

        print(json.dumps(_short(summary), indent=2, default=str))
        if manifest.status == RunStatus.VERDICT_FAILURE:
            print(f"{args.command}: verdict failure")
        return manifest.status.value


def _short(summary: dict) -> dict:
    """Console view of a summary; long lists are reported by length"""
    plain = to_plain(summary)
    return {k: (f"<{len(v)} entries>" if isinstance(v, list) and len(v) > 8 else v) for k, v in plain.items()}


if __name__ == "__main__":
    cli = LyapunovCLI()
    sys.exit(cli.run())
