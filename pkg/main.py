"""
Lyapunov toolkit for nonlinear Markov processes

Entry point: configures logging, handles the global flags and hands the
analysis command over to the CLI.
"""

import argparse
import logging
import os
import sys

from cli import LyapunovCLI
from config_generator import generate_default_config, variants

# Setup logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[logging.StreamHandler()]
)
logger = logging.getLogger("lyapunov_toolkit")

# Entry point for the toolkit
if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Lyapunov toolkit for nonlinear Markov processes", add_help=False)
    parser.add_argument("--config", type=str, default="config.yaml", help="Path to configuration file")
    parser.add_argument("--generate-config", action="store_true", help="Generate default configuration file")
    parser.add_argument("--variant", type=str, default="GibbsAffine", choices=variants(),
                        help="Model variant for --generate-config")
    parser.add_argument("--verbose", action="store_true", help="Enable verbose logging")

    args, remaining = parser.parse_known_args()

    # logging level
    if args.verbose:
        logger.setLevel(logging.DEBUG)

    # default config if requested
    if args.generate_config:
        generate_default_config(args.config, args.variant)
        print(f"Configuration written to {args.config}")
        sys.exit(0)

    if not remaining or remaining[0] in ("-h", "--help"):
        LyapunovCLI().parser.print_help()
        sys.exit(0)

    # config exists?
    if remaining[0] != "schema" and not os.path.exists(args.config):
        print(f"Configuration file not found: {args.config}")
        print("Run with --generate-config to create a default configuration")
        sys.exit(1)

    if remaining[0] != "schema":
        remaining = remaining + ["--config", args.config]

    try:
        sys.exit(LyapunovCLI().run(remaining))
    except KeyboardInterrupt:
        print("\nInterrupted")
        sys.exit(1)
