"""Command-line entry point.

Exit codes: 0 on success, 2 on configuration errors, 3 on numerical failure.
"""

from __future__ import annotations

import argparse
import sys

from .config import SUBCOMMANDS, load_config
from .errors import ConfigError, NumericalError
from .runner import run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tomochaos",
        description="Chaos diagnostics for kicked-top dynamics: weak-measurement "
                    "tomography, spectral statistics, OTOCs, echoes, and Krylov spreading.",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", metavar="FILE", help="flat key = value config file")
    parser.add_argument("--j", type=float, help="spin magnitude (half-integer)")
    parser.add_argument("--lambda", dest="lam", metavar="L[,L...]",
                        help="kick strength or comma-separated sweep list")
    parser.add_argument("--alpha", type=float, help="rotation angle (default 1.4)")
    parser.add_argument("--steps", type=int, help="number of kicks / record length")
    parser.add_argument("--noise", type=float, help="measurement noise spread")
    parser.add_argument("--seed", type=int, help="master seed (required)")
    parser.add_argument("--states", type=int, help="random initial states / ensemble samples")
    parser.add_argument("--observable", help="Jz, Jx, Jy, or random-hermitian")
    parser.add_argument("--out", help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {
        "j": args.j,
        "lambda": args.lam,
        "alpha": args.alpha,
        "steps": args.steps,
        "noise": args.noise,
        "seed": args.seed,
        "states": args.states,
        "observable": args.observable,
        "out": args.out,
    }
    try:
        config = load_config(path=args.config, overrides=overrides,
                             subcommand=args.subcommand)
    except ConfigError as exc:
        print(f"tomochaos: config error: {exc}", file=sys.stderr)
        return 2
    try:
        manifest = run(config)
    except NumericalError as exc:
        print(f"tomochaos: numerical failure: {exc}", file=sys.stderr)
        return 3
    failed = [t for t in manifest.tasks if t["error"]]
    for task in failed:
        print(f"tomochaos: task {task['name']} failed: {task['error']}", file=sys.stderr)
    for out in manifest.outputs:
        print(f"wrote {config.output_dir}/{out['path']}")
    return 3 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
