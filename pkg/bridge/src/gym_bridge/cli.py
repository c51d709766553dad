"""Command line entry point for the evaluator bridge."""

from __future__ import annotations

import argparse
import sys

from .backends import BackendUnavailable, BridgeConfig, make_backend
from .server import serve


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gym2d-bridge",
        description="Serve robot fitness evaluations over stdio JSON lines.",
    )
    parser.add_argument(
        "--backend",
        default="kinematic",
        help="kinematic (built-in), gym2d (requires the gym_rem2D plug), "
        "or module:factory for a custom plug",
    )
    parser.add_argument("--kill-speed", type=float, default=0.04)
    parser.add_argument("--episode-steps", type=int, default=600)
    parser.add_argument("--terrain-seed", type=int, default=0)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config = BridgeConfig(
        kill_speed=args.kill_speed,
        episode_steps=args.episode_steps,
        terrain_seed=args.terrain_seed,
    )
    try:
        backend = make_backend(args.backend, config)
    except BackendUnavailable as e:
        print(f"fatal: {e}", file=sys.stderr)
        return 1
    serve(backend, sys.stdin, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
