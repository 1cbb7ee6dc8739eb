"""``flsim`` command line.

    flsim <experiment> --config <path> [--out <dir>] [--seed <u64>]
          [--threads <n>] [--full-hamiltonian] [--pulse rect|gauss]

Exit status: 0 on success, 1 for an invalid configuration (nothing is
written), 2 for a numerical failure.
"""
from __future__ import annotations

import argparse
import os
import sys
import warnings

from .config import EXPERIMENTS, U64, ExperimentConfig, load_config
from .errors import ConfigError, FlsimError, InvalidInputError
from .experiments import timed_run, write_result

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """Argument errors are configuration errors (exit 1)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < U64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("thread count must be at least 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="flsim", description="Dissipative GHZ/W interconversion experiments.")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", required=True, help="JSON config (frequencies in MHz)")
    p.add_argument("--out", help="output directory (default: config output_path)")
    p.add_argument("--seed", type=_u64, help="master seed, overrides the config")
    p.add_argument("--threads", type=_positive, help="worker threads (env: FLSIM_THREADS)")
    p.add_argument("--full-hamiltonian", action="store_true", help="use full static-frame operators")
    p.add_argument("--pulse", choices=("rect", "gauss"), help="weak-pulse shape, overrides the config")
    return p


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Merge the config file with command-line overrides."""
    cfg = load_config(args.config)
    if cfg.experiment is not None and cfg.experiment != args.experiment:
        raise ConfigError(f"config is for {cfg.experiment!r}, not {args.experiment!r}")
    changes = {"experiment": args.experiment}
    threads = args.threads
    if threads is None and os.environ.get("FLSIM_THREADS"):
        try:
            threads = _positive(os.environ["FLSIM_THREADS"])
        except argparse.ArgumentTypeError as exc:
            raise ConfigError(f"FLSIM_THREADS: {exc}") from None
    if threads is not None:
        changes["threads"] = threads
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.full_hamiltonian:
        changes["model"] = "full"
    if args.pulse:
        changes["pulse"] = args.pulse
    if args.out:
        changes["output_path"] = args.out
    return cfg.replace(**changes)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except InvalidInputError as exc:
        print(f"flsim: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            result, wall = timed_run(cfg)
    except InvalidInputError as exc:
        print(f"flsim: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FlsimError as exc:
        print(f"flsim: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        diag = getattr(exc, "diagnostics", None)
        if diag:
            print(f"flsim: diagnostics: {diag}", file=sys.stderr)
        return EXIT_NUMERICAL
    paths = write_result(result, cfg, cfg.output_path, wall)
    for path in paths:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
