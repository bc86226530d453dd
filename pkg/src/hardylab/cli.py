"""``hardylab run <config.json>`` and one subcommand per experiment kind.

Exit codes: 0 when every check passes, 1 when a check fails or the
computation raises, 2 for configuration and output-path errors.
"""
from __future__ import annotations

import argparse
import os
import sys

from .errors import ConfigError, HardyLabError, ParameterOutOfRange
from .experiments import KINDS, ExperimentConfig, OutputError, load_config, run_experiment

MODULE_OF_KIND = {
    "evolve": "propagator",
    "convexity": "convexity",
    "carleman": "carleman",
    "counterexample": "counterexample",
    "hardy": "hardy",
    "appell": "appell",
    "acceptance-suite": "acceptance",
}

SEED_ENV = "HARDYLAB_SEED"


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hardylab", description="Run hardylab experiments from JSON configs.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run",) + KINDS:
        help_text = "run any experiment config" if name == "run" else f"run a config of kind {name!r}"
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="path to the experiment JSON")
        p.add_argument("--out", help="output directory (overrides the config's 'output')")
        p.add_argument("--threads", type=int, help="worker threads for sweeps")
        p.add_argument("--strict-tails", action="store_true", help="treat unconverged weighted-norm tails as errors")
    return parser


def _config_error(exc: Exception) -> int:
    print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
    return 2


def _build_config(args) -> ExperimentConfig:
    data = load_config(args.config)
    if isinstance(data, dict):
        data = dict(data)
        if args.command != "run" and data.get("kind") != args.command:
            raise ConfigError(f"kind: config is {data.get('kind')!r}, subcommand expects {args.command!r}")
        if SEED_ENV in os.environ:
            try:
                data["seed"] = int(os.environ[SEED_ENV])
            except ValueError:
                raise ParameterOutOfRange("seed", f"{SEED_ENV} must be an integer") from None
        if args.threads is not None:
            data["threads"] = args.threads
        if args.strict_tails:
            data["strict_tails"] = True
    return ExperimentConfig.from_dict(data)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _build_config(args)
    except HardyLabError as exc:
        return _config_error(exc)
    module = MODULE_OF_KIND[cfg.kind]
    try:
        outcome, paths = run_experiment(cfg, args.out)
    except (ConfigError, ParameterOutOfRange, OutputError) as exc:
        return _config_error(exc)
    except HardyLabError as exc:
        print(f"FAIL [{module}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for check in outcome.checks:
        status = "PASS" if check.passed else "FAIL"
        print(f"{status} [{module}] {check.name}: {check.value:.6g} ({'<=' if check.sense == 'max' else '>='} {check.bound:.3g})")
    for path in paths:
        print(f"wrote {path}")
    return 0 if outcome.passed else 1


if __name__ == "__main__":
    sys.exit(main())
