"""Command line entry point: ``contention-ppo {train,eval,baseline,sweep-ed}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

import yaml

from ..neural import CheckpointError
from ..radio.config import GeometryError
from .runner import CheckpointMismatchError, run_baseline, run_eval, run_sweep, run_train
from .spec import ConfigError, ExperimentSpec, read_mapping, spec_from_mapping


def _load_spec(args) -> ExperimentSpec:
    data = read_mapping(args.config) if args.config else {}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        data[key.strip()] = yaml.safe_load(value)
    spec = spec_from_mapping(data)
    kw = {}
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        kw["seed"] = args.seed
    if args.out is not None:
        kw["out_dir"] = args.out
    return spec.with_overrides(**kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contention-ppo", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("train", "train PPO or DQN with periodic validation"),
        ("eval", "evaluate a checkpoint on the validation grid"),
        ("baseline", "evaluate PF / ED / adaptive-ED baselines"),
        ("sweep-ed", "tabulate reward for every ED threshold"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS, help="log progress to stderr")
        p.add_argument("--config", help="flat YAML config file")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
        if name == "eval":
            p.add_argument("--checkpoint", required=True, help="checkpoint written by train")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        spec = _load_spec(args)
        if args.command == "train":
            return run_train(spec)
        if args.command == "eval":
            print(json.dumps(run_eval(spec, args.checkpoint)))
        elif args.command == "baseline":
            for row in run_baseline(spec):
                print(json.dumps(row))
        else:
            run_sweep(spec)
        return 0
    except ConfigError as exc:
        print(f"contention-ppo: config error: {exc}", file=sys.stderr)
        return 2
    except (CheckpointError, CheckpointMismatchError, GeometryError, OSError, ValueError) as exc:
        print(f"contention-ppo: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        print("contention-ppo: interrupted; partial results flushed", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
