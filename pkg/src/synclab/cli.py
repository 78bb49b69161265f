"""Command-line entry point: ``synclab <experiment> [options]``.

Exit codes: 0 on success, 2 for invalid configuration or violated
preconditions, 3 for numerical failures during a run.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .experiments import KINDS, RUNNERS, ExperimentConfig
from .simulator import SimulationError
from .stability import EigenSolverError, RegimeError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

# experiment-specific defaults, overridden by --config and then by flags
DEFAULTS = {
    "coexist": {},
    "switch": {"periods": 100, "tau": 0.14},
    "spectrum": {"n": 16, "p": 0.25, "eps": -0.2, "tau": 0.15},
    "contraction": {"n": 16, "p": 0.25, "eps": -0.2, "tau": 0.15, "periods": 400},
    "enumerate": {"n": 5, "eps": -0.2, "tau": 0.15, "topology": "hetero-all-to-all",
                  "potential": "log"},
    "simulate": {"n": 100, "t_end": 100.0},
}

FLAGS = {
    "n": int, "p": float, "drive": float, "eps": float, "tau": float, "seed": int,
    "t_end": float, "out": str, "topology": str, "network": str, "periods": int,
    "trials": int, "pulse_gap": float, "warmup": float, "small_amp": float,
    "large_amp": float, "samples": int, "mode": str, "amplitude": float, "start": str,
    "state": str, "workers": int, "potential": str, "curvature": float,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="synclab",
                                     description="Delay-coupled pulse oscillator experiments")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind)
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--dump-config", action="store_true",
                       help="print the resolved config and exit")
        for name, typ in FLAGS.items():
            p.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None)
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    doc = dict(DEFAULTS[args.kind])
    doc["out"] = os.environ.get("SYNCLAB_OUT", "out")
    if args.config:
        with open(args.config) as fh:
            loaded = json.load(fh)
        if loaded.get("kind", args.kind) != args.kind:
            raise ValueError(f"config is for {loaded['kind']!r}, not {args.kind!r}")
        doc.update(loaded)
    for name in FLAGS:
        value = getattr(args, name)
        if value is not None:
            doc[name] = value
    doc["kind"] = args.kind
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return ExperimentConfig(**doc)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.dump_config:
            print(cfg.to_json())
            return EXIT_OK
        summary = RUNNERS[cfg.kind](cfg)
    except (SimulationError, EigenSolverError, RegimeError, FloatingPointError) as exc:
        print(f"synclab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError, json.JSONDecodeError, TypeError) as exc:
        print(f"synclab: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps({k: v for k, v in summary.items() if k != "per_trial"},
                     indent=2, sort_keys=True, default=str))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
