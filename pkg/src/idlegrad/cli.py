"""Command-line entry point: ``idlegrad {run,preset,check,bounds}``."""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import checks, experiments


def _out_dir(args, name):
    if args.out:
        return args.out
    return os.path.join(os.environ.get("IDLEGRAD_OUT", "idlegrad_out"), name)


def _summary(report):
    keys = ("name", "data_source", "alpha", "savings_percent", "iteration_overhead_percent",
            "checks", "lambdaN_C", "rows")
    out = {k: report[k] for k in keys if k in report}
    for row in out.get("rows", []):
        row.pop("distances", None)
    return out


def _load_config(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise experiments.ConfigError("--config", f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise experiments.ConfigError("--config", f"invalid JSON: {exc}") from None


def _run(cfg, args):
    cfg = experiments.validate_config(cfg)
    out = _out_dir(args, cfg.get("name", "run"))
    report = experiments.run_experiment(cfg, out)
    print(json.dumps(experiments._jsonable(_summary(report)), indent=2))
    print(f"outputs written to {out}", file=sys.stderr)
    return 0


def cmd_run(args):
    return _run(_load_config(args.config), args)


def cmd_preset(args):
    cfg = experiments.preset(args.name)
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.replicas is not None:
        if "replicas" not in cfg:
            raise experiments.ConfigError("--replicas", f"preset {args.name} is single-path")
        cfg["replicas"] = args.replicas
    if args.workers is not None:
        cfg["workers"] = args.workers
    return _run(cfg, args)


def cmd_check(args):
    return 0 if checks.run_all() else 1


def cmd_bounds(args):
    cfg = _load_config(args.config) if args.config else experiments.preset(args.preset)
    print(json.dumps(experiments.bounds_report(cfg), indent=2))
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="idlegrad",
                                description="Idling distributed gradient experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment from a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--out", help="output directory (default $IDLEGRAD_OUT/<name>)")
    r.set_defaults(func=cmd_run)

    pr = sub.add_parser("preset", help="run a named preset")
    pr.add_argument("name", choices=sorted(experiments.PRESETS))
    pr.add_argument("--out")
    pr.add_argument("--seed", type=int)
    pr.add_argument("--replicas", type=int)
    pr.add_argument("--workers", type=int)
    pr.set_defaults(func=cmd_preset)

    c = sub.add_parser("check", help="run fast invariant self-checks")
    c.set_defaults(func=cmd_check)

    b = sub.add_parser("bounds", help="print theory constants without running")
    g = b.add_mutually_exclusive_group(required=True)
    g.add_argument("--config")
    g.add_argument("--preset", choices=sorted(experiments.PRESETS))
    b.set_defaults(func=cmd_bounds)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except experiments.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
