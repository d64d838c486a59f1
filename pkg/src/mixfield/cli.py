"""Command line entry point: ``mixfield run|preset|oracle``."""

from __future__ import annotations

import argparse
import sys

from mixfield.config import SchemeConfig, load_config
from mixfield.harness import add_oracle_gaps, run_experiment, write_outputs
from mixfield.presets import figure_suites, preset


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, action="append",
                        help="override the config seeds (repeatable)")
    common.add_argument("--out", default="results", help="output directory (default: results)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes (default: 1)")

    p = argparse.ArgumentParser(prog="mixfield", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", parents=[common], help="run a YAML experiment config")
    run.add_argument("config")
    pre = sub.add_parser("preset", parents=[common], help="run a named preset")
    pre.add_argument("name", nargs="?")
    pre.add_argument("--list", action="store_true", help="list presets and exit")
    orc = sub.add_parser("oracle", parents=[common],
                         help="run a config with the exhaustive oracle added, plus oracle gaps")
    orc.add_argument("config")
    orc.add_argument("--max-n", type=int, default=12, help="oracle array size cap (default: 12)")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.jobs < 1:
        print("--jobs must be at least 1", file=sys.stderr)
        return 2
    if args.command == "preset":
        if args.list or not args.name:
            for name, cfg in figure_suites().items():
                print(f"{name}\t{cfg.notes.get('desk_scale', '')}")
            return 0
        config = preset(args.name)
    else:
        config = load_config(args.config)
    if args.seed:
        config = config.replace_seeds(args.seed)
    extra = {}
    if args.command == "oracle":
        schemes = [s for s in config.schemes if s.name != "oracle"]
        schemes.append(SchemeConfig("oracle", {"max_N": args.max_n}))
        d = config.to_dict()
        d["schemes"] = [s.to_dict() for s in schemes]
        config = type(config).from_dict(d)
        extra["oracle_max_N"] = args.max_n
    rows = run_experiment(config, args.jobs)
    if args.command == "oracle":
        add_oracle_gaps(rows)
    path = write_outputs(config, rows, args.out, args.command, extra)
    failed = sum(1 for r in rows if r.get("error"))
    print(f"wrote {len(rows)} rows to {path}" + (f" ({failed} failed)" if failed else ""))
    return 1 if failed and failed == len(rows) else 0


if __name__ == "__main__":
    sys.exit(main())
