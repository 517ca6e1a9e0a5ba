"""Command-line interface: lfpp-lab run | resume | report."""
from __future__ import annotations

import argparse
import json
import sys

from . import harness
from .grids import GridError


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="lfpp-lab",
                                     description="LFPP simulation campaigns")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a campaign from a config file")
    p_run.add_argument("config")
    p_run.add_argument("--jobs", type=int, default=0,
                       help="worker processes (default: logical cores)")
    p_run.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config key")

    p_res = sub.add_parser("resume", help="finish an interrupted run")
    p_res.add_argument("results_dir")
    p_res.add_argument("--jobs", type=int, default=0)

    p_rep = sub.add_parser("report", help="print the summary of a run")
    p_rep.add_argument("results_dir")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            jobs = args.jobs if args.jobs > 0 else _default_jobs()
            out = harness.run(args.config, jobs=jobs, overrides=args.overrides)
            print(out)
        elif args.command == "resume":
            jobs = args.jobs if args.jobs > 0 else _default_jobs()
            out = harness.resume(args.results_dir, jobs=jobs)
            print(out)
        elif args.command == "report":
            print(harness.report(args.results_dir))
    except harness.ConfigError as e:
        _err("validation", str(e))
        return harness.EXIT_VALIDATION
    except harness.ResourceError as e:
        _err("resource", str(e))
        return harness.EXIT_RESOURCE
    except (GridError, ValueError, RuntimeError, OSError) as e:
        _err("runtime", str(e))
        return harness.EXIT_RUNTIME
    return 0


def _default_jobs() -> int:
    import os

    return os.cpu_count() or 1


def _err(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")


if __name__ == "__main__":
    sys.exit(main())
