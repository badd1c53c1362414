"""Command-line entry point.

Subcommands:
  run <config-path>    execute a scenario config and write artifacts
  demo-1d              run the 1-D surrogate-search demo
  report <config-path> run a scenario and print the per-instant table

Exit codes: 0 success; 2 bad usage or config; 3 simulation diverged;
1 anything else. Failures print a single JSON object to stderr with
"error" (exception type) and "message" fields.
"""

from __future__ import annotations

import argparse
import json
import sys

from .dynamics import SimulationDiverged
from .harness import (
    ConfigError,
    ExperimentConfig,
    load_config,
    run_scenario,
)

METHOD_CHOICES = ("bo", "local-gradient", "simplex", "all")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit with plain text
        raise _UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bopest", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out-dir", default=None, help="artifact directory")

    run_p = sub.add_parser("run", help="run a scenario config")
    run_p.add_argument("config", help="path to a scenario YAML file")
    common(run_p)
    run_p.add_argument(
        "--integrator", choices=("euler", "rk4"), default=None,
        help="override the integration scheme",
    )
    run_p.add_argument(
        "--method", choices=METHOD_CHOICES, default=None,
        help="run one estimation method (plus the frozen-nominal reference) "
        "instead of the config's list; 'all' selects every method",
    )
    run_p.add_argument(
        "--disable-estimation", action="store_true",
        help="frozen-nominal run only (no episodes)",
    )

    demo_p = sub.add_parser("demo-1d", help="run the 1-D demo")
    common(demo_p)
    demo_p.add_argument("--budget", type=int, default=10)
    demo_p.add_argument("--n-seed-points", type=int, default=3)

    rep_p = sub.add_parser("report", help="run a scenario and print its table")
    rep_p.add_argument("config", help="path to a scenario YAML file")
    common(rep_p)
    rep_p.add_argument(
        "--instants", type=float, nargs="+", default=None,
        help="report instants (default: the config's list)",
    )
    return parser


def _methods_override(args) -> list[str] | None:
    if args.disable_estimation:
        return ["nominal"]
    if args.method is None:
        return None
    if args.method == "all":
        return ["nominal", "bo", "local-gradient", "simplex"]
    return ["nominal", args.method]


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    cfg = cfg.override(
        seed=args.seed,
        out_dir=args.out_dir,
        integrator=args.integrator if cfg.scenario != "bo-demo-1d" else None,
        methods=_methods_override(args) if cfg.scenario != "bo-demo-1d" else None,
    )
    report = run_scenario(cfg)
    summary = {
        "scenario": report.scenario,
        "seed": report.seed,
        "out_dir": cfg.out_dir,
        "mse_full": report.mse_full,
        "diverged": report.diverged,
    }
    print(json.dumps(summary, sort_keys=True, indent=2))
    return 0


def _cmd_demo(args) -> int:
    cfg = ExperimentConfig.from_dict(
        {
            "scenario": "bo-demo-1d",
            "seed": args.seed if args.seed is not None else 0,
            "out_dir": args.out_dir,
            "budget": args.budget,
            "n_seed_points": args.n_seed_points,
        }
    )
    report = run_scenario(cfg)
    print(json.dumps(report.demo, sort_keys=True, indent=2))
    return 0


def _cmd_report(args) -> int:
    cfg = load_config(args.config)
    if cfg.scenario == "bo-demo-1d":
        raise ConfigError("report requires a plant scenario config")
    overrides = dict(seed=args.seed, out_dir=args.out_dir)
    if args.instants is not None:
        overrides["report_instants"] = list(args.instants)
    cfg = cfg.override(**overrides)
    report = run_scenario(cfg)
    cols = sorted({k for row in report.table for k in row})
    ordered = ["instant", "method", "status"] + [
        c for c in cols if c not in ("instant", "method", "status")
    ]
    print("\t".join(ordered))
    for row in report.table:
        print("\t".join(str(row.get(c, "")) for c in ordered))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "demo-1d":
            return _cmd_demo(args)
        return _cmd_report(args)
    except _UsageError as err:
        json.dump({"error": "UsageError", "message": str(err)}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except ConfigError as err:
        json.dump({"error": "ConfigError", "message": str(err)}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except SimulationDiverged as err:
        json.dump({"error": "SimulationDiverged", "message": str(err)}, sys.stderr)
        sys.stderr.write("\n")
        return 3
    except Exception as err:  # pragma: no cover - catch-all contract
        json.dump({"error": type(err).__name__, "message": str(err)}, sys.stderr)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
