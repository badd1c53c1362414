#!/usr/bin/env python3
"""Run one scenario over a range of seeds and print a compact summary table.

Example:
    python scripts/seed_sweep.py configs/quadrotor.yaml --seeds 10

For each seed this prints the per-axis full-span tracking MSE for every
configured method, plus the estimate error of the first coordinate (mass)
at each report instant, so multi-seed claims can be eyeballed quickly.
"""

from __future__ import annotations

import argparse
import sys

from bopest.harness import load_config, run_scenario


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("config", help="scenario YAML file")
    parser.add_argument("--seeds", type=int, default=10, help="run seeds 0..N-1")
    parser.add_argument(
        "--out-dir", default=None, help="per-seed artifact dirs <out-dir>/seed<N>"
    )
    args = parser.parse_args(argv)

    base = load_config(args.config)
    for seed in range(args.seeds):
        out = f"{args.out_dir}/seed{seed}" if args.out_dir else None
        report = run_scenario(base.override(seed=seed, out_dir=out))
        cells = []
        for method, per_axis in sorted(report.mse_full.items()):
            mse = " ".join(f"{axis}={value:.4g}" for axis, value in per_axis.items())
            cells.append(f"{method}[{mse}]")
        print(f"seed {seed}: " + "  ".join(cells))
        for row in report.table:
            if row["status"] == "ok" and isinstance(row["mass_error"], float):
                print(
                    f"  t={row['instant']:<5} {row['method']:<15} "
                    f"mass_error={row['mass_error']:.4g}"
                )
    return 0


if __name__ == "__main__":
    sys.exit(main())
