#!/usr/bin/env python3
"""Run the Monte-Carlo integration experiment and print the variance table.

    python scripts/run_fig5.py                      # full desk config, ~15 min on one core
    python scripts/run_fig5.py --config smoke --threads 4
"""

import argparse
import json
import sys
from pathlib import Path

from dppproj import cli


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config", default="fig5_desk", help="bundled config name or path to a JSON file")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default="out/fig5")
    args = ap.parse_args()

    path = Path(args.config)
    if not path.exists():
        path = Path(cli.__file__).parent / "configs" / f"{args.config}.json"
    code = cli.main(["experiment", str(path), "--seed", str(args.seed), "--threads", str(args.threads), "--out", args.out])
    if code:
        return code

    summary = json.loads((Path(args.out) / "experiment.json").read_text())
    print(f"{'model':<10}{'rho':>6}{'iota':>5}{'emp var':>13}{'analytic':>13}{'z':>7}")
    for row in summary["results"].values():
        z = (row["emp_var"] - row["analytic_var"]) / row["se_var"]
        print(f"{row['model']:<10}{row['rho']:>6g}{row['iota']:>5}{row['emp_var']:>13.4e}"
              f"{row['analytic_var']:>13.4e}{z:>7.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
