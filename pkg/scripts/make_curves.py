#!/usr/bin/env python3
"""Write the bundled pcf and Ripley curve sets (CSV and SVG) under out/curves."""

import sys
from pathlib import Path

from dppproj import cli

CONFIGS = ("curves_gaussian_pcf", "curves_dirichlet_envelope")


def main(out="out/curves"):
    root = Path(cli.__file__).parent / "configs"
    for name in CONFIGS:
        code = cli.main(["curves", str(root / f"{name}.json"), "--svg", "--out", f"{out}/{name}"])
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main(*sys.argv[1:]))
