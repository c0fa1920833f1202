#!/usr/bin/env python3
"""Run the acceptance suite and print one PASS/FAIL line per criterion.

Extra arguments go to pytest, e.g. ``-k "01 or 03"`` to run a subset.
"""

import sys
from pathlib import Path

import pytest

if __name__ == "__main__":
    tests = Path(__file__).resolve().parents[1] / "tests" / "test_acceptance.py"
    sys.exit(pytest.main([str(tests), "-q", "-p", "no:cacheprovider", *sys.argv[1:]]))
