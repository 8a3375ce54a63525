"""Run the acceptance suite and print one line per criterion."""

import argparse
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("-k", dest="select", default="", help="pytest -k expression, e.g. 'c6 or c9'")
    args = p.parse_args()
    argv = [str(ROOT / "tests" / "test_acceptance.py"), "-q", "-p", "no:cacheprovider"]
    if args.select:
        argv += ["-k", args.select]
    return pytest.main(argv)


if __name__ == "__main__":
    sys.exit(main())
