"""Run one or more problem files and print verdicts with timings.

    python scripts/run_suite.py problems/dlo_suite.txt problems/org_suite.txt
"""
import argparse
import time

from ppdef.cli import run_query
from ppdef.problemfile import parse_problem


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("files", nargs="+")
    args = ap.parse_args()
    for path in args.files:
        with open(path, encoding="utf-8") as fh:
            pf = parse_problem(fh.read())
        print(f"# {path} ({pf.base.name})")
        for i in range(len(pf.queries)):
            start = time.monotonic()
            res = run_query(pf, i)
            print(f"{res.line:<60} {time.monotonic() - start:7.2f}s")


if __name__ == "__main__":
    main()
