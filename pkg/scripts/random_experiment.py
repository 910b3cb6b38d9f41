"""Decide seeded random problems in all three modes and tabulate the outcomes.

Checks along the way that verdicts are monotone (pp => ep => ex), that
every witness survives replay, and that the pp synthesizer never finds a
formula for a target the decider called NOT-DEFINABLE.
"""
import argparse
import collections
import csv
import sys
import time

from ppdef.deciders import DEFINABLE, NOT_DEFINABLE, decide
from ppdef.oracle import default_sizes, replay, synthesize_pp
from ppdef.randomgen import RandomConfig, describe, random_problems

ORDER = {NOT_DEFINABLE: 0, DEFINABLE: 1}


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=100)
    ap.add_argument("--seed", type=int, default=RandomConfig.seed)
    ap.add_argument("--max-cost", type=int, default=2000)
    ap.add_argument("--csv", help="write one row per problem here")
    args = ap.parse_args()

    cfg = RandomConfig(seed=args.seed, max_cost=args.max_cost)
    rows = []
    tally = collections.Counter()
    problems_bad = []
    for idx, p in random_problems(args.count, cfg, modes=("pp",)):
        row = {"index": idx, "base": p.base.name, "problem": describe(p)}
        verdicts = []
        for mode in ("pp", "ep", "ex"):
            start = time.monotonic()
            d = decide(p.with_mode(mode))
            row[mode] = d.verdict
            row[f"{mode}_s"] = round(time.monotonic() - start, 3)
            verdicts.append(d.verdict)
            if d.verdict == NOT_DEFINABLE:
                sp = d.search_problem
                if not all(replay(d.witness, sp, s, raise_on_failure=False).ok for s in default_sizes(sp)):
                    problems_bad.append((idx, mode, "replay failed"))
        ranks = [ORDER.get(v) for v in verdicts]
        if None not in ranks and ranks != sorted(ranks):
            problems_bad.append((idx, "modes", "monotonicity violated"))
        phi = synthesize_pp(p.target, p.theta, p.base)
        row["synthesized"] = phi.to_text() if phi else ""
        if phi is not None and row["pp"] == NOT_DEFINABLE:
            problems_bad.append((idx, "pp", f"synthesized {phi}"))
        tally[tuple(verdicts)] += 1
        rows.append(row)
        print(f"{idx:4d} {row['pp']:>14} {row['ep']:>14} {row['ex']:>14}  {row['problem']}")

    print("\nverdict patterns (pp, ep, ex):")
    for pattern, n in tally.most_common():
        print(f"  {n:4d}  {' / '.join(pattern)}")
    print(f"synthesized pp definitions: {sum(1 for r in rows if r['synthesized'])}")
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
    for item in problems_bad:
        print("PROBLEM", *item)
    return 1 if problems_bad else 0


if __name__ == "__main__":
    sys.exit(main())
