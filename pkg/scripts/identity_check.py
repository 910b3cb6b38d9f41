"""Search for a canonical 4-ary operation with s(a,b,c,c) = s(b,c,a,b) preserving given relations.

    python scripts/identity_check.py                  # (Q;<) and (Q;) for comparison
    python scripts/identity_check.py --base ordered_random_graph --relation "edge(x1,x2)"
"""
import argparse
import time

from ppdef.age import builtin
from ppdef.deciders import DeciderConfig, check_identity
from ppdef.formula import RelationDef


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--base", default="dense_linear_order")
    ap.add_argument("--relation", action="append", help="binary relation formula; may repeat")
    ap.add_argument("--max-constraints", type=int, default=3_000_000)
    args = ap.parse_args()
    base = builtin(args.base)
    templates = [[f] for f in args.relation] if args.relation else [["x1<x2"], []]
    for formulas in templates:
        gamma = tuple(RelationDef.from_text(f"G{i}", f, 2, base) for i, f in enumerate(formulas))
        start = time.monotonic()
        res = check_identity(base, gamma, DeciderConfig(max_constraints=args.max_constraints))
        label = ", ".join(formulas) or "no relations"
        extra = f" ({res.diagnostics.get('limit')})" if "limit" in res.diagnostics else ""
        print(f"{args.base} preserving [{label}]: {res.verdict}{extra}  {time.monotonic() - start:.2f}s")


if __name__ == "__main__":
    main()
