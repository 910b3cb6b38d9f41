"""Command line front end.

Exit codes: 0 all queries decided, 1 certificate check failed, 2 parse
error, 3 invalid base, 4 some query inconclusive.
"""
from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .age import BUILTINS, BaseError, builtin
from .certificate import CertificateError, check_file, render
from .deciders import (INCONCLUSIVE, NOT_DEFINABLE, SATISFIED, DeciderConfig,
                       Problem, check_identity, decide)
from .formula import ParseError
from .oracle import replay, synthesize_pp
from .problemfile import FileFormatError, ProblemFile, parse_problem, parse_replay_offsets

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_PARSE = 2
EXIT_BASE = 3
EXIT_INCONCLUSIVE = 4


@dataclass
class QueryResult:
    id: int
    line: str
    verdict: str
    certificate: Optional[str] = None
    definition: Optional[str] = None
    notes: list = field(default_factory=list)


def config_from_options(options: dict) -> DeciderConfig:
    cfg = DeciderConfig()
    if "node_budget" in options:
        cfg.node_budget = options["node_budget"]
    if "time_budget_ms" in options:
        cfg.time_budget_ms = options["time_budget_ms"]
    return cfg


def run_query(pf: ProblemFile, index: int) -> QueryResult:
    """Decide one query; certificates are rendered for witnesses (replayed first)."""
    q = pf.queries[index]
    cfg = config_from_options(pf.options)
    theta = tuple(pf.relations[s] for s in q.sources)
    head = f"QUERY {q.id}: {q.describe()} => "
    if q.mode == "identity":
        res = check_identity(pf.base, theta, cfg)
        cert = None
        if res.verdict == SATISFIED:
            n = pf.base.n_param
            lines = [f"identity: pass (sigma(t1,t2,t3,t3) = sigma(t2,t3,t1,t2) on all triples of {n}-types)"]
            cert = render(pf, q, res.verdict, res.witness, res.search_problem, lines)
        return QueryResult(q.id, head + res.verdict, res.verdict, cert)
    problem = Problem(pf.base, pf.relations[q.target], theta, q.mode)
    decision = decide(problem, cfg)
    result = QueryResult(q.id, head + decision.verdict, decision.verdict)
    if decision.verdict == NOT_DEFINABLE:
        sp = decision.search_problem
        k = problem.k
        offsets = parse_replay_offsets(pf.options.get("replay_sizes", "1,2"))
        lines = []
        for off in offsets:
            size = max(k + off, max(c.blocks for c in sp.constants))
            lines += replay(decision.witness, sp, (size,) * sp.m).lines()
        result.certificate = render(pf, q, decision.verdict, decision.witness, sp, lines)
    max_vars = pf.options.get("oracle_max_vars", 0)
    max_atoms = pf.options.get("oracle_max_atoms", 0)
    if q.mode == "pp" and max_atoms > 0:
        phi = synthesize_pp(problem.target, theta, pf.base, max_vars, max_atoms)
        if phi is not None:
            if decision.verdict == NOT_DEFINABLE:
                raise AssertionError(f"query {q.id}: synthesized {phi} contradicts NOT-DEFINABLE")
            result.definition = phi.to_text()
    return result


def _run_indexed(args) -> QueryResult:
    text, index = args
    return run_query(parse_problem(text), index)


def run_file(text: str, parallel: int = 0) -> tuple[ProblemFile, list[QueryResult]]:
    pf = parse_problem(text)
    workers = parallel or pf.options.get("parallel", 0)
    if workers and workers > 1 and len(pf.queries) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_indexed, [(text, i) for i in range(len(pf.queries))]))
    else:
        results = [run_query(pf, i) for i in range(len(pf.queries))]
    return pf, results


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ppdef", description="Decide pp/ep/existential definability "
                                "over finitely bounded ordered homogeneous structures.")
    p.add_argument("--file", help="problem file to run")
    p.add_argument("--emit-certificates", metavar="DIR", help="write certificates for witnesses here")
    p.add_argument("--check-certificate", metavar="PATH", help="re-check a certificate file")
    p.add_argument("--list-builtins", action="store_true", help="list the builtin base structures")
    p.add_argument("--parallel", type=int, default=0, help="run queries in this many processes")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    out = sys.stdout
    if args.list_builtins:
        for name in sorted(BUILTINS):
            b = builtin(name)
            sig = " ".join(f"{n}/{a}" + (" (order)" if n == b.order else "") for n, a in b.signature.symbols)
            out.write(f"{name}: {sig}; {len(b.bounds)} bounds; s={b.s}; n_param={b.n_param}\n")
        if not (args.file or args.check_certificate):
            return EXIT_OK
    if args.check_certificate:
        try:
            res = check_file(args.check_certificate)
        except (CertificateError, FileFormatError, ParseError) as exc:
            sys.stderr.write(f"certificate error: {exc}\n")
            return EXIT_PARSE
        except BaseError as exc:
            sys.stderr.write(f"invalid base: {exc}\n")
            return EXIT_BASE
        for line in res.messages:
            out.write(line + "\n")
        out.write(f"certificate: {'VERIFIED' if res.ok else 'REJECTED'}\n")
        if not args.file:
            return EXIT_OK if res.ok else EXIT_CHECK_FAILED
    if not args.file:
        build_parser().print_usage(sys.stderr)
        return EXIT_PARSE
    try:
        with open(args.file, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        sys.stderr.write(f"cannot read {args.file}: {exc}\n")
        return EXIT_PARSE
    try:
        pf, results = run_file(text, args.parallel)
    except (FileFormatError, ParseError) as exc:
        sys.stderr.write(f"parse error: {exc}\n")
        return EXIT_PARSE
    except BaseError as exc:
        sys.stderr.write(f"invalid base: {exc}\n")
        return EXIT_BASE
    if args.emit_certificates:
        os.makedirs(args.emit_certificates, exist_ok=True)
    for r in results:
        out.write(r.line + "\n")
        if args.emit_certificates:
            if r.certificate:
                path = os.path.join(args.emit_certificates, f"query{r.id}.cert")
                with open(path, "w", encoding="utf-8") as fh:
                    fh.write(r.certificate)
            if r.definition:
                path = os.path.join(args.emit_certificates, f"query{r.id}.pp")
                with open(path, "w", encoding="utf-8") as fh:
                    fh.write(r.definition + "\n")
    out.flush()
    return EXIT_INCONCLUSIVE if any(r.verdict == INCONCLUSIVE for r in results) else EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
