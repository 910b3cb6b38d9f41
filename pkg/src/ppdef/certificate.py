"""Plain-text certificates for NOT-DEFINABLE verdicts and identity witnesses.

A certificate is self-contained: it embeds the problem text (with its
digest), a legend of every type it mentions, the kernel of the behavior
(values on tuples of pointed ``r``-types, ``r`` the kernel arity) and the
replay report.  Values at the working arity follow from the kernel by
assembly and are recomputed by the checker.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

from .age import BaseStructure, FinStruct, TypeRep, canonical_form, in_age
from .behavior import SIGGERS_IDENTITY, Behavior, InvalidProblem, SearchProblem, verify
from .oracle import ReplayFailure, replay
from .pointed import PointedType, pointed_space
from .problemfile import ProblemFile, parse_problem

HEADER = "ppdef certificate v1"


class CertificateError(ValueError):
    pass


def _type_line(tid: int, t: TypeRep) -> str:
    return f"  T{tid} arity={t.arity} partition={','.join(map(str, t.partition))} diagram={t.quotient.diagram()}"


def render(pf: ProblemFile, query, verdict: str, witness: Behavior, sp: SearchProblem,
           replay_lines: Sequence[str]) -> str:
    """Certificate text for one decided query."""
    legend: dict[TypeRep, int] = {}

    def tid(t: TypeRep) -> str:
        if t not in legend:
            legend[t] = len(legend)
        return f"T{legend[t]}"

    consts = " ".join(tid(c) for c in sp.constants)
    sigma = []
    for args in sorted(witness.kernel, key=lambda a: tuple(p.full.sort_key() for p in a)):
        sigma.append("  " + " ".join(tid(p.full) for p in args) + " -> " + tid(witness.kernel[args]))
    out = [HEADER, f"digest: {pf.digest(query)}", "problem:"]
    out += [f"  {line}" for line in pf.problem_lines(query)]
    out += [f"verdict: {verdict}", f"mode: {sp.mode}", f"arity: {sp.m}",
            f"kernel_arity: {sp.r}", f"constants: {consts}", "types:"]
    out += [_type_line(i, t) for t, i in sorted(legend.items(), key=lambda kv: kv[1])]
    out += ["sigma:"] + sigma + ["replay:"] + [f"  {line}" for line in replay_lines]
    out.append("status: VERIFIED")
    return "\n".join(out) + "\n"


@dataclass
class CheckResult:
    ok: bool
    messages: list = field(default_factory=list)


def _sections(text: str) -> dict:
    lines = text.splitlines()
    if not lines or lines[0] != HEADER:
        raise CertificateError(f"first line must be {HEADER!r}")
    fields: dict = {}
    blocks: dict = {}
    current = None
    for no, line in enumerate(lines[1:], start=2):
        if line.startswith("  "):
            if current is None:
                raise CertificateError(f"line {no}: indented line outside a section")
            blocks[current].append(line[2:])
            continue
        m = re.match(r"^([a-z_]+):\s?(.*)$", line)
        if not m:
            raise CertificateError(f"line {no}: cannot parse {line!r}")
        key, value = m.group(1), m.group(2)
        if value:
            fields[key] = value
            current = None
        else:
            blocks[key] = []
            current = key
    return {"fields": fields, "blocks": blocks}


_TYPE = re.compile(r"^T(\d+) arity=(\d+) partition=([0-9,]*) diagram=(.*)$")
_ATOM = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\(([0-9,]*)\)$")


def _parse_type(base: BaseStructure, line: str) -> tuple[int, TypeRep]:
    m = _TYPE.match(line)
    if not m:
        raise CertificateError(f"bad type line {line!r}")
    arity = int(m.group(2))
    partition = tuple(int(x) for x in m.group(3).split(",")) if m.group(3) else ()
    if len(partition) != arity:
        raise CertificateError(f"type T{m.group(1)}: partition length differs from arity")
    blocks = max(partition) + 1 if partition else 0
    if sorted(set(partition)) != list(range(blocks)):
        raise CertificateError(f"type T{m.group(1)}: partition does not use blocks 0..{blocks - 1}")
    sig = base.signature
    rels: dict = {}
    for atom in m.group(4).split():
        am = _ATOM.match(atom)
        if not am or am.group(1) not in sig:
            raise CertificateError(f"type T{m.group(1)}: bad atom {atom!r}")
        rels.setdefault(am.group(1), []).append(tuple(int(x) for x in am.group(2).split(",")))
    try:
        Q = FinStruct.make(sig, blocks, rels)
    except (KeyError, ValueError) as exc:
        raise CertificateError(f"type T{m.group(1)}: {exc}") from None
    if not in_age(base, Q) or canonical_form(sig, Q) != Q:
        raise CertificateError(f"type T{m.group(1)}: diagram is not a canonical age member")
    return int(m.group(1)), TypeRep(arity, partition, Q)


def check_text(text: str) -> CheckResult:
    """Re-check a certificate from scratch: digest, kernel totality, behavior checks and replay."""
    msgs: list[str] = []
    sec = _sections(text)
    fields, blocks = sec["fields"], sec["blocks"]
    for key in ("digest", "verdict", "mode", "arity", "kernel_arity", "constants", "status"):
        if key not in fields:
            raise CertificateError(f"missing field {key!r}")
    for key in ("problem", "types", "sigma", "replay"):
        if key not in blocks:
            raise CertificateError(f"missing section {key!r}")
    pf = parse_problem("\n".join(blocks["problem"]) + "\n")
    if len(pf.queries) != 1:
        raise CertificateError("the problem section must hold exactly one query")
    q = pf.queries[0]
    ok = True
    if pf.digest(q) != fields["digest"]:
        msgs.append("digest: FAIL (problem text altered)")
        ok = False
    else:
        msgs.append("digest: pass")
    base = pf.base
    legend = dict(_parse_type(base, line) for line in blocks["types"])

    def lookup(name: str) -> TypeRep:
        if not name.startswith("T") or int(name[1:]) not in legend:
            raise CertificateError(f"unknown type id {name!r}")
        return legend[int(name[1:])]

    mode = fields["mode"]
    if mode != q.mode:
        raise CertificateError("mode field disagrees with the query")
    constants = tuple(lookup(n) for n in fields["constants"].split())
    if len(constants) != int(fields["arity"]) or int(fields["kernel_arity"]) != base.kernel_arity:
        raise CertificateError("arity fields disagree with the constants or the base")
    theta = tuple(pf.relations[s] for s in q.sources)
    if mode == "identity":
        sp = SearchProblem.identity(base, theta, (SIGGERS_IDENTITY,))
        if sp.constants != constants:
            raise CertificateError("identity certificates carry empty constants")
    else:
        try:
            sp = SearchProblem(base, constants, mode, theta, pf.relations[q.target])
        except InvalidProblem as exc:
            msgs.append(f"constants: FAIL ({exc})")
            return CheckResult(False, msgs)
    kernel = {}
    for line in blocks["sigma"]:
        lhs, _, rhs = line.partition(" -> ")
        names = lhs.split()
        if len(names) != sp.m or not rhs:
            raise CertificateError(f"bad sigma line {line!r}")
        args = tuple(PointedType(c, lookup(n)) for c, n in zip(constants, names))
        if args in kernel:
            raise CertificateError(f"duplicate sigma entry {line!r}")
        kernel[args] = lookup(rhs.strip())
    expected = 1
    for c in constants:
        expected *= len(pointed_space(base, c, sp.r))
    spaces = [set(pointed_space(base, c, sp.r)) for c in constants]
    total = len(kernel) == expected and all(a in s for args in kernel for a, s in zip(args, spaces))
    msgs.append(f"kernel: {'pass' if total else 'FAIL'} ({len(kernel)} of {expected} cells)")
    if not total:
        return CheckResult(False, msgs)
    b = Behavior(base, constants, kernel)
    failures = verify(b, sp)
    msgs.append("behavior checks: " + ("pass" if not failures else "FAIL " + "; ".join(failures)))
    ok = ok and not failures
    if not failures and mode != "identity":
        done = set()
        for line in blocks["replay"]:
            m = re.match(r"^sizes=([0-9,]+) ", line)
            if not m or m.group(1) in done:
                continue
            done.add(m.group(1))
            sizes = tuple(int(x) for x in m.group(1).split(","))
            try:
                report = replay(b, sp, sizes)
                msgs += report.lines()
            except ReplayFailure as exc:
                msgs += exc.report.lines()
                ok = False
    if fields["status"] != "VERIFIED":
        msgs.append(f"status field is {fields['status']!r}")
        ok = False
    return CheckResult(ok, msgs)


def check_file(path: str) -> CheckResult:
    with open(path, encoding="utf-8") as fh:
        return check_text(fh.read())
