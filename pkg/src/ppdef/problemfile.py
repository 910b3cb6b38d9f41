"""Line-oriented problem files.

::

    # comment
    base builtin dense_linear_order        (or: base begin ... base end)
    relation R1/2 := x1<x2
    relation Betw/3 := (x1<x2 & x2<x3) | (x3<x2 & x2<x1)
    query pp Betw from R1
    query identity from R1
    option node_budget 100000

An inline base lists ``signature <name>/<arity> [order]`` lines and
``bound on <n>: <atom> ...`` lines between ``base begin`` and ``base end``;
each bound is an induced structure on ``0..n-1`` whose unlisted atoms are
false.
"""
from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from typing import Optional

from .age import BUILTINS, BaseError, BaseStructure, FinStruct, Signature, builtin, validate_base
from .formula import ParseError, RelationDef, parse, types_of

OPTION_KEYS = {
    "node_budget": int,
    "time_budget_ms": int,
    "replay_sizes": str,
    "oracle_max_vars": int,
    "oracle_max_atoms": int,
    "parallel": int,
}

QUERY_MODES = ("pp", "ep", "ex", "identity")


class FileFormatError(ValueError):
    def __init__(self, message: str, line: int = 0, text: str = ""):
        self.line = line
        self.text = text
        where = f"line {line}: " if line else ""
        super().__init__(f"{where}{message}" + (f": {text.strip()!r}" if text else ""))


@dataclass
class Query:
    id: int
    mode: str
    target: Optional[str]
    sources: tuple[str, ...]
    line: str

    def describe(self) -> str:
        src = "{" + ",".join(self.sources) + "}"
        if self.mode == "identity":
            return f"identity from {src}"
        return f"{self.mode} {self.target} from {src}"


@dataclass
class ProblemFile:
    base: BaseStructure
    base_lines: list[str]
    relations: dict[str, RelationDef]
    relation_lines: dict[str, str]
    queries: list[Query]
    options: dict = field(default_factory=dict)

    def problem_lines(self, q: Query) -> list[str]:
        """Self-contained text of one query (base, the relations it uses, the query)."""
        names = ([q.target] if q.target else []) + [s for s in q.sources if s != q.target]
        return self.base_lines + [self.relation_lines[n] for n in dict.fromkeys(names)] + [q.line]

    def digest(self, q: Query) -> str:
        text = "\n".join(self.problem_lines(q)) + "\n"
        return "sha256:" + hashlib.sha256(text.encode()).hexdigest()


_ATOM = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\(([0-9, ]*)\)$")
_REL = re.compile(r"^relation\s+([A-Za-z_][A-Za-z0-9_]*)\s*/\s*(\d+)\s*:=\s*(.*)$")
_SIG = re.compile(r"^signature\s+([A-Za-z_][A-Za-z0-9_]*)\s*/\s*(\d+)(\s+order)?$")
_BOUND = re.compile(r"^bound\s+on\s+(\d+)\s*:(.*)$")


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse_problem(text: str) -> ProblemFile:
    """Parse a problem file.

    Raises :class:`FileFormatError` or :class:`ParseError` on syntax errors and
    :class:`ppdef.age.BaseError` when an inline base is not valid.
    """
    lines = text.splitlines()
    base: Optional[BaseStructure] = None
    base_lines: list[str] = []
    rel_src: list[tuple[int, str, int, str, str]] = []
    raw_queries: list[tuple[int, str]] = []
    options: dict = {}
    i = 0
    while i < len(lines):
        no = i + 1
        line = _strip(lines[i])
        i += 1
        if not line:
            continue
        if line.startswith("base"):
            if base is not None:
                raise FileFormatError("more than one base section", no, line)
            words = line.split()
            if words[1:2] == ["builtin"] and len(words) == 3:
                if words[2] not in BUILTINS:
                    raise FileFormatError(f"unknown builtin base (known: {', '.join(sorted(BUILTINS))})",
                                          no, line)
                base = builtin(words[2])
                base_lines = [f"base builtin {words[2]}"]
            elif words == ["base", "begin"]:
                block = []
                while True:
                    if i >= len(lines):
                        raise FileFormatError("missing 'base end'", no, line)
                    inner = _strip(lines[i])
                    i += 1
                    if inner == "base end":
                        break
                    if inner:
                        block.append((i, inner))
                base = _inline_base(block)
                base_lines = ["base begin"] + [b for _, b in block] + ["base end"]
            else:
                raise FileFormatError("expected 'base builtin <name>' or 'base begin'", no, line)
        elif line.startswith("relation"):
            m = _REL.match(line)
            if not m:
                raise FileFormatError("expected 'relation <Name>/<arity> := <formula>'", no, line)
            rel_src.append((no, m.group(1), int(m.group(2)), m.group(3).strip(), line))
        elif line.startswith("query"):
            raw_queries.append((no, line))
        elif line.startswith("option"):
            words = line.split()
            if len(words) != 3 or words[1] not in OPTION_KEYS:
                raise FileFormatError(f"expected 'option <key> <value>' with key in {sorted(OPTION_KEYS)}",
                                      no, line)
            try:
                options[words[1]] = OPTION_KEYS[words[1]](words[2])
            except ValueError:
                raise FileFormatError("bad option value", no, line) from None
        else:
            raise FileFormatError("unknown directive", no, line)
    if base is None:
        raise FileFormatError("no base section")
    relations: dict[str, RelationDef] = {}
    relation_lines: dict[str, str] = {}
    for no, name, arity, formula, line in rel_src:
        if name in relations:
            raise FileFormatError(f"relation {name} defined twice", no, line)
        if arity < 1:
            raise FileFormatError("relation arity must be at least 1", no, line)
        try:
            ast = parse(formula, base.signature, arity)
        except ParseError as exc:
            raise FileFormatError(f"in formula of {name}: {exc}", no, line) from exc
        relations[name] = RelationDef(name, arity, ast, types_of(ast, arity, base), formula)
        relation_lines[name] = f"relation {name}/{arity} := {formula}"
    queries = []
    for no, line in raw_queries:
        queries.append(_query(len(queries) + 1, no, line, relations))
    if not queries:
        raise FileFormatError("no query")
    if "replay_sizes" in options:
        parse_replay_offsets(options["replay_sizes"])
    return ProblemFile(base, base_lines, relations, relation_lines, queries, options)


def parse_replay_offsets(value: str) -> list[int]:
    """``"1,2"`` -> replay with ``k+1`` and ``k+2`` elements per coordinate."""
    try:
        offsets = [int(v) for v in value.split(",")]
    except ValueError:
        raise FileFormatError(f"replay_sizes must be comma-separated offsets, got {value!r}") from None
    if not offsets or min(offsets) < 0:
        raise FileFormatError(f"replay_sizes offsets must be non-negative, got {value!r}")
    return offsets


def _query(qid: int, no: int, line: str, relations: dict) -> Query:
    m = re.match(r"^query\s+(\w+)\s+(?:(\w+)\s+)?from\s+(.+)$", line)
    if not m:
        raise FileFormatError("expected 'query <mode> <Target> from <A>[,<B>...]'", no, line)
    mode, target, rest = m.group(1), m.group(2), m.group(3)
    if mode not in QUERY_MODES:
        raise FileFormatError(f"unknown query mode {mode!r}", no, line)
    if (mode == "identity") != (target is None):
        raise FileFormatError("identity queries take no target; other queries need one", no, line)
    sources = tuple(s.strip() for s in rest.split(","))
    for name in ([target] if target else []) + list(sources):
        if not name or name not in relations:
            raise FileFormatError(f"unknown relation {name!r}", no, line)
    canon = f"query {mode} {target} from {','.join(sources)}" if target else \
        f"query identity from {','.join(sources)}"
    return Query(qid, mode, target, sources, canon)


def _inline_base(block: list[tuple[int, str]]) -> BaseStructure:
    symbols = []
    order = None
    bounds_raw = []
    for no, line in block:
        m = _SIG.match(line)
        if m:
            symbols.append((m.group(1), int(m.group(2))))
            if m.group(3):
                if order is not None:
                    raise FileFormatError("two order symbols", no, line)
                order = m.group(1)
            continue
        m = _BOUND.match(line)
        if m:
            bounds_raw.append((no, line, int(m.group(1)), m.group(2).split()))
            continue
        raise FileFormatError("expected 'signature' or 'bound on' inside the base section", no, line)
    if order is None:
        raise FileFormatError("the base signature needs an order symbol ('signature <name>/2 order')")
    try:
        sig = Signature(tuple(symbols), order)
    except ValueError as exc:
        raise BaseError("MalformedSignature", [str(exc)]) from None
    bounds = []
    for no, line, size, atoms in bounds_raw:
        rels: dict = {}
        for atom in atoms:
            m = _ATOM.match(atom)
            if not m:
                raise FileFormatError(f"bad atom {atom!r}", no, line)
            name = m.group(1)
            if name not in sig:
                raise FileFormatError(f"unknown symbol {name!r}", no, line)
            args = tuple(int(a) for a in m.group(2).split(",") if a.strip())
            if len(args) != sig.arity(name) or any(a >= size for a in args):
                raise FileFormatError(f"atom {atom!r} does not fit {name}/{sig.arity(name)} on {size} points",
                                      no, line)
            rels.setdefault(name, []).append(args)
        bounds.append(FinStruct.make(sig, size, rels))
    return validate_base(sig, bounds, name="inline")
