"""Quantifier-free formulas over a base signature.

Grammar (ASCII)::

    formula := disj
    disj    := conj ('|' conj)*
    conj    := unary ('&' unary)*
    unary   := '!' unary | '(' formula ')' | 'true' | 'false' | atom
    atom    := name '(' var (',' var)* ')' | var '<' var | var '=' var
    var     := 'x' digits            (x1 .. xk)

Variables are positional; ``x1`` is position 0 of the evaluated type.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

from .age import BaseStructure, Signature, TypeRep, enumerate_types


class ParseError(ValueError):
    def __init__(self, message: str, pos: int, text: str = ""):
        self.pos = pos
        self.text = text
        super().__init__(f"{message} at position {pos}" + (f": {text!r}" if text else ""))


class UnknownSymbol(ParseError):
    pass


class ArityMismatch(ParseError):
    pass


class VariableOutOfRange(ParseError):
    pass


@dataclass(frozen=True)
class Atom:
    symbol: str
    args: tuple[int, ...]


@dataclass(frozen=True)
class Equality:
    i: int
    j: int


@dataclass(frozen=True)
class Not:
    arg: "Ast"


@dataclass(frozen=True)
class And:
    left: "Ast"
    right: "Ast"


@dataclass(frozen=True)
class Or:
    left: "Ast"
    right: "Ast"


@dataclass(frozen=True)
class Const:
    value: bool


TRUE = Const(True)
FALSE = Const(False)

Ast = Union[Atom, Equality, Not, And, Or, Const]

_TOKEN = re.compile(r"\s*(?:(?P<var>x\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[()!&|<=,.]|∃|∀))")
_QUANTIFIERS = {"exists", "forall", "∃", "∀"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            start = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError("unexpected character", start, text[start])
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, sig: Signature, arity: int):
        self.text = text
        self.sig = sig
        self.arity = arity
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def take(self, value: str | None = None) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        if value is not None and tok[1] != value:
            raise ParseError(f"expected {value!r}", tok[2], tok[1])
        self.i += 1
        return tok

    def parse(self) -> Ast:
        ast = self.disj()
        kind, value, pos = self.peek()
        if kind != "end":
            raise ParseError("unexpected token", pos, value)
        return ast

    def disj(self) -> Ast:
        ast = self.conj()
        while self.peek()[1] == "|":
            self.take()
            ast = Or(ast, self.conj())
        return ast

    def conj(self) -> Ast:
        ast = self.unary()
        while self.peek()[1] == "&":
            self.take()
            ast = And(ast, self.unary())
        return ast

    def unary(self) -> Ast:
        kind, value, pos = self.peek()
        if value in _QUANTIFIERS:
            raise ParseError("quantifiers are not allowed", pos, value)
        if value == "!":
            self.take()
            return Not(self.unary())
        if value == "(":
            self.take()
            ast = self.disj()
            self.take(")")
            return ast
        if kind == "name" and value in ("true", "false"):
            self.take()
            return TRUE if value == "true" else FALSE
        if kind == "var":
            left = self.var()
            op_kind, op, op_pos = self.take()
            right = self.var()
            if op == "=":
                return Equality(left, right)
            if op == "<":
                return Atom(self.sig.order_symbol, (left, right))
            raise ParseError("expected '<' or '='", op_pos, op)
        if kind == "name":
            self.take()
            if value not in self.sig:
                raise UnknownSymbol("unknown relation symbol", pos, value)
            self.take("(")
            args = [self.var()]
            while self.peek()[1] == ",":
                self.take()
                args.append(self.var())
            self.take(")")
            if len(args) != self.sig.arity(value):
                raise ArityMismatch(f"{value} expects {self.sig.arity(value)} arguments, got {len(args)}",
                                    pos, value)
            return Atom(value, tuple(args))
        raise ParseError("unexpected token", pos, value or "end of input")

    def var(self) -> int:
        kind, value, pos = self.take()
        if kind != "var":
            raise ParseError("expected a variable x1, x2, ...", pos, value)
        index = int(value[1:])
        if not 1 <= index <= self.arity:
            raise VariableOutOfRange(f"variable {value} outside x1..x{self.arity}", pos, value)
        return index - 1


def parse(text: str, sig: Signature, arity: int) -> Ast:
    """Parse ``text`` as a quantifier-free formula in the variables ``x1..x{arity}``."""
    return _Parser(text, sig, arity).parse()


def evaluate(ast: Ast, t: TypeRep) -> bool:
    """Truth value of ``ast`` on any tuple of type ``t``."""
    if isinstance(ast, Atom):
        return t.holds(ast.symbol, ast.args)
    if isinstance(ast, Equality):
        return t.equal(ast.i, ast.j)
    if isinstance(ast, Not):
        return not evaluate(ast.arg, t)
    if isinstance(ast, And):
        return evaluate(ast.left, t) and evaluate(ast.right, t)
    if isinstance(ast, Or):
        return evaluate(ast.left, t) or evaluate(ast.right, t)
    if isinstance(ast, Const):
        return ast.value
    raise TypeError(f"not a formula: {ast!r}")


def types_of(ast: Ast, k: int, base: BaseStructure) -> frozenset[TypeRep]:
    return frozenset(t for t in enumerate_types(base, k) if evaluate(ast, t))


def variables(ast: Ast) -> set[int]:
    if isinstance(ast, Atom):
        return set(ast.args)
    if isinstance(ast, Equality):
        return {ast.i, ast.j}
    if isinstance(ast, Not):
        return variables(ast.arg)
    if isinstance(ast, (And, Or)):
        return variables(ast.left) | variables(ast.right)
    return set()


def rename(ast: Ast, mapping) -> Ast:
    """Substitute variable indices through ``mapping`` (a sequence or dict)."""
    if isinstance(ast, Atom):
        return Atom(ast.symbol, tuple(mapping[a] for a in ast.args))
    if isinstance(ast, Equality):
        return Equality(mapping[ast.i], mapping[ast.j])
    if isinstance(ast, Not):
        return Not(rename(ast.arg, mapping))
    if isinstance(ast, And):
        return And(rename(ast.left, mapping), rename(ast.right, mapping))
    if isinstance(ast, Or):
        return Or(rename(ast.left, mapping), rename(ast.right, mapping))
    return ast


def to_text(ast: Ast, order_symbol: str | None = None) -> str:
    """Render ``ast`` in the input grammar (fully parenthesized binary nodes)."""
    if isinstance(ast, Atom):
        if ast.symbol == order_symbol:
            return f"x{ast.args[0] + 1} < x{ast.args[1] + 1}"
        return f"{ast.symbol}({','.join(f'x{a + 1}' for a in ast.args)})"
    if isinstance(ast, Equality):
        return f"x{ast.i + 1} = x{ast.j + 1}"
    if isinstance(ast, Not):
        return f"!{_wrap(ast.arg, order_symbol)}"
    if isinstance(ast, And):
        return f"{_wrap(ast.left, order_symbol)} & {_wrap(ast.right, order_symbol)}"
    if isinstance(ast, Or):
        return f"{_wrap(ast.left, order_symbol)} | {_wrap(ast.right, order_symbol)}"
    return "true" if ast.value else "false"


def _wrap(ast: Ast, order_symbol: str | None) -> str:
    text = to_text(ast, order_symbol)
    return f"({text})" if isinstance(ast, (And, Or)) else text


@dataclass(frozen=True)
class RelationDef:
    """A relation given by a quantifier-free formula, with its set of satisfying types."""

    name: str
    arity: int
    ast: Ast
    type_set: frozenset[TypeRep] = field(compare=False)
    text: str = field(default="", compare=False)

    @classmethod
    def from_text(cls, name: str, text: str, arity: int, base: BaseStructure) -> "RelationDef":
        ast = parse(text, base.signature, arity)
        return cls(name, arity, ast, types_of(ast, arity, base), text)

    @classmethod
    def from_ast(cls, name: str, ast: Ast, arity: int, base: BaseStructure) -> "RelationDef":
        return cls(name, arity, ast, types_of(ast, arity, base), to_text(ast, base.order))

    def contains(self, t: TypeRep) -> bool:
        return t in self.type_set
