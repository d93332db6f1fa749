"""Parser for the constitutive-response language.

A model is a ';'-separated list of scalar expressions over the canonical
variables ``t, x1, x2, x3`` and the deformation gradient ``F`` (a 3x3
matrix, whose entries are also available as ``F11 .. F33``).  Grammar::

    model     = component { ";" component } [ ";" ] ;
    component = expr ;                         (* must be scalar *)
    expr      = term { ("+" | "-") term } ;
    term      = unary { ("*" | "/") unary } ;
    unary     = ("-" | "+") unary | power ;
    power     = primary [ "^" unary ] ;        (* right associative *)
    primary   = NUMBER | IDENT | IDENT "(" [ expr { "," expr } ] ")"
              | "(" expr ")" ;

Functions: ``exp sin cos sqrt log`` (scalar), ``tr det transpose`` (matrix),
``matmul(M, N)`` (matrix or matrix-vector product), ``quad(v, M) = v.M.v``,
``vec(a, b, c)``.  ``I`` is the 3x3 identity.  ``#`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

SCALAR, VECTOR, MATRIX = "scalar", "vector", "matrix"

VARIABLES = ("t", "x1", "x2", "x3") + tuple(f"F{i}{j}" for i in (1, 2, 3) for j in (1, 2, 3))
CONSTANTS = {"F": MATRIX, "I": MATRIX}

# name -> (argument kinds, result kind); a tuple of alternatives for overloads
FUNCTIONS = {
    "exp": [((SCALAR,), SCALAR)],
    "sin": [((SCALAR,), SCALAR)],
    "cos": [((SCALAR,), SCALAR)],
    "sqrt": [((SCALAR,), SCALAR)],
    "log": [((SCALAR,), SCALAR)],
    "tr": [((MATRIX,), SCALAR)],
    "det": [((MATRIX,), SCALAR)],
    "transpose": [((MATRIX,), MATRIX)],
    "matmul": [((MATRIX, MATRIX), MATRIX), ((MATRIX, VECTOR), VECTOR)],
    "quad": [((VECTOR, MATRIX), SCALAR)],
    "vec": [((SCALAR, SCALAR, SCALAR), VECTOR)],
}


class ModelError(ValueError):
    """A model text could not be turned into a valid response."""

    def __init__(self, message: str, position: int | None = None):
        self.position = position
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"{message}{where}")


class DSLSyntaxError(ModelError):
    pass


class UnknownIdentifierError(ModelError):
    pass


class ArityError(ModelError):
    """Wrong number or kind of arguments."""


@dataclass(frozen=True)
class Num:
    value: float
    kind: str = SCALAR


@dataclass(frozen=True)
class Var:
    name: str
    kind: str


@dataclass(frozen=True)
class Unary:
    op: str
    arg: "Node"
    kind: str


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"
    kind: str


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["Node", ...]
    kind: str


Node = Union[Num, Var, Unary, Binary, Call]


@dataclass(frozen=True)
class ResponseModel:
    components: tuple[Node, ...]
    name: str = "model"
    source: str = ""

    @property
    def m(self) -> int:
        return len(self.components)

    def to_text(self) -> str:
        return "; ".join(to_text(c) for c in self.components)

    def scaled(self, factor: float) -> "ResponseModel":
        comps = tuple(Binary("*", Num(float(factor)), c, SCALAR) for c in self.components)
        return ResponseModel(comps, f"{factor}*{self.name}", "; ".join(to_text(c) for c in comps))


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<id>[A-Za-z_]\w*)|(?P<op>[-+*/^(),;]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    # comments run to end of line
    text = re.sub(r"#[^\n]*", lambda m: " " * len(m.group()), text)
    out = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise DSLSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.take()
        if val != value or kind != "op":
            found = "end of input" if kind == "end" else repr(val)
            raise DSLSyntaxError(f"expected {value!r}, found {found}", pos)

    def model(self) -> list[Node]:
        comps = [self.component()]
        while self.peek()[1] == ";":
            self.take()
            if self.peek()[0] == "end":
                break
            comps.append(self.component())
        kind, val, pos = self.peek()
        if kind != "end":
            raise DSLSyntaxError(f"unexpected {val!r}", pos)
        return comps

    def component(self) -> Node:
        pos = self.peek()[2]
        node = self.expr()
        if node.kind != SCALAR:
            raise ArityError(f"component must be scalar, got {node.kind}", pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            _, op, pos = self.take()
            rhs = self.term()
            if node.kind != rhs.kind:
                raise ArityError(f"cannot apply {op!r} to {node.kind} and {rhs.kind}", pos)
            node = Binary(op, node, rhs, node.kind)
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            _, op, pos = self.take()
            rhs = self.unary()
            if op == "*":
                if node.kind != SCALAR and rhs.kind != SCALAR:
                    raise ArityError(
                        f"'*' needs a scalar operand, got {node.kind} and {rhs.kind}; use matmul", pos)
                kind = rhs.kind if node.kind == SCALAR else node.kind
            else:
                if rhs.kind != SCALAR:
                    raise ArityError("division by a non-scalar", pos)
                kind = node.kind
            node = Binary(op, node, rhs, kind)
        return node

    def unary(self) -> Node:
        kind, val, _ = self.peek()
        if kind == "op" and val in ("-", "+"):
            self.take()
            arg = self.unary()
            return arg if val == "+" else Unary("-", arg, arg.kind)
        return self.power()

    def power(self) -> Node:
        node = self.primary()
        if self.peek()[1] == "^" and self.peek()[0] == "op":
            _, _, pos = self.take()
            rhs = self.unary()
            if node.kind != SCALAR or rhs.kind != SCALAR:
                raise ArityError("'^' is defined for scalars only", pos)
            node = Binary("^", node, rhs, SCALAR)
        return node

    def primary(self) -> Node:
        kind, val, pos = self.take()
        if kind == "num":
            return Num(float(val))
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "id":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                return self.call(val, pos)
            if val in VARIABLES:
                return Var(val, SCALAR)
            if val in CONSTANTS:
                return Var(val, CONSTANTS[val])
            if val in FUNCTIONS:
                raise ArityError(f"function {val!r} used without arguments", pos)
            raise UnknownIdentifierError(f"unknown identifier {val!r}", pos)
        if kind == "end":
            raise DSLSyntaxError("unexpected end of input", pos)
        raise DSLSyntaxError(f"unexpected {val!r}", pos)

    def call(self, name: str, pos: int) -> Node:
        if name not in FUNCTIONS:
            raise UnknownIdentifierError(f"unknown function {name!r}", pos)
        self.expect("(")
        args = []
        if self.peek()[1] != ")":
            args.append(self.expr())
            while self.peek()[1] == ",":
                self.take()
                args.append(self.expr())
        self.expect(")")
        kinds = tuple(a.kind for a in args)
        for sig, result in FUNCTIONS[name]:
            if sig == kinds:
                return Call(name, tuple(args), result)
        expected = " or ".join("(" + ", ".join(s) + ")" for s, _ in FUNCTIONS[name])
        got = "(" + ", ".join(kinds) + ")"
        raise ArityError(f"{name} expects {expected}, got {got}", pos)


def parse_response(text: str, name: str = "model") -> ResponseModel:
    """Parse model text into a :class:`ResponseModel`.

    Raises a :class:`ModelError` subclass carrying the character position.
    """
    comps = _Parser(text).model()
    return ResponseModel(tuple(comps), name, text)


def to_text(node: Node) -> str:
    """Fully parenthesised text that parses back to the same tree."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unary):
        return f"(-{to_text(node.arg)})"
    if isinstance(node, Binary):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    return f"{node.name}({', '.join(to_text(a) for a in node.args)})"


def free_variables(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, Unary):
        return free_variables(node.arg)
    if isinstance(node, Binary):
        return free_variables(node.left) | free_variables(node.right)
    return set().union(*(free_variables(a) for a in node.args))
