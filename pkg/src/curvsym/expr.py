"""Scalar expression trees for metric components.

Expressions are built either by the parser (:func:`parse_expression`) or in
Python through operator overloading on :class:`Expr`.  They print back to
the metric-spec grammar and compile to Python callables that work on floats
and on :class:`curvsym.jets.Jet` scalars alike.

Grammar (usual precedence, ``^`` binds tighter than unary minus and is
right-associative; exponents must be integer constants)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("-" | "+") unary | power
    power  := atom ("^" unary)?
    atom   := NUMBER | NAME | NAME "(" expr ")" | "(" expr ")"
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from . import jets

__all__ = [
    "Expr",
    "Num",
    "Sym",
    "Neg",
    "BinOp",
    "Pow",
    "Call",
    "ExpressionSyntaxError",
    "parse_expression",
    "to_source",
    "compile_entries",
    "sym",
    "exp",
    "log",
    "sqrt",
    "sin",
    "cos",
    "sinh",
    "cosh",
]

FUNCTION_NAMES = frozenset(jets.FUNCTIONS)


class ExpressionSyntaxError(ValueError):
    """Malformed expression; ``pos`` is a 0-based column into the source."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (column {pos + 1})")
        self.pos = pos


def _wrap(value) -> "Expr":
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, float)):
        if value != value or value in (float("inf"), float("-inf")):
            raise ValueError("non-finite constant in expression")
        return Num(float(value))
    raise TypeError(f"cannot use {type(value).__name__} in an expression")


class Expr:
    """Base node; supports ``+ - * / **`` with other nodes and numbers."""

    def __add__(self, other):
        return BinOp("+", self, _wrap(other))

    def __radd__(self, other):
        return BinOp("+", _wrap(other), self)

    def __sub__(self, other):
        return BinOp("-", self, _wrap(other))

    def __rsub__(self, other):
        return BinOp("-", _wrap(other), self)

    def __mul__(self, other):
        return BinOp("*", self, _wrap(other))

    def __rmul__(self, other):
        return BinOp("*", _wrap(other), self)

    def __truediv__(self, other):
        return BinOp("/", self, _wrap(other))

    def __rtruediv__(self, other):
        return BinOp("/", _wrap(other), self)

    def __neg__(self):
        return Neg(self)

    def __pow__(self, k):
        if isinstance(k, float) and k.is_integer():
            k = int(k)
        if not isinstance(k, int):
            raise TypeError("only integer exponents are supported")
        return Pow(self, k)

    def symbols(self) -> set[str]:
        raise NotImplementedError

    def __str__(self):
        return to_source(self)


@dataclass(frozen=True, eq=True)
class Num(Expr):
    value: float

    def symbols(self):
        return set()


@dataclass(frozen=True, eq=True)
class Sym(Expr):
    name: str

    def symbols(self):
        return {self.name}


@dataclass(frozen=True, eq=True)
class Neg(Expr):
    arg: Expr

    def symbols(self):
        return self.arg.symbols()


@dataclass(frozen=True, eq=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def symbols(self):
        return self.left.symbols() | self.right.symbols()


@dataclass(frozen=True, eq=True)
class Pow(Expr):
    base: Expr
    exponent: int

    def symbols(self):
        return self.base.symbols()


@dataclass(frozen=True, eq=True)
class Call(Expr):
    func: str
    arg: Expr

    def symbols(self):
        return self.arg.symbols()


def sym(name: str) -> Sym:
    return Sym(name)


def _func(name):
    def make(arg):
        return Call(name, _wrap(arg))

    make.__name__ = name
    return make


exp = _func("exp")
log = _func("log")
sqrt = _func("sqrt")
sin = _func("sin")
cos = _func("cos")
sinh = _func("sinh")
cosh = _func("cosh")


# -- printing ---------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _num_source(value: float) -> str:
    if value.is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def to_source(e: Expr) -> str:
    """Render in the metric-spec grammar; re-parsing gives an equal tree."""
    return _src(e, 0)


def _src(e: Expr, ctx: int) -> str:
    # ctx: binding strength required by the parent (0 loose .. 4 atom)
    if isinstance(e, Num):
        s = _num_source(abs(e.value))
        return f"(-{s})" if e.value < 0 else s
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({_src(e.arg, 0)})"
    if isinstance(e, Neg):
        s = "-" + _src(e.arg, 3)
        return f"({s})" if ctx > 0 else s
    if isinstance(e, Pow):
        exp_s = str(e.exponent) if e.exponent >= 0 else f"(-{-e.exponent})"
        s = f"{_src(e.base, 4)}^{exp_s}"
        return f"({s})" if ctx > 3 else s
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        # left-associative: right operand needs strictly higher binding
        s = f"{_src(e.left, p)} {e.op} {_src(e.right, p + 1)}"
        return f"({s})" if ctx > p else s
    raise TypeError(f"unknown node {e!r}")


# -- parsing ----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)


def _tokenize(text: str):
    pos = 0
    tokens = []
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ExpressionSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        value = m.group(kind)
        if value == "**":
            value = "^"
        tokens.append((kind, value, start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, names: Mapping[str, Expr] | None):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.names = names

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, v, pos = self.take()
        if v != value or kind == "end":
            raise ExpressionSyntaxError(f"expected {value!r}, found {v or 'end of input'!r}", pos)

    def parse(self) -> Expr:
        e = self.expr()
        kind, v, pos = self.peek()
        if kind != "end":
            raise ExpressionSyntaxError(f"unexpected {v!r}", pos)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.term())
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            e = BinOp(op, e, self.unary())
        return e

    def unary(self):
        kind, v, _ = self.peek()
        if kind == "op" and v == "-":
            self.take()
            arg = self.unary()
            if isinstance(arg, Num):
                return Num(-arg.value)
            return Neg(arg)
        if kind == "op" and v == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^" and self.peek()[0] == "op":
            pos = self.take()[2]
            exponent = self.unary()
            k = _constant_value(exponent)
            if k is None or not float(k).is_integer():
                raise ExpressionSyntaxError("exponent must be an integer constant", pos)
            return Pow(base, int(k))
        return base

    def atom(self):
        kind, v, pos = self.take()
        if kind == "num":
            return Num(float(v))
        if kind == "name":
            if self.peek()[1] == "(":
                if v not in FUNCTION_NAMES:
                    raise ExpressionSyntaxError(f"unknown function {v!r}", pos)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(v, arg)
            if v in FUNCTION_NAMES:
                raise ExpressionSyntaxError(f"function {v!r} needs an argument", pos)
            if self.names is not None and v not in self.names:
                raise ExpressionSyntaxError(f"undeclared identifier {v!r}", pos)
            return Sym(v)
        if v == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise ExpressionSyntaxError(f"unexpected {v or 'end of input'!r}", pos)


def _constant_value(e: Expr):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Neg):
        v = _constant_value(e.arg)
        return None if v is None else -v
    return None


def parse_expression(text: str, names: Sequence[str] | None = None) -> Expr:
    """Parse ``text``; when ``names`` is given, other identifiers are errors."""
    allowed = None if names is None else dict.fromkeys(names)
    return _Parser(text, allowed).parse()


# -- compilation ------------------------------------------------------------


def _py(e: Expr, env: Mapping[str, str]) -> str:
    if isinstance(e, Num):
        return f"({e.value!r})"
    if isinstance(e, Sym):
        return env[e.name]
    if isinstance(e, Neg):
        return f"(-{_py(e.arg, env)})"
    if isinstance(e, BinOp):
        return f"({_py(e.left, env)} {e.op} {_py(e.right, env)})"
    if isinstance(e, Pow):
        return f"_pow({_py(e.base, env)}, {e.exponent})"
    if isinstance(e, Call):
        return f"_f_{e.func}({_py(e.arg, env)})"
    raise TypeError(f"unknown node {e!r}")


def compile_entries(
    entries: Sequence[Expr], coords: Sequence[str], params: Mapping[str, float]
) -> Callable:
    """Compile expressions into ``f(*coords) -> tuple`` with parameters inlined.

    Identifiers are mapped to generated local names, so user-chosen coordinate
    names never collide with Python keywords.
    """
    env = {name: f"_c{i}" for i, name in enumerate(coords)}
    for name, value in params.items():
        env.setdefault(name, f"({float(value)!r})")
    body = ", ".join(_py(e, env) for e in entries)
    args = ", ".join(f"_c{i}" for i in range(len(coords)))
    source = f"def _entries({args}):\n    return ({body},)\n"
    namespace = {f"_f_{k}": f for k, f in jets.FUNCTIONS.items()}
    namespace["_pow"] = jets.power
    exec(compile(source, "<metric>", "exec"), namespace)
    return namespace["_entries"]
