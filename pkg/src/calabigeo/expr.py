"""Expression trees for convex potentials.

Parses the small arithmetic grammar used on the command line and in catalog
files, differentiates symbolically, and evaluates derivative jets up to
fourth order by compiling the derivative DAG into straight-line Python.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := ['-'] base ['^' integer]
    base   := number | 'x'<digits> | '(' expr ')' | ('ln'|'exp'|'sqrt') '(' expr ')'
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np

from .tensors import SymTensor

__all__ = [
    "Expr",
    "ExprSyntaxError",
    "DomainError",
    "Jet4",
    "const",
    "var",
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "power",
    "ln",
    "exp",
    "sqrt",
    "parse",
    "to_text",
    "differentiate",
    "evaluate",
    "jet4",
    "max_var_index",
    "substitute",
    "shift_vars",
]

UNARY_FUNCS = ("ln", "exp", "sqrt")
BINARY_OPS = ("add", "sub", "mul", "div")


class ExprSyntaxError(ValueError):
    """Malformed expression text; ``offset`` is the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class DomainError(ArithmeticError):
    """A point lies outside the natural domain of a subexpression."""

    def __init__(self, message: str, subexpr: "Expr | None" = None):
        super().__init__(message)
        self.subexpr = subexpr


@dataclass(frozen=True, eq=True)
class Expr:
    """Immutable expression node.

    ``op`` is one of const, var, add, sub, mul, div, pow, neg, ln, exp, sqrt.
    ``value`` holds the constant for const, the 1-based variable index for
    var, and the integer exponent for pow.
    """

    op: str
    args: tuple["Expr", ...] = ()
    value: float = 0
    _hash: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash((self.op, self.args, self.value)))

    def __hash__(self) -> int:
        return self._hash

    def __str__(self) -> str:
        return to_text(self)


# --------------------------------------------------------------------------
# folding constructors


def const(c: float) -> Expr:
    c = float(c)
    if not math.isfinite(c):
        raise ValueError(f"non-finite constant {c}")
    if c == 0.0:
        c = 0.0  # drop the sign of -0.0
    return Expr("const", (), c)


def var(i: int) -> Expr:
    if int(i) < 1:
        raise ValueError("variable indices start at 1")
    return Expr("var", (), int(i))


ZERO = const(0.0)
ONE = const(1.0)


def _is_const(e: Expr, c: float | None = None) -> bool:
    return e.op == "const" and (c is None or e.value == c)


def add(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return const(a.value + b.value)
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return Expr("add", (a, b))


def sub(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return const(a.value - b.value)
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    return Expr("sub", (a, b))


def neg(a: Expr) -> Expr:
    if _is_const(a):
        return const(-a.value)
    if a.op == "neg":
        return a.args[0]
    if a.op in ("mul", "div") and _is_const(a.args[0]):
        return Expr(a.op, (const(-a.args[0].value), a.args[1]))
    return Expr("neg", (a,))


def mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a) and _is_const(b):
        return const(a.value * b.value)
    if _is_const(b):
        a, b = b, a
    if _is_const(a):
        if a.value == 0.0:
            return ZERO
        if a.value == 1.0:
            return b
        if a.value == -1.0:
            return neg(b)
        if b.op == "mul" and _is_const(b.args[0]):
            return mul(const(a.value * b.args[0].value), b.args[1])
        if b.op == "neg":
            return mul(const(-a.value), b.args[0])
    return Expr("mul", (a, b))


def div(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 0.0):
        raise ZeroDivisionError("division by literal zero")
    if _is_const(a) and _is_const(b):
        return const(a.value / b.value)
    if _is_const(a, 0.0):
        return ZERO
    if _is_const(b, 1.0):
        return a
    if _is_const(b, -1.0):
        return neg(a)
    return Expr("div", (a, b))


def power(a: Expr, k: int) -> Expr:
    k = int(k)
    if k == 0:
        return ONE
    if k == 1:
        return a
    if _is_const(a):
        if a.value == 0.0 and k < 0:
            raise ZeroDivisionError("zero to a negative power")
        return const(a.value**k)
    if a.op == "pow":
        return power(a.args[0], a.value * k)
    return Expr("pow", (a,), k)


def ln(a: Expr) -> Expr:
    if _is_const(a) and a.value > 0:
        return const(math.log(a.value))
    return Expr("ln", (a,))


def exp(a: Expr) -> Expr:
    if _is_const(a):
        return const(math.exp(a.value))
    return Expr("exp", (a,))


def sqrt(a: Expr) -> Expr:
    if _is_const(a) and a.value > 0:
        return const(math.sqrt(a.value))
    return Expr("sqrt", (a,))


# --------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<var>x\d+)"
    r"|(?P<func>ln|exp|sqrt)"
    r"|(?P<op>[-+*/^()])"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    if not text.isascii():
        bad = next(i for i, ch in enumerate(text) if not ch.isascii())
        raise ExprSyntaxError(f"unexpected character {text[bad]!r}", len(text[:bad].encode()))
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos == len(text):
            break
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
        tokens.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, arity: int):
        self.tokens = _tokenize(text)
        self.i = 0
        self.arity = arity

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, off = self.take()
        if text != value or kind != "op":
            what = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(f"expected {value!r}, found {what}", off)

    def fail(self, tok):
        kind, text, off = tok
        what = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {what}", off)

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            _, sym, _ = self.take()
            rhs = self.term()
            node = Expr("add" if sym == "+" else "sub", (node, rhs))
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            _, sym, _ = self.take()
            rhs_off = self.peek()[2]
            rhs = self.factor()
            if sym == "/":
                if _is_const(rhs, 0.0):
                    raise ExprSyntaxError("zero denominator literal", rhs_off)
                node = Expr("div", (node, rhs))
            else:
                node = Expr("mul", (node, rhs))
        return node

    def factor(self) -> Expr:
        negate = False
        if self.peek() == ("op", "-", self.peek()[2]):
            self.take()
            negate = True
        literal = self.peek()[0] == "num"
        node = self.base()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            sign = 1
            if self.peek()[0] == "op" and self.peek()[1] == "-":
                self.take()
                sign = -1
            kind, text, off = self.take()
            if kind != "num" or not text.isdigit():
                raise ExprSyntaxError("exponent must be an integer", off)
            node = Expr("pow", (node,), sign * int(text))
            literal = False
        if negate:
            node = const(-node.value) if literal else Expr("neg", (node,))
        return node

    def base(self) -> Expr:
        tok = self.take()
        kind, text, off = tok
        if kind == "num":
            return const(float(text))
        if kind == "var":
            idx = int(text[1:])
            if idx < 1 or idx > self.arity:
                raise ExprSyntaxError(f"variable {text} out of range 1..{self.arity}", off)
            return var(idx)
        if kind == "func":
            self.expect("(")
            inner = self.expr()
            self.expect(")")
            return Expr(text, (inner,))
        if kind == "op" and text == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        self.fail(tok)


def parse(text: str, arity: int) -> Expr:
    """Parse ``text`` into an expression over variables ``x1..x{arity}``."""
    if arity < 1:
        raise ValueError("arity must be positive")
    p = _Parser(text, arity)
    node = p.expr()
    if p.peek()[0] != "end":
        p.fail(p.peek())
    return node


# --------------------------------------------------------------------------
# printing

_SYM = {"add": "+", "sub": "-", "mul": "*", "div": "/"}


def _num_text(c: float) -> str:
    if c == int(c) and abs(c) < 1e16:
        return str(int(c))
    return repr(c)


def _atom(e: Expr) -> str:
    """Text usable where the grammar expects a ``base``."""
    if e.op == "const":
        return _num_text(e.value) if e.value >= 0 else f"({_num_text(e.value)})"
    if e.op == "var":
        return f"x{e.value}"
    if e.op in UNARY_FUNCS:
        return f"{e.op}({to_text(e.args[0])})"
    return f"({to_text(e)})"


def _factor(e: Expr) -> str:
    """Text usable where the grammar expects a ``factor``."""
    if e.op == "const":
        return _num_text(e.value)
    if e.op == "pow":
        return f"{_atom(e.args[0])}^{e.value}"
    if e.op == "neg":
        inner = e.args[0]
        if inner.op == "pow":
            return "-" + _factor(inner)
        if inner.op == "const":
            return f"-({_num_text(inner.value)})"
        return "-" + _atom(inner)
    return _atom(e)


def _term(e: Expr) -> str:
    if e.op in ("mul", "div"):
        a, b = e.args
        return f"{_term(a)}{_SYM[e.op]}{_factor(b)}"
    return _factor(e)


def to_text(e: Expr) -> str:
    """Render ``e`` in the input grammar; ``parse(to_text(e))`` rebuilds it."""
    if e.op in ("add", "sub"):
        a, b = e.args
        return f"{to_text(a)}{_SYM[e.op]}{_term(b)}"
    return _term(e)


# --------------------------------------------------------------------------
# differentiation


@lru_cache(maxsize=1 << 16)
def differentiate(e: Expr, i: int) -> Expr:
    """Exact partial derivative of ``e`` with respect to ``x{i}``."""
    op = e.op
    if op == "const":
        return ZERO
    if op == "var":
        return ONE if e.value == i else ZERO
    if op == "neg":
        return neg(differentiate(e.args[0], i))
    if op in ("add", "sub"):
        da, db = differentiate(e.args[0], i), differentiate(e.args[1], i)
        return add(da, db) if op == "add" else sub(da, db)
    if op == "mul":
        a, b = e.args
        return add(mul(differentiate(a, i), b), mul(a, differentiate(b, i)))
    if op == "div":
        a, b = e.args
        da, db = differentiate(a, i), differentiate(b, i)
        if _is_const(db, 0.0):
            return div(da, b)
        if _is_const(a):
            return div(mul(const(-a.value), db), power(b, 2))
        return div(sub(mul(da, b), mul(a, db)), power(b, 2))
    u = e.args[0]
    du = differentiate(u, i)
    if _is_const(du, 0.0):
        return ZERO
    if op == "pow":
        k = e.value
        return mul(mul(const(k), power(u, k - 1)), du)
    if op == "ln":
        return div(du, u)
    if op == "exp":
        return mul(du, e)
    if op == "sqrt":
        return div(du, mul(const(2.0), e))
    raise ValueError(f"unknown node kind {op!r}")


# --------------------------------------------------------------------------
# evaluation via compiled straight-line code


def _topo(roots: tuple[Expr, ...]) -> list[Expr]:
    order: list[Expr] = []
    seen: set[Expr] = set()
    stack = [(r, False) for r in reversed(roots)]
    while stack:
        node, done = stack.pop()
        if done:
            if node not in seen:
                seen.add(node)
                order.append(node)
            continue
        if node in seen:
            continue
        stack.append((node, True))
        for child in reversed(node.args):
            if child not in seen:
                stack.append((child, False))
    return order


def _domain_fail(nodes, k, value):
    node = nodes[k]
    raise DomainError(
        f"{node.op} argument {value!r} outside its domain in {to_text(node)}", node
    )


@lru_cache(maxsize=256)
def _compile(roots: tuple[Expr, ...]):
    order = _topo(roots)
    slot = {node: k for k, node in enumerate(order)}
    lines = ["def _f(x):"]
    for k, node in enumerate(order):
        op = node.op
        a = [f"t{slot[c]}" for c in node.args]
        if op == "const":
            rhs = repr(node.value)
        elif op == "var":
            rhs = f"x[{node.value - 1}]"
        elif op in BINARY_OPS:
            if op == "div":
                rhs = f"({a[0]} / {a[1]}) if {a[1]} != 0.0 else _fail(_nodes, {k}, {a[1]})"
            else:
                rhs = f"{a[0]} {_SYM[op]} {a[1]}"
        elif op == "neg":
            rhs = f"-{a[0]}"
        elif op == "pow":
            if node.value < 0:
                rhs = f"({a[0]} ** {node.value}) if {a[0]} != 0.0 else _fail(_nodes, {k}, {a[0]})"
            else:
                rhs = f"{a[0]} ** {node.value}"
        elif op == "ln":
            rhs = f"_log({a[0]}) if {a[0]} > 0.0 else _fail(_nodes, {k}, {a[0]})"
        elif op == "sqrt":
            rhs = f"_sqrt({a[0]}) if {a[0]} > 0.0 else _fail(_nodes, {k}, {a[0]})"
        elif op == "exp":
            rhs = f"_exp({a[0]})"
        else:
            raise ValueError(f"unknown node kind {op!r}")
        lines.append(f"    t{k} = {rhs}")
    lines.append("    return (" + "".join(f"t{slot[r]}, " for r in roots) + ")")
    namespace = {
        "_log": math.log,
        "_sqrt": math.sqrt,
        "_exp": math.exp,
        "_fail": _domain_fail,
        "_nodes": order,
    }
    exec(compile("\n".join(lines), "<calabigeo-expr>", "exec"), namespace)
    return namespace["_f"]


def _run(roots: tuple[Expr, ...], point) -> tuple[float, ...]:
    x = [float(v) for v in point]
    try:
        return _compile(roots)(x)
    except OverflowError as exc:
        raise DomainError(f"overflow while evaluating: {exc}") from exc


def max_var_index(e: Expr) -> int:
    return max((n.value for n in _topo((e,)) if n.op == "var"), default=0)


def evaluate(e: Expr, point) -> float:
    """Evaluate ``e`` at ``point`` (``x{i}`` reads ``point[i-1]``)."""
    need = max_var_index(e)
    if len(point) < need:
        raise ValueError(f"point has {len(point)} coordinates, expression uses x{need}")
    return _run((e,), point)[0]


# --------------------------------------------------------------------------
# jets


@dataclass(frozen=True)
class Jet4:
    """All partial derivatives of a scalar function up to order four at a point."""

    n: int
    point: np.ndarray
    value: float
    gradient: np.ndarray
    second: SymTensor
    third: SymTensor
    fourth: SymTensor

    def hessian(self) -> np.ndarray:
        return self.second.dense()


@lru_cache(maxsize=64)
def _jet_program(e: Expr, n: int):
    exprs: dict[tuple[int, ...], Expr] = {(): e}
    for k in range(1, 5):
        for idx in combinations_with_replacement(range(n), k):
            exprs[idx] = differentiate(exprs[idx[:-1]], idx[-1] + 1)
    keys = list(exprs)
    return keys, tuple(exprs[k] for k in keys)


def jet4(e: Expr, point, n: int | None = None) -> Jet4:
    """Evaluate value, gradient and the symmetric 2nd/3rd/4th derivative arrays."""
    point = np.asarray(point, dtype=float)
    n = len(point) if n is None else n
    if len(point) != n:
        raise ValueError(f"point has {len(point)} coordinates, expected {n}")
    if max_var_index(e) > n:
        raise ValueError(f"expression uses x{max_var_index(e)} but arity is {n}")
    keys, roots = _jet_program(e, n)
    values = _run(roots, point)
    by_order: dict[int, list[float]] = {k: [] for k in range(5)}
    for key, v in zip(keys, values):
        by_order[len(key)].append(v)
    return Jet4(
        n=n,
        point=point,
        value=by_order[0][0],
        gradient=np.array(by_order[1]),
        second=SymTensor(n, 2, np.array(by_order[2])),
        third=SymTensor(n, 3, np.array(by_order[3])),
        fourth=SymTensor(n, 4, np.array(by_order[4])),
    )


# --------------------------------------------------------------------------
# substitution


def substitute(e: Expr, mapping: dict[int, Expr]) -> Expr:
    """Replace each ``x{i}`` in ``mapping`` by the given expression."""
    memo: dict[Expr, Expr] = {}
    for node in _topo((e,)):
        if node.op == "var":
            memo[node] = mapping.get(node.value, node)
        elif node.op == "const":
            memo[node] = node
        else:
            args = tuple(memo[c] for c in node.args)
            memo[node] = _rebuild(node, args)
    return memo[e]


def _rebuild(node: Expr, args: tuple[Expr, ...]) -> Expr:
    op = node.op
    if op == "add":
        return add(*args)
    if op == "sub":
        return sub(*args)
    if op == "mul":
        return mul(*args)
    if op == "div":
        return div(*args)
    if op == "neg":
        return neg(args[0])
    if op == "pow":
        return power(args[0], node.value)
    return {"ln": ln, "exp": exp, "sqrt": sqrt}[op](args[0])


def shift_vars(e: Expr, offset: int) -> Expr:
    """Rename ``x{i}`` to ``x{i+offset}`` throughout."""
    idx = {n.value for n in _topo((e,)) if n.op == "var"}
    return substitute(e, {i: var(i + offset) for i in idx})
