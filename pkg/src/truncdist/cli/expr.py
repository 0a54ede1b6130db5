"""Scalar expressions over grid coordinates.

Grammar (standard precedence, left-associative, unary minus)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | atom
    atom   := number | "inf" | x_i | "(" expr ")" | call
    call   := abs(e) | max(e, e) | min(e, e) | pow(e, number) | indicator(number, number)

``x_i`` is the i-th coordinate, counted from 1.  ``indicator(lo, hi)`` is 0
when every coordinate lies in [lo, hi] and +inf otherwise.  Evaluation uses
extended-real arithmetic: inf - inf = inf, 0 * inf = 0 and division by zero
gives +inf and raises the ``division_by_zero`` flag.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np


class ExprError(ValueError):
    """Malformed expression; ``col`` is the 1-based column in the source."""

    def __init__(self, message, col):
        super().__init__(f"col {col}: {message}")
        self.message = message
        self.col = col


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Bin:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


_ARITY = {"abs": 1, "max": 2, "min": 2, "pow": 2, "indicator": 2}
_TOKEN = re.compile(r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
                    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/(),]))")


def _tokenize(text):
    out, pos = [], 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            col = pos + len(text[pos:]) - len(text[pos:].lstrip()) + 1
            raise ExprError(f"unexpected character {text[col - 1]!r}", col)
        kind = m.lastgroup
        start = m.start(kind) + 1
        out.append((kind, m.group(kind), start))
        pos = m.end()
    out.append(("end", "", len(text) + 1))
    return out


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, value=None):
        tok = self.toks[self.i]
        if value is not None and tok[1] != value:
            what = "end of input" if tok[0] == "end" else repr(tok[1])
            raise ExprError(f"expected {value!r}, found {what}", tok[2])
        self.i += 1
        return tok

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Bin(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Bin(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.atom()

    def number(self):
        # signed literal, as required by pow exponents and indicator bounds
        sign = 1.0
        if self.peek()[:2] == ("op", "-"):
            self.take()
            sign = -1.0
        kind, text, col = self.take()
        if kind == "num":
            return sign * float(text)
        if kind == "name" and text == "inf":
            return sign * np.inf
        raise ExprError("expected a number", col)

    def atom(self):
        kind, text, col = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "op" and text == "(":
            node = self.expr()
            self.take(")")
            return node
        if kind == "name":
            if text == "inf":
                return Num(np.inf)
            m = re.fullmatch(r"x_(\d+)", text)
            if m:
                idx = int(m.group(1))
                if idx < 1:
                    raise ExprError("coordinates are numbered from 1", col)
                return Var(idx)
            if text not in _ARITY:
                raise ExprError(f"unknown name {text!r}", col)
            self.take("(")
            if text == "indicator":
                args = [Num(self.number())]
                self.take(",")
                args.append(Num(self.number()))
            else:
                args = [self.expr()]
                for _ in range(_ARITY[text] - 1):
                    self.take(",")
                    args.append(Num(self.number()) if text == "pow" else self.expr())
            self.take(")")
            return Call(text, tuple(args))
        what = "end of input" if kind == "end" else repr(text)
        raise ExprError(f"unexpected {what}", col)


def parse_expr(text):
    p = _Parser(text)
    node = p.expr()
    kind, value, col = p.peek()
    if kind != "end":
        raise ExprError(f"unexpected {value!r}", col)
    return node


def max_var(node):
    """Largest coordinate index used (0 for constants)."""
    if isinstance(node, Var):
        return node.index
    if isinstance(node, Neg):
        return max_var(node.arg)
    if isinstance(node, Bin):
        return max(max_var(node.left), max_var(node.right))
    if isinstance(node, Call):
        return max(max_var(a) for a in node.args)
    return 0


def _num(v):
    if v == np.inf:
        return "inf"
    if v == -np.inf:
        return "-inf"
    return repr(float(v)) if v != int(v) or abs(v) >= 1e16 else str(int(v))


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def format_expr(node, prec=0):
    """Canonical text with the fewest parentheses that reparse to the same tree."""
    if isinstance(node, Num):
        s = _num(node.value)
        return f"({s})" if s.startswith("-") and prec > 0 else s
    if isinstance(node, Var):
        return f"x_{node.index}"
    if isinstance(node, Neg):
        s = "-" + format_expr(node.arg, 3)
        return f"({s})" if prec > 0 else s
    if isinstance(node, Bin):
        p = _PREC[node.op]
        s = f"{format_expr(node.left, p)} {node.op} {format_expr(node.right, p + 1)}"
        return f"({s})" if p < prec else s
    if node.name in ("pow", "indicator"):
        rest = [_num(a.value) for a in node.args[1:]]
        first = _num(node.args[0].value) if node.name == "indicator" else format_expr(node.args[0])
        return f"{node.name}({', '.join([first] + rest)})"
    return f"{node.name}({', '.join(format_expr(a) for a in node.args)})"


class Evaluator:
    """Evaluates a parsed expression on rows of X; collects arithmetic flags."""

    def __init__(self, node):
        self.node = node
        self.flags = set()

    def __call__(self, X):
        X = np.asarray(X, float)
        if X.ndim == 1:
            X = X[:, None]
        if max_var(self.node) > X.shape[1]:
            raise ExprError(f"x_{max_var(self.node)} used in dimension {X.shape[1]}", 1)
        with np.errstate(all="ignore"):
            out = self._eval(self.node, X)
        return np.broadcast_to(out, (X.shape[0],)).astype(float)

    def _eval(self, node, X):
        if isinstance(node, Num):
            return np.float64(node.value)
        if isinstance(node, Var):
            return X[:, node.index - 1]
        if isinstance(node, Neg):
            return -self._eval(node.arg, X)
        if isinstance(node, Bin):
            a, b = self._eval(node.left, X), self._eval(node.right, X)
            if node.op in "+-":
                r = a + b if node.op == "+" else a - b
                return np.where(np.isnan(r), np.inf, r)
            if node.op == "*":
                r = a * b
                return np.where(np.isnan(r), 0.0, r)
            zero = np.asarray(b) == 0
            if np.any(zero):
                self.flags.add("division_by_zero")
            r = np.where(zero, np.inf, a / np.where(zero, 1.0, b))
            return np.where(np.isnan(r), np.inf, r)
        args = [self._eval(a, X) for a in node.args]
        if node.name == "abs":
            return np.abs(args[0])
        if node.name == "max":
            return np.maximum(args[0], args[1])
        if node.name == "min":
            return np.minimum(args[0], args[1])
        if node.name == "pow":
            r = np.power(args[0], args[1])
            if np.any(np.isnan(r)):
                self.flags.add("invalid_power")
            return np.where(np.isnan(r), np.inf, r)
        lo, hi = float(args[0]), float(args[1])
        inside = np.all((X >= lo) & (X <= hi), axis=1)
        return np.where(inside, 0.0, np.inf)


def compile_expr(text):
    return Evaluator(parse_expr(text))
