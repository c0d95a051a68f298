"""Minimal arithmetic expression grammar for configuration files.

Grammar: numbers, coordinates (x1, x2, ... and t for the last coordinate),
the binary operators + - * / ^ (right-associative power), unary minus, exp,
and parentheses.  Compiled expressions evaluate on numpy point arrays of
shape (..., n) and return (...,).  Deliberately tiny: configs stay
declarative and no general-purpose interpreter is embedded.
"""

import re

import numpy as np

from .errors import ExpressionError

__all__ = ["compile_expression"]

_TOKEN = re.compile(r"\s*(?:(\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?"
                    r"|\d+(?:[eE][+-]?\d+)?)|([A-Za-z_][A-Za-z_0-9]*)"
                    r"|(\*\*)|([()+\-*/^]))")

_FUNCTIONS = {"exp": np.exp}


class _Parser:
    def __init__(self, source):
        self.source = source
        self.tokens = []
        pos = 0
        while pos < len(source):
            match = _TOKEN.match(source, pos)
            if not match or match.end() == pos:
                stripped = source[pos:].lstrip()
                if not stripped:
                    break
                raise ExpressionError("unrecognized token", source,
                                      len(source) - len(stripped))
            number, ident, power, op = match.groups()
            at = match.start(1) if number else (
                match.start(2) if ident else (
                    match.start(3) if power else match.start(4)))
            if number:
                self.tokens.append(("num", float(number), at))
            elif ident:
                self.tokens.append(("ident", ident, at))
            elif power:
                self.tokens.append(("op", "^", at))
            else:
                self.tokens.append(("op", op, at))
            pos = match.end()
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self):
        tok = self.peek()
        if tok is None:
            raise ExpressionError("unexpected end of expression", self.source,
                                  len(self.source) - 1)
        self.pos += 1
        return tok

    def expect(self, op):
        tok = self.next()
        if tok[0] != "op" or tok[1] != op:
            raise ExpressionError(f"expected {op!r}", self.source, tok[2])

    # expr := term (('+'|'-') term)*
    def expr(self):
        node = self.term()
        while True:
            tok = self.peek()
            if tok and tok[0] == "op" and tok[1] in "+-":
                self.pos += 1
                rhs = self.term()
                node = ("add" if tok[1] == "+" else "sub", node, rhs)
            else:
                return node

    # term := factor (('*'|'/') factor)*
    def term(self):
        node = self.factor()
        while True:
            tok = self.peek()
            if tok and tok[0] == "op" and tok[1] in "*/":
                self.pos += 1
                rhs = self.factor()
                node = ("mul" if tok[1] == "*" else "div", node, rhs)
            else:
                return node

    # factor := ('-'|'+') factor | power
    def factor(self):
        tok = self.peek()
        if tok and tok[0] == "op" and tok[1] in "+-":
            self.pos += 1
            node = self.factor()
            return node if tok[1] == "+" else ("neg", node)
        return self.power()

    # power := atom ('^' factor)?   (right associative)
    def power(self):
        node = self.atom()
        tok = self.peek()
        if tok and tok[0] == "op" and tok[1] == "^":
            self.pos += 1
            return ("pow", node, self.factor())
        return node

    def atom(self):
        tok = self.next()
        if tok[0] == "num":
            return ("num", tok[1])
        if tok[0] == "ident":
            name = tok[1]
            nxt = self.peek()
            if nxt and nxt[0] == "op" and nxt[1] == "(":
                if name not in _FUNCTIONS:
                    raise ExpressionError(f"unknown function {name!r}",
                                          self.source, tok[2])
                self.pos += 1
                arg = self.expr()
                self.expect(")")
                return ("call", name, arg)
            return ("var", name, tok[2])
        if tok[0] == "op" and tok[1] == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ExpressionError("unexpected token", self.source, tok[2])


def _resolve(node, n, source):
    kind = node[0]
    if kind == "num":
        value = node[1]
        return lambda x: np.full(x.shape[:-1], value)
    if kind == "var":
        name, at = node[1], node[2]
        if name == "t":
            axis = n - 1
        else:
            match = re.fullmatch(r"x([1-9]\d*)", name)
            if not match or int(match.group(1)) > n:
                raise ExpressionError(
                    f"unknown coordinate {name!r} for dimension {n}",
                    source, at)
            axis = int(match.group(1)) - 1
        return lambda x: x[..., axis]
    if kind == "neg":
        inner = _resolve(node[1], n, source)
        return lambda x: -inner(x)
    if kind == "call":
        fn = _FUNCTIONS[node[1]]
        inner = _resolve(node[2], n, source)
        return lambda x: fn(inner(x))
    left = _resolve(node[1], n, source)
    right = _resolve(node[2], n, source)
    if kind == "add":
        return lambda x: left(x) + right(x)
    if kind == "sub":
        return lambda x: left(x) - right(x)
    if kind == "mul":
        return lambda x: left(x) * right(x)
    if kind == "div":
        return lambda x: left(x) / right(x)
    if kind == "pow":
        return lambda x: left(x) ** right(x)
    raise ExpressionError(f"internal: unknown node {kind}", source, 0)


def compile_expression(source, n, name=None):
    """Compile an expression string into a vectorized callable on points.

    Raises ExpressionError with a column diagnostic on malformed input.
    """
    parser = _Parser(source)
    tree = parser.expr()
    if parser.peek() is not None:
        tok = parser.peek()
        raise ExpressionError("trailing input after expression", source,
                              tok[2])
    fn = _resolve(tree, n, source)

    def evaluate(x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != n:
            raise ExpressionError(
                f"expression expects points of dimension {n}, got shape "
                f"{x.shape}", source, 0)
        return fn(x)

    evaluate.__name__ = name or f"expr({source!r})"
    return evaluate
